//! Continuous-time stochastic block models for transactional networks.
//!
//! A transactional network is observed as timestamped sender→receiver events
//! (passes in a basketball play, for instance) rather than static edges. This
//! crate clusters the actors of such a network by fitting a block model in
//! which every cluster pair carries a time-varying transaction rate:
//!
//! - [`event_model`] parses play-by-play logs and derives possession intervals
//!   and eligible-receiver counts;
//! - [`spline`] evaluates the nonnegative B-spline rate functions;
//! - [`likelihood`] computes the complete log-likelihood and its gradients;
//! - [`inference`] fits the model with a Gibbs-sampled EM followed by a
//!   single-label local search;
//! - [`generator`] simulates logs from a fully specified model;
//! - [`uncertainty`] produces pointwise confidence bands for fitted rates.
//!
//! The `examples/` directory of this crate has one runnable program per
//! capability.

pub mod cli;
pub mod error;
pub mod event_model;
pub mod generator;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod metrics;
pub mod spline;
pub mod uncertainty;
pub mod vocab;

pub use error::{CsbmError, Result};
pub use event_model::{
    derive_stats, derive_stats_with, parse_transactions, ParseOptions, StatsOptions, SufficientStats, TransactionLog,
};
pub use inference::{fit_csbm, FitConfig, FitResult};
pub use likelihood::{ClusterParams, LabelState, Mode};
pub use spline::{RateCoeffs, SplineBasis};
pub use vocab::{InitialAction, Outcome};

/// Length of the play clock in seconds; every timestamp lies in `[0, PLAY_CLOCK]`.
pub const PLAY_CLOCK: f64 = 24.0;
