//! Complete-data log-likelihood of the block model and its gradients.
//!
//! Given hard labels `e`, the log-likelihood is a sum of independent terms:
//!
//! - one per initial action `s → i`: `log P_{s,e_i} − log G_{e_i}`;
//! - one per pass `i → j` at `t`: `log ρ_{e_i e_j}(t) − log G_{e_j}`;
//! - one per outcome `i → a` at `t`: `log η_{e_i a}(t)`;
//! - one per possession `(t⁻, t]` of `i`:
//!   `−Σ_l 1{G_l > 0} ∫ρ_{e_i l} − Σ_a ∫η_{e_i a}`;
//! - one per player: `log π_{e_i}`.
//!
//! `G` counts eligible receivers of the given cluster (the holder excluded
//! for passes, the receiver included for initial actions). In the simplified
//! parameterization `ρ_kl = λ_k P_kl` and `η_ka = λ_k P_ka`.

mod cache;
mod design;
mod objective;
mod probs;
mod tally;
mod terms;

pub use cache::RateCache;
pub use design::{Design, Unit};
pub use objective::{
    estep_objective, estep_objective_design, expected_prob_stats, grad_rate_coeffs, grad_rate_coeffs_design,
    rate_objectives, RateObjective,
};
pub use probs::{fit_probabilities, prob_objective, solve_transition_row, ProbParams, ProbStats};
pub use tally::{LabelTally, Scorer};
pub use terms::{
    loglik_complete, loglik_complete_design, loglik_initial, loglik_outcomes, loglik_parts, loglik_passes, LoglikParts,
};

use crate::spline::{RateCoeffs, SplineBasis};
use crate::vocab::{InitialAction, Outcome};
use crate::{CsbmError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    General,
    #[default]
    Simplified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RateParams {
    /// `λ_k` rows and a `K × (K + |A|)` row-stochastic transition matrix
    /// (receiving clusters first, then outcomes).
    Simplified { lambda: Vec<RateCoeffs>, transitions: Vec<Vec<f64>> },
    /// `ρ_kl` (`K × K`) and `η_ka` (`K × |A|`) rows.
    General { rho: Vec<Vec<RateCoeffs>>, eta: Vec<Vec<RateCoeffs>> },
}

/// The full parameter set: `π`, initial-action probabilities and rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub k: usize,
    pub basis: SplineBasis,
    pub pi: Vec<f64>,
    /// `P_sk`, indexed `[action][cluster]`.
    pub p_init: Vec<Vec<f64>>,
    pub rates: RateParams,
}

const PROB_TOL: f64 = 1e-8;

/// Largest supported cluster count (eligibility sets are bitmasks).
pub const MAX_CLUSTERS: usize = 64;

impl ClusterParams {
    /// Uniform probabilities and constant rates.
    pub fn uniform(k: usize, basis: SplineBasis, mode: Mode, rate: f64) -> Self {
        let n_basis = basis.n_basis();
        let row = RateCoeffs::constant(n_basis, rate);
        let rates = match mode {
            Mode::Simplified => RateParams::Simplified {
                lambda: vec![row; k],
                transitions: vec![vec![1.0 / (k + Outcome::COUNT) as f64; k + Outcome::COUNT]; k],
            },
            Mode::General => RateParams::General {
                rho: vec![vec![RateCoeffs::constant(n_basis, rate / (k + Outcome::COUNT) as f64); k]; k],
                eta: vec![vec![RateCoeffs::constant(n_basis, rate / (k + Outcome::COUNT) as f64); Outcome::COUNT]; k],
            },
        };
        ClusterParams {
            k,
            basis,
            pi: vec![1.0 / k as f64; k],
            p_init: vec![vec![1.0 / k as f64; k]; InitialAction::COUNT],
            rates,
        }
    }

    pub fn mode(&self) -> Mode {
        match self.rates {
            RateParams::Simplified { .. } => Mode::Simplified,
            RateParams::General { .. } => Mode::General,
        }
    }

    /// Checks shapes, finiteness and the probability constraints.
    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        let bad = |m: String| Err(CsbmError::InvalidParams(m));
        if k == 0 || k > MAX_CLUSTERS {
            return bad(format!("K must be in 1..={MAX_CLUSTERS}"));
        }
        check_simplex(&self.pi, k, "pi")?;
        if self.p_init.len() != InitialAction::COUNT {
            return bad(format!("P_init has {} rows", self.p_init.len()));
        }
        for (s, row) in self.p_init.iter().enumerate() {
            check_simplex(row, k, &format!("P_init[{s}]"))?;
        }
        match &self.rates {
            RateParams::Simplified { lambda, transitions } => {
                if lambda.len() != k || transitions.len() != k {
                    return bad("simplified rates need K rate rows and K transition rows".into());
                }
                for (c, row) in transitions.iter().enumerate() {
                    check_simplex(row, k + Outcome::COUNT, &format!("transitions[{c}]"))?;
                }
            }
            RateParams::General { rho, eta } => {
                if rho.len() != k || rho.iter().any(|r| r.len() != k) {
                    return bad("rho must be K x K".into());
                }
                if eta.len() != k || eta.iter().any(|r| r.len() != Outcome::COUNT) {
                    return bad("eta must be K x |A|".into());
                }
            }
        }
        for row in self.rate_rows() {
            self.basis.check_coeffs(row)?;
        }
        Ok(())
    }

    /// Rate rows in canonical order: `λ_k` (simplified) or
    /// `ρ_{kl}` row-major followed by `η_{ka}` row-major (general).
    pub fn rate_rows(&self) -> Vec<&RateCoeffs> {
        match &self.rates {
            RateParams::Simplified { lambda, .. } => lambda.iter().collect(),
            RateParams::General { rho, eta } => rho.iter().flatten().chain(eta.iter().flatten()).collect(),
        }
    }

    pub fn rate_rows_mut(&mut self) -> Vec<&mut RateCoeffs> {
        match &mut self.rates {
            RateParams::Simplified { lambda, .. } => lambda.iter_mut().collect(),
            RateParams::General { rho, eta } => rho.iter_mut().flatten().chain(eta.iter_mut().flatten()).collect(),
        }
    }

    /// Flattened log-coefficients of every rate row.
    pub fn rate_vector(&self) -> Vec<f64> {
        self.rate_rows().into_iter().flat_map(|r| r.0.iter().copied()).collect()
    }

    pub fn set_rate_vector(&mut self, values: &[f64]) {
        let p = self.basis.n_basis();
        for (row, chunk) in self.rate_rows_mut().into_iter().zip(values.chunks(p)) {
            row.0.copy_from_slice(chunk);
        }
    }

    /// `λ_k(t)` in the simplified model, or the total departure rate
    /// `Σ_l ρ_kl(t) + Σ_a η_ka(t)` in the general model.
    pub fn departure_rate(&self, cluster: usize, t: f64) -> Result<f64> {
        match &self.rates {
            RateParams::Simplified { lambda, .. } => self.basis.rate(&lambda[cluster], t),
            RateParams::General { rho, eta } => {
                let mut total = 0.0;
                for row in rho[cluster].iter().chain(&eta[cluster]) {
                    total += self.basis.rate(row, t)?;
                }
                Ok(total)
            }
        }
    }

    /// Rewrites a simplified parameter set in the general form with
    /// `ρ_kl = λ_k P_kl` and `η_ka = λ_k P_ka`. Zero probabilities cannot be
    /// represented with finite log-coefficients and are rejected.
    pub fn to_general(&self) -> Result<ClusterParams> {
        let RateParams::Simplified { lambda, transitions } = &self.rates else {
            return Ok(self.clone());
        };
        let k = self.k;
        let shift = |c: usize, col: usize| -> Result<RateCoeffs> {
            let p = transitions[c][col];
            if p <= 0.0 {
                return Err(CsbmError::InvalidParams(format!("transition [{c}][{col}] is zero")));
            }
            Ok(lambda[c].shifted(p.ln()))
        };
        let rho = (0..k).map(|c| (0..k).map(|l| shift(c, l)).collect()).collect::<Result<Vec<Vec<_>>>>()?;
        let eta =
            (0..k).map(|c| (0..Outcome::COUNT).map(|a| shift(c, k + a)).collect()).collect::<Result<Vec<Vec<_>>>>()?;
        Ok(ClusterParams { rates: RateParams::General { rho, eta }, ..self.clone() })
    }

    pub fn prob_params(&self) -> ProbParams {
        let transitions = match &self.rates {
            RateParams::Simplified { transitions, .. } => Some(transitions.clone()),
            RateParams::General { .. } => None,
        };
        ProbParams { pi: self.pi.clone(), p_init: self.p_init.clone(), transitions }
    }

    pub fn set_prob_params(&mut self, probs: ProbParams) {
        self.pi = probs.pi;
        self.p_init = probs.p_init;
        if let (RateParams::Simplified { transitions, .. }, Some(new)) = (&mut self.rates, probs.transitions) {
            *transitions = new;
        }
    }

    /// Relabels clusters: new cluster `perm[c]` takes the role of old `c`.
    pub fn permuted(&self, perm: &[usize]) -> ClusterParams {
        let k = self.k;
        let mut inv = vec![0; k];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let pi = (0..k).map(|c| self.pi[inv[c]]).collect();
        let p_init = self.p_init.iter().map(|row| (0..k).map(|c| row[inv[c]]).collect()).collect();
        let rates = match &self.rates {
            RateParams::Simplified { lambda, transitions } => RateParams::Simplified {
                lambda: (0..k).map(|c| lambda[inv[c]].clone()).collect(),
                transitions: (0..k)
                    .map(|c| {
                        let old = &transitions[inv[c]];
                        (0..k).map(|l| old[inv[l]]).chain(old[k..].iter().copied()).collect()
                    })
                    .collect(),
            },
            RateParams::General { rho, eta } => RateParams::General {
                rho: (0..k).map(|c| (0..k).map(|l| rho[inv[c]][inv[l]].clone()).collect()).collect(),
                eta: (0..k).map(|c| eta[inv[c]].clone()).collect(),
            },
        };
        ClusterParams { k, basis: self.basis.clone(), pi, p_init, rates }
    }
}

fn check_simplex(row: &[f64], len: usize, what: &str) -> Result<()> {
    if row.len() != len {
        return Err(CsbmError::InvalidParams(format!("{what} has length {}, expected {len}", row.len())));
    }
    if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(CsbmError::InvalidParams(format!("{what} has entries outside [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(CsbmError::InvalidParams(format!("{what} sums to {sum}")));
    }
    Ok(())
}

/// Hard labels `e_i ∈ 0..K` and, optionally, soft indicators `z_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelState {
    pub k: usize,
    pub hard: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft: Option<Vec<Vec<f64>>>,
}

impl LabelState {
    pub fn from_hard(k: usize, hard: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = hard.iter().find(|&&e| e >= k) {
            return Err(CsbmError::InvalidParams(format!("label {bad} outside 0..{k}")));
        }
        Ok(LabelState { k, hard, soft: None })
    }

    /// Hard labels from the row-wise argmax of soft indicators (ties go to
    /// the lowest cluster index).
    pub fn from_soft(soft: Vec<Vec<f64>>) -> Result<Self> {
        let k = soft.first().map_or(0, Vec::len);
        for row in &soft {
            if row.len() != k || row.iter().any(|&v| !(0.0..=1.0 + 1e-12).contains(&v)) {
                return Err(CsbmError::InvalidParams("soft labels must be K-vectors in [0, 1]".into()));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-8 {
                return Err(CsbmError::InvalidParams("soft label rows must sum to 1".into()));
            }
        }
        let hard = soft.iter().map(|row| argmax(row)).collect();
        Ok(LabelState { k, hard, soft: Some(soft) })
    }

    pub fn one_hot(&self) -> Vec<Vec<f64>> {
        self.hard.iter().map(|&e| (0..self.k).map(|c| if c == e { 1.0 } else { 0.0 }).collect()).collect()
    }

    /// True when the soft indicators (if any) are exactly one-hot and agree
    /// with the hard labels.
    pub fn is_one_hot(&self) -> bool {
        self.soft.as_ref().is_none_or(|soft| *soft == self.one_hot())
    }

    pub fn n(&self) -> usize {
        self.hard.len()
    }

    pub fn permuted(&self, perm: &[usize]) -> LabelState {
        LabelState { k: self.k, hard: self.hard.iter().map(|&e| perm[e]).collect(), soft: None }
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// `x log p` with `0 log 0 = 0`; positive mass on a zero probability is `-inf`.
#[inline]
pub(crate) fn xlogy(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * p.ln()
    }
}
