use super::cache::RateCache;
use super::design::Design;
use super::tally::LabelTally;
use super::{xlogy, ClusterParams, LabelState, RateParams};
use crate::event_model::SufficientStats;
use crate::{CsbmError, Result};
use serde::Serialize;

/// The complete log-likelihood split into its components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LoglikParts {
    pub initial: f64,
    pub passes: f64,
    pub outcomes: f64,
    pub prior: f64,
}

impl LoglikParts {
    pub fn total(&self) -> f64 {
        self.initial + self.passes + self.outcomes + self.prior
    }

    pub(crate) fn from_tally(tally: &LabelTally, params: &ClusterParams) -> Self {
        let probs = &tally.probs;
        let prior = probs.mass.iter().zip(&params.pi).map(|(&m, &p)| xlogy(m, p)).sum();
        let mut initial = -tally.log_g_init;
        for (counts, row) in probs.init.iter().zip(&params.p_init) {
            initial += counts.iter().zip(row).map(|(&m, &p)| xlogy(m, p)).sum::<f64>();
        }
        let mut passes = tally.point_pass - tally.log_g_pass - tally.gap_pass;
        let mut outcomes = tally.point_out - tally.gap_out;
        if let RateParams::Simplified { transitions, .. } = &params.rates {
            let k = params.k;
            for (c, row) in transitions.iter().enumerate() {
                for l in 0..k {
                    passes += xlogy(probs.pass[c][l], row[l]) - probs.pass_exposure[c][l] * row[l];
                }
                let out_mass: f64 = row[k..].iter().sum();
                for (a, &p) in row[k..].iter().enumerate() {
                    outcomes += xlogy(probs.out[c][a], p);
                }
                outcomes -= probs.out_exposure[c] * out_mass;
            }
        }
        LoglikParts { initial, passes, outcomes, prior }
    }
}

fn checked_labels<'a>(stats: &SufficientStats, labels: &'a LabelState, params: &ClusterParams) -> Result<&'a [usize]> {
    params.validate()?;
    if labels.n() != stats.n_players {
        return Err(CsbmError::Dimension(format!("{} labels for {} players", labels.n(), stats.n_players)));
    }
    if labels.k != params.k || labels.hard.iter().any(|&e| e >= params.k) {
        return Err(CsbmError::InvalidParams(format!("labels do not match K = {}", params.k)));
    }
    if !labels.is_one_hot() {
        return Err(CsbmError::InvalidParams("complete log-likelihood needs hard or one-hot labels".into()));
    }
    Ok(&labels.hard)
}

/// All components for hard labels.
pub fn loglik_parts(stats: &SufficientStats, labels: &LabelState, params: &ClusterParams) -> Result<LoglikParts> {
    let hard = checked_labels(stats, labels, params)?;
    let design = Design::new(stats, &params.basis)?;
    Ok(parts_on_design(&design, hard, params))
}

pub(crate) fn parts_on_design(design: &Design, labels: &[usize], params: &ClusterParams) -> LoglikParts {
    let cache = RateCache::new(design, params);
    let tally = LabelTally::new(design, &cache, labels);
    LoglikParts::from_tally(&tally, params)
}

/// `Σ_init log P_{s,e_i} − log G_{e_i}`.
pub fn loglik_initial(stats: &SufficientStats, labels: &LabelState, params: &ClusterParams) -> Result<f64> {
    Ok(loglik_parts(stats, labels, params)?.initial)
}

/// Pass point terms minus the possession gap terms for passes.
pub fn loglik_passes(stats: &SufficientStats, labels: &LabelState, params: &ClusterParams) -> Result<f64> {
    Ok(loglik_parts(stats, labels, params)?.passes)
}

/// Outcome point terms minus the possession gap terms for outcomes.
pub fn loglik_outcomes(stats: &SufficientStats, labels: &LabelState, params: &ClusterParams) -> Result<f64> {
    Ok(loglik_parts(stats, labels, params)?.outcomes)
}

/// Complete log-likelihood including `Σ_i log π_{e_i}` and the label-dependent
/// `log G` terms.
pub fn loglik_complete(stats: &SufficientStats, labels: &LabelState, params: &ClusterParams) -> Result<f64> {
    Ok(loglik_parts(stats, labels, params)?.total())
}

/// [`loglik_complete`] on a prebuilt design.
pub fn loglik_complete_design(design: &Design, labels: &[usize], params: &ClusterParams) -> f64 {
    parts_on_design(design, labels, params).total()
}
