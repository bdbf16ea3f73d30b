use super::design::Design;
use super::{ClusterParams, RateParams};
use crate::spline::{LocalBasis, RateCoeffs};
use crate::vocab::Outcome;

/// Rate values that depend on the parameters but not on the labels.
///
/// Simplified mode stores `log λ_k(t)` per event and `Λ_k = ∫λ_k` per
/// possession. General mode stores `log ρ_kl(t)` per pass, `log η_ka(t)` per
/// outcome, `∫ρ_kl` and `Σ_a ∫η_ka` per possession.
#[derive(Clone, Debug)]
pub struct RateCache {
    pub k: usize,
    pub general: bool,
    /// Simplified: `[pass][k]`. General: `[pass][k * K + l]`.
    pub pass_log: Vec<Vec<f64>>,
    /// Simplified: `[outcome][k]`. General: `[outcome][k]` for the observed outcome.
    pub out_log: Vec<Vec<f64>>,
    /// Simplified: `[possession][k]` is `Λ_k`. General: `[possession][k * K + l]`.
    pub poss_int: Vec<Vec<f64>>,
    /// General only: `[possession][k]` is `Σ_a ∫η_ka`.
    pub poss_out_int: Vec<Vec<f64>>,
}

fn log_rate(weights: &[f64], local: &LocalBasis) -> f64 {
    local.iter().map(|(p, b)| weights[p] * b).sum::<f64>().ln()
}

fn exposure(weights: &[f64], integrals: &[f64]) -> f64 {
    weights.iter().zip(integrals).map(|(w, i)| w * i).sum()
}

impl RateCache {
    pub fn new(design: &Design, params: &ClusterParams) -> Self {
        let k = params.k;
        let weights = |rows: &[RateCoeffs]| rows.iter().map(RateCoeffs::weights).collect::<Vec<_>>();
        match &params.rates {
            RateParams::Simplified { lambda, .. } => {
                let w = weights(lambda);
                let pass_log =
                    design.passes.iter().map(|e| w.iter().map(|wk| log_rate(wk, &e.local)).collect()).collect();
                let out_log =
                    design.outcomes.iter().map(|e| w.iter().map(|wk| log_rate(wk, &e.local)).collect()).collect();
                let poss_int = design
                    .possessions
                    .iter()
                    .map(|h| w.iter().map(|wk| exposure(wk, &h.integrals)).collect())
                    .collect();
                RateCache { k, general: false, pass_log, out_log, poss_int, poss_out_int: Vec::new() }
            }
            RateParams::General { rho, eta } => {
                let rho_w: Vec<Vec<f64>> = rho.iter().flat_map(|row| weights(row)).collect();
                let eta_w: Vec<Vec<Vec<f64>>> = eta.iter().map(|row| weights(row)).collect();
                let pass_log =
                    design.passes.iter().map(|e| rho_w.iter().map(|w| log_rate(w, &e.local)).collect()).collect();
                let out_log = design
                    .outcomes
                    .iter()
                    .map(|e| eta_w.iter().map(|row| log_rate(&row[e.outcome], &e.local)).collect())
                    .collect();
                let poss_int = design
                    .possessions
                    .iter()
                    .map(|h| rho_w.iter().map(|w| exposure(w, &h.integrals)).collect())
                    .collect();
                let poss_out_int = design
                    .possessions
                    .iter()
                    .map(|h| {
                        eta_w
                            .iter()
                            .map(|row| (0..Outcome::COUNT).map(|a| exposure(&row[a], &h.integrals)).sum())
                            .collect()
                    })
                    .collect();
                RateCache { k, general: true, pass_log, out_log, poss_int, poss_out_int }
            }
        }
    }
}
