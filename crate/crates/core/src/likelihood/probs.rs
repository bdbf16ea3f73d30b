use super::xlogy;
use crate::vocab::{InitialAction, Outcome};
use crate::{CsbmError, Result};
use serde::{Deserialize, Serialize};

/// Sufficient statistics for the probability parameters, from hard labels
/// or from expectations.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbStats {
    pub k: usize,
    /// `Σ_i z_ik`.
    pub mass: Vec<f64>,
    /// `[action][cluster]` receiving counts.
    pub init: Vec<Vec<f64>>,
    /// `[from][to]` pass counts.
    pub pass: Vec<Vec<f64>>,
    /// `[from][to]`: `Σ_h z_ik I(G_l > 0) Λ_k(h)` (simplified mode).
    pub pass_exposure: Vec<Vec<f64>>,
    /// `[from][outcome]` counts.
    pub out: Vec<Vec<f64>>,
    /// `[from]`: `Σ_h z_ik Λ_k(h)` (simplified mode).
    pub out_exposure: Vec<f64>,
}

impl ProbStats {
    pub fn zeros(k: usize) -> Self {
        ProbStats {
            k,
            mass: vec![0.0; k],
            init: vec![vec![0.0; k]; InitialAction::COUNT],
            pass: vec![vec![0.0; k]; k],
            pass_exposure: vec![vec![0.0; k]; k],
            out: vec![vec![0.0; Outcome::COUNT]; k],
            out_exposure: vec![0.0; k],
        }
    }

    /// Row `k` of the transition problem: counts and exposures over the
    /// `K + |A|` columns.
    pub fn transition_row(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let counts = self.pass[k].iter().chain(&self.out[k]).copied().collect();
        // incremental updates can leave rounding residue below zero
        let exposures = self.pass_exposure[k]
            .iter()
            .copied()
            .chain(std::iter::repeat_n(self.out_exposure[k], Outcome::COUNT))
            .map(|e| e.max(0.0))
            .collect();
        (counts, exposures)
    }
}

/// The probability parameters: `π`, `P_sk` and (simplified) the transition rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbParams {
    pub pi: Vec<f64>,
    pub p_init: Vec<Vec<f64>>,
    pub transitions: Option<Vec<Vec<f64>>>,
}

/// The part of the expected log-likelihood that depends on the probability
/// parameters.
pub fn prob_objective(stats: &ProbStats, probs: &ProbParams) -> f64 {
    let mut total: f64 = stats.mass.iter().zip(&probs.pi).map(|(&m, &p)| xlogy(m, p)).sum();
    for (counts, row) in stats.init.iter().zip(&probs.p_init) {
        total += counts.iter().zip(row).map(|(&m, &p)| xlogy(m, p)).sum::<f64>();
    }
    if let Some(transitions) = &probs.transitions {
        for (k, row) in transitions.iter().enumerate() {
            let (counts, exposures) = stats.transition_row(k);
            for ((&m, &e), &p) in counts.iter().zip(&exposures).zip(row) {
                total += xlogy(m, p) - e * p;
            }
        }
    }
    total
}

/// Maximizes `Σ_m N_m log P_m − E_m P_m` subject to `Σ_m P_m = 1`.
///
/// Stationarity gives `P_m = N_m / (E_m + ζ)`; the constraint
/// `f(ζ) = Σ_m N_m/(E_m + ζ) − 1` is decreasing on `ζ > −min{E_m : N_m > 0}`
/// and is solved by a safeguarded Newton iteration. Returns the row and `ζ`.
pub fn solve_transition_row(counts: &[f64], exposures: &[f64]) -> Result<(Vec<f64>, f64)> {
    let not_bracketed = |reason: &str| CsbmError::RootNotBracketed { cluster: 0, reason: reason.into() };
    if counts.len() != exposures.len() {
        return Err(CsbmError::Dimension(format!("{} counts for {} exposures", counts.len(), exposures.len())));
    }
    if counts.iter().chain(exposures).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(not_bracketed("counts and exposures must be finite and nonnegative"));
    }
    let active: Vec<(f64, f64)> =
        counts.iter().zip(exposures).filter(|(&n, _)| n > 0.0).map(|(&n, &e)| (n, e)).collect();
    if active.is_empty() {
        return Err(not_bracketed("no events leave this cluster"));
    }
    let f = |z: f64| active.iter().map(|&(n, e)| n / (e + z)).sum::<f64>() - 1.0;
    let df = |z: f64| -active.iter().map(|&(n, e)| n / ((e + z) * (e + z))).sum::<f64>();

    let floor = -active.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    let mut step = 1.0;
    let mut hi = floor + step;
    while f(hi) > 0.0 {
        step *= 2.0;
        hi = floor + step;
        if !hi.is_finite() || step > 1e300 {
            return Err(not_bracketed("constraint never changes sign"));
        }
    }
    // f(lo) > 0 (or lo is the pole), f(hi) <= 0
    let mut lo = floor;
    let mut z = hi;
    for _ in 0..500 {
        let mut next = 0.5 * (lo + hi);
        if lo > floor {
            let newton = lo - f(lo) / df(lo);
            if newton > lo && newton < hi {
                next = newton;
            }
        }
        z = next;
        let fz = f(z);
        if fz > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        if fz.abs() < 1e-15 || hi - lo <= 1e-12 * (1.0 + z.abs()) {
            break;
        }
    }
    let mut row: Vec<f64> =
        counts.iter().zip(exposures).map(|(&n, &e)| if n > 0.0 { n / (e + z) } else { 0.0 }).collect();
    let sum: f64 = row.iter().sum();
    for p in &mut row {
        *p /= sum;
    }
    Ok((row, z))
}

/// Closed-form maximizers of [`prob_objective`]. Clusters without any mass
/// in a row keep the row from `prev`.
pub fn fit_probabilities(stats: &ProbStats, prev: &ProbParams) -> Result<ProbParams> {
    let total: f64 = stats.mass.iter().sum();
    let pi = if total > 0.0 { stats.mass.iter().map(|m| m / total).collect() } else { prev.pi.clone() };
    let p_init = stats
        .init
        .iter()
        .zip(&prev.p_init)
        .map(|(counts, old)| {
            let sum: f64 = counts.iter().sum();
            if sum > 0.0 {
                counts.iter().map(|c| c / sum).collect()
            } else {
                old.clone()
            }
        })
        .collect();
    let transitions = match &prev.transitions {
        None => None,
        Some(old) => {
            let mut rows = Vec::with_capacity(stats.k);
            for k in 0..stats.k {
                let (counts, exposures) = stats.transition_row(k);
                if counts.iter().all(|&c| c <= 0.0) {
                    rows.push(old[k].clone());
                    continue;
                }
                let (row, _) = solve_transition_row(&counts, &exposures).map_err(|e| match e {
                    CsbmError::RootNotBracketed { reason, .. } => CsbmError::RootNotBracketed { cluster: k, reason },
                    other => other,
                })?;
                rows.push(row);
            }
            Some(rows)
        }
    };
    Ok(ProbParams { pi, p_init, transitions })
}
