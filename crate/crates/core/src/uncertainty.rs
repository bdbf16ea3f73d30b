//! Pointwise confidence bands for fitted rates from the observed information
//! of the hard-label log-likelihood and the delta method.

use crate::event_model::SufficientStats;
use crate::inference::ExpectationSet;
use crate::likelihood::{rate_objectives, ClusterParams, Design, LabelState, LabelTally, RateCache, RateParams};
use crate::vocab::Outcome;
use crate::{CsbmError, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Observed information of one rate row.
#[derive(Clone, Debug, Serialize)]
pub struct InfoBlock {
    /// Row name: the cluster (`"1"`) or a cluster pair / outcome in general
    /// mode (`"1->2"`, `"1->MAKE2"`), 1-based.
    pub name: String,
    pub matrix: Vec<Vec<f64>>,
    /// Rank deficient (for instance a cluster without exposure).
    pub singular: bool,
    /// Smallest eigenvalue at least `−1e-8 · trace`.
    pub psd: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InfoMatrix {
    pub blocks: Vec<InfoBlock>,
    /// Largest gradient entry; large values mean the parameters are not at a
    /// stationary point and the bands are unreliable.
    pub max_gradient: f64,
}

impl InfoMatrix {
    pub fn stationary(&self, tol: f64) -> bool {
        self.max_gradient < tol
    }
}

/// Names of the rate rows in [`ClusterParams::rate_rows`] order.
pub fn row_names(params: &ClusterParams) -> Vec<String> {
    let k = params.k;
    match params.rates {
        RateParams::Simplified { .. } => (1..=k).map(|c| c.to_string()).collect(),
        RateParams::General { .. } => {
            let mut names: Vec<String> = (1..=k).flat_map(|c| (1..=k).map(move |l| format!("{c}->{l}"))).collect();
            names.extend((1..=k).flat_map(|c| Outcome::ALL.iter().map(move |a| format!("{c}->{a}"))));
            names
        }
    }
}

/// Negative Hessian of the hard-label log-likelihood with respect to each
/// rate row's log-coefficients.
pub fn observed_info(stats: &SufficientStats, labels: &LabelState, params: &ClusterParams) -> Result<InfoMatrix> {
    params.validate()?;
    if labels.n() != stats.n_players || labels.k != params.k {
        return Err(CsbmError::Dimension("labels do not match the data or K".into()));
    }
    let design = Design::new(stats, &params.basis)?;
    let exp = ExpectationSet::from_hard(&design, params.k, &labels.hard);
    let objectives = rate_objectives(&design, &exp, params)?;
    let mut max_gradient: f64 = 0.0;
    let mut blocks = Vec::with_capacity(objectives.len());
    for ((obj, row), name) in objectives.iter().zip(params.rate_rows()).zip(row_names(params)) {
        let (_, grad) = obj.value_and_gradient(&row.0);
        max_gradient = grad.iter().fold(max_gradient, |m, g| m.max(g.abs()));
        let matrix: Vec<Vec<f64>> =
            obj.hessian(&row.0).into_iter().map(|r| r.into_iter().map(|v| -v).collect()).collect();
        let p = matrix.len();
        let m = DMatrix::from_fn(p, p, |i, j| 0.5 * (matrix[i][j] + matrix[j][i]));
        let eig = m.clone().symmetric_eigen();
        let trace: f64 = (0..p).map(|i| m[(i, i)]).sum();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        blocks.push(InfoBlock {
            name,
            singular: max <= 0.0 || min <= 1e-12 * max,
            psd: min >= -1e-8 * trace.abs(),
            matrix,
        });
    }
    Ok(InfoMatrix { blocks, max_gradient })
}

/// Symmetric pseudo-inverse; eigenvalues below `1e-12 · max` are dropped.
fn pseudo_inverse(matrix: &[Vec<f64>]) -> DMatrix<f64> {
    let p = matrix.len();
    let m = DMatrix::from_fn(p, p, |i, j| 0.5 * (matrix[i][j] + matrix[j][i]));
    let eig = m.symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let inv = eig.eigenvalues.map(|v| if max > 0.0 && v > 1e-12 * max { 1.0 / v } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandRow {
    pub name: String,
    pub t: f64,
    pub rate: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandTable {
    pub level: f64,
    pub rows: Vec<BandRow>,
    /// Names of rate rows whose information was singular.
    pub singular: Vec<String>,
}

/// Two-sided standard normal quantile for `level`.
pub fn z_value(level: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&level) {
        return Err(CsbmError::Config(format!("confidence level {level} outside [0, 1)")));
    }
    if level == 0.0 {
        return Ok(0.0);
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// `rate ± z·SE` with `SE² = gᵀ I⁻¹ g`, `g_p = e^{c_p} B_p(t)`; the lower
/// band is floored at zero.
pub fn rate_bands(params: &ClusterParams, info: &InfoMatrix, grid: &[f64], level: f64) -> Result<BandTable> {
    let z = z_value(level)?;
    let rows = params.rate_rows();
    if rows.len() != info.blocks.len() {
        return Err(CsbmError::Dimension("information blocks do not match the rate rows".into()));
    }
    let mut out = Vec::with_capacity(rows.len() * grid.len());
    let mut singular = Vec::new();
    for (coeffs, block) in rows.iter().zip(&info.blocks) {
        let cov = pseudo_inverse(&block.matrix);
        if block.singular {
            singular.push(block.name.clone());
        }
        let w = coeffs.weights();
        for &t in grid {
            let dense = params.basis.dense(t)?;
            let g: Vec<f64> = dense.iter().zip(&w).map(|(b, w)| b * w).collect();
            let rate: f64 = g.iter().sum();
            let mut var = 0.0;
            for i in 0..g.len() {
                for j in 0..g.len() {
                    var += g[i] * cov[(i, j)] * g[j];
                }
            }
            let se = var.max(0.0).sqrt();
            out.push(BandRow {
                name: block.name.clone(),
                t,
                rate,
                se,
                lower: (rate - z * se).max(0.0),
                upper: rate + z * se,
            });
        }
    }
    Ok(BandTable { level, rows: out, singular })
}

/// Evenly spaced grid `lo, lo + step, …, hi` (the end point included).
pub fn time_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || hi < lo {
        return Err(CsbmError::Config(format!("invalid grid [{lo}, {hi}] with step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect())
}

/// Multinomial standard errors `sqrt(P(1 − P) / N)` of the probability
/// tables on hard-label counts (rows without counts get zero).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbStandardErrors {
    pub p_init: Vec<Vec<f64>>,
    pub transitions: Option<Vec<Vec<f64>>>,
}

pub fn prob_standard_errors(
    stats: &SufficientStats,
    labels: &LabelState,
    params: &ClusterParams,
) -> Result<ProbStandardErrors> {
    let design = Design::new(stats, &params.basis)?;
    let cache = RateCache::new(&design, params);
    let tally = LabelTally::new(&design, &cache, &labels.hard);
    let se = |p: f64, n: f64| if n > 0.0 { (p * (1.0 - p) / n).sqrt() } else { 0.0 };
    let p_init = tally
        .probs
        .init
        .iter()
        .zip(&params.p_init)
        .map(|(counts, row)| {
            let n: f64 = counts.iter().sum();
            row.iter().map(|&p| se(p, n)).collect()
        })
        .collect();
    let transitions = match &params.rates {
        RateParams::Simplified { transitions, .. } => Some(
            transitions
                .iter()
                .enumerate()
                .map(|(c, row)| {
                    let n: f64 = tally.probs.pass[c].iter().chain(&tally.probs.out[c]).sum();
                    row.iter().map(|&p| se(p, n)).collect()
                })
                .collect(),
        ),
        RateParams::General { .. } => None,
    };
    Ok(ProbStandardErrors { p_init, transitions })
}
