use super::cache::RateCache;
use super::design::Design;
use super::probs::{prob_objective, ProbStats};
use super::{ClusterParams, RateParams};
use crate::event_model::SufficientStats;
use crate::inference::ExpectationSet;
use crate::spline::LocalBasis;
use crate::vocab::Outcome;
use crate::{CsbmError, Result};

/// `f(c) = Σ_m w_m log r(t_m) − Σ_p e^{c_p} U_p` for one rate row
/// `r(t) = Σ_p e^{c_p} B_p(t)`, where `U` aggregates the weighted basis
/// integrals over all exposure intervals.
#[derive(Clone, Debug)]
pub struct RateObjective {
    pub points: Vec<(LocalBasis, f64)>,
    pub exposure: Vec<f64>,
}

impl RateObjective {
    pub fn value(&self, coeffs: &[f64]) -> f64 {
        let w: Vec<f64> = coeffs.iter().map(|c| c.exp()).collect();
        let mut total = 0.0;
        for (local, weight) in &self.points {
            let r: f64 = local.iter().map(|(p, b)| w[p] * b).sum();
            total += weight * r.ln();
        }
        total - w.iter().zip(&self.exposure).map(|(w, u)| w * u).sum::<f64>()
    }

    pub fn value_and_gradient(&self, coeffs: &[f64]) -> (f64, Vec<f64>) {
        let w: Vec<f64> = coeffs.iter().map(|c| c.exp()).collect();
        let mut grad: Vec<f64> = w.iter().zip(&self.exposure).map(|(w, u)| -w * u).collect();
        let mut total = grad.iter().sum::<f64>();
        for (local, weight) in &self.points {
            let r: f64 = local.iter().map(|(p, b)| w[p] * b).sum();
            total += weight * r.ln();
            for (p, b) in local.iter() {
                grad[p] += weight * w[p] * b / r;
            }
        }
        (total, grad)
    }

    /// Hessian with respect to the log-coefficients.
    pub fn hessian(&self, coeffs: &[f64]) -> Vec<Vec<f64>> {
        let n = coeffs.len();
        let w: Vec<f64> = coeffs.iter().map(|c| c.exp()).collect();
        let mut h = vec![vec![0.0; n]; n];
        for p in 0..n {
            h[p][p] -= w[p] * self.exposure[p];
        }
        for (local, weight) in &self.points {
            let r: f64 = local.iter().map(|(p, b)| w[p] * b).sum();
            for (p, bp) in local.iter() {
                let gp = w[p] * bp / r;
                h[p][p] += weight * gp;
                for (q, bq) in local.iter() {
                    h[p][q] -= weight * gp * w[q] * bq / r;
                }
            }
        }
        h
    }
}

fn check_shapes(design: &Design, exp: &ExpectationSet, params: &ClusterParams) -> Result<()> {
    let k = params.k;
    let ok = exp.k == k
        && exp.ez.len() == design.n
        && exp.ezz.len() == design.pairs.len()
        && exp.ezind.len() == design.possessions.len()
        && exp.ez.iter().all(|r| r.len() == k)
        && exp.ezz.iter().chain(&exp.ezind).all(|r| r.len() == k * k);
    if ok {
        Ok(())
    } else {
        Err(CsbmError::Dimension("expectations do not match the data or K".into()))
    }
}

/// One objective per rate row, in the order of [`ClusterParams::rate_rows`].
pub fn rate_objectives(design: &Design, exp: &ExpectationSet, params: &ClusterParams) -> Result<Vec<RateObjective>> {
    check_shapes(design, exp, params)?;
    let k = params.k;
    let n_basis = design.n_basis();
    let empty = || RateObjective { points: Vec::new(), exposure: vec![0.0; n_basis] };
    let add_exposure = |target: &mut Vec<f64>, integrals: &[f64], scale: f64| {
        if scale != 0.0 {
            for (u, i) in target.iter_mut().zip(integrals) {
                *u += scale * i;
            }
        }
    };
    let push = |obj: &mut RateObjective, local: LocalBasis, weight: f64| {
        if weight > 0.0 {
            obj.points.push((local, weight));
        }
    };
    match &params.rates {
        RateParams::Simplified { transitions, .. } => {
            let mut rows: Vec<RateObjective> = (0..k).map(|_| empty()).collect();
            for e in &design.passes {
                let pz = &exp.ezz[e.pair];
                for (c, row) in rows.iter_mut().enumerate() {
                    push(row, e.local, pz[c * k..(c + 1) * k].iter().sum());
                }
            }
            for e in &design.outcomes {
                for (c, row) in rows.iter_mut().enumerate() {
                    push(row, e.local, exp.ez[e.player][c]);
                }
            }
            for (h, poss) in design.possessions.iter().enumerate() {
                for (c, row) in rows.iter_mut().enumerate() {
                    let t = &transitions[c];
                    let ind = &exp.ezind[h][c * k..(c + 1) * k];
                    let out_mass: f64 = t[k..].iter().sum();
                    let scale = ind.iter().zip(t).map(|(z, p)| z * p).sum::<f64>() + exp.ez[poss.player][c] * out_mass;
                    add_exposure(&mut row.exposure, &poss.integrals, scale);
                }
            }
            Ok(rows)
        }
        RateParams::General { .. } => {
            let mut rho: Vec<RateObjective> = (0..k * k).map(|_| empty()).collect();
            let mut eta: Vec<RateObjective> = (0..k * Outcome::COUNT).map(|_| empty()).collect();
            for e in &design.passes {
                for (kl, row) in rho.iter_mut().enumerate() {
                    push(row, e.local, exp.ezz[e.pair][kl]);
                }
            }
            for e in &design.outcomes {
                for c in 0..k {
                    push(&mut eta[c * Outcome::COUNT + e.outcome], e.local, exp.ez[e.player][c]);
                }
            }
            for (h, poss) in design.possessions.iter().enumerate() {
                for (kl, row) in rho.iter_mut().enumerate() {
                    add_exposure(&mut row.exposure, &poss.integrals, exp.ezind[h][kl]);
                }
                for c in 0..k {
                    let z = exp.ez[poss.player][c];
                    for a in 0..Outcome::COUNT {
                        add_exposure(&mut eta[c * Outcome::COUNT + a].exposure, &poss.integrals, z);
                    }
                }
            }
            rho.extend(eta);
            Ok(rho)
        }
    }
}

/// Expected counts and exposures for the probability update. Exposures use
/// the rates in `params` (simplified mode only).
pub fn expected_prob_stats(design: &Design, exp: &ExpectationSet, params: &ClusterParams) -> Result<ProbStats> {
    check_shapes(design, exp, params)?;
    let k = params.k;
    let mut stats = ProbStats::zeros(k);
    for z in &exp.ez {
        for c in 0..k {
            stats.mass[c] += z[c];
        }
    }
    for e in &design.inits {
        for c in 0..k {
            stats.init[e.action][c] += exp.ez[e.receiver][c];
        }
    }
    for e in &design.passes {
        let pz = &exp.ezz[e.pair];
        for c in 0..k {
            for l in 0..k {
                stats.pass[c][l] += pz[c * k + l];
            }
        }
    }
    for e in &design.outcomes {
        for c in 0..k {
            stats.out[c][e.outcome] += exp.ez[e.player][c];
        }
    }
    if params.mode() == super::Mode::Simplified {
        let cache = RateCache::new(design, params);
        for (h, poss) in design.possessions.iter().enumerate() {
            for c in 0..k {
                let lam = cache.poss_int[h][c];
                for l in 0..k {
                    stats.pass_exposure[c][l] += exp.ezind[h][c * k + l] * lam;
                }
                stats.out_exposure[c] += exp.ez[poss.player][c] * lam;
            }
        }
    }
    Ok(stats)
}

/// Expected complete log-likelihood without the `log G` terms.
pub fn estep_objective_design(design: &Design, exp: &ExpectationSet, params: &ClusterParams) -> Result<f64> {
    let mut stats = expected_prob_stats(design, exp, params)?;
    // exposure terms are carried by the rate objectives
    for row in &mut stats.pass_exposure {
        row.fill(0.0);
    }
    stats.out_exposure.fill(0.0);
    let mut total = prob_objective(&stats, &params.prob_params());
    for (obj, row) in rate_objectives(design, exp, params)?.iter().zip(params.rate_rows()) {
        total += obj.value(&row.0);
    }
    Ok(total)
}

pub fn estep_objective(stats: &SufficientStats, exp: &ExpectationSet, params: &ClusterParams) -> Result<f64> {
    estep_objective_design(&Design::new(stats, &params.basis)?, exp, params)
}

/// Gradient of the expected complete log-likelihood with respect to every
/// rate log-coefficient, in the order of [`ClusterParams::rate_vector`].
pub fn grad_rate_coeffs_design(design: &Design, exp: &ExpectationSet, params: &ClusterParams) -> Result<Vec<f64>> {
    let objectives = rate_objectives(design, exp, params)?;
    Ok(objectives.iter().zip(params.rate_rows()).flat_map(|(obj, row)| obj.value_and_gradient(&row.0).1).collect())
}

pub fn grad_rate_coeffs(stats: &SufficientStats, exp: &ExpectationSet, params: &ClusterParams) -> Result<Vec<f64>> {
    grad_rate_coeffs_design(&Design::new(stats, &params.basis)?, exp, params)
}
