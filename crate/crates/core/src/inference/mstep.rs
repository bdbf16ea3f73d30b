use super::estep::ExpectationSet;
use super::lbfgs::{maximize, LbfgsConfig};
use crate::event_model::SufficientStats;
use crate::likelihood::{
    estep_objective_design, expected_prob_stats, fit_probabilities, rate_objectives, ClusterParams, Design, Mode,
    ProbParams, RateParams,
};
use crate::spline::{RateCoeffs, SplineBasis, COEFF_BOUND};
use crate::vocab::Outcome;
use crate::{CsbmError, Result};

/// Closed-form update of `π`, `P_sk` and (simplified) the transition rows.
pub fn mstep_probs_design(design: &Design, exp: &ExpectationSet, params: &ClusterParams) -> Result<ProbParams> {
    let stats = expected_prob_stats(design, exp, params)?;
    fit_probabilities(&stats, &params.prob_params())
}

pub fn mstep_probs(stats: &SufficientStats, exp: &ExpectationSet, params: &ClusterParams) -> Result<ProbParams> {
    mstep_probs_design(&Design::new(stats, &params.basis)?, exp, params)
}

/// Rate update: each rate row is maximized separately (rows share no
/// coefficients) by bounded L-BFGS from the incoming coefficients.
pub fn mstep_rates_design(
    design: &Design,
    exp: &ExpectationSet,
    params: &ClusterParams,
    config: &LbfgsConfig,
) -> Result<ClusterParams> {
    let objectives = rate_objectives(design, exp, params)?;
    let mut out = params.clone();
    for (obj, row) in objectives.iter().zip(out.rate_rows_mut()) {
        let start = obj.value(&row.0);
        if !start.is_finite() {
            return Err(CsbmError::Infeasible("rate objective is not finite at the current coefficients".into()));
        }
        let fit = maximize(|c| obj.value_and_gradient(c), &row.0, -COEFF_BOUND, COEFF_BOUND, config);
        if fit.value >= start {
            row.0 = fit.x;
        }
    }
    Ok(out)
}

pub fn mstep_rates(
    stats: &SufficientStats,
    exp: &ExpectationSet,
    params: &ClusterParams,
    config: &LbfgsConfig,
) -> Result<ClusterParams> {
    mstep_rates_design(&Design::new(stats, &params.basis)?, exp, params, config)
}

/// Deterministic starting point for a labeling: uniform probabilities and,
/// per cluster, the constant departure rate `events / possession time`.
pub fn canonical_params(design: &Design, labels: &[usize], k: usize, basis: &SplineBasis, mode: Mode) -> ClusterParams {
    let mut events = vec![0.0; k];
    let mut time = vec![0.0; k];
    for e in &design.passes {
        events[labels[e.from]] += 1.0;
    }
    for e in &design.outcomes {
        events[labels[e.player]] += 1.0;
    }
    for h in &design.possessions {
        time[labels[h.player]] += h.integrals.iter().sum::<f64>();
    }
    let total_events: f64 = events.iter().sum();
    let total_time: f64 = time.iter().sum();
    let overall = if total_events > 0.0 && total_time > 0.0 { total_events / total_time } else { 1.0 };
    let rate = |c: usize| if events[c] > 0.0 && time[c] > 0.0 { events[c] / time[c] } else { overall };

    let mut params = ClusterParams::uniform(k, basis.clone(), mode, 1.0);
    let p = basis.n_basis();
    match &mut params.rates {
        RateParams::Simplified { lambda, .. } => {
            for (c, row) in lambda.iter_mut().enumerate() {
                *row = RateCoeffs::constant(p, rate(c));
            }
        }
        RateParams::General { rho, eta } => {
            let share = (k + Outcome::COUNT) as f64;
            for c in 0..k {
                for row in rho[c].iter_mut().chain(eta[c].iter_mut()) {
                    *row = RateCoeffs::constant(p, rate(c) / share);
                }
            }
        }
    }
    params
}

/// Maximum-likelihood parameters for fixed hard labels: alternating
/// probability and rate updates from [`canonical_params`].
pub fn hard_fit(
    design: &Design,
    labels: &[usize],
    k: usize,
    basis: &SplineBasis,
    mode: Mode,
    rounds: usize,
    lbfgs: &LbfgsConfig,
) -> Result<ClusterParams> {
    let mut params = canonical_params(design, labels, k, basis, mode);
    let exp = ExpectationSet::from_hard(design, k, labels);
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..rounds.max(1) {
        let probs = mstep_probs_design(design, &exp, &params)?;
        params.set_prob_params(probs);
        params = mstep_rates_design(design, &exp, &params, lbfgs)?;
        let q = estep_objective_design(design, &exp, &params)?;
        if q - prev <= 1e-9 * (1.0 + q.abs()) {
            break;
        }
        prev = q;
    }
    let probs = mstep_probs_design(design, &exp, &params)?;
    params.set_prob_params(probs);
    Ok(params)
}
