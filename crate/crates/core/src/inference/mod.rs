//! EM⁺ fitting: a Gibbs-sampled EM over the latent labels followed by the
//! Plus local search over single-label moves, restarted from several random
//! labelings.

mod estep;
mod lbfgs;
mod mstep;

pub use estep::{
    exact_estep, exact_estep_with, gibbs_chain, gibbs_estep, ExpectationSet, GibbsSettings, MAX_ENUMERATION,
};
pub use lbfgs::{maximize, LbfgsConfig, LbfgsOutcome};
pub use mstep::{canonical_params, hard_fit, mstep_probs, mstep_probs_design, mstep_rates, mstep_rates_design};

use crate::event_model::{derive_stats_with, StatsOptions, SufficientStats, TransactionLog};
use crate::likelihood::{
    estep_objective_design, loglik_complete_design, ClusterParams, Design, LabelState, Mode, Scorer, MAX_CLUSTERS,
};
use crate::spline::SplineBasis;
use crate::{CsbmError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub k: usize,
    pub mode: Mode,
    pub basis: SplineBasis,
    pub n_restarts: usize,
    pub gibbs_burnin: usize,
    pub gibbs_samples: usize,
    pub em_max_iters: usize,
    pub plus_max_steps: usize,
    /// Re-estimate `π`, `P_sk` and the transition rows for every candidate
    /// labeling scored by the Gibbs scan and the Plus neighbor search.
    pub on_the_fly: bool,
    /// Refit the rate coefficients after every Plus move (otherwise only
    /// the probabilities are refit).
    pub plus_full_refit: bool,
    /// Alternating probability/rate rounds when fitting fixed labels.
    pub refit_rounds: usize,
    pub lbfgs: LbfgsConfig,
    pub seed: u64,
    pub stats: StatsOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            k: 2,
            mode: Mode::Simplified,
            basis: SplineBasis::default(),
            n_restarts: 10,
            gibbs_burnin: 10,
            gibbs_samples: 40,
            em_max_iters: 25,
            plus_max_steps: 50,
            on_the_fly: true,
            plus_full_refit: true,
            refit_rounds: 5,
            lbfgs: LbfgsConfig::default(),
            seed: 0,
            stats: StatsOptions::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CsbmError::Config(m.into()));
        if self.k == 0 || self.k > MAX_CLUSTERS {
            return bad("K must be between 1 and 64");
        }
        if self.n_restarts == 0 || self.gibbs_samples == 0 || self.refit_rounds == 0 {
            return bad("restarts, retained Gibbs sweeps and refit rounds must be at least 1");
        }
        if !(self.lbfgs.grad_tol > 0.0) || self.lbfgs.max_iters == 0 || self.lbfgs.memory == 0 {
            return bad("optimizer tolerance and limits must be positive");
        }
        Ok(())
    }

    fn gibbs(&self) -> GibbsSettings {
        GibbsSettings { burnin: self.gibbs_burnin, samples: self.gibbs_samples }
    }

    fn refit(&self, design: &Design, labels: &[usize]) -> Result<ClusterParams> {
        hard_fit(design, labels, self.k, &self.basis, self.mode, self.refit_rounds, &self.lbfgs)
    }
}

/// One EM iteration: objective values around each M-step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmIteration {
    #[serde(with = "crate::io::extended_f64")]
    pub objective_before: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub objective_after_probs: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub objective_after_rates: f64,
    pub labels_changed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlusStep {
    pub player: usize,
    pub cluster: usize,
    #[serde(with = "crate::io::extended_f64")]
    pub loglik: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Complete log-likelihood of the hard labels after every EM iteration
    /// (the first entry is the initial labeling).
    #[serde(with = "crate::io::extended_f64::vec")]
    pub em_loglik: Vec<f64>,
    pub em: Vec<EmIteration>,
    pub em_converged: bool,
    pub plus: Vec<PlusStep>,
    pub plus_cycle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub seed: u64,
    #[serde(with = "crate::io::extended_f64::option")]
    pub loglik: Option<f64>,
    pub em_iters: usize,
    pub plus_steps: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ClusterParams,
    pub labels: LabelState,
    #[serde(with = "crate::io::extended_f64")]
    pub loglik: f64,
    pub trace: FitTrace,
    pub restarts: Vec<RestartSummary>,
}

/// Gibbs-sampled EM from `init` labels.
pub fn run_em<R: Rng>(stats: &SufficientStats, config: &FitConfig, rng: &mut R, init: &[usize]) -> Result<FitResult> {
    config.validate()?;
    let design = Design::new(stats, &config.basis)?;
    run_em_design(&design, config, rng, init)
}

fn check_labels(design: &Design, k: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != design.n || labels.iter().any(|&e| e >= k) {
        return Err(CsbmError::Dimension(format!("labels must be {} values in 0..{k}", design.n)));
    }
    Ok(())
}

pub fn run_em_design<R: Rng>(design: &Design, config: &FitConfig, rng: &mut R, init: &[usize]) -> Result<FitResult> {
    check_labels(design, config.k, init)?;
    let mut labels = init.to_vec();
    let mut params = config.refit(design, &labels)?;
    let mut trace =
        FitTrace { em_loglik: vec![loglik_complete_design(design, &labels, &params)], ..Default::default() };

    for _ in 0..config.em_max_iters {
        let scorer = Scorer::new(design, &params, config.on_the_fly);
        let mut chain = labels.clone();
        let exp = gibbs_chain(&scorer, config.gibbs(), &mut chain, rng)?;

        let objective_before = estep_objective_design(design, &exp, &params)?;
        params.set_prob_params(mstep_probs_design(design, &exp, &params)?);
        let objective_after_probs = estep_objective_design(design, &exp, &params)?;
        params = mstep_rates_design(design, &exp, &params, &config.lbfgs)?;
        let objective_after_rates = estep_objective_design(design, &exp, &params)?;

        let next = exp.argmax_labels();
        let labels_changed = next.iter().zip(&labels).filter(|(a, b)| a != b).count();
        labels = next;
        trace.em.push(EmIteration { objective_before, objective_after_probs, objective_after_rates, labels_changed });
        trace.em_loglik.push(loglik_complete_design(design, &labels, &params));
        if labels_changed == 0 {
            trace.em_converged = true;
            break;
        }
    }

    let params = config.refit(design, &labels)?;
    let loglik = loglik_complete_design(design, &labels, &params);
    Ok(FitResult { labels: LabelState::from_hard(config.k, labels)?, params, loglik, trace, restarts: Vec::new() })
}

/// Plus local search from a fitted configuration.
pub fn run_plus(stats: &SufficientStats, fit: FitResult, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let design = Design::new(stats, &config.basis)?;
    run_plus_design(&design, fit, config)
}

/// Repeatedly scores every single-label neighbor under the current rates,
/// moves to the best one even when it is worse, and refits. Stops when a
/// configuration repeats or after `plus_max_steps` moves; returns the best
/// configuration seen.
pub fn run_plus_design(design: &Design, fit: FitResult, config: &FitConfig) -> Result<FitResult> {
    let k = config.k;
    check_labels(design, k, &fit.labels.hard)?;
    let mut trace = fit.trace.clone();
    let mut best = fit;
    if k == 1 {
        return Ok(best);
    }
    let mut labels = best.labels.hard.clone();
    let mut params = best.params.clone();
    let mut visited: HashSet<Vec<usize>> = HashSet::from([labels.clone()]);

    for _ in 0..config.plus_max_steps {
        let scorer = Scorer::new(design, &params, config.on_the_fly);
        let mut tally = scorer.tally(&labels);
        let mut choice: Option<(usize, usize, f64)> = None;
        for i in 0..design.n {
            let original = labels[i];
            for c in (0..k).filter(|&c| c != original) {
                scorer.relabel(&mut labels, &mut tally, i, c);
                let score = scorer.score(&tally);
                if choice.is_none_or(|(_, _, s)| score > s) {
                    choice = Some((i, c, score));
                }
            }
            scorer.relabel(&mut labels, &mut tally, i, original);
        }
        let Some((i, c, _)) = choice else { break };
        labels[i] = c;
        if !visited.insert(labels.clone()) {
            trace.plus_cycle = true;
            break;
        }
        params = if config.plus_full_refit {
            config.refit(design, &labels)?
        } else {
            let mut p = params.clone();
            let exp = ExpectationSet::from_hard(design, k, &labels);
            p.set_prob_params(mstep_probs_design(design, &exp, &p)?);
            p
        };
        let loglik = loglik_complete_design(design, &labels, &params);
        trace.plus.push(PlusStep { player: i, cluster: c, loglik });
        if loglik > best.loglik {
            best.labels = LabelState::from_hard(k, labels.clone())?;
            best.params = params.clone();
            best.loglik = loglik;
        }
    }
    best.trace = trace;
    Ok(best)
}

/// Relabels clusters in order of decreasing `π` (ties by index).
pub fn canonicalize(fit: &mut FitResult) {
    let k = fit.params.k;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fit.params.pi[b].total_cmp(&fit.params.pi[a]).then(a.cmp(&b)));
    let mut perm = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    fit.params = fit.params.permuted(&perm);
    fit.labels = fit.labels.permuted(&perm);
}

/// Uniformly random labels.
pub fn random_labels<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// EM⁺ on derived statistics: `n_restarts` runs seeded `seed + r`, each
/// from uniformly random labels through [`run_em`] and [`run_plus`].
pub fn fit_stats(stats: &SufficientStats, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if config.k > stats.n_players {
        return Err(CsbmError::Config(format!("K = {} exceeds the {} players", config.k, stats.n_players)));
    }
    let design = Design::new(stats, &config.basis)?;
    let runs: Vec<(u64, Result<FitResult>)> = (0..config.n_restarts)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_add(r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = random_labels(design.n, config.k, &mut rng);
            let fit = run_em_design(&design, config, &mut rng, &init).and_then(|f| run_plus_design(&design, f, config));
            (seed, fit)
        })
        .collect();

    let mut summaries = Vec::with_capacity(runs.len());
    let mut best: Option<FitResult> = None;
    for (r, (seed, run)) in runs.into_iter().enumerate() {
        match run {
            Ok(fit) => {
                summaries.push(RestartSummary {
                    restart: r,
                    seed,
                    loglik: Some(fit.loglik),
                    em_iters: fit.trace.em.len(),
                    plus_steps: fit.trace.plus.len(),
                    error: None,
                });
                if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => summaries.push(RestartSummary {
                restart: r,
                seed,
                loglik: None,
                em_iters: 0,
                plus_steps: 0,
                error: Some(e.to_string()),
            }),
        }
    }
    let Some(mut best) = best else {
        let reasons: Vec<String> =
            summaries.iter().map(|s| format!("restart {}: {}", s.restart, s.error.as_deref().unwrap_or(""))).collect();
        return Err(CsbmError::Infeasible(format!("every restart failed ({})", reasons.join("; "))));
    };
    canonicalize(&mut best);
    best.restarts = summaries;
    Ok(best)
}

/// Derives statistics from `log` and fits the model.
pub fn fit_csbm(log: &TransactionLog, config: &FitConfig) -> Result<FitResult> {
    let stats = derive_stats_with(log, &config.stats)?;
    fit_stats(&stats, config)
}
