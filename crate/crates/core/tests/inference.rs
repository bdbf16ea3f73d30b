mod common;

use common::*;
use csbm::generator::simulate_log;
use csbm::inference::{
    exact_estep, fit_stats, gibbs_estep, mstep_rates, run_em, run_plus, ExpectationSet, GibbsSettings, LbfgsConfig,
};
use csbm::likelihood::{Design, RateParams, Scorer};
use csbm::metrics::adjusted_rand_index;
use csbm::{derive_stats_with, fit_csbm, ClusterParams, FitConfig, LabelState, Mode, SplineBasis};
use rand::Rng;

#[test]
fn exact_estep_is_the_normalized_posterior() {
    let (spec, _, stats) = random_instance(11, 4, 2, 6, Mode::Simplified);
    let exact = exact_estep(&stats, &spec.params).unwrap();
    let design = Design::new(&stats, &spec.params.basis).unwrap();
    let scorer = Scorer::new(&design, &spec.params, false);
    let n = stats.n_players;
    let mut weights = Vec::new();
    for code in 0..1usize << n {
        let labels: Vec<usize> = (0..n).map(|i| code >> i & 1).collect();
        weights.push((labels.clone(), naive_loglik(&stats, &labels, &spec.params)));
    }
    let max = weights.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|w| (w.1 - max).exp()).sum();
    for i in 0..n {
        let marginal: f64 = weights.iter().filter(|(l, _)| l[i] == 1).map(|w| (w.1 - max).exp()).sum::<f64>() / total;
        assert!((exact.ez[i][1] - marginal).abs() < 1e-10);
        assert!((exact.ez[i][0] + exact.ez[i][1] - 1.0).abs() < 1e-12);
    }
    assert!(scorer.score_labels(&weights[0].0).is_finite());
}

#[test]
fn gibbs_is_symmetric_under_swapped_clusters() {
    // identical clusters: every player is 50/50
    let (_, _, stats) = random_instance(12, 4, 2, 8, Mode::Simplified);
    let mut params = ClusterParams::uniform(2, SplineBasis::default(), Mode::Simplified, 1.0);
    params.pi = vec![0.5, 0.5];
    let mut r = rng(1);
    let init = vec![0; stats.n_players];
    let exp = gibbs_estep(&stats, &params, GibbsSettings { burnin: 50, samples: 4000 }, &init, &mut r).unwrap();
    for row in &exp.ez {
        assert!((row[0] - 0.5).abs() < 0.05, "{row:?}");
    }
}

#[test]
fn gibbs_expectations_are_probabilities() {
    let (spec, _, stats) = random_instance(13, 6, 3, 20, Mode::General);
    let mut r = rng(2);
    let init: Vec<usize> = (0..stats.n_players).map(|_| r.random_range(0..3)).collect();
    let exp = gibbs_estep(&stats, &spec.params, GibbsSettings { burnin: 5, samples: 30 }, &init, &mut r).unwrap();
    for row in &exp.ez {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(row.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
    }
    for row in exp.ezz.iter().chain(&exp.ezind) {
        assert!(row.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
    }
}

#[test]
fn homogeneous_rate_is_recovered() {
    // one cluster, constant rate 0.8: the fitted departure rate is events / exposure
    let basis = SplineBasis::default();
    let mut params = ClusterParams::uniform(1, basis.clone(), Mode::Simplified, 0.8);
    if let RateParams::Simplified { transitions, .. } = &mut params.rates {
        transitions[0] = vec![0.9, 0.02, 0.02, 0.02, 0.02, 0.01, 0.01];
    }
    let spec = csbm::generator::SimSpec {
        params,
        players: player_names(5),
        labels: vec![0; 5],
        lineups: csbm::generator::LineupSchedule::Random { size: 5 },
        initial_mix: [0.5, 0.3, 0.2],
        max_time: 24.0,
    };
    let mut r = rng(3);
    let log = simulate_log(&spec, 2000, &mut r).unwrap();
    let stats = derive_stats_with(&log, &censored_at_clock()).unwrap();
    let design = Design::new(&stats, &basis).unwrap();
    let labels = vec![0; stats.n_players];
    let exp = ExpectationSet::from_hard(&design, 1, &labels);
    let start = ClusterParams::uniform(1, basis.clone(), Mode::Simplified, 1.0);
    let fitted = mstep_rates(&stats, &exp, &start, &LbfgsConfig::default()).unwrap();
    for t in [2.0, 6.0, 10.0] {
        let rate = fitted.departure_rate(0, t).unwrap();
        assert!((rate - 0.8).abs() < 0.05 * 0.8, "rate {rate} at {t}");
    }
}

#[test]
fn rates_without_events_shrink_towards_zero() {
    let text = "game_id,play_id,from,to,time,oncourt\n\
                g,1,INBOUND,A,0,A|B\n\
                g,1,A,B,1,A|B\n\
                g,1,B,MAKE2,2,A|B\n";
    let log = csbm::parse_transactions(text.as_bytes(), &Default::default()).unwrap();
    let stats = csbm::derive_stats(&log).unwrap();
    let basis = SplineBasis::default();
    let design = Design::new(&stats, &basis).unwrap();
    let exp = ExpectationSet::from_hard(&design, 1, &[0, 0]);
    let start = ClusterParams::uniform(1, basis, Mode::General, 1.0);
    let fitted = mstep_rates(&stats, &exp, &start, &LbfgsConfig::default()).unwrap();
    let RateParams::General { eta, .. } = &fitted.rates else { unreachable!() };
    // never-observed outcome rates fall to (nearly) nothing
    let turnover = fitted.basis.rate(&eta[0][5], 1.0).unwrap();
    assert!(turnover < 1e-3, "{turnover}");
}

#[test]
fn single_cluster_em_is_a_refit() {
    let (_, _, stats) = random_instance(14, 6, 1, 20, Mode::Simplified);
    let config = FitConfig { k: 1, ..Default::default() };
    let fit = run_em(&stats, &config, &mut rng(0), &vec![0; stats.n_players]).unwrap();
    assert!(fit.trace.em_converged);
    assert_eq!(fit.trace.em.len(), 1);
    assert_eq!(fit.params.pi, vec![1.0]);
}

#[test]
fn zero_em_iterations_keep_the_initial_labels() {
    let (_, _, stats) = random_instance(15, 6, 2, 20, Mode::Simplified);
    let config = FitConfig { k: 2, em_max_iters: 0, ..Default::default() };
    let init = vec![0, 1, 0, 1, 0, 1];
    let fit = run_em(&stats, &config, &mut rng(0), &init).unwrap();
    assert_eq!(fit.labels.hard, init);
    assert!(fit.trace.em.is_empty() && !fit.trace.em_converged);
}

#[test]
fn one_plus_step_never_loses() {
    let (_, _, stats) = random_instance(16, 6, 2, 20, Mode::Simplified);
    let config = FitConfig { k: 2, plus_max_steps: 1, ..Default::default() };
    let start =
        run_em(&stats, &FitConfig { em_max_iters: 0, ..config.clone() }, &mut rng(0), &[0, 0, 0, 1, 1, 1]).unwrap();
    let out = run_plus(&stats, start.clone(), &config).unwrap();
    assert!(out.trace.plus.len() <= 1);
    assert!(out.loglik >= start.loglik);
}

#[test]
fn fits_are_deterministic_and_recover_separated_clusters() {
    let spec = benchmark_spec();
    let log = simulate_log(&spec, 200, &mut rng(21)).unwrap();
    let config = FitConfig { k: 3, n_restarts: 3, seed: 5, stats: censored_at_clock(), ..Default::default() };
    let a = fit_csbm(&log, &config).unwrap();
    let b = fit_csbm(&log, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.restarts.len(), 3);
    let ari = adjusted_rand_index(&a.labels.hard, &truth_labels(&spec, &log));
    assert!(ari > 0.9, "ARI {ari}");
    // canonical order: decreasing cluster weights
    assert!(a.params.pi.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn single_restart_and_too_many_clusters() {
    let (_, log, stats) = random_instance(17, 5, 2, 20, Mode::Simplified);
    let config = FitConfig { k: 2, n_restarts: 1, ..Default::default() };
    let fit = fit_csbm(&log, &config).unwrap();
    assert_eq!(fit.restarts.len(), 1);
    let state = LabelState::from_hard(2, fit.labels.hard.clone()).unwrap();
    assert_eq!(state, fit.labels);
    assert!(fit_stats(&stats, &FitConfig { k: 6, ..Default::default() }).is_err());
    assert!(fit_stats(&stats, &FitConfig { k: 0, ..Default::default() }).is_err());
}
