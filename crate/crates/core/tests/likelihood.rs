mod common;

use common::*;
use csbm::likelihood::{loglik_complete, loglik_parts, Design, Scorer};
use csbm::{derive_stats, parse_transactions, LabelState, Mode, ParseOptions, SplineBasis};

#[test]
fn matches_naive_sum_on_random_instances() {
    for d in 0..20u64 {
        let mode = if d % 2 == 0 { Mode::Simplified } else { Mode::General };
        let k = 1 + (d % 3) as usize;
        let (spec, log, stats) = random_instance(d, 8, k, 25, mode);
        let labels = truth_labels(&spec, &log);
        let state = LabelState::from_hard(k, labels.clone()).unwrap();
        let fast = loglik_complete(&stats, &state, &spec.params).unwrap();
        let slow = naive_loglik(&stats, &labels, &spec.params);
        assert!(rel_err(fast, slow) < 1e-10, "instance {d}: {fast} vs {slow}");
    }
}

#[test]
fn parts_add_up() {
    let (spec, log, stats) = random_instance(3, 6, 2, 20, Mode::Simplified);
    let state = LabelState::from_hard(2, truth_labels(&spec, &log)).unwrap();
    let parts = loglik_parts(&stats, &state, &spec.params).unwrap();
    let total = loglik_complete(&stats, &state, &spec.params).unwrap();
    assert!((parts.initial + parts.passes + parts.outcomes + parts.prior - total).abs() < 1e-9);
    assert!(parts.prior < 0.0 && parts.initial < 0.0);
}

#[test]
fn permutation_equivariance() {
    for d in 0..10u64 {
        let mode = if d % 2 == 0 { Mode::Simplified } else { Mode::General };
        let (spec, log, stats) = random_instance(40 + d, 7, 3, 20, mode);
        let state = LabelState::from_hard(3, truth_labels(&spec, &log)).unwrap();
        let perm = [2, 0, 1];
        let base = loglik_complete(&stats, &state, &spec.params).unwrap();
        let moved = loglik_complete(&stats, &state.permuted(&perm), &spec.params.permuted(&perm)).unwrap();
        assert!(rel_err(base, moved) < 1e-12, "{base} vs {moved}");
    }
}

#[test]
fn one_hot_soft_labels_agree_with_hard() {
    let (spec, log, stats) = random_instance(5, 6, 2, 15, Mode::General);
    let hard = LabelState::from_hard(2, truth_labels(&spec, &log)).unwrap();
    let soft = LabelState::from_soft(hard.one_hot()).unwrap();
    assert_eq!(
        loglik_complete(&stats, &hard, &spec.params).unwrap(),
        loglik_complete(&stats, &soft, &spec.params).unwrap()
    );
}

#[test]
fn incremental_scoring_matches_full_evaluation() {
    let (spec, log, stats) = random_instance(8, 7, 3, 25, Mode::Simplified);
    let design = Design::new(&stats, &spec.params.basis).unwrap();
    let scorer = Scorer::new(&design, &spec.params, false);
    let mut labels = truth_labels(&spec, &log);
    let mut tally = scorer.tally(&labels);
    for (i, c) in [(0, 1), (3, 2), (0, 0), (6, 1)] {
        scorer.relabel(&mut labels, &mut tally, i, c);
        let full = naive_loglik(&stats, &labels, &spec.params);
        assert!(rel_err(scorer.score(&tally), full) < 1e-10);
    }
}

#[test]
fn sample_log_is_finite_for_uniform_params() {
    let text = include_str!("../data/sample.csv");
    let stats = derive_stats(&parse_transactions(text.as_bytes(), &ParseOptions::default()).unwrap()).unwrap();
    let params = csbm::ClusterParams::uniform(2, SplineBasis::default(), Mode::Simplified, 1.0);
    let state = LabelState::from_hard(2, (0..stats.n_players).map(|i| i % 2).collect()).unwrap();
    let value = loglik_complete(&stats, &state, &params).unwrap();
    assert!(value.is_finite());
    assert!(rel_err(value, naive_loglik(&stats, &state.hard, &params)) < 1e-12);
}
