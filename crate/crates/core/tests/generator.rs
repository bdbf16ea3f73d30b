mod common;

use common::*;
use csbm::event_model::{parse_transactions, ParseOptions, Target};
use csbm::generator::{simulate_log, LineupSchedule};
use csbm::io::{truth_from_json, truth_to_json};
use csbm::{InitialAction, PLAY_CLOCK};
use proptest::prelude::*;

#[test]
fn receiving_cluster_frequencies_follow_p_init() {
    let spec = benchmark_spec();
    let log = simulate_log(&spec, 3000, &mut rng(4)).unwrap();
    let truth = spec.truth();
    let labels: Vec<usize> = truth.labels_for(&log).into_iter().map(Option::unwrap).collect();
    let mut counts = vec![vec![0.0; 3]; InitialAction::COUNT];
    for play in &log.plays {
        let first = &play.events[0];
        let Target::Player(p) = first.to else { panic!("play starts without a receiver") };
        let csbm::event_model::Source::Initial(action) = first.from else { panic!("play starts with a pass") };
        counts[action.index()][labels[p]] += 1.0;
    }
    for (row, truth_row) in counts.iter().zip(&spec.params.p_init) {
        let n: f64 = row.iter().sum();
        for (c, p) in row.iter().zip(truth_row) {
            assert!((c / n - p).abs() < 0.05, "{row:?} vs {truth_row:?}");
        }
    }
}

#[test]
fn simulated_plays_satisfy_the_log_invariants() {
    let spec = benchmark_spec();
    let log = simulate_log(&spec, 300, &mut rng(5)).unwrap();
    for play in &log.plays {
        let mut last = 0.0;
        for e in &play.events {
            assert!(e.oncourt.len() >= 2);
            assert!(e.time >= last && e.time <= PLAY_CLOCK);
            last = e.time;
            if let Target::Player(p) = e.to {
                assert!(e.oncourt.contains(&p));
            }
        }
    }
    let reparsed = parse_transactions(log.to_csv_string().as_bytes(), &ParseOptions::default()).unwrap();
    assert_eq!(reparsed, log);
}

#[test]
fn rotation_lineups_are_used_in_order() {
    let mut spec = benchmark_spec();
    spec.lineups = LineupSchedule::Rotation(vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
    let log = simulate_log(&spec, 4, &mut rng(6)).unwrap();
    let names = |i: usize| -> Vec<&str> {
        let mut v: Vec<&str> = log.plays[i].events[0].oncourt.iter().map(|&p| log.players[p].as_str()).collect();
        v.sort();
        v
    };
    assert_eq!(names(0), vec!["p0", "p1", "p2", "p3", "p4"]);
    assert_eq!(names(1), vec!["p5", "p6", "p7", "p8", "p9"]);
    assert_eq!(names(0), names(2));
}

#[test]
fn truth_sidecar_round_trips() {
    let spec = benchmark_spec();
    let truth = spec.truth();
    assert_eq!(truth_from_json(&truth_to_json(&truth).unwrap()).unwrap(), truth);
}

#[test]
fn same_seed_same_log() {
    let spec = benchmark_spec();
    let a = simulate_log(&spec, 50, &mut rng(7)).unwrap();
    let b = simulate_log(&spec, 50, &mut rng(7)).unwrap();
    let c = simulate_log(&spec, 50, &mut rng(8)).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert_ne!(a.to_csv_string(), c.to_csv_string());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn csv_round_trip(seed in 0u64..10_000, plays in 0usize..20) {
        let (_, log, _) = random_instance(seed, 6, 2, plays.max(1), csbm::Mode::Simplified);
        let text = log.to_csv_string();
        let reparsed = parse_transactions(text.as_bytes(), &ParseOptions::default()).unwrap();
        prop_assert_eq!(reparsed.to_csv_string(), text);
        prop_assert_eq!(reparsed, log);
    }
}
