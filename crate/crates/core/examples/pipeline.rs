// The full command-line workflow in one program: simulate, fit, and write
// the result document and report tables to a directory.
//
// `cargo run --example pipeline [out_dir]`

use csbm::cli::report_text;
use csbm::event_model::IncompletePolicy;
use csbm::generator::{simulate_log, LineupSchedule, SimSpec};
use csbm::io::{atomic_write, bands_csv, initial_csv, labels_csv, transitions_csv, FitDocument};
use csbm::uncertainty::{observed_info, rate_bands, time_grid};
use csbm::{derive_stats_with, inference::fit_stats, ClusterParams, FitConfig, Mode, SplineBasis, StatsOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn run_example(arg: Option<String>) -> csbm::Result<()> {
    let out: PathBuf = arg.map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("csbm-pipeline"));
    std::fs::create_dir_all(&out)?;

    let mut params = ClusterParams::uniform(2, SplineBasis::default(), Mode::Simplified, 0.9);
    params.p_init = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.5, 0.5]];
    let spec = SimSpec {
        params,
        players: (0..8).map(|i| format!("P{i}")).collect(),
        labels: vec![0, 0, 0, 0, 1, 1, 1, 1],
        lineups: LineupSchedule::Random { size: 5 },
        initial_mix: [0.5, 0.3, 0.2],
        max_time: 24.0,
    };
    let log = simulate_log(&spec, 150, &mut ChaCha8Rng::seed_from_u64(9))?;
    atomic_write(&out.join("log.csv"), log.to_csv_string().as_bytes())?;

    let config = FitConfig {
        k: 2,
        n_restarts: 3,
        seed: 1,
        stats: StatsOptions { incomplete: IncompletePolicy::CloseAt(24.0) },
        ..Default::default()
    };
    let stats = derive_stats_with(&log, &config.stats)?;
    let result = fit_stats(&stats, &config)?;
    let info = observed_info(&stats, &result.labels, &result.params)?;
    let bands = rate_bands(&result.params, &info, &time_grid(0.0, 24.0, 0.1)?, 0.95)?;
    let doc = FitDocument::new(config, log.players.clone(), result);

    atomic_write(&out.join("fit.json"), doc.to_json()?.as_bytes())?;
    atomic_write(&out.join("labels.csv"), labels_csv(&doc.players, &doc.result.labels.hard).as_bytes())?;
    atomic_write(&out.join("initial.csv"), initial_csv(&doc.result.params).as_bytes())?;
    atomic_write(&out.join("transitions.csv"), transitions_csv(&doc.result.params).as_bytes())?;
    atomic_write(&out.join("rates.csv"), bands_csv(&bands).as_bytes())?;
    let report = report_text(&doc, Some(&spec.truth()));
    atomic_write(&out.join("report.txt"), report.as_bytes())?;
    print!("{report}");
    println!("\nwrote {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example(std::env::args().nth(1))
}
