// Fit a two-cluster model to simulated data and compare with the truth.

use csbm::event_model::IncompletePolicy;
use csbm::generator::{simulate_log, LineupSchedule, SimSpec};
use csbm::likelihood::RateParams;
use csbm::metrics::adjusted_rand_index;
use csbm::{fit_csbm, ClusterParams, FitConfig, Mode, SplineBasis, StatsOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> csbm::Result<()> {
    let mut params = ClusterParams::uniform(2, SplineBasis::default(), Mode::Simplified, 1.0);
    if let RateParams::Simplified { lambda, transitions } = &mut params.rates {
        lambda[1] = lambda[1].shifted(-1.0);
        transitions[0] = vec![0.2, 0.7, 0.02, 0.02, 0.02, 0.02, 0.01, 0.01];
        transitions[1] = vec![0.7, 0.1, 0.05, 0.05, 0.04, 0.03, 0.02, 0.01];
    }
    params.p_init = vec![vec![0.95, 0.05], vec![0.1, 0.9], vec![0.5, 0.5]];
    let spec = SimSpec {
        params,
        players: (0..10).map(|i| format!("P{i}")).collect(),
        labels: (0..10).map(|i| i % 2).collect(),
        lineups: LineupSchedule::Random { size: 5 },
        initial_mix: [0.5, 0.4, 0.1],
        max_time: 24.0,
    };
    let log = simulate_log(&spec, 300, &mut ChaCha8Rng::seed_from_u64(3))?;

    let config = FitConfig {
        k: 2,
        n_restarts: 4,
        seed: 11,
        stats: StatsOptions { incomplete: IncompletePolicy::CloseAt(24.0) },
        ..Default::default()
    };
    let fit = fit_csbm(&log, &config)?;
    let truth: Vec<usize> = spec.truth().labels_for(&log).into_iter().map(|e| e.unwrap()).collect();
    println!("log-likelihood {:.3}", fit.loglik);
    println!("ARI vs truth {:.3}", adjusted_rand_index(&fit.labels.hard, &truth));
    for r in &fit.restarts {
        println!("restart {} -> {:?} ({} EM iterations, {} Plus steps)", r.restart, r.loglik, r.em_iters, r.plus_steps);
    }
    print!("{}", csbm::io::initial_csv(&fit.params));
    print!("{}", csbm::io::transitions_csv(&fit.params));
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example()
}
