// Pointwise 95% confidence bands for a fitted departure rate.

use csbm::event_model::IncompletePolicy;
use csbm::generator::{simulate_log, LineupSchedule, SimSpec};
use csbm::inference::{hard_fit, LbfgsConfig};
use csbm::likelihood::{Design, RateParams};
use csbm::uncertainty::{observed_info, rate_bands, time_grid};
use csbm::{derive_stats_with, ClusterParams, LabelState, Mode, SplineBasis, StatsOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> csbm::Result<()> {
    let basis = SplineBasis::default();
    let mut params = ClusterParams::uniform(1, basis.clone(), Mode::Simplified, 0.6);
    if let RateParams::Simplified { transitions, .. } = &mut params.rates {
        transitions[0] = vec![0.88, 0.03, 0.03, 0.02, 0.02, 0.01, 0.01];
    }
    let spec = SimSpec {
        params,
        players: (0..5).map(|i| format!("P{i}")).collect(),
        labels: vec![0; 5],
        lineups: LineupSchedule::Random { size: 5 },
        initial_mix: [0.5, 0.3, 0.2],
        max_time: 24.0,
    };
    let log = simulate_log(&spec, 400, &mut ChaCha8Rng::seed_from_u64(5))?;
    let stats = derive_stats_with(&log, &StatsOptions { incomplete: IncompletePolicy::CloseAt(24.0) })?;

    let design = Design::new(&stats, &basis)?;
    let labels = vec![0; stats.n_players];
    let fitted = hard_fit(&design, &labels, 1, &basis, Mode::Simplified, 5, &LbfgsConfig::default())?;
    let info = observed_info(&stats, &LabelState::from_hard(1, labels)?, &fitted)?;
    let bands = rate_bands(&fitted, &info, &time_grid(0.0, 24.0, 2.0)?, 0.95)?;
    println!("   t   rate   lower  upper   (true rate 0.6)");
    for row in &bands.rows {
        println!("{:4.0} {:6.3} {:6.3} {:6.3}", row.t, row.rate, row.lower, row.upper);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example()
}
