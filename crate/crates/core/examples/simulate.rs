// Simulate a log from a fully specified model and write it as CSV.
//
// `cargo run --example simulate [n_plays] > log.csv`

use csbm::generator::{simulate_log, LineupSchedule, SimSpec};
use csbm::likelihood::RateParams;
use csbm::{ClusterParams, Mode, SplineBasis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example(arg: Option<String>) -> csbm::Result<()> {
    let n_plays = arg.and_then(|a| a.parse().ok()).unwrap_or(5);
    let basis = SplineBasis::default();
    let mut params = ClusterParams::uniform(2, basis, Mode::Simplified, 0.8);
    if let RateParams::Simplified { transitions, .. } = &mut params.rates {
        // ball handlers pass to wings; wings mostly shoot
        transitions[0] = vec![0.2, 0.6, 0.04, 0.04, 0.04, 0.04, 0.02, 0.02];
        transitions[1] = vec![0.4, 0.1, 0.15, 0.15, 0.08, 0.07, 0.03, 0.02];
    }
    params.p_init = vec![vec![0.9, 0.1], vec![0.4, 0.6], vec![0.5, 0.5]];
    let spec = SimSpec {
        params,
        players: ["pg", "sg", "sf", "pf", "c", "g6", "f7"].map(String::from).to_vec(),
        labels: vec![0, 1, 1, 1, 1, 0, 1],
        lineups: LineupSchedule::Random { size: 5 },
        initial_mix: [0.6, 0.3, 0.1],
        max_time: 24.0,
    };
    let log = simulate_log(&spec, n_plays, &mut ChaCha8Rng::seed_from_u64(7))?;
    print!("{}", log.to_csv_string());
    eprintln!("{}", csbm::io::truth_to_json(&spec.truth())?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example(std::env::args().nth(1))
}
