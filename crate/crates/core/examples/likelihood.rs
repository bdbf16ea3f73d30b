// Complete log-likelihood of a labeling, by component, in both
// parameterizations.

use csbm::generator::{simulate_log, LineupSchedule, SimSpec};
use csbm::likelihood::loglik_parts;
use csbm::{derive_stats, ClusterParams, LabelState, Mode, SplineBasis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> csbm::Result<()> {
    let mut params = ClusterParams::uniform(2, SplineBasis::default(), Mode::Simplified, 0.7);
    params.p_init = vec![vec![0.8, 0.2], vec![0.3, 0.7], vec![0.5, 0.5]];
    let spec = SimSpec {
        params,
        players: (0..8).map(|i| format!("P{i}")).collect(),
        labels: vec![0, 0, 0, 0, 1, 1, 1, 1],
        lineups: LineupSchedule::Random { size: 5 },
        initial_mix: [0.5, 0.3, 0.2],
        max_time: 24.0,
    };
    let log = simulate_log(&spec, 100, &mut ChaCha8Rng::seed_from_u64(1))?;
    let stats = derive_stats(&log)?;
    let truth: Vec<usize> = spec.truth().labels_for(&log).into_iter().map(|e| e.unwrap_or(0)).collect();
    let labels = LabelState::from_hard(2, truth)?;

    let simplified = loglik_parts(&stats, &labels, &spec.params)?;
    let general = loglik_parts(&stats, &labels, &spec.params.to_general()?)?;
    println!("simplified: {simplified:?} total {:.6}", simplified.total());
    println!("general:    {general:?} total {:.6}", general.total());
    let flipped = LabelState::from_hard(2, labels.hard.iter().map(|&e| e ^ (labels.hard[0] == e) as usize).collect())?;
    println!("one cluster only: total {:.6}", loglik_parts(&stats, &flipped, &spec.params)?.total());
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example()
}
