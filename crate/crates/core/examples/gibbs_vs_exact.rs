// Gibbs-sampled expectations of the cluster labels against exact
// enumeration on a small log.

use csbm::generator::{simulate_log, LineupSchedule, SimSpec};
use csbm::inference::{exact_estep, gibbs_estep, GibbsSettings};
use csbm::{derive_stats, ClusterParams, Mode, SplineBasis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> csbm::Result<()> {
    let mut params = ClusterParams::uniform(2, SplineBasis::default(), Mode::Simplified, 1.0);
    params.pi = vec![0.6, 0.4];
    params.p_init = vec![vec![0.8, 0.2], vec![0.2, 0.8], vec![0.5, 0.5]];
    let spec = SimSpec {
        params,
        players: (0..5).map(|i| format!("P{i}")).collect(),
        labels: vec![0, 1, 0, 1, 1],
        lineups: LineupSchedule::Random { size: 5 },
        initial_mix: [0.5, 0.3, 0.2],
        max_time: 24.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let log = simulate_log(&spec, 12, &mut rng)?;
    let stats = derive_stats(&log)?;

    let exact = exact_estep(&stats, &spec.params)?;
    for samples in [50, 500, 5000] {
        let settings = GibbsSettings { burnin: 20, samples };
        let gibbs = gibbs_estep(&stats, &spec.params, settings, &vec![0; stats.n_players], &mut rng)?;
        println!("{samples:>5} sweeps: sup-norm distance {:.4}", gibbs.sup_distance(&exact));
    }
    for (player, row) in log.players.iter().zip(&exact.ez) {
        println!("{player}: P(cluster 1) = {:.3}", row[0]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example()
}
