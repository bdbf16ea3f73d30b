#![allow(dead_code)]

use csbm::event_model::{eligible_count, EventRef, IncompletePolicy, StatsOptions};
use csbm::generator::{simulate_log, LineupSchedule, SimSpec};
use csbm::likelihood::RateParams;
use csbm::vocab::Outcome;
use csbm::{derive_stats_with, ClusterParams, Mode, RateCoeffs, SplineBasis, SufficientStats, TransactionLog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn censored_at_clock() -> StatsOptions {
    StatsOptions { incomplete: IncompletePolicy::CloseAt(24.0) }
}

fn random_simplex<R: Rng>(len: usize, floor: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| floor + rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v / sum).collect()
}

/// Random parameters with rates of order one and all probabilities positive.
pub fn random_params<R: Rng>(k: usize, basis: &SplineBasis, mode: Mode, rng: &mut R) -> ClusterParams {
    let p = basis.n_basis();
    let mut params = ClusterParams::uniform(k, basis.clone(), mode, 1.0);
    params.pi = random_simplex(k, 0.3, rng);
    for row in &mut params.p_init {
        *row = random_simplex(k, 0.3, rng);
    }
    let coeffs = |rng: &mut R, centre: f64| RateCoeffs((0..p).map(|_| centre + rng.random_range(-0.7..0.7)).collect());
    match &mut params.rates {
        RateParams::Simplified { lambda, transitions } => {
            for row in lambda.iter_mut() {
                *row = coeffs(rng, -0.7);
            }
            for row in transitions.iter_mut() {
                let mut t = random_simplex(k + Outcome::COUNT, 0.2, rng);
                // keep plays short: most mass on passes, outcomes rarer
                for v in &mut t[k..] {
                    *v *= 0.6;
                }
                let sum: f64 = t.iter().sum();
                *row = t.iter().map(|v| v / sum).collect();
            }
        }
        RateParams::General { rho, eta } => {
            for row in rho.iter_mut().flatten() {
                *row = coeffs(rng, -1.8);
            }
            for row in eta.iter_mut().flatten() {
                *row = coeffs(rng, -3.0);
            }
        }
    }
    params
}

pub fn player_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// A small random instance: `n` players, `k` clusters, random lineups.
pub fn random_instance(
    seed: u64,
    n: usize,
    k: usize,
    plays: usize,
    mode: Mode,
) -> (SimSpec, TransactionLog, SufficientStats) {
    let mut rng = rng(seed);
    let basis = SplineBasis::default();
    let params = random_params(k, &basis, mode, &mut rng);
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let spec = SimSpec {
        params,
        players: player_names(n),
        labels,
        lineups: LineupSchedule::Random { size: n.min(5) },
        initial_mix: [0.5, 0.3, 0.2],
        max_time: 24.0,
    };
    let log = simulate_log(&spec, plays, &mut rng).expect("simulation");
    let stats = derive_stats_with(&log, &censored_at_clock()).expect("stats");
    (spec, log, stats)
}

/// Labels of the spec's players in the log's player order.
pub fn truth_labels(spec: &SimSpec, log: &TransactionLog) -> Vec<usize> {
    spec.truth().labels_for(log).into_iter().map(|e| e.expect("simulated player")).collect()
}

/// Term-by-term complete log-likelihood straight from the model definition:
/// point terms from spline evaluations, gaps as the per-receiver sum
/// `Σ_{j eligible} ∫ρ_{e_i e_j} / G_{e_j}` over every possession.
pub fn naive_loglik(stats: &SufficientStats, labels: &[usize], params: &ClusterParams) -> f64 {
    let k = params.k;
    let basis = &params.basis;
    let rho = |a: usize, b: usize, t: f64| -> f64 {
        match &params.rates {
            RateParams::Simplified { lambda, transitions } => basis.rate(&lambda[a], t).unwrap() * transitions[a][b],
            RateParams::General { rho, .. } => basis.rate(&rho[a][b], t).unwrap(),
        }
    };
    let rho_int = |a: usize, b: usize, t0: f64, t1: f64| -> f64 {
        match &params.rates {
            RateParams::Simplified { lambda, transitions } => {
                basis.rate_integral(&lambda[a], t0, t1).unwrap() * transitions[a][b]
            }
            RateParams::General { rho, .. } => basis.rate_integral(&rho[a][b], t0, t1).unwrap(),
        }
    };
    let eta = |a: usize, o: usize, t: f64| -> f64 {
        match &params.rates {
            RateParams::Simplified { lambda, transitions } => {
                basis.rate(&lambda[a], t).unwrap() * transitions[a][k + o]
            }
            RateParams::General { eta, .. } => basis.rate(&eta[a][o], t).unwrap(),
        }
    };
    let eta_int = |a: usize, o: usize, t0: f64, t1: f64| -> f64 {
        match &params.rates {
            RateParams::Simplified { lambda, transitions } => {
                basis.rate_integral(&lambda[a], t0, t1).unwrap() * transitions[a][k + o]
            }
            RateParams::General { eta, .. } => basis.rate_integral(&eta[a][o], t0, t1).unwrap(),
        }
    };

    let mut total = 0.0;
    for &e in labels {
        total += params.pi[e].ln();
    }
    for (u, init) in stats.initiations.iter().enumerate() {
        let c = labels[init.receiver];
        let g = eligible_count(stats, labels, EventRef::Initiation(u), c).unwrap().count as f64;
        total += (params.p_init[init.action.index()][c] / g).ln();
    }
    for (u, pass) in stats.passes.iter().enumerate() {
        let (a, b) = (labels[pass.from], labels[pass.to]);
        let g = eligible_count(stats, labels, EventRef::Pass(u), b).unwrap().count as f64;
        total += (rho(a, b, pass.time) / g).ln();
    }
    for out in &stats.outcomes {
        total += eta(labels[out.player], out.outcome.index(), out.time).ln();
    }
    for (h, poss) in stats.possessions.iter().enumerate() {
        let a = labels[poss.player];
        for &j in &poss.oncourt {
            if j == poss.player {
                continue;
            }
            let b = labels[j];
            let g = eligible_count(stats, labels, EventRef::Possession(h), b).unwrap().count as f64;
            total -= rho_int(a, b, poss.start, poss.end) / g;
        }
        for o in 0..Outcome::COUNT {
            total -= eta_int(a, o, poss.start, poss.end);
        }
    }
    total
}

/// Relative difference with an absolute floor.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// The 3-cluster, 12-player benchmark: clusters with distinct departure-rate
/// shapes and transition rows.
pub fn benchmark_spec() -> SimSpec {
    let basis = SplineBasis::default();
    let p = basis.n_basis();
    let shape = |f: &dyn Fn(f64) -> f64| {
        // log-rate at evenly spread points, one per basis function
        RateCoeffs((0..p).map(|i| f(24.0 * i as f64 / (p - 1) as f64).ln()).collect())
    };
    let lambda = vec![
        shape(&|t| 0.9 - 0.025 * t),
        shape(&|t| 0.3 + 0.02 * t),
        shape(&|t| 0.45 + 0.25 * (-(t - 12.0) * (t - 12.0) / 40.0).exp()),
    ];
    let transitions = vec![
        vec![0.15, 0.60, 0.19, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01],
        vec![0.45, 0.10, 0.37, 0.02, 0.02, 0.01, 0.01, 0.01, 0.01],
        vec![0.50, 0.37, 0.05, 0.02, 0.02, 0.01, 0.01, 0.01, 0.01],
    ];
    let params = ClusterParams {
        k: 3,
        basis,
        pi: vec![1.0 / 3.0; 3],
        p_init: vec![vec![0.96, 0.02, 0.02], vec![0.02, 0.02, 0.96], vec![0.02, 0.96, 0.02]],
        rates: RateParams::Simplified { lambda, transitions },
    };
    SimSpec {
        params,
        players: player_names(12),
        labels: (0..12).map(|i| i % 3).collect(),
        lineups: LineupSchedule::Random { size: 5 },
        initial_mix: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        max_time: 24.0,
    }
}
