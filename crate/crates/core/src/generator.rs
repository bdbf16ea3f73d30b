//! Simulation of transaction logs from a fully specified model.
//!
//! Each play draws an initial action, a first receiver through `P_sk` and a
//! uniform choice within the cluster, then runs the holder's competing
//! hazards by thinning until an outcome or the end of the clock.

use crate::event_model::{parse_transactions, Event, ParseOptions, Play, Source, Target, TransactionLog};
use crate::likelihood::{ClusterParams, RateParams};
use crate::vocab::{InitialAction, Outcome};
use crate::{CsbmError, Result, PLAY_CLOCK};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the on-court set of each play is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineupSchedule {
    /// Play `h` uses lineup `h mod len`.
    Rotation(Vec<Vec<usize>>),
    /// `size` random players per play, at least one from every cluster
    /// when `size ≥ K`.
    Random { size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub params: ClusterParams,
    pub players: Vec<String>,
    pub labels: Vec<usize>,
    pub lineups: LineupSchedule,
    /// Probabilities of INBOUND, REBOUND, STEAL starting a play.
    pub initial_mix: [f64; InitialAction::COUNT],
    #[serde(default = "default_max_time")]
    pub max_time: f64,
}

fn default_max_time() -> f64 {
    PLAY_CLOCK
}

/// Labels and parameters of a simulated log, keyed by player id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub players: Vec<String>,
    pub labels: Vec<usize>,
    pub params: ClusterParams,
}

impl Truth {
    /// True labels in the player order of `log`; `None` for unknown ids.
    pub fn labels_for(&self, log: &TransactionLog) -> Vec<Option<usize>> {
        log.players.iter().map(|id| self.players.iter().position(|p| p == id).map(|i| self.labels[i])).collect()
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CsbmError::InvalidParams(m));
        self.params.validate()?;
        let n = self.players.len();
        if self.labels.len() != n {
            return bad(format!("{} labels for {n} players", self.labels.len()));
        }
        if self.labels.iter().any(|&e| e >= self.params.k) {
            return bad("label outside 0..K".into());
        }
        let mut ids = self.players.clone();
        ids.sort();
        ids.dedup();
        if ids.len() != n || self.players.iter().any(|p| p.is_empty() || p.contains(['|', ',', '#'])) {
            return bad("player ids must be distinct and free of `|`, `,` and `#`".into());
        }
        if self.players.iter().any(|p| crate::vocab::looks_like_token(p)) {
            return bad("player ids must not look like event tokens".into());
        }
        let sum: f64 = self.initial_mix.iter().sum();
        if self.initial_mix.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-8 {
            return bad("initial mix must be a probability vector".into());
        }
        if !(self.max_time > 0.0 && self.max_time <= PLAY_CLOCK) {
            return bad(format!("max_time must lie in (0, {PLAY_CLOCK}]"));
        }
        match &self.lineups {
            LineupSchedule::Rotation(list) => {
                if list.is_empty() {
                    return bad("empty lineup rotation".into());
                }
                for lineup in list {
                    let mut sorted = lineup.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() < 2 || sorted.len() != lineup.len() || sorted.iter().any(|&j| j >= n) {
                        return bad("every lineup needs at least two distinct rostered players".into());
                    }
                }
            }
            LineupSchedule::Random { size } => {
                if *size < 2 || *size > n {
                    return bad(format!("lineup size {size} must lie in 2..={n}"));
                }
            }
        }
        Ok(())
    }

    pub fn truth(&self) -> Truth {
        Truth { players: self.players.clone(), labels: self.labels.clone(), params: self.params.clone() }
    }

    fn lineup<R: Rng>(&self, play: usize, rng: &mut R) -> Vec<usize> {
        let mut lineup = match &self.lineups {
            LineupSchedule::Rotation(list) => list[play % list.len()].clone(),
            LineupSchedule::Random { size } => {
                let n = self.players.len();
                let mut chosen = Vec::with_capacity(*size);
                if *size >= self.params.k {
                    for c in 0..self.params.k {
                        let members: Vec<usize> = (0..n).filter(|&j| self.labels[j] == c).collect();
                        if !members.is_empty() {
                            chosen.push(members[rng.random_range(0..members.len())]);
                        }
                    }
                }
                let mut rest: Vec<usize> = (0..n).filter(|j| !chosen.contains(j)).collect();
                while chosen.len() < *size {
                    let pick = rng.random_range(0..rest.len());
                    chosen.push(rest.swap_remove(pick));
                }
                chosen
            }
        };
        lineup.sort_unstable();
        lineup
    }
}

fn draw_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Upper bound of `Σ_p e^{c_p} B_p(t)`: the basis is a partition of unity.
fn envelope(coeffs: &crate::spline::RateCoeffs) -> f64 {
    coeffs.0.iter().fold(f64::NEG_INFINITY, |m, &c| m.max(c)).exp()
}

/// One simulated play with the holder's lineup fixed throughout.
pub fn simulate_play<R: Rng>(spec: &SimSpec, play: usize, rng: &mut R) -> Result<Play> {
    let params = &spec.params;
    let k = params.k;
    let lineup = spec.lineup(play, rng);
    let action = InitialAction::ALL[draw_index(&spec.initial_mix, rng)];
    let cluster = draw_index(&params.p_init[action.index()], rng);
    let receivers: Vec<usize> = lineup.iter().copied().filter(|&j| spec.labels[j] == cluster).collect();
    if receivers.is_empty() {
        return Err(CsbmError::NoEligibleReceiver { cluster });
    }
    let mut holder = receivers[rng.random_range(0..receivers.len())];
    let mut events =
        vec![Event { from: Source::Initial(action), to: Target::Player(holder), time: 0.0, oncourt: lineup.clone() }];
    let mut t = 0.0;

    loop {
        let c = spec.labels[holder];
        let eligible: Vec<bool> = (0..k).map(|l| lineup.iter().any(|&j| j != holder && spec.labels[j] == l)).collect();
        // per-component envelope and instantaneous-rate evaluator
        let (bound, rates): (f64, Box<dyn Fn(f64) -> Result<Vec<f64>>>) = match &params.rates {
            RateParams::Simplified { lambda, transitions } => {
                let row = &transitions[c];
                let mass: Vec<f64> =
                    (0..k + Outcome::COUNT).map(|m| if m < k && !eligible[m] { 0.0 } else { row[m] }).collect();
                let bound = envelope(&lambda[c]) * mass.iter().sum::<f64>();
                let coeffs = &lambda[c];
                (
                    bound,
                    Box::new(move |s| {
                        let lam = params.basis.rate(coeffs, s)?;
                        Ok(mass.iter().map(|p| lam * p).collect())
                    }),
                )
            }
            RateParams::General { rho, eta } => {
                let rows: Vec<&crate::spline::RateCoeffs> =
                    (0..k).filter(|&l| eligible[l]).map(|l| &rho[c][l]).chain(eta[c].iter()).collect();
                let bound = rows.iter().map(|r| envelope(r)).sum::<f64>();
                let eligible = eligible.clone();
                (
                    bound,
                    Box::new(move |s| {
                        let mut out = Vec::with_capacity(k + Outcome::COUNT);
                        for l in 0..k {
                            out.push(if eligible[l] { params.basis.rate(&rho[c][l], s)? } else { 0.0 });
                        }
                        for row in &eta[c] {
                            out.push(params.basis.rate(row, s)?);
                        }
                        Ok(out)
                    }),
                )
            }
        };
        if !(bound > 0.0) {
            break;
        }
        let accepted = loop {
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / bound;
            if t > spec.max_time {
                break None;
            }
            let components = rates(t)?;
            let hazard: f64 = components.iter().sum();
            let ratio = hazard / bound;
            assert!((0.0..=1.0 + 1e-12).contains(&ratio), "thinning ratio {ratio} outside [0, 1]");
            if rng.random::<f64>() < ratio {
                break Some(components);
            }
        };
        let Some(components) = accepted else { break };
        let m = draw_index(&components, rng);
        if m < k {
            let targets: Vec<usize> = lineup.iter().copied().filter(|&j| j != holder && spec.labels[j] == m).collect();
            let next = targets[rng.random_range(0..targets.len())];
            events.push(Event {
                from: Source::Player(holder),
                to: Target::Player(next),
                time: t,
                oncourt: lineup.clone(),
            });
            holder = next;
        } else {
            let outcome = Outcome::ALL[m - k];
            events.push(Event {
                from: Source::Player(holder),
                to: Target::Outcome(outcome),
                time: t,
                oncourt: lineup.clone(),
            });
            break;
        }
    }
    Ok(Play { game_id: "sim".into(), play_id: play.to_string(), team: 0, events })
}

/// `n_plays` independent plays. Play `h` uses its own stream seeded from a
/// base drawn from `rng`, so the result does not depend on thread count.
/// The log is re-parsed from its CSV form, which validates every play and
/// orders players by first appearance.
pub fn simulate_log<R: Rng>(spec: &SimSpec, n_plays: usize, rng: &mut R) -> Result<TransactionLog> {
    spec.validate()?;
    let base: u64 = rng.random();
    let plays = (0..n_plays)
        .into_par_iter()
        .map(|h| {
            let mut play_rng = ChaCha8Rng::seed_from_u64(base.wrapping_add(h as u64));
            simulate_play(spec, h, &mut play_rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let raw = TransactionLog { players: spec.players.clone(), plays };
    parse_transactions(raw.to_csv_string().as_bytes(), &ParseOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Mode;
    use crate::spline::{RateCoeffs, SplineBasis};

    fn two_player_spec(pass: f64, out: f64) -> SimSpec {
        let basis = SplineBasis::uniform(0, 1, 0.0, PLAY_CLOCK).unwrap();
        let mut params = ClusterParams::uniform(1, basis, Mode::General, 1.0);
        if let RateParams::General { rho, eta } = &mut params.rates {
            rho[0][0] = RateCoeffs(vec![pass.ln().max(-30.0)]);
            for (a, row) in eta[0].iter_mut().enumerate() {
                *row = RateCoeffs(vec![if a == 0 { out.ln() } else { -30.0 }]);
            }
        }
        SimSpec {
            params,
            players: vec!["A".into(), "B".into()],
            labels: vec![0, 0],
            lineups: LineupSchedule::Rotation(vec![vec![0, 1]]),
            initial_mix: [1.0, 0.0, 0.0],
            max_time: PLAY_CLOCK,
        }
    }

    #[test]
    fn zero_plays_give_an_empty_log() {
        let spec = two_player_spec(1.0, 1.0);
        let log = simulate_log(&spec, 0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(log.plays.is_empty());
    }

    #[test]
    fn same_seed_same_log() {
        let spec = two_player_spec(1.0, 0.3);
        let a = simulate_log(&spec, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = simulate_log(&spec, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn pure_absorbing_play() {
        // pass rate e^{-30} is negligible: every play is inbound + one outcome
        let spec = two_player_spec(0.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut mean = 0.0;
        let n = 4000;
        for h in 0..n {
            let play = simulate_play(&spec, h, &mut rng).unwrap();
            assert!(play.events.len() <= 2);
            let last = play.events.last().unwrap();
            mean += if play.events.len() == 2 { last.time } else { PLAY_CLOCK };
        }
        mean /= n as f64;
        // E[min(Exp(c), 24)] = (1 − e^{−24c}) / c
        let expected = (1.0 - (-24.0f64 * 0.5).exp()) / 0.5;
        assert!((mean - expected).abs() < 4.0 * expected / (n as f64).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn missing_cluster_for_initial_draw() {
        let mut spec = two_player_spec(1.0, 1.0);
        spec.params = ClusterParams::uniform(2, spec.params.basis.clone(), Mode::Simplified, 1.0);
        spec.params.p_init[0] = vec![0.0, 1.0];
        let err = simulate_play(&spec, 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, CsbmError::NoEligibleReceiver { cluster: 1 }));
    }
}
