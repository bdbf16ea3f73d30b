use super::{PlayerIdx, Source, Target, TransactionLog};
use crate::vocab::{InitialAction, Outcome};
use crate::{CsbmError, Result};
use std::collections::BTreeMap;

/// How possessions left open at the end of a play are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum IncompletePolicy {
    /// Drop incomplete plays from the statistics.
    #[default]
    Exclude,
    /// Keep them; the open possession is censored at the last observed event.
    CloseAtLastEvent,
    /// Keep them; the open possession is censored at the given clock time
    /// (the shot clock for simulator-truncated plays).
    CloseAt(f64),
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct StatsOptions {
    pub incomplete: IncompletePolicy,
}

/// How a possession ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Release {
    /// Index into [`SufficientStats::passes`].
    Pass(usize),
    /// Index into [`SufficientStats::outcomes`].
    Outcome(usize),
    /// Stoppage or truncation: exposure without an event.
    Censored,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Possession {
    pub player: PlayerIdx,
    pub start: f64,
    pub end: f64,
    /// On-court set during the possession (the holder included).
    pub oncourt: Vec<PlayerIdx>,
    pub release: Release,
    pub play: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Initiation {
    pub action: InitialAction,
    pub receiver: PlayerIdx,
    pub time: f64,
    pub oncourt: Vec<PlayerIdx>,
    pub play: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassEvent {
    pub from: PlayerIdx,
    pub to: PlayerIdx,
    pub time: f64,
    pub oncourt: Vec<PlayerIdx>,
    pub possession: usize,
    pub play: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeEvent {
    pub player: PlayerIdx,
    pub outcome: Outcome,
    pub time: f64,
    pub possession: usize,
    pub play: usize,
}

/// Counts, possession intervals and on-court annotations derived from a log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SufficientStats {
    pub n_players: usize,
    pub initiations: Vec<Initiation>,
    pub passes: Vec<PassEvent>,
    pub outcomes: Vec<OutcomeEvent>,
    pub possessions: Vec<Possession>,
    /// Plays (by index in the log) that ended with the ball in a player's hands.
    pub incomplete_plays: Vec<usize>,
    /// Incomplete plays that were dropped under [`IncompletePolicy::Exclude`].
    pub excluded_plays: Vec<usize>,
}

impl SufficientStats {
    pub fn n_events(&self) -> usize {
        self.initiations.len() + self.passes.len() + self.outcomes.len()
    }

    /// `m_si`: initiation counts indexed `[player][action]`.
    pub fn initiation_counts(&self) -> Vec<[usize; InitialAction::COUNT]> {
        let mut m = vec![[0; InitialAction::COUNT]; self.n_players];
        for e in &self.initiations {
            m[e.receiver][e.action.index()] += 1;
        }
        m
    }

    /// `m_ij` for every ordered pair with at least one pass.
    pub fn pass_counts(&self) -> BTreeMap<(PlayerIdx, PlayerIdx), usize> {
        let mut m = BTreeMap::new();
        for p in &self.passes {
            *m.entry((p.from, p.to)).or_insert(0) += 1;
        }
        m
    }

    /// `m_ia` indexed `[player][outcome]`.
    pub fn outcome_counts(&self) -> Vec<[usize; Outcome::COUNT]> {
        let mut m = vec![[0; Outcome::COUNT]; self.n_players];
        for o in &self.outcomes {
            m[o.player][o.outcome.index()] += 1;
        }
        m
    }

    /// `M_i`: number of possessions per player.
    pub fn possession_counts(&self) -> Vec<usize> {
        let mut m = vec![0; self.n_players];
        for p in &self.possessions {
            m[p.player] += 1;
        }
        m
    }

    pub fn possessions_of(&self, player: PlayerIdx) -> impl Iterator<Item = &Possession> + '_ {
        self.possessions.iter().filter(move |p| p.player == player)
    }

    /// Times of the passes from `from` to `to`, in log order.
    pub fn pass_times(&self, from: PlayerIdx, to: PlayerIdx) -> Vec<f64> {
        self.passes.iter().filter(|p| p.from == from && p.to == to).map(|p| p.time).collect()
    }

    pub fn outcome_times(&self, player: PlayerIdx, outcome: Outcome) -> Vec<f64> {
        self.outcomes.iter().filter(|o| o.player == player && o.outcome == outcome).map(|o| o.time).collect()
    }
}

pub fn derive_stats(log: &TransactionLog) -> Result<SufficientStats> {
    derive_stats_with(log, &StatsOptions::default())
}

pub fn derive_stats_with(log: &TransactionLog, options: &StatsOptions) -> Result<SufficientStats> {
    let mut stats = SufficientStats { n_players: log.n_players(), ..Default::default() };

    for (play_idx, play) in log.plays.iter().enumerate() {
        let mut acc = PlayStats::default();
        // (holder, possession start, on-court set when the ball arrived)
        let mut holder: Option<(PlayerIdx, f64, &[PlayerIdx])> = None;
        let mut prev_time: Option<f64> = None;
        let inconsistent = |message: String| CsbmError::InconsistentPlay {
            play: format!("{}/{}", play.game_id, play.play_id),
            message,
        };

        for ev in &play.events {
            match ev.from {
                Source::Initial(action) => {
                    if let Some((i, start, oncourt)) = holder.take() {
                        // stoppage: the ball is dead until the inbound
                        acc.possessions.push(Possession {
                            player: i,
                            start,
                            end: ev.time,
                            oncourt: oncourt.to_vec(),
                            release: Release::Censored,
                            play: play_idx,
                        });
                    }
                    let Target::Player(j) = ev.to else {
                        return Err(inconsistent("initial action without a receiving player".into()));
                    };
                    acc.initiations.push(Initiation {
                        action,
                        receiver: j,
                        time: ev.time,
                        oncourt: ev.oncourt.clone(),
                        play: play_idx,
                    });
                    holder = Some((j, ev.time, &ev.oncourt));
                }
                Source::Player(i) => {
                    let start = match holder.take() {
                        Some((h, start, _)) if h == i => start,
                        Some((h, _, _)) => {
                            return Err(inconsistent(format!(
                                "event at t={} is sent by player {} but player {} holds the ball",
                                ev.time, log.players[i], log.players[h]
                            )))
                        }
                        // resumption without a recorded receive
                        None => prev_time.unwrap_or(ev.time),
                    };
                    let possession = acc.possessions.len();
                    let release = match ev.to {
                        Target::Player(j) => {
                            acc.passes.push(PassEvent {
                                from: i,
                                to: j,
                                time: ev.time,
                                oncourt: ev.oncourt.clone(),
                                possession,
                                play: play_idx,
                            });
                            holder = Some((j, ev.time, &ev.oncourt));
                            Release::Pass(acc.passes.len() - 1)
                        }
                        Target::Outcome(outcome) => {
                            acc.outcomes.push(OutcomeEvent {
                                player: i,
                                outcome,
                                time: ev.time,
                                possession,
                                play: play_idx,
                            });
                            Release::Outcome(acc.outcomes.len() - 1)
                        }
                    };
                    acc.possessions.push(Possession {
                        player: i,
                        start,
                        end: ev.time,
                        oncourt: ev.oncourt.clone(),
                        release,
                        play: play_idx,
                    });
                }
            }
            prev_time = Some(ev.time);
        }

        if let Some((i, start, oncourt)) = holder {
            stats.incomplete_plays.push(play_idx);
            let last = prev_time.unwrap_or(start);
            let end = match options.incomplete {
                IncompletePolicy::Exclude => {
                    stats.excluded_plays.push(play_idx);
                    continue;
                }
                IncompletePolicy::CloseAtLastEvent => last,
                IncompletePolicy::CloseAt(t) => t.max(start),
            };
            acc.possessions.push(Possession {
                player: i,
                start,
                end,
                oncourt: oncourt.to_vec(),
                release: Release::Censored,
                play: play_idx,
            });
        }
        acc.commit_into(&mut stats);
    }
    Ok(stats)
}

#[derive(Default)]
struct PlayStats {
    initiations: Vec<Initiation>,
    passes: Vec<PassEvent>,
    outcomes: Vec<OutcomeEvent>,
    possessions: Vec<Possession>,
}

impl PlayStats {
    /// Appends to `stats`, shifting play-local indices to global ones.
    fn commit_into(self, stats: &mut SufficientStats) {
        let (pass_off, out_off, pos_off) = (stats.passes.len(), stats.outcomes.len(), stats.possessions.len());
        stats.initiations.extend(self.initiations);
        stats.passes.extend(self.passes.into_iter().map(|mut p| {
            p.possession += pos_off;
            p
        }));
        stats.outcomes.extend(self.outcomes.into_iter().map(|mut o| {
            o.possession += pos_off;
            o
        }));
        stats.possessions.extend(self.possessions.into_iter().map(|mut p| {
            p.release = match p.release {
                Release::Pass(k) => Release::Pass(k + pass_off),
                Release::Outcome(k) => Release::Outcome(k + out_off),
                Release::Censored => Release::Censored,
            };
            p
        }));
    }
}

/// A reference to an event or interval in [`SufficientStats`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventRef {
    Initiation(usize),
    Pass(usize),
    Possession(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eligibility {
    /// `G_l`: eligible receivers in the target cluster.
    pub count: usize,
    /// `I_j` for every rostered player.
    pub indicators: Vec<bool>,
}

/// Eligible receivers for an event. Passes and possessions exclude the
/// holder; initial actions include the receiver.
pub fn eligible_count(
    stats: &SufficientStats,
    labels: &[usize],
    event: EventRef,
    cluster: usize,
) -> Result<Eligibility> {
    if labels.len() != stats.n_players {
        return Err(CsbmError::Dimension(format!("{} labels for {} players", labels.len(), stats.n_players)));
    }
    let missing = || CsbmError::UnknownEvent(format!("{event:?}"));
    let (oncourt, excluded) = match event {
        EventRef::Initiation(k) => (&stats.initiations.get(k).ok_or_else(missing)?.oncourt, None),
        EventRef::Pass(k) => {
            let p = stats.passes.get(k).ok_or_else(missing)?;
            (&p.oncourt, Some(p.from))
        }
        EventRef::Possession(k) => {
            let p = stats.possessions.get(k).ok_or_else(missing)?;
            (&p.oncourt, Some(p.player))
        }
    };
    let mut indicators = vec![false; stats.n_players];
    let mut count = 0;
    for &j in oncourt {
        if Some(j) == excluded {
            continue;
        }
        indicators[j] = true;
        if labels[j] == cluster {
            count += 1;
        }
    }
    Ok(Eligibility { count, indicators })
}

/// Per-cluster counts of `members`, skipping `exclude`.
pub fn cluster_counts(members: &[PlayerIdx], exclude: Option<PlayerIdx>, labels: &[usize], k: usize) -> Vec<u32> {
    let mut counts = vec![0u32; k];
    for &j in members {
        if Some(j) != exclude {
            counts[labels[j]] += 1;
        }
    }
    counts
}
