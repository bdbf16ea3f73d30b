use crate::event_model::{PlayerIdx, SufficientStats};
use crate::spline::{LocalBasis, SplineBasis};
use crate::Result;

/// Label- and parameter-independent view of the data: basis values at every
/// event time, basis integrals over every possession, and for each player the
/// likelihood units whose value depends on that player's label.
#[derive(Clone, Debug)]
pub struct Design {
    pub n: usize,
    pub basis: SplineBasis,
    pub inits: Vec<InitUnit>,
    pub passes: Vec<PassUnit>,
    pub outcomes: Vec<OutcomeUnit>,
    pub possessions: Vec<PossUnit>,
    /// Units touched by each player's label (deduplicated, sorted).
    pub touching: Vec<Vec<Unit>>,
    /// Ordered player pairs with at least one pass between them.
    pub pairs: Vec<(PlayerIdx, PlayerIdx)>,
}

#[derive(Clone, Debug)]
pub struct InitUnit {
    pub action: usize,
    pub receiver: PlayerIdx,
    pub oncourt: Vec<PlayerIdx>,
}

#[derive(Clone, Debug)]
pub struct PassUnit {
    pub from: PlayerIdx,
    pub to: PlayerIdx,
    pub pair: usize,
    pub oncourt: Vec<PlayerIdx>,
    pub local: LocalBasis,
}

#[derive(Clone, Debug)]
pub struct OutcomeUnit {
    pub player: PlayerIdx,
    pub outcome: usize,
    pub local: LocalBasis,
}

#[derive(Clone, Debug)]
pub struct PossUnit {
    pub player: PlayerIdx,
    pub oncourt: Vec<PlayerIdx>,
    pub integrals: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    Prior(PlayerIdx),
    Init(usize),
    Pass(usize),
    Outcome(usize),
    Possession(usize),
}

impl Design {
    pub fn new(stats: &SufficientStats, basis: &SplineBasis) -> Result<Self> {
        let n = stats.n_players;
        let mut touching: Vec<Vec<Unit>> = (0..n).map(|i| vec![Unit::Prior(i)]).collect();

        let inits = stats
            .initiations
            .iter()
            .enumerate()
            .map(|(u, e)| {
                for &j in &e.oncourt {
                    touching[j].push(Unit::Init(u));
                }
                InitUnit { action: e.action.index(), receiver: e.receiver, oncourt: e.oncourt.clone() }
            })
            .collect();

        let pair_index = stats.pass_counts().keys().copied().collect::<Vec<_>>();
        let mut passes = Vec::with_capacity(stats.passes.len());
        for (u, e) in stats.passes.iter().enumerate() {
            touching[e.from].push(Unit::Pass(u));
            for &j in &e.oncourt {
                touching[j].push(Unit::Pass(u));
            }
            let pair = pair_index.binary_search(&(e.from, e.to)).expect("pair is counted");
            passes.push(PassUnit {
                from: e.from,
                to: e.to,
                pair,
                oncourt: e.oncourt.clone(),
                local: basis.local(e.time)?,
            });
        }

        let mut outcomes = Vec::with_capacity(stats.outcomes.len());
        for (u, e) in stats.outcomes.iter().enumerate() {
            touching[e.player].push(Unit::Outcome(u));
            outcomes.push(OutcomeUnit { player: e.player, outcome: e.outcome.index(), local: basis.local(e.time)? });
        }

        let mut possessions = Vec::with_capacity(stats.possessions.len());
        for (u, h) in stats.possessions.iter().enumerate() {
            touching[h.player].push(Unit::Possession(u));
            for &j in &h.oncourt {
                touching[j].push(Unit::Possession(u));
            }
            possessions.push(PossUnit {
                player: h.player,
                oncourt: h.oncourt.clone(),
                integrals: basis.integrals(h.start, h.end)?,
            });
        }

        for units in &mut touching {
            units.sort_unstable();
            units.dedup();
        }
        Ok(Design { n, basis: basis.clone(), inits, passes, outcomes, possessions, touching, pairs: pair_index })
    }

    pub fn n_basis(&self) -> usize {
        self.basis.n_basis()
    }
}

/// Number of players in `members` with label `cluster`, skipping `exclude`.
#[inline]
pub(crate) fn count_in(members: &[PlayerIdx], exclude: Option<PlayerIdx>, labels: &[usize], cluster: usize) -> usize {
    members.iter().filter(|&&j| Some(j) != exclude && labels[j] == cluster).count()
}
