use super::cache::RateCache;
use super::design::{count_in, Design, Unit};
use super::probs::{fit_probabilities, prob_objective, ProbParams, ProbStats};
use super::ClusterParams;

/// Label-dependent sums from which the complete log-likelihood is assembled
/// for any probability parameters. Maintained incrementally by adding and
/// removing the units a player's label touches.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelTally {
    pub probs: ProbStats,
    pub log_g_init: f64,
    pub log_g_pass: f64,
    /// `Σ log λ` (simplified) or `Σ log ρ` (general) over passes.
    pub point_pass: f64,
    /// `Σ log λ` (simplified) or `Σ log η` (general) over outcomes.
    pub point_out: f64,
    /// General mode: `Σ_h Σ_l I(G_l > 0) ∫ρ_{e_i l}`.
    pub gap_pass: f64,
    /// General mode: `Σ_h Σ_a ∫η_{e_i a}`.
    pub gap_out: f64,
}

/// Bitmask of clusters with at least one eligible receiver.
#[inline]
fn present(members: &[usize], exclude: usize, labels: &[usize]) -> u64 {
    members.iter().filter(|&&j| j != exclude).fold(0u64, |m, &j| m | (1u64 << labels[j]))
}

impl LabelTally {
    pub fn new(design: &Design, cache: &RateCache, labels: &[usize]) -> Self {
        let mut tally = LabelTally {
            probs: ProbStats::zeros(cache.k),
            log_g_init: 0.0,
            log_g_pass: 0.0,
            point_pass: 0.0,
            point_out: 0.0,
            gap_pass: 0.0,
            gap_out: 0.0,
        };
        for i in 0..design.n {
            tally.apply(design, cache, labels, Unit::Prior(i), 1.0);
        }
        for u in 0..design.inits.len() {
            tally.apply(design, cache, labels, Unit::Init(u), 1.0);
        }
        for u in 0..design.passes.len() {
            tally.apply(design, cache, labels, Unit::Pass(u), 1.0);
        }
        for u in 0..design.outcomes.len() {
            tally.apply(design, cache, labels, Unit::Outcome(u), 1.0);
        }
        for u in 0..design.possessions.len() {
            tally.apply(design, cache, labels, Unit::Possession(u), 1.0);
        }
        tally
    }

    /// Adds (`sign = 1`) or removes (`sign = -1`) one unit under `labels`.
    pub fn apply(&mut self, design: &Design, cache: &RateCache, labels: &[usize], unit: Unit, sign: f64) {
        let k = cache.k;
        match unit {
            Unit::Prior(i) => self.probs.mass[labels[i]] += sign,
            Unit::Init(u) => {
                let e = &design.inits[u];
                let c = labels[e.receiver];
                self.probs.init[e.action][c] += sign;
                self.log_g_init += sign * (count_in(&e.oncourt, None, labels, c) as f64).ln();
            }
            Unit::Pass(u) => {
                let e = &design.passes[u];
                let (a, b) = (labels[e.from], labels[e.to]);
                self.probs.pass[a][b] += sign;
                self.log_g_pass += sign * (count_in(&e.oncourt, Some(e.from), labels, b) as f64).ln();
                let idx = if cache.general { a * k + b } else { a };
                self.point_pass += sign * cache.pass_log[u][idx];
            }
            Unit::Outcome(u) => {
                let e = &design.outcomes[u];
                let a = labels[e.player];
                self.probs.out[a][e.outcome] += sign;
                self.point_out += sign * cache.out_log[u][a];
            }
            Unit::Possession(u) => {
                let h = &design.possessions[u];
                let a = labels[h.player];
                let mask = present(&h.oncourt, h.player, labels);
                if cache.general {
                    let ints = &cache.poss_int[u][a * k..(a + 1) * k];
                    let gap: f64 = (0..k).filter(|l| mask >> l & 1 == 1).map(|l| ints[l]).sum();
                    self.gap_pass += sign * gap;
                    self.gap_out += sign * cache.poss_out_int[u][a];
                } else {
                    let lam = cache.poss_int[u][a];
                    for l in (0..k).filter(|l| mask >> l & 1 == 1) {
                        self.probs.pass_exposure[a][l] += sign * lam;
                    }
                    self.probs.out_exposure[a] += sign * lam;
                }
            }
        }
    }

    /// Complete log-likelihood under the probability parameters `probs`.
    pub fn score(&self, probs: &ProbParams) -> f64 {
        prob_objective(&self.probs, probs) + self.point_pass + self.point_out
            - self.log_g_init
            - self.log_g_pass
            - self.gap_pass
            - self.gap_out
    }
}

/// Scores label configurations for fixed rate parameters, either with the
/// probability parameters held at their current values or profiled out
/// (re-estimated in closed form for every configuration).
#[derive(Clone, Debug)]
pub struct Scorer<'a> {
    pub design: &'a Design,
    pub cache: RateCache,
    pub probs: ProbParams,
    pub profile: bool,
}

impl<'a> Scorer<'a> {
    pub fn new(design: &'a Design, params: &ClusterParams, profile: bool) -> Self {
        Scorer { design, cache: RateCache::new(design, params), probs: params.prob_params(), profile }
    }

    pub fn tally(&self, labels: &[usize]) -> LabelTally {
        LabelTally::new(self.design, &self.cache, labels)
    }

    /// Probability parameters used to score `tally`.
    pub fn probs_for(&self, tally: &LabelTally) -> ProbParams {
        if self.profile {
            fit_probabilities(&tally.probs, &self.probs).unwrap_or_else(|_| self.probs.clone())
        } else {
            self.probs.clone()
        }
    }

    pub fn score(&self, tally: &LabelTally) -> f64 {
        if self.profile {
            tally.score(&self.probs_for(tally))
        } else {
            tally.score(&self.probs)
        }
    }

    pub fn score_labels(&self, labels: &[usize]) -> f64 {
        self.score(&self.tally(labels))
    }

    /// Log-scores of every candidate label for player `i`, all other labels
    /// held fixed. `labels` and `tally` are restored on return.
    pub fn conditional(&self, labels: &mut [usize], tally: &mut LabelTally, i: usize) -> Vec<f64> {
        let units = &self.design.touching[i];
        let original = labels[i];
        for &u in units {
            tally.apply(self.design, &self.cache, labels, u, -1.0);
        }
        let mut out = Vec::with_capacity(self.cache.k);
        for c in 0..self.cache.k {
            labels[i] = c;
            for &u in units {
                tally.apply(self.design, &self.cache, labels, u, 1.0);
            }
            out.push(self.score(tally));
            for &u in units {
                tally.apply(self.design, &self.cache, labels, u, -1.0);
            }
        }
        labels[i] = original;
        for &u in units {
            tally.apply(self.design, &self.cache, labels, u, 1.0);
        }
        out
    }

    /// Moves player `i` to cluster `c`, updating `tally`.
    pub fn relabel(&self, labels: &mut [usize], tally: &mut LabelTally, i: usize, c: usize) {
        if labels[i] == c {
            return;
        }
        let units = &self.design.touching[i];
        for &u in units {
            tally.apply(self.design, &self.cache, labels, u, -1.0);
        }
        labels[i] = c;
        for &u in units {
            tally.apply(self.design, &self.cache, labels, u, 1.0);
        }
    }
}
