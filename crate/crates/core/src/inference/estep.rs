use crate::event_model::SufficientStats;
use crate::likelihood::{ClusterParams, Design, Scorer};
use crate::{CsbmError, Result};
use rand::Rng;

/// Conditional expectations of the latent indicators given the data.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationSet {
    pub k: usize,
    /// `E[z_ik]`, indexed `[player][cluster]`.
    pub ez: Vec<Vec<f64>>,
    /// `E[z_ik z_jl]` for the ordered pairs with at least one pass, indexed
    /// `[pair][k * K + l]`; pairs follow [`Design::pairs`].
    pub ezz: Vec<Vec<f64>>,
    /// `E[z_ik I(G_l > 0)]` for the holder `i` of each possession, indexed
    /// `[possession][k * K + l]`.
    pub ezind: Vec<Vec<f64>>,
}

#[inline]
fn eligible_mask(members: &[usize], holder: usize, labels: &[usize]) -> u64 {
    members.iter().filter(|&&j| j != holder).fold(0u64, |m, &j| m | (1u64 << labels[j]))
}

impl ExpectationSet {
    pub fn zeros(design: &Design, k: usize) -> Self {
        ExpectationSet {
            k,
            ez: vec![vec![0.0; k]; design.n],
            ezz: vec![vec![0.0; k * k]; design.pairs.len()],
            ezind: vec![vec![0.0; k * k]; design.possessions.len()],
        }
    }

    /// Degenerate expectations of a fixed labeling.
    pub fn from_hard(design: &Design, k: usize, labels: &[usize]) -> Self {
        let mut exp = Self::zeros(design, k);
        exp.add_labeling(design, labels, 1.0);
        exp
    }

    fn add_labeling(&mut self, design: &Design, labels: &[usize], weight: f64) {
        let k = self.k;
        for (i, &c) in labels.iter().enumerate() {
            self.ez[i][c] += weight;
        }
        for (p, &(i, j)) in design.pairs.iter().enumerate() {
            self.ezz[p][labels[i] * k + labels[j]] += weight;
        }
        for (h, poss) in design.possessions.iter().enumerate() {
            let c = labels[poss.player];
            let mask = eligible_mask(&poss.oncourt, poss.player, labels);
            for l in (0..k).filter(|l| mask >> l & 1 == 1) {
                self.ezind[h][c * k + l] += weight;
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for row in self.ez.iter_mut().chain(&mut self.ezz).chain(&mut self.ezind) {
            for v in row {
                *v *= factor;
            }
        }
    }

    /// Row-wise argmax of `ez`, ties to the lowest cluster.
    pub fn argmax_labels(&self) -> Vec<usize> {
        self.ez.iter().map(|row| crate::likelihood::argmax(row)).collect()
    }

    /// Largest absolute difference over all entries.
    pub fn sup_distance(&self, other: &ExpectationSet) -> f64 {
        let a = self.ez.iter().chain(&self.ezz).chain(&self.ezind);
        let b = other.ez.iter().chain(&other.ezz).chain(&other.ezind);
        a.zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs())).fold(0.0, f64::max)
    }
}

/// Normalizes log-weights in place with the log-sum-exp shift; returns the
/// log normalizer. All weights `-inf` is an error.
pub(crate) fn normalize_log(weights: &mut [f64]) -> Result<f64> {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(CsbmError::Infeasible("every candidate label has zero likelihood".into()));
    }
    let mut sum = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        sum += *w;
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    Ok(max + sum.ln())
}

/// Chain settings for [`gibbs_chain`].
#[derive(Clone, Copy, Debug)]
pub struct GibbsSettings {
    pub burnin: usize,
    pub samples: usize,
}

/// Systematic-scan Gibbs sampler over the player labels, starting from
/// `labels` (left at the final state).
///
/// Expectations are Rao–Blackwellized: when player `i` is updated with
/// conditional `p_i`, the sweep contributes `p_i(k)` to `E[z_ik]`,
/// `p_i(k) 1{e_j = l}` to `E[z_ik z_jl]` for the pairs `(i, j)` and
/// `p_i(k) I(G_l > 0)` for the possessions of `i`; `G` excludes `i` and so
/// does not depend on `e_i`.
pub fn gibbs_chain<R: Rng>(
    scorer: &Scorer<'_>,
    settings: GibbsSettings,
    labels: &mut [usize],
    rng: &mut R,
) -> Result<ExpectationSet> {
    let design = scorer.design;
    let k = scorer.cache.k;
    let mut exp = ExpectationSet::zeros(design, k);
    if k == 1 {
        exp.add_labeling(design, labels, 1.0);
        return Ok(exp);
    }
    let mut pairs_from: Vec<Vec<usize>> = vec![Vec::new(); design.n];
    for (p, &(i, _)) in design.pairs.iter().enumerate() {
        pairs_from[i].push(p);
    }
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); design.n];
    for (h, poss) in design.possessions.iter().enumerate() {
        held[poss.player].push(h);
    }

    for sweep in 0..settings.burnin + settings.samples {
        let retain = sweep >= settings.burnin;
        let mut tally = scorer.tally(labels);
        for i in 0..design.n {
            let mut probs = scorer.conditional(labels, &mut tally, i);
            normalize_log(&mut probs)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = k - 1;
            for (c, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = c;
                    break;
                }
            }
            if retain {
                for c in 0..k {
                    exp.ez[i][c] += probs[c];
                }
                for &p in &pairs_from[i] {
                    let l = labels[design.pairs[p].1];
                    for c in 0..k {
                        exp.ezz[p][c * k + l] += probs[c];
                    }
                }
                for &h in &held[i] {
                    let poss = &design.possessions[h];
                    let mask = eligible_mask(&poss.oncourt, poss.player, labels);
                    for l in (0..k).filter(|l| mask >> l & 1 == 1) {
                        for c in 0..k {
                            exp.ezind[h][c * k + l] += probs[c];
                        }
                    }
                }
            }
            scorer.relabel(labels, &mut tally, i, pick);
        }
    }
    exp.scale(1.0 / settings.samples as f64);
    Ok(exp)
}

/// Gibbs E-step with the probability parameters held at `params`, starting
/// from `init` labels.
pub fn gibbs_estep<R: Rng>(
    stats: &SufficientStats,
    params: &ClusterParams,
    settings: GibbsSettings,
    init: &[usize],
    rng: &mut R,
) -> Result<ExpectationSet> {
    params.validate()?;
    check_init(stats.n_players, params.k, init, settings)?;
    let design = Design::new(stats, &params.basis)?;
    let scorer = Scorer::new(&design, params, false);
    let mut labels = init.to_vec();
    gibbs_chain(&scorer, settings, &mut labels, rng)
}

fn check_init(n: usize, k: usize, init: &[usize], settings: GibbsSettings) -> Result<()> {
    if init.len() != n || init.iter().any(|&e| e >= k) {
        return Err(CsbmError::Dimension(format!("initial labels must be {n} values in 0..{k}")));
    }
    if settings.samples == 0 {
        return Err(CsbmError::Config("at least one retained Gibbs sweep is needed".into()));
    }
    Ok(())
}

/// Largest number of labelings [`exact_estep`] enumerates.
pub const MAX_ENUMERATION: f64 = 1048576.0;

/// Visits every labeling in `0..K^n` (odometer order) with its score.
pub(crate) fn enumerate_labelings(scorer: &Scorer<'_>, mut visit: impl FnMut(&[usize], f64)) -> Result<()> {
    let n = scorer.design.n;
    let k = scorer.cache.k;
    let total = (k as f64).powi(n as i32);
    if total > MAX_ENUMERATION {
        return Err(CsbmError::TooLarge(total));
    }
    let mut labels = vec![0usize; n];
    loop {
        visit(&labels, scorer.score_labels(&labels));
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(());
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact expectations by enumerating all `K^n` labelings.
pub fn exact_estep_with(scorer: &Scorer<'_>) -> Result<ExpectationSet> {
    let mut configs = Vec::new();
    let mut scores = Vec::new();
    enumerate_labelings(scorer, |labels, score| {
        configs.push(labels.to_vec());
        scores.push(score);
    })?;
    normalize_log(&mut scores)?;
    let mut exp = ExpectationSet::zeros(scorer.design, scorer.cache.k);
    for (labels, w) in configs.iter().zip(&scores) {
        if *w > 0.0 {
            exp.add_labeling(scorer.design, labels, *w);
        }
    }
    Ok(exp)
}

/// Exact E-step with the probability parameters held at `params`.
pub fn exact_estep(stats: &SufficientStats, params: &ClusterParams) -> Result<ExpectationSet> {
    params.validate()?;
    let design = Design::new(stats, &params.basis)?;
    exact_estep_with(&Scorer::new(&design, params, false))
}
