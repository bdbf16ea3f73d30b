//! Nonnegative B-spline rate functions `r(t) = Σ_p exp(c_p) B_p(t)`.
//!
//! Rates are evaluated with the local de Boor triangle and integrated exactly
//! through the antiderivative identity
//! `∫_{t_p}^{x} B_{p,d} = (t_{p+d+1} - t_p)/(d+1) · Σ_{j≥p} B_{j,d+1}(x)`,
//! where the degree `d+1` functions live on the knot vector extended by one
//! copy of the right end knot.

use crate::{CsbmError, Result, PLAY_CLOCK};
use serde::{Deserialize, Serialize};

const MAX_ORDER: usize = 8;

/// Lower/upper bound on log-coefficients; keeps `exp(c)` finite.
pub const COEFF_BOUND: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    degree: usize,
    knots: Vec<f64>,
}

/// The nonzero basis values at a point: `B_{first + r}(t) = values[r]`.
#[derive(Clone, Copy, Debug)]
pub struct LocalBasis {
    pub first: usize,
    pub len: usize,
    pub values: [f64; MAX_ORDER],
}

impl LocalBasis {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values[..self.len].iter().enumerate().map(move |(r, &v)| (self.first + r, v))
    }
}

/// Log-coefficients of one rate function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateCoeffs(pub Vec<f64>);

impl RateCoeffs {
    pub fn constant(n_basis: usize, rate: f64) -> Self {
        RateCoeffs(vec![rate.ln().clamp(-COEFF_BOUND, COEFF_BOUND); n_basis])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.exp()).collect()
    }

    /// Adds `delta` to every log-coefficient, scaling the rate by `exp(delta)`.
    pub fn shifted(&self, delta: f64) -> Self {
        RateCoeffs(self.0.iter().map(|c| c + delta).collect())
    }
}

/// Point or interval query for [`rate_gradient`].
#[derive(Clone, Copy, Debug)]
pub enum RateQuery {
    Point(f64),
    Interval(f64, f64),
}

impl Default for SplineBasis {
    fn default() -> Self {
        Self::uniform(3, 5, 0.0, PLAY_CLOCK).expect("default basis is valid")
    }
}

impl SplineBasis {
    /// Clamped uniform knots on `[lo, hi]` with `intervals` knot spans;
    /// yields `intervals + degree` basis functions.
    pub fn uniform(degree: usize, intervals: usize, lo: f64, hi: f64) -> Result<Self> {
        if intervals == 0 || !(lo < hi) {
            return Err(CsbmError::Config(format!("invalid spline domain [{lo}, {hi}] with {intervals} spans")));
        }
        let interior: Vec<f64> = (1..intervals).map(|i| lo + (hi - lo) * i as f64 / intervals as f64).collect();
        Self::clamped(degree, lo, hi, &interior)
    }

    /// Clamped knots: `degree + 1` copies of each end plus the interior knots.
    pub fn clamped(degree: usize, lo: f64, hi: f64, interior: &[f64]) -> Result<Self> {
        if degree + 1 > MAX_ORDER {
            return Err(CsbmError::Config(format!("spline degree {degree} exceeds {}", MAX_ORDER - 1)));
        }
        if interior.windows(2).any(|w| w[0] > w[1]) || interior.iter().any(|&k| k <= lo || k >= hi) {
            return Err(CsbmError::Config("interior knots must be nondecreasing and inside the domain".into()));
        }
        let mut knots = vec![lo; degree + 1];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat(hi).take(degree + 1));
        Ok(SplineBasis { degree, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `P`.
    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    fn check(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if t.is_nan() || t < lo || t > hi {
            return Err(CsbmError::OutOfDomain(t));
        }
        Ok(())
    }

    fn check_interval(&self, t0: f64, t1: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(lo <= t0 && t0 <= t1 && t1 <= hi) {
            return Err(CsbmError::InvalidInterval(t0, t1));
        }
        Ok(())
    }

    fn span(&self, t: f64) -> usize {
        let n = self.n_basis();
        if t >= self.knots[n] {
            return n - 1;
        }
        // largest i in [degree, n-1] with knots[i] <= t
        let (mut lo, mut hi) = (self.degree, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Nonzero basis functions at `t` (de Boor triangle).
    pub fn local(&self, t: f64) -> Result<LocalBasis> {
        self.check(t)?;
        let p = self.degree;
        let i = self.span(t);
        let mut values = [0.0; MAX_ORDER];
        let mut left = [0.0; MAX_ORDER];
        let mut right = [0.0; MAX_ORDER];
        values[0] = 1.0;
        for j in 1..=p {
            left[j] = t - self.knots[i + 1 - j];
            right[j] = self.knots[i + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { values[r] / denom };
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        Ok(LocalBasis { first: i - p, len: p + 1, values })
    }

    /// All `P` basis values at `t`.
    pub fn dense(&self, t: f64) -> Result<Vec<f64>> {
        let local = self.local(t)?;
        let mut out = vec![0.0; self.n_basis()];
        for (p, v) in local.iter() {
            out[p] = v;
        }
        Ok(out)
    }

    /// `∫_{t0}^{t1} B_p(t) dt` for every basis function.
    pub fn integrals(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        self.check_interval(t0, t1)?;
        let n = self.n_basis();
        if t0 == t1 {
            return Ok(vec![0.0; n]);
        }
        let upper = self.antiderivatives(t1);
        let lower = self.antiderivatives(t0);
        Ok(upper.iter().zip(&lower).map(|(u, l)| (u - l).max(0.0)).collect())
    }

    /// `∫_{lo}^{x} B_p` for every `p`.
    fn antiderivatives(&self, x: f64) -> Vec<f64> {
        let d = self.degree;
        let n = self.n_basis();
        let (_, hi) = self.domain();
        let mut ext = self.knots.clone();
        ext.push(hi);
        let higher = cox_de_boor_all(&ext, d + 1, x);
        // suffix sums Σ_{j≥p} B_{j,d+1}(x)
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for p in (0..n).rev() {
            acc += higher[p];
            let scale = (self.knots[p + d + 1] - self.knots[p]) / (d + 1) as f64;
            out[p] = scale * acc;
        }
        out
    }

    /// `∫_{lo}^{hi} B_p` for every `p`.
    pub fn full_integrals(&self) -> Vec<f64> {
        let d = self.degree;
        (0..self.n_basis()).map(|p| (self.knots[p + d + 1] - self.knots[p]) / (d + 1) as f64).collect()
    }

    pub fn rate(&self, coeffs: &RateCoeffs, t: f64) -> Result<f64> {
        self.check_coeffs(coeffs)?;
        let local = self.local(t)?;
        Ok(local.iter().map(|(p, b)| coeffs.0[p].exp() * b).sum())
    }

    pub fn rate_integral(&self, coeffs: &RateCoeffs, t0: f64, t1: f64) -> Result<f64> {
        self.check_coeffs(coeffs)?;
        let ints = self.integrals(t0, t1)?;
        Ok(ints.iter().zip(&coeffs.0).map(|(i, c)| c.exp() * i).sum())
    }

    pub fn check_coeffs(&self, coeffs: &RateCoeffs) -> Result<()> {
        if coeffs.len() != self.n_basis() {
            return Err(CsbmError::Dimension(format!(
                "{} coefficients for {} basis functions",
                coeffs.len(),
                self.n_basis()
            )));
        }
        if coeffs.0.iter().any(|c| !c.is_finite()) {
            return Err(CsbmError::InvalidParams("non-finite spline coefficient".into()));
        }
        Ok(())
    }
}

/// Every degree-`degree` basis function on `knots` at `x`, by the full
/// Cox–de Boor triangle with `0/0 = 0`; the last nondegenerate span is closed
/// on the right.
fn cox_de_boor_all(knots: &[f64], degree: usize, x: f64) -> Vec<f64> {
    let m = knots.len();
    let hi = knots[m - 1];
    let mut level: Vec<f64> = (0..m - 1)
        .map(|j| {
            let (a, b) = (knots[j], knots[j + 1]);
            let inside = (a <= x && x < b) || (x == hi && b == hi && a < b);
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    // at x == hi only the last nondegenerate span may be active
    if x == hi {
        if let Some(last) = level.iter().rposition(|&v| v == 1.0) {
            for (j, v) in level.iter_mut().enumerate() {
                if j != last {
                    *v = 0.0;
                }
            }
        }
    }
    for d in 1..=degree {
        let next: Vec<f64> = (0..m - 1 - d)
            .map(|j| {
                let mut v = 0.0;
                let den1 = knots[j + d] - knots[j];
                if den1 > 0.0 {
                    v += (x - knots[j]) / den1 * level[j];
                }
                let den2 = knots[j + d + 1] - knots[j + 1];
                if den2 > 0.0 {
                    v += (knots[j + d + 1] - x) / den2 * level[j + 1];
                }
                v
            })
            .collect();
        level = next;
    }
    level
}

pub fn rate_eval(basis: &SplineBasis, coeffs: &RateCoeffs, t: f64) -> Result<f64> {
    basis.rate(coeffs, t)
}

pub fn rate_integral(basis: &SplineBasis, coeffs: &RateCoeffs, t0: f64, t1: f64) -> Result<f64> {
    basis.rate_integral(coeffs, t0, t1)
}

/// Partial derivatives of [`rate_eval`] or [`rate_integral`] with respect to
/// the log-coefficients: `exp(c_p) B_p(t)` or `exp(c_p) ∫ B_p`.
pub fn rate_gradient(basis: &SplineBasis, coeffs: &RateCoeffs, query: RateQuery) -> Result<Vec<f64>> {
    basis.check_coeffs(coeffs)?;
    let base = match query {
        RateQuery::Point(t) => basis.dense(t)?,
        RateQuery::Interval(t0, t1) => basis.integrals(t0, t1)?,
    };
    Ok(base.iter().zip(&coeffs.0).map(|(b, c)| c.exp() * b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook recursive Cox–de Boor, independent of the production paths.
    fn naive_basis(knots: &[f64], p: usize, d: usize, t: f64) -> f64 {
        let hi = *knots.last().unwrap();
        if d == 0 {
            let (a, b) = (knots[p], knots[p + 1]);
            if a <= t && t < b {
                return 1.0;
            }
            // closed right end on the last nondegenerate span
            if t == hi && b == hi && a < b {
                return 1.0;
            }
            return 0.0;
        }
        let mut v = 0.0;
        let den1 = knots[p + d] - knots[p];
        if den1 > 0.0 {
            v += (t - knots[p]) / den1 * naive_basis(knots, p, d - 1, t);
        }
        let den2 = knots[p + d + 1] - knots[p + 1];
        if den2 > 0.0 {
            v += (knots[p + d + 1] - t) / den2 * naive_basis(knots, p + 1, d - 1, t);
        }
        v
    }

    /// 16-point Gauss–Legendre per knot span.
    fn gauss_legendre_integral(f: impl Fn(f64) -> f64, breaks: &[f64], t0: f64, t1: f64) -> f64 {
        let (nodes, weights) = gauss_legendre_16();
        let mut cuts: Vec<f64> = vec![t0];
        cuts.extend(breaks.iter().copied().filter(|&k| k > t0 && k < t1));
        cuts.push(t1);
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (x, wt) in nodes.iter().zip(&weights) {
                total += half * wt * f(mid + half * x);
            }
        }
        total
    }

    fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
        // Newton iteration on P_16 from Chebyshev starting points.
        let n = 16;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        (nodes, weights)
    }

    fn grid(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| 24.0 * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn partition_of_unity_on_grid() {
        for basis in [SplineBasis::default(), SplineBasis::uniform(2, 7, 0.0, 24.0).unwrap()] {
            for t in grid(1000) {
                let s: f64 = basis.dense(t).unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "t={t} sum={s}");
            }
        }
    }

    #[test]
    fn local_matches_naive_recursion() {
        let basis = SplineBasis::default();
        assert_eq!(basis.n_basis(), 8);
        for t in grid(241) {
            let dense = basis.dense(t).unwrap();
            for (p, v) in dense.iter().enumerate() {
                let naive = naive_basis(basis.knots(), p, 3, t);
                assert!((v - naive).abs() < 1e-13, "p={p} t={t}");
            }
        }
    }

    #[test]
    fn rate_examples() {
        let basis = SplineBasis::default();
        let zero = RateCoeffs(vec![0.0; 8]);
        let two = RateCoeffs(vec![2f64.ln(); 8]);
        for t in [0.0, 3.3, 12.0, 24.0] {
            assert!((rate_eval(&basis, &zero, t).unwrap() - 1.0).abs() < 1e-12);
            assert!((rate_eval(&basis, &two, t).unwrap() - 2.0).abs() < 1e-12);
        }
        let mut last = vec![0.0; 8];
        last[7] = 3f64.ln();
        let last = RateCoeffs(last);
        let at_end = rate_eval(&basis, &last, 24.0).unwrap();
        assert!((at_end - 3.0).abs() < 1e-12);
        // cross-check against the naive recursion
        let naive: f64 = (0..8).map(|p| last.0[p].exp() * naive_basis(basis.knots(), p, 3, 24.0)).sum();
        assert!((naive - 3.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_errors() {
        let basis = SplineBasis::default();
        let c = RateCoeffs(vec![0.0; 8]);
        assert!(matches!(rate_eval(&basis, &c, 24.5), Err(CsbmError::OutOfDomain(_))));
        assert!(matches!(rate_eval(&basis, &c, -0.1), Err(CsbmError::OutOfDomain(_))));
        assert!(matches!(rate_integral(&basis, &c, 5.0, 4.0), Err(CsbmError::InvalidInterval(..))));
        assert!(matches!(rate_integral(&basis, &c, 0.0, 25.0), Err(CsbmError::InvalidInterval(..))));
        assert!(rate_eval(&basis, &RateCoeffs(vec![0.0; 7]), 1.0).is_err());
    }

    #[test]
    fn integral_examples() {
        let basis = SplineBasis::default();
        let zero = RateCoeffs(vec![0.0; 8]);
        assert!((rate_integral(&basis, &zero, 0.0, 24.0).unwrap() - 24.0).abs() < 1e-12);
        assert_eq!(rate_integral(&basis, &zero, 7.0, 7.0).unwrap(), 0.0);
        let two = RateCoeffs(vec![2f64.ln(); 8]);
        assert!((rate_integral(&basis, &two, 0.0, 12.0).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn integrals_match_gauss_legendre() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for basis in [
            SplineBasis::default(),
            SplineBasis::uniform(2, 4, 0.0, 24.0).unwrap(),
            SplineBasis::uniform(0, 1, 0.0, 24.0).unwrap(),
            SplineBasis::clamped(3, 0.0, 24.0, &[2.0, 2.0, 9.5, 20.0]).unwrap(),
        ] {
            let d = basis.degree();
            for _ in 0..50 {
                let coeffs = RateCoeffs((0..basis.n_basis()).map(|_| rng.random_range(-2.0..2.0)).collect());
                let a: f64 = rng.random_range(0.0..24.0);
                let b: f64 = rng.random_range(a..=24.0);
                let exact = rate_integral(&basis, &coeffs, a, b).unwrap();
                let f = |t: f64| -> f64 {
                    (0..basis.n_basis()).map(|p| coeffs.0[p].exp() * naive_basis(basis.knots(), p, d, t)).sum()
                };
                let oracle = gauss_legendre_integral(f, basis.knots(), a, b);
                assert!((exact - oracle).abs() < 1e-10 * (1.0 + oracle.abs()), "{exact} vs {oracle}");
            }
        }
    }

    #[test]
    fn integral_additivity() {
        let basis = SplineBasis::default();
        let coeffs = RateCoeffs(vec![0.3, -1.0, 0.5, 2.0, -0.2, 0.1, 1.1, -0.7]);
        for (a, b, c) in [(0.0, 5.0, 24.0), (1.3, 4.8, 4.9), (10.0, 10.0, 11.0), (3.0, 14.4, 19.2)] {
            let whole = rate_integral(&basis, &coeffs, a, c).unwrap();
            let parts = rate_integral(&basis, &coeffs, a, b).unwrap() + rate_integral(&basis, &coeffs, b, c).unwrap();
            assert!((whole - parts).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_examples() {
        let basis = SplineBasis::default();
        let zero = RateCoeffs(vec![0.0; 8]);
        let g = rate_gradient(&basis, &zero, RateQuery::Point(9.1)).unwrap();
        assert_eq!(g, basis.dense(9.1).unwrap());
        let coeffs = RateCoeffs(vec![0.3, -1.0, 0.5, 2.0, -0.2, 0.1, 1.1, -0.7]);
        let g = rate_gradient(&basis, &coeffs, RateQuery::Interval(6.0, 6.0)).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let basis = SplineBasis::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let coeffs = RateCoeffs((0..8).map(|_| rng.random_range(-2.0..2.0)).collect());
            let g = rate_gradient(&basis, &coeffs, RateQuery::Interval(3.0, 17.0)).unwrap();
            let h = 1e-5;
            let fd: Vec<f64> = (0..8)
                .map(|p| {
                    let mut up = coeffs.clone();
                    up.0[p] += h;
                    let mut dn = coeffs.clone();
                    dn.0[p] -= h;
                    (rate_integral(&basis, &up, 3.0, 17.0).unwrap() - rate_integral(&basis, &dn, 3.0, 17.0).unwrap())
                        / (2.0 * h)
                })
                .collect();
            let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den < 1e-6, "relative error {}", num / den);
        }
    }

    #[test]
    fn single_constant_basis() {
        let basis = SplineBasis::uniform(0, 1, 0.0, 24.0).unwrap();
        assert_eq!(basis.n_basis(), 1);
        let c = RateCoeffs(vec![0.5f64.ln()]);
        assert!((basis.rate(&c, 24.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((basis.rate_integral(&c, 2.0, 6.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn full_integrals_agree_with_integrals() {
        let basis = SplineBasis::default();
        let a = basis.full_integrals();
        let b = basis.integrals(0.0, 24.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn rates_are_positive(c in proptest::collection::vec(-20.0f64..20.0, 8), t in 0.0f64..=24.0) {
            let basis = SplineBasis::default();
            proptest::prop_assert!(basis.rate(&RateCoeffs(c), t).unwrap() > 0.0);
        }
    }
}
