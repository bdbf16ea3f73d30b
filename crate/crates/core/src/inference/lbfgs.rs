//! Box-constrained limited-memory BFGS for maximizing smooth objectives.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    /// Stop when the projected gradient's largest entry falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { grad_tol: 1e-6, max_iters: 200, memory: 8 }
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iters: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest entry of the projected gradient step `x − P(x + g)` for ascent.
fn projected_norm(x: &[f64], g: &[f64], lo: f64, hi: f64) -> f64 {
    x.iter().zip(g).map(|(&xi, &gi)| ((xi + gi).clamp(lo, hi) - xi).abs()).fold(0.0, f64::max)
}

/// Maximizes `f` over the box `[lo, hi]^n` starting at `x0`. `f` returns the
/// value and gradient. The returned point never has a lower value than the
/// (clamped) start.
pub fn maximize<F>(f: F, x0: &[f64], lo: f64, hi: f64, config: &LbfgsConfig) -> LbfgsOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x: Vec<f64> = x0.iter().map(|v| v.clamp(lo, hi)).collect();
    let (mut fx, mut g) = f(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    if !fx.is_finite() {
        return LbfgsOutcome { x, value: fx, iters: 0, converged: false };
    }
    for iter in 0..config.max_iters {
        if projected_norm(&x, &g, lo, hi) < config.grad_tol {
            return LbfgsOutcome { x, value: fx, iters: iter, converged: true };
        }
        let at_bound = |i: usize, d: f64| (x[i] <= lo && d < 0.0) || (x[i] >= hi && d > 0.0);

        // two-loop recursion on the ascent direction
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in &mut q {
                *v *= gamma;
            }
        } else {
            let scale = 1.0 / g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
            for v in &mut q {
                *v *= scale;
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += (a - b) * s[i];
            }
        }
        let mut d = q;
        for (i, di) in d.iter_mut().enumerate() {
            if at_bound(i, *di) {
                *di = 0.0;
            }
        }
        if dot(&d, &g) <= 0.0 {
            history.clear();
            let scale = 1.0 / g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
            d = g.iter().enumerate().map(|(i, &gi)| if at_bound(i, gi) { 0.0 } else { gi * scale }).collect();
        }

        // projected backtracking with an Armijo condition
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| (xi + step * di).clamp(lo, hi)).collect();
            let (ft, gt) = f(&trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if ft.is_finite() && ft >= fx + 1e-4 * dot(&g, &moved) && ft >= fx {
                accepted = Some((trial, ft, gt, moved));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn, s)) = accepted else {
            return LbfgsOutcome { x, value: fx, iters: iter, converged: false };
        };
        // curvature pair for the concave model: y = g_old − g_new
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            history.push_back((s, y, 1.0 / sy));
            if history.len() > config.memory {
                history.pop_front();
            }
        }
        let gain = fn_ - fx;
        x = xn;
        fx = fn_;
        g = gn;
        if gain <= 1e-15 * (1.0 + fx.abs()) && projected_norm(&x, &g, lo, hi) < config.grad_tol.sqrt() {
            return LbfgsOutcome { x, value: fx, iters: iter + 1, converged: true };
        }
    }
    let converged = projected_norm(&x, &g, lo, hi) < config.grad_tol;
    LbfgsOutcome { x, value: fx, iters: config.max_iters, converged }
}
