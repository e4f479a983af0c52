//! Quadrature and interpolation utilities shared by the norm and expansion
//! evaluators: Gauss-Legendre rules, adaptive panel refinement, geometric
//! panels toward an endpoint power singularity, and Chebyshev interpolants
//! for smooth pieces.

use crate::error::{Error, Result};
use crate::C64;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence and cached per order.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(rule) = guard.get(&n) {
        return rule;
    }
    let rule: &'static _ = Box::leak(Box::new(compute_gauss_legendre(n)));
    guard.insert(n, rule);
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be >= 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Tricomi initial guess for the k-th root of P_n.
        let theta = std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5);
        let mut x = theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Roots come out in decreasing order; sort ascending for readability.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    let nodes_sorted: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
    let weights_sorted: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
    (nodes_sorted, weights_sorted)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed-order Gauss-Legendre integral of a complex integrand over `[a, b]`.
pub fn integrate_gl(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64, n: usize) -> C64 {
    if a == b {
        return C64::new(0.0, 0.0);
    }
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = C64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        acc += f(mid + half * x) * *w;
    }
    acc * half
}

/// Real-valued convenience wrapper around [`integrate_gl`].
pub fn integrate_gl_real(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    integrate_gl(&mut |x| C64::new(f(x), 0.0), a, b, n).re
}

/// Adaptive Gauss-Legendre: doubles the panel count until the relative change
/// drops below `rel_tol` (with `abs_floor` guarding the all-but-zero case).
pub fn integrate_adaptive(
    f: &mut impl FnMut(f64) -> C64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<C64> {
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let order = 16;
    let mut panels = 1usize;
    let mut prev = panel_sum(f, a, b, panels, order);
    for _ in 0..12 {
        panels *= 2;
        let next = panel_sum(f, a, b, panels, order);
        let diff = (next - prev).norm();
        if diff <= rel_tol * next.norm().max(abs_floor) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::AccuracyFailure(format!(
        "integral over [{a}, {b}] did not settle to relative tolerance {rel_tol}"
    )))
}

fn panel_sum(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64, panels: usize, order: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + width * p as f64;
        acc += integrate_gl(f, lo, lo + width, order);
    }
    acc
}

/// Integral of `f` over `[0, b]` where `f` may carry an integrable power
/// singularity at 0: geometric panels `[b/2^{m+1}, b/2^m]` are accumulated
/// until their contributions decay geometrically. Returns `None` when the
/// panel contributions fail to decay (a divergent integral).
pub fn integrate_toward_zero(
    f: &mut impl FnMut(f64) -> f64,
    b: f64,
    rel_tol: f64,
) -> Option<f64> {
    if b <= 0.0 {
        return Some(0.0);
    }
    let order = 24;
    let mut total = 0.0f64;
    let mut hi = b;
    let mut prev_panel = f64::INFINITY;
    for m in 0..2000 {
        let lo = hi * 0.5;
        let panel = integrate_gl_real(f, lo, hi, order);
        total += panel;
        // After a burn-in, demand geometric decay of panel contributions.
        if m > 8 {
            if panel.abs() <= rel_tol * total.abs().max(1e-300) {
                return Some(total);
            }
            if panel.abs() > 0.999 * prev_panel.abs() && panel.abs() > rel_tol * total.abs() {
                return None;
            }
        }
        prev_panel = panel;
        hi = lo;
    }
    None
}

/// Chebyshev interpolant of a smooth function on `[a, b]` (barycentric form
/// on Chebyshev points of the second kind).
pub struct ChebInterp {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    values: Vec<C64>,
}

impl ChebInterp {
    pub fn build(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            let theta = std::f64::consts::PI * k as f64 / (n - 1) as f64;
            let t = theta.cos(); // in [-1, 1], descending
            let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
            nodes.push(x);
            values.push(f(x));
        }
        Self { a, b, nodes, values }
    }

    pub fn eval(&self, x: f64) -> C64 {
        let n = self.nodes.len();
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0f64;
        let mut sign = 1.0f64;
        for k in 0..n {
            let dx = x - self.nodes[k];
            if dx == 0.0 {
                return self.values[k];
            }
            let mut w = sign / dx;
            if k == 0 || k == n - 1 {
                w *= 0.5;
            }
            num += self.values[k] * w;
            den += w;
            sign = -sign;
        }
        num / den
    }

    pub fn span(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// Sorted deduplicated breakpoints restricted to the open interval `(lo, hi)`,
/// with `lo`/`hi` appended: a ready-made panel decomposition of `[lo, hi]`.
pub fn panelize(lo: f64, hi: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut cuts = vec![lo, hi];
    for &x in breakpoints {
        if x > lo && x < hi {
            cuts.push(x);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (x.abs() + y.abs()).max(1e-300));
    cuts
}
