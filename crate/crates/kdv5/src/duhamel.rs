//! Taylor coefficients of the solution map in powers of the data.
//!
//! For `u_t - u_xxxxx + c1 (u^3)_x + c2 ((u_x)^2)_x + c3 (u u_xx)_x = 0` the
//! solution with data `u0` expands as `U(t) u0 + A2(t) + A3(t) + ...`, where
//! `U(t)` is the linear group (symbol `e^{i t xi^5}`), `A2` is quadratic in
//! `u0` and `A3` cubic. Each coefficient is computed two independent ways:
//!
//! * an iterated-integral route (`a2_duhamel`, `a3_duhamel`) that evaluates
//!   the time integral by Gauss-Legendre quadrature on the grid, and
//! * a closed-in-time route (`a2_spectral`, `a3_1_spectral`,
//!   `a3_pair_spectral`, and the band evaluators `a2_at` / `a3_at`) where the
//!   time integrals are done analytically and only frequency integrals
//!   remain.
//!
//! The time integrals produce the oscillatory factors [`phi_factor`] and
//! [`time_pair_integral`]; evaluating them in closed form is what keeps the
//! frequency integrands mildly varying even when the five-fold dispersion
//! makes the `s`-integrands oscillate at rates like `30 xi_max^5`.

use crate::bands::BandSpectrum;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, SpectralField};
use crate::norms::{weighted_l2_pieces, weighted_l2_pieces_fixed, NormValue};
use crate::quad::{gauss_legendre, integrate_gl};
use crate::transform::apply_propagator;
use crate::C64;

/// Coefficients of the three nonlinear fluxes. `c3` must be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Coefficients {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        if c3 == 0.0 || !c1.is_finite() || !c2.is_finite() || !c3.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coefficients need finite values and c3 != 0, got ({c1}, {c2}, {c3})"
            )));
        }
        Ok(Self { c1, c2, c3 })
    }

    /// One-parameter family `(-(2/5) alpha^2, alpha, 2 alpha)` for which
    /// `int (u_x)^2 + (2/5) alpha int u^3` is a conserved energy.
    pub fn energy_preset(alpha: f64) -> Result<Self> {
        Self::new(-0.4 * alpha * alpha, alpha, 2.0 * alpha)
    }

    /// The `alpha = 5` member of [`Coefficients::energy_preset`]:
    /// `(-10, 5, 10)`.
    pub fn lax() -> Self {
        Self { c1: -10.0, c2: 5.0, c3: 10.0 }
    }

    /// The `alpha` for which this set belongs to the energy family, if any.
    pub fn energy_alpha(&self) -> Option<f64> {
        let alpha = self.c2;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()));
        if alpha != 0.0 && close(self.c1, -0.4 * alpha * alpha) && close(self.c3, 2.0 * alpha) {
            Some(alpha)
        } else {
            None
        }
    }
}

/// Two-wave resonance `q1(xi1, xi2) = xi^5 - xi1^5 - xi2^5` with
/// `xi = xi1 + xi2`, in the factored form
/// `(5/2) xi xi1 xi2 (xi^2 + xi1^2 + xi2^2)` (no cancellation near the
/// resonance set).
pub fn resonance_q1(xi1: f64, xi2: f64) -> f64 {
    let xi = xi1 + xi2;
    2.5 * xi * xi1 * xi2 * (xi * xi + xi1 * xi1 + xi2 * xi2)
}

/// Three-wave resonance `q2 = (xi1+xi2+xi3)^5 - xi1^5 - xi2^5 - xi3^5`, in
/// the factored form
/// `(5/2)(xi1+xi2)(xi2+xi3)(xi3+xi1)[(xi1+xi2)^2+(xi2+xi3)^2+(xi3+xi1)^2]`.
pub fn resonance_q2(xi1: f64, xi2: f64, xi3: f64) -> f64 {
    let p12 = xi1 + xi2;
    let p23 = xi2 + xi3;
    let p31 = xi3 + xi1;
    2.5 * p12 * p23 * p31 * (p12 * p12 + p23 * p23 + p31 * p31)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

/// `Phi(q, t) = (1 - e^{-iqt}) / q = i t e^{-iqt/2} sinc(qt/2)`, the value of
/// `int_0^t e^{-iqs} ds`. Analytic in `q` with `Phi(0, t) = it` and
/// `|Phi| <= min(2/|q|, |t|)`.
pub fn phi_factor(q: f64, t: f64) -> C64 {
    let half = 0.5 * q * t;
    C64::new(0.0, t * sinc(half)) * C64::from_polar(1.0, -half)
}

/// Derivative of [`phi_factor`] in `q`:
/// `(i t e^{-iqt} - Phi(q,t)) / q`, with the series
/// `t^2 (1/2 - i th/3 - th^2/8 + i th^3/30 + th^4/144)`, `th = qt`, near the
/// removable singularity.
pub fn phi_factor_dq(q: f64, t: f64) -> C64 {
    let th = q * t;
    if th.abs() < 1e-3 {
        let i = C64::new(0.0, 1.0);
        let sum = C64::new(0.5, 0.0) - i * (th / 3.0) - C64::new(th * th / 8.0, 0.0)
            + i * (th.powi(3) / 30.0)
            + C64::new(th.powi(4) / 144.0, 0.0);
        sum * t * t
    } else {
        (C64::new(0.0, t) * C64::from_polar(1.0, -th) - phi_factor(q, t)) / q
    }
}

/// `T(qa, qb, t) = int_0^t e^{-i qa s} Phi(qb, s) ds`, evaluated in closed
/// form as `-i (Phi(qa, t) - Phi(qa + qb, t)) / qb`. Near `qb = 0` the
/// difference quotient is replaced by the midpoint derivative
/// `i Phi'(qa + qb/2, t)` (second-order accurate, no cancellation).
pub fn time_pair_integral(qa: f64, qb: f64, t: f64) -> C64 {
    if (qb * t).abs() < 1e-5 || qb.abs() < 1e-8 * qa.abs() {
        C64::new(0.0, 1.0) * phi_factor_dq(qa + 0.5 * qb, t)
    } else {
        C64::new(0.0, -1.0) * (phi_factor(qa, t) - phi_factor(qa + qb, t)) / qb
    }
}

/// Quadratic interaction symbol `(c2 - c3) xi xi1 (xi - xi1) + (c3/2) xi^3`
/// (the symmetrized Fourier multiplier of
/// `-d/dx applied to c2 (u_x)^2 + c3 u u_xx`, divided by `-i`).
fn sigma_symbol(c: &Coefficients, xi: f64, xi1: f64) -> f64 {
    (c.c2 - c.c3) * xi * xi1 * (xi - xi1) + 0.5 * c.c3 * xi * xi * xi
}

/// Pairing symbol `2 c2 xi1 eta + c3 (xi1^2 + eta^2)`, `eta = xi - xi1`: the
/// multiplier coupling a linear wave at `xi1` with a quadratic packet at
/// `eta` inside the cubic coefficient.
fn rho_symbol(c: &Coefficients, xi: f64, xi1: f64) -> f64 {
    let eta = xi - xi1;
    2.0 * c.c2 * xi1 * eta + c.c3 * (xi1 * xi1 + eta * eta)
}

fn phase(t: f64, xi: f64) -> C64 {
    C64::from_polar(1.0, t * xi.powi(5))
}

fn apply_symbol(f: &SpectralField, sym: impl Fn(f64) -> C64) -> SpectralField {
    let mut out = f.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        *v *= sym(out.grid.xi(i));
    }
    out
}

/// Largest `|xi|` carrying mass (relative threshold `1e-14` of the peak).
pub fn spectral_support_max(f: &SpectralField) -> f64 {
    let peak = f.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let mut m = 0.0f64;
    for (i, v) in f.values.iter().enumerate() {
        if v.norm() > 1e-14 * peak {
            m = m.max(f.grid.xi(i).abs());
        }
    }
    m
}

/// Discrete convolution `(1/2pi) int f(xi1) g(xi - xi1) dxi1` on matching
/// uniform grids; the output grid spans the sum of the supports.
pub fn convolve_spectra(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let d = f.grid.delta_xi;
    if (g.grid.delta_xi - d).abs() > 1e-12 * d {
        return Err(Error::GridMismatch(format!(
            "convolution needs equal spacings, got {} and {}",
            d, g.grid.delta_xi
        )));
    }
    let mf = f.grid.half_extent as i64;
    let mg = g.grid.half_extent as i64;
    let grid = FrequencyGrid::new(d, (mf + mg) as usize)?;
    let mut out = SpectralField::zeros(grid);
    let scale = d / (2.0 * std::f64::consts::PI);
    for kout in 0..out.values.len() {
        let n_out = kout as i64 - (mf + mg);
        let lo = (-mf).max(n_out - mg);
        let hi = mf.min(n_out + mg);
        let mut acc = C64::new(0.0, 0.0);
        for n1 in lo..=hi {
            let v1 = f.values[(n1 + mf) as usize];
            let v2 = g.values[(n_out - n1 + mg) as usize];
            acc += v1 * v2;
        }
        out.values[kout] = acc * scale;
    }
    Ok(out)
}

/// Gauss-Legendre node count for the quadratic iterated integral: resolves
/// `e^{-i q s}` up to `|q| <= 30 xi_s^5` over `[0, t]`, where `xi_s` bounds
/// the data support.
pub fn a2_quadrature_nodes(u0: &SpectralField, t: f64) -> usize {
    let xs = spectral_support_max(u0);
    let omega = 30.0 * xs.powi(5);
    (0.55 * omega * t.abs()).ceil() as usize + 24
}

/// Node count for the cubic iterated integral (`|q| <= 300 xi_s^5`; the
/// quadratic packet doubles the frequency reach).
pub fn a3_quadrature_nodes(u0: &SpectralField, t: f64) -> usize {
    let xs = spectral_support_max(u0);
    let omega = 300.0 * xs.powi(5);
    (0.55 * omega * t.abs()).ceil() as usize + 24
}

/// Quadratic coefficient, closed in time:
/// `A2^(t, xi) = e^{it xi^5} (1/2pi) int Phi(q1(xi1, xi-xi1), t)
/// sigma(xi, xi1) u0^(xi1) u0^(xi - xi1) dxi1` as a grid sum. The output
/// grid spans twice the input extent.
pub fn a2_spectral(u0: &SpectralField, c: &Coefficients, t: f64) -> SpectralField {
    let m = u0.grid.half_extent as i64;
    let d = u0.grid.delta_xi;
    let grid = FrequencyGrid::new(d, (2 * m) as usize).expect("doubled grid");
    let mut out = SpectralField::zeros(grid);
    let scale = d / (2.0 * std::f64::consts::PI);
    for kout in 0..out.values.len() {
        let n_out = kout as i64 - 2 * m;
        let xi = n_out as f64 * d;
        let lo = (-m).max(n_out - m);
        let hi = m.min(n_out + m);
        let mut acc = C64::new(0.0, 0.0);
        for n1 in lo..=hi {
            let xi1 = n1 as f64 * d;
            let v1 = u0.values[(n1 + m) as usize];
            let v2 = u0.values[(n_out - n1 + m) as usize];
            if v1 == C64::new(0.0, 0.0) || v2 == C64::new(0.0, 0.0) {
                continue;
            }
            acc += phi_factor(resonance_q1(xi1, xi - xi1), t)
                * sigma_symbol(c, xi, xi1)
                * v1
                * v2;
        }
        out.values[kout] = acc * scale * phase(t, xi);
    }
    out
}

/// Quadratic coefficient by quadrature of the iterated integral
/// `-int_0^t U(t-s) [c2 (d/dx)(u1_x)^2 + c3 (d/dx)(u1 u1_xx)] ds`,
/// `u1(s) = U(s) u0`. Agrees with [`a2_spectral`] once `n_quad` resolves the
/// fastest oscillation (see [`a2_quadrature_nodes`]).
pub fn a2_duhamel(
    u0: &SpectralField,
    c: &Coefficients,
    t: f64,
    n_quad: usize,
) -> Result<SpectralField> {
    let (nodes, weights) = gauss_legendre(n_quad);
    let m = u0.grid.half_extent;
    let grid = FrequencyGrid::new(u0.grid.delta_xi, 2 * m)?;
    let mut acc = SpectralField::zeros(grid);
    for (x, w) in nodes.iter().zip(weights) {
        let s = 0.5 * t * (x + 1.0);
        let ws = 0.5 * t * w;
        let u1 = apply_propagator(u0, s);
        let du = apply_symbol(&u1, |xi| C64::new(0.0, xi));
        let ddu = apply_symbol(&u1, |xi| C64::new(-xi * xi, 0.0));
        let conv_grad = convolve_spectra(&du, &du)?;
        let conv_mix = convolve_spectra(&u1, &ddu)?;
        for k in 0..acc.values.len() {
            let xi = acc.grid.xi(k);
            let flux = c.c2 * conv_grad.values[k] + c.c3 * conv_mix.values[k];
            let integrand = C64::new(0.0, xi) * flux * phase(t - s, xi);
            acc.values[k] -= ws * integrand;
        }
    }
    Ok(acc)
}

/// The pure-cubic piece of the third coefficient, closed in time:
/// `-c1 e^{it xi^5} (xi / 4 pi^2) int int Phi(q2, t) u0^ u0^ u0^`.
/// Output on the tripled grid.
pub fn a3_1_spectral(u0: &SpectralField, c: &Coefficients, t: f64) -> SpectralField {
    let m = u0.grid.half_extent as i64;
    let d = u0.grid.delta_xi;
    let grid = FrequencyGrid::new(d, (3 * m) as usize).expect("tripled grid");
    let mut out = SpectralField::zeros(grid);
    if c.c1 == 0.0 {
        return out;
    }
    let scale = (d / (2.0 * std::f64::consts::PI)).powi(2);
    for kout in 0..out.values.len() {
        let n_out = kout as i64 - 3 * m;
        let xi = n_out as f64 * d;
        let mut acc = C64::new(0.0, 0.0);
        for n1 in -m..=m {
            let v1 = u0.values[(n1 + m) as usize];
            if v1 == C64::new(0.0, 0.0) {
                continue;
            }
            let xi1 = n1 as f64 * d;
            let lo = (-m).max(n_out - n1 - m);
            let hi = m.min(n_out - n1 + m);
            for n2 in lo..=hi {
                let v2 = u0.values[(n2 + m) as usize];
                let v3 = u0.values[(n_out - n1 - n2 + m) as usize];
                if v2 == C64::new(0.0, 0.0) || v3 == C64::new(0.0, 0.0) {
                    continue;
                }
                let xi2 = n2 as f64 * d;
                let xi3 = xi - xi1 - xi2;
                acc += phi_factor(resonance_q2(xi1, xi2, xi3), t) * v1 * v2 * v3;
            }
        }
        out.values[kout] = acc * (-c.c1) * xi * scale * phase(t, xi);
    }
    out
}

/// The quadratic-flux piece of the third coefficient, closed in time via the
/// pairing `T = ` [`time_pair_integral`]:
/// `(i/4pi^2) xi e^{it xi^5} int int rho(xi, xi1) sigma(eta, xi2)
/// u0^(xi1) u0^(xi2) u0^(eta - xi2) T(qa, qb, t)`, `eta = xi - xi1`,
/// `qa = q1(xi1, eta)`, `qb = q1(xi2, eta - xi2)`.
pub fn a3_pair_spectral(u0: &SpectralField, c: &Coefficients, t: f64) -> SpectralField {
    let m = u0.grid.half_extent as i64;
    let d = u0.grid.delta_xi;
    let grid = FrequencyGrid::new(d, (3 * m) as usize).expect("tripled grid");
    let mut out = SpectralField::zeros(grid);
    let scale = (d / (2.0 * std::f64::consts::PI)).powi(2);
    for kout in 0..out.values.len() {
        let n_out = kout as i64 - 3 * m;
        let xi = n_out as f64 * d;
        let mut acc = C64::new(0.0, 0.0);
        for n1 in -m..=m {
            let v1 = u0.values[(n1 + m) as usize];
            if v1 == C64::new(0.0, 0.0) {
                continue;
            }
            let xi1 = n1 as f64 * d;
            let eta = xi - xi1;
            let qa = resonance_q1(xi1, eta);
            let rho = rho_symbol(c, xi, xi1);
            let lo = (-m).max(n_out - n1 - m);
            let hi = m.min(n_out - n1 + m);
            let mut inner = C64::new(0.0, 0.0);
            for n2 in lo..=hi {
                let v2 = u0.values[(n2 + m) as usize];
                let v3 = u0.values[(n_out - n1 - n2 + m) as usize];
                if v2 == C64::new(0.0, 0.0) || v3 == C64::new(0.0, 0.0) {
                    continue;
                }
                let xi2 = n2 as f64 * d;
                let xi3 = eta - xi2;
                let qb = resonance_q1(xi2, xi3);
                inner += sigma_symbol(c, eta, xi2) * v2 * v3 * time_pair_integral(qa, qb, t);
            }
            acc += rho * v1 * inner;
        }
        out.values[kout] = acc * C64::new(0.0, xi) * scale * phase(t, xi);
    }
    out
}

/// Full third coefficient, closed in time (pure-cubic plus pairing pieces).
pub fn a3_spectral(u0: &SpectralField, c: &Coefficients, t: f64) -> SpectralField {
    let mut out = a3_1_spectral(u0, c, t);
    let pair = a3_pair_spectral(u0, c, t);
    for (o, p) in out.values.iter_mut().zip(&pair.values) {
        *o += *p;
    }
    out
}

/// Cubic coefficient by quadrature of the iterated integral
/// `-int_0^t U(t-s) [c1 (u1^3)_x + 2 c2 (u1_x A2_x(s))_x
/// + c3 (u1 A2_xx(s) + A2(s) u1_xx)_x] ds`, with `A2(s)` from
/// [`a2_spectral`] (exact in `s`).
pub fn a3_duhamel(
    u0: &SpectralField,
    c: &Coefficients,
    t: f64,
    n_quad: usize,
) -> Result<SpectralField> {
    let (nodes, weights) = gauss_legendre(n_quad);
    let m = u0.grid.half_extent;
    let grid = FrequencyGrid::new(u0.grid.delta_xi, 3 * m)?;
    let mut acc = SpectralField::zeros(grid);
    for (x, w) in nodes.iter().zip(weights) {
        let s = 0.5 * t * (x + 1.0);
        let ws = 0.5 * t * w;
        let u1 = apply_propagator(u0, s);
        let a2 = a2_spectral(u0, c, s);
        let du1 = apply_symbol(&u1, |xi| C64::new(0.0, xi));
        let ddu1 = apply_symbol(&u1, |xi| C64::new(-xi * xi, 0.0));
        let da2 = apply_symbol(&a2, |xi| C64::new(0.0, xi));
        let dda2 = apply_symbol(&a2, |xi| C64::new(-xi * xi, 0.0));
        let cube = convolve_spectra(&convolve_spectra(&u1, &u1)?, &u1)?;
        let grad_pair = convolve_spectra(&du1, &da2)?;
        let mix_a = convolve_spectra(&u1, &dda2)?;
        let mix_b = convolve_spectra(&a2, &ddu1)?;
        for k in 0..acc.values.len() {
            let xi = acc.grid.xi(k);
            let flux = c.c1 * cube.values[k]
                + 2.0 * c.c2 * grad_pair.values[k]
                + c.c3 * (mix_a.values[k] + mix_b.values[k]);
            acc.values[k] -= ws * C64::new(0.0, xi) * flux * phase(t - s, xi);
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Band-spectrum evaluators.
//
// For data given as a finite union of constant bands the frequency integrals
// reduce to sums over band-overlap windows. Quadrature panels are sized from
// a rigorous bound on the local phase rate, so narrow high bands (where
// `q1` sweeps ~5 N^4 per unit frequency) stay resolved without global
// oversampling.
// ---------------------------------------------------------------------------

const PANEL_PHASE: f64 = 4.0;
const MAX_PANELS: usize = 4096;
/// Number of oscillation cycles kept around a two-wave resonance before the
/// rapidly-oscillating remainder (boundary-term size `1/(2 pi^2 K^2)` of the
/// kept part) is dropped from the cubic pairing integral.
const CORE_CYCLES: f64 = 8.0;

fn overlap(lo1: f64, hi1: f64, lo2: f64, hi2: f64) -> Option<(f64, f64)> {
    let lo = lo1.max(lo2);
    let hi = hi1.min(hi2);
    if hi > lo {
        Some((lo, hi))
    } else {
        None
    }
}

/// Upper bound for `|x^4 - y^4|` given `x` in `[xlo, xhi]`, `y` in
/// `[ylo, yhi]` (tight when the magnitude ranges nearly coincide).
fn quartic_gap_bound(xlo: f64, xhi: f64, ylo: f64, yhi: f64) -> f64 {
    let x4 = |lo: f64, hi: f64| -> (f64, f64) {
        let a = lo.abs().powi(4);
        let b = hi.abs().powi(4);
        if lo <= 0.0 && hi >= 0.0 {
            (0.0, a.max(b))
        } else {
            (a.min(b), a.max(b))
        }
    };
    let (xmin, xmax) = x4(xlo, xhi);
    let (ymin, ymax) = x4(ylo, yhi);
    (xmax - ymin).max(ymax - xmin).max(0.0)
}

/// Composite Gauss-Legendre over `[lo, hi]` with panel count driven by a
/// phase-swing bound.
fn integrate_paneled(
    f: &mut impl FnMut(f64) -> C64,
    lo: f64,
    hi: f64,
    phase_swing: f64,
    order: usize,
) -> C64 {
    let panels = ((phase_swing / PANEL_PHASE).ceil() as usize + 1).min(MAX_PANELS);
    let width = (hi - lo) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let a = lo + p as f64 * width;
        acc += integrate_gl(f, a, a + width, order);
    }
    acc
}

/// Union of sums of band intervals under `combine` applied `arity` times,
/// merged into disjoint pieces and split again at every interior envelope
/// breakpoint (each sum of band endpoints), so that the convolution envelope
/// is smooth on each returned piece. Without the splits a moving overlap
/// window puts derivative kinks inside a piece and stalls the adaptive rule.
fn support_pieces(u0: &BandSpectrum, arity: usize) -> Vec<(f64, f64)> {
    let bands = u0.bands();
    let mut raw: Vec<(f64, f64)> = Vec::new();
    let mut breakpoints: Vec<f64> = Vec::new();
    let mut stack = vec![(0usize, 0.0f64, 0.0f64)];
    while let Some((depth, lo, hi)) = stack.pop() {
        if depth == arity {
            raw.push((lo, hi));
            continue;
        }
        for b in bands {
            stack.push((depth + 1, lo + b.lo, hi + b.hi));
        }
    }
    // Envelope kinks sit at every arity-fold sum of band endpoints, mixed
    // lo/hi choices included.
    let mut corner_stack = vec![(0usize, 0.0f64)];
    while let Some((depth, acc)) = corner_stack.pop() {
        if depth == arity {
            breakpoints.push(acc);
            continue;
        }
        for b in bands {
            corner_stack.push((depth + 1, acc + b.lo));
            corner_stack.push((depth + 1, acc + b.hi));
        }
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        if let Some(last) = merged.last_mut() {
            if lo <= last.1 {
                last.1 = last.1.max(hi);
                continue;
            }
        }
        merged.push((lo, hi));
    }
    let mut pieces = Vec::with_capacity(merged.len());
    for (lo, hi) in merged {
        let mut cursor = lo;
        for &cut in breakpoints.iter().filter(|&&c| lo < c && c < hi) {
            if cut > cursor {
                pieces.push((cursor, cut));
                cursor = cut;
            }
        }
        if hi > cursor {
            pieces.push((cursor, hi));
        }
    }
    pieces
}

/// Frequency intervals where the quadratic coefficient of band data can be
/// nonzero.
pub fn a2_support_pieces(u0: &BandSpectrum) -> Vec<(f64, f64)> {
    support_pieces(u0, 2)
}

/// Frequency intervals where the cubic coefficient of band data can be
/// nonzero.
pub fn a3_support_pieces(u0: &BandSpectrum) -> Vec<(f64, f64)> {
    support_pieces(u0, 3)
}

/// Quadratic coefficient of band data at one output frequency:
/// `e^{it xi^5} (1/2pi) sum over band pairs of
/// int Phi(q1(xi1, xi-xi1), t) sigma(xi, xi1) dxi1` times the band
/// amplitudes.
pub fn a2_at(u0: &BandSpectrum, c: &Coefficients, t: f64, xi: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for bi in u0.bands() {
        for bj in u0.bands() {
            let Some((lo, hi)) = overlap(bi.lo, bi.hi, xi - bj.hi, xi - bj.lo) else {
                continue;
            };
            let amp = bi.amp * bj.amp;
            // d(q1)/d(xi1) = 5 (eta^4 - xi1^4), eta = xi - xi1
            let rate = 5.0 * quartic_gap_bound(xi - hi, xi - lo, lo, hi);
            let swing = rate * t.abs() * (hi - lo);
            let part = integrate_paneled(
                &mut |xi1: f64| {
                    phi_factor(resonance_q1(xi1, xi - xi1), t) * sigma_symbol(c, xi, xi1)
                },
                lo,
                hi,
                swing,
                24,
            );
            acc += amp * part;
        }
    }
    acc * phase(t, xi) / (2.0 * std::f64::consts::PI)
}

/// Pure-cubic piece of the third coefficient for band data at one frequency.
pub fn a3_1_at(u0: &BandSpectrum, c: &Coefficients, t: f64, xi: f64) -> C64 {
    if c.c1 == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for bi in u0.bands() {
        for bj in u0.bands() {
            for bk in u0.bands() {
                let Some((lo1, hi1)) =
                    overlap(bi.lo, bi.hi, xi - bj.hi - bk.hi, xi - bj.lo - bk.lo)
                else {
                    continue;
                };
                let amp = bi.amp * bj.amp * bk.amp;
                // d(q2)/d(xi1) = 5 (xi3^4 - xi1^4) with xi3 in band k
                let outer_rate = 5.0 * quartic_gap_bound(bk.lo, bk.hi, lo1, hi1);
                let outer_swing = outer_rate * t.abs() * (hi1 - lo1);
                let inner_rate = 5.0 * quartic_gap_bound(bk.lo, bk.hi, bj.lo, bj.hi);
                let part = integrate_paneled(
                    &mut |xi1: f64| {
                        let eta = xi - xi1;
                        let Some((lo2, hi2)) = overlap(bj.lo, bj.hi, eta - bk.hi, eta - bk.lo)
                        else {
                            return C64::new(0.0, 0.0);
                        };
                        integrate_paneled(
                            &mut |xi2: f64| {
                                phi_factor(resonance_q2(xi1, xi2, eta - xi2), t)
                            },
                            lo2,
                            hi2,
                            inner_rate * t.abs() * (hi2 - lo2),
                            24,
                        )
                    },
                    lo1,
                    hi1,
                    outer_swing,
                    16,
                );
                acc += amp * part;
            }
        }
    }
    acc * (-c.c1) * xi * phase(t, xi) / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
}

/// Inner frequency integral of the pairing piece at fixed `xi1`. When
/// `resonant_only` is set, `T` is replaced by its slowly-varying part
/// `i Phi(qa + qb, t) / qb` (valid away from the two-wave resonance
/// `eta = 0`, where `|qb|` is bounded below along the kept channels; the
/// guarded full form is restored whenever `|qb|` is small against `|qa|`).
#[allow(clippy::too_many_arguments)]
fn a3_pair_inner(
    c: &Coefficients,
    t: f64,
    xi: f64,
    xi1: f64,
    bj: (f64, f64, C64),
    bk: (f64, f64, C64),
    inner_rate: f64,
    resonant_only: bool,
) -> C64 {
    let eta = xi - xi1;
    let Some((lo2, hi2)) = overlap(bj.0, bj.1, eta - bk.1, eta - bk.0) else {
        return C64::new(0.0, 0.0);
    };
    let qa = resonance_q1(xi1, eta);
    let inner = integrate_paneled(
        &mut |xi2: f64| {
            let xi3 = eta - xi2;
            let qb = resonance_q1(xi2, xi3);
            let tt = if resonant_only && qb.abs() > 1e-2 * qa.abs() {
                C64::new(0.0, 1.0) * phi_factor(qa + qb, t) / qb
            } else {
                time_pair_integral(qa, qb, t)
            };
            sigma_symbol(c, eta, xi2) * tt
        },
        lo2,
        hi2,
        inner_rate * t.abs() * (hi2 - lo2),
        24,
    );
    rho_symbol(c, xi, xi1) * bj.2 * bk.2 * inner
}

/// Pairing piece of the third coefficient for band data at one frequency.
///
/// The `xi1`-integrand oscillates like `e^{-i qa t}` with
/// `|d qa / d xi1| ~ 5 max(eta^4, xi1^4)`; when the total swing is large the
/// interval is split at the two-wave resonance `eta = 0`: a core of
/// `CORE_CYCLES` cycles keeps the full integrand, while the tails use the
/// slowly-varying part only (geometric panels away from the core, each
/// subdivided to the residual `q2` phase, whose rate
/// `5 (xi3^4 - xi1^4)` is small for equal-magnitude bands).
pub fn a3_pair_at(u0: &BandSpectrum, c: &Coefficients, t: f64, xi: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for bi in u0.bands() {
        for bj in u0.bands() {
            for bk in u0.bands() {
                let Some((lo1, hi1)) =
                    overlap(bi.lo, bi.hi, xi - bj.hi - bk.hi, xi - bj.lo - bk.lo)
                else {
                    continue;
                };
                let bjt = (bj.lo, bj.hi, bj.amp);
                let bkt = (bk.lo, bk.hi, bk.amp);
                let inner_rate = 5.0 * quartic_gap_bound(bk.lo, bk.hi, bj.lo, bj.hi);
                let fast_rate = 5.0 * quartic_gap_bound(xi - hi1, xi - lo1, lo1, hi1);
                let slow_rate = 5.0 * quartic_gap_bound(bk.lo, bk.hi, lo1, hi1);
                let full_swing = fast_rate * t.abs() * (hi1 - lo1);
                let mut full = |xi1: f64| {
                    a3_pair_inner(c, t, xi, xi1, bjt, bkt, inner_rate, false)
                };
                if full_swing <= 6.0 * CORE_CYCLES {
                    acc += bi.amp * integrate_paneled(&mut full, lo1, hi1, full_swing, 12);
                    continue;
                }
                // Split at the resonance xi1 = xi (eta = 0).
                let r_core = 2.0 * std::f64::consts::PI * CORE_CYCLES / (fast_rate * t.abs());
                let mut part = C64::new(0.0, 0.0);
                if let Some((clo, chi)) = overlap(lo1, hi1, xi - r_core, xi + r_core) {
                    part += integrate_paneled(
                        &mut full,
                        clo,
                        chi,
                        fast_rate * t.abs() * (chi - clo),
                        12,
                    );
                }
                let mut slow = |xi1: f64| {
                    a3_pair_inner(c, t, xi, xi1, bjt, bkt, inner_rate, true)
                };
                for (tlo, thi) in [
                    (lo1, hi1.min(xi - r_core)),
                    (lo1.max(xi + r_core), hi1),
                ] {
                    if thi <= tlo {
                        continue;
                    }
                    // geometric panels away from the resonance, sized so the
                    // 1/qb envelope varies by at most a factor 2 per panel
                    let mut edges = vec![tlo, thi];
                    let mut d = r_core;
                    while d < (xi - tlo).abs().max((thi - xi).abs()) {
                        for cand in [xi - d, xi + d] {
                            if cand > tlo && cand < thi {
                                edges.push(cand);
                            }
                        }
                        d *= 2.0;
                    }
                    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    for pair in edges.windows(2) {
                        part += integrate_paneled(
                            &mut slow,
                            pair[0],
                            pair[1],
                            slow_rate * t.abs() * (pair[1] - pair[0]),
                            12,
                        );
                    }
                }
                acc += bi.amp * part;
            }
        }
    }
    acc * C64::new(0.0, xi) * phase(t, xi)
        / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
}

/// Full third coefficient for band data at one frequency.
pub fn a3_at(u0: &BandSpectrum, c: &Coefficients, t: f64, xi: f64) -> C64 {
    a3_1_at(u0, c, t, xi) + a3_pair_at(u0, c, t, xi)
}

/// `H^{s,a}` norm of the quadratic coefficient of band data (adaptive
/// piecewise quadrature over the support pieces, with divergence detection
/// at the origin).
pub fn a2_hsa_norm(
    u0: &BandSpectrum,
    c: &Coefficients,
    t: f64,
    s: f64,
    a: f64,
) -> NormValue {
    let pieces = a2_support_pieces(u0);
    weighted_l2_pieces(&pieces, &mut |xi| a2_at(u0, c, t, xi), s, a)
}

/// Like [`a2_hsa_norm`] but with a fixed composite rule (deterministic cost;
/// for integrands with benign origin behavior).
pub fn a2_hsa_norm_fixed(
    u0: &BandSpectrum,
    c: &Coefficients,
    t: f64,
    s: f64,
    a: f64,
    order: usize,
    panels: usize,
) -> NormValue {
    let pieces = a2_support_pieces(u0);
    weighted_l2_pieces_fixed(&pieces, &mut |xi| a2_at(u0, c, t, xi), s, a, order, panels)
}

/// `H^{s,a}` norm of the full cubic coefficient of band data, by a fixed
/// composite rule per support piece (the modulus carries small fast ripples
/// that an adaptive rule would chase).
pub fn a3_hsa_norm_fixed(
    u0: &BandSpectrum,
    c: &Coefficients,
    t: f64,
    s: f64,
    a: f64,
    order: usize,
    panels: usize,
) -> NormValue {
    let pieces = a3_support_pieces(u0);
    weighted_l2_pieces_fixed(&pieces, &mut |xi| a3_at(u0, c, t, xi), s, a, order, panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::Band;
    use crate::quad::integrate_gl;
    use proptest::prelude::*;

    fn max_diff(f: &SpectralField, g: &SpectralField) -> f64 {
        assert_eq!(f.values.len(), g.values.len());
        f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn max_abs(f: &SpectralField) -> f64 {
        f.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn narrow_data(m: usize, d: f64) -> SpectralField {
        let grid = FrequencyGrid::new(d, m).unwrap();
        SpectralField::from_fn(grid, |xi| {
            if xi.abs() <= 1.0 {
                C64::new((-2.0 * xi * xi).exp(), 0.4 * xi)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn resonance_spot_values() {
        assert_eq!(resonance_q1(1.0, 1.0), 30.0);
        assert_eq!(resonance_q1(2.0, 3.0), 2850.0);
        assert_eq!(resonance_q2(1.0, 1.0, 1.0), 240.0);
        assert_eq!(resonance_q2(1.0, 2.0, 3.0), 7500.0);
    }

    #[test]
    fn phi_spot_values() {
        let v = phi_factor(0.0, 2.0);
        assert!((v - C64::new(0.0, 2.0)).norm() < 1e-15);
        let v = phi_factor(std::f64::consts::PI, 1.0);
        assert!((v - C64::new(2.0 / std::f64::consts::PI, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phi_matches_definition_and_is_continuous_at_zero() {
        for (q, t) in [(3.0, 0.7), (-11.0, 0.2), (0.5, -1.3)] {
            let direct = (C64::new(1.0, 0.0) - C64::from_polar(1.0, -q * t)) / q;
            assert!((phi_factor(q, t) - direct).norm() < 1e-14);
        }
        let eps = phi_factor(1e-13, 0.8);
        let zero = phi_factor(0.0, 0.8);
        assert!((eps - zero).norm() < 1e-12);
    }

    #[test]
    fn phi_derivative_spot_and_difference_quotient() {
        let t = 0.9;
        assert!((phi_factor_dq(0.0, t) - C64::new(t * t / 2.0, 0.0)).norm() < 1e-15);
        for q in [2.0f64, -7.5, 1e-3, 40.0] {
            let h = 1e-6 * q.abs().max(1.0);
            let fd = (phi_factor(q + h, t) - phi_factor(q - h, t)) / (2.0 * h);
            assert!(
                (phi_factor_dq(q, t) - fd).norm() < 1e-8 * (1.0 + fd.norm()),
                "q = {q}"
            );
        }
        // series and direct branches agree at the switch point
        let (q, t) = (0.999e-3 / 0.9, 0.9);
        let series = phi_factor_dq(q, t);
        let direct = (C64::new(0.0, t) * C64::from_polar(1.0, -q * t) - phi_factor(q, t)) / q;
        assert!((series - direct).norm() < 5e-12 * series.norm());
    }

    #[test]
    fn time_pair_integral_against_quadrature() {
        for (qa, qb, t) in [
            (3.7, 2.1, 0.8),
            (100.0, -100.5, 0.3),
            (0.0, 0.0, 1.4),
            (-20.0, 0.03, 0.6),
            (5.0, 1e-9, 1.0),
        ] {
            let direct = integrate_gl(
                &mut |s: f64| C64::from_polar(1.0, -qa * s) * phi_factor(qb, s),
                0.0,
                t,
                64,
            );
            let closed = time_pair_integral(qa, qb, t);
            assert!(
                (closed - direct).norm() < 1e-12 * (1.0 + direct.norm()),
                "qa={qa} qb={qb}: {closed} vs {direct}"
            );
        }
        let t = 1.3;
        let spot = time_pair_integral(0.0, 0.0, t);
        assert!((spot - C64::new(0.0, t * t / 2.0)).norm() < 1e-14);
    }

    #[test]
    fn a2_routes_agree_on_smooth_data() {
        let u0 = narrow_data(16, 0.125);
        let c = Coefficients::lax();
        let t = 0.1;
        let exact = a2_spectral(&u0, &c, t);
        let n = a2_quadrature_nodes(&u0, t);
        let quad = a2_duhamel(&u0, &c, t, n).unwrap();
        let scale = max_abs(&exact);
        assert!(scale > 0.0);
        assert!(max_diff(&exact, &quad) < 1e-9 * scale, "n = {n}");
    }

    #[test]
    fn a2_duhamel_self_convergence_for_narrow_data() {
        let u0 = narrow_data(8, 0.125);
        let c = Coefficients::lax();
        let t = 0.1;
        let coarse = a2_duhamel(&u0, &c, t, 16).unwrap();
        let fine = a2_duhamel(&u0, &c, t, 32).unwrap();
        assert!(max_diff(&coarse, &fine) < 1e-10 * max_abs(&fine).max(1e-300));
    }

    #[test]
    fn a2_of_real_data_is_hermitian() {
        let grid = FrequencyGrid::new(0.2, 12).unwrap();
        let u0 = SpectralField::from_fn(grid, |xi| {
            C64::new((-xi * xi).exp(), 0.3 * xi * (-xi * xi).exp())
        });
        assert!(u0.hermitian_defect() < 1e-14);
        let a2 = a2_spectral(&u0, &Coefficients::lax(), 0.2);
        assert!(a2.hermitian_defect() < 1e-12 * max_abs(&a2));
    }

    #[test]
    fn a3_pure_cubic_piece_isolated_by_coefficient_difference() {
        let u0 = narrow_data(8, 0.125);
        let t = 0.08;
        let with_c1 = Coefficients::new(-3.0, 1.0, 2.0).unwrap();
        let without = Coefficients::new(0.0, 1.0, 2.0).unwrap();
        let n = a3_quadrature_nodes(&u0, t);
        let full = a3_duhamel(&u0, &with_c1, t, n).unwrap();
        let reduced = a3_duhamel(&u0, &without, t, n).unwrap();
        let mut diff = full.clone();
        for (d, r) in diff.values.iter_mut().zip(&reduced.values) {
            *d -= *r;
        }
        let closed = a3_1_spectral(&u0, &with_c1, t);
        let scale = max_abs(&closed).max(max_abs(&full));
        assert!(max_diff(&diff, &closed) < 1e-9 * scale);
    }

    #[test]
    fn a3_routes_agree_on_smooth_data() {
        let u0 = narrow_data(8, 0.125);
        let c = Coefficients::new(1.5, 1.0, 2.0).unwrap();
        let t = 0.08;
        let n = a3_quadrature_nodes(&u0, t);
        let iterated = a3_duhamel(&u0, &c, t, n).unwrap();
        let closed = a3_spectral(&u0, &c, t);
        let scale = max_abs(&closed);
        assert!(scale > 0.0);
        assert!(max_diff(&iterated, &closed) < 1e-9 * scale, "n = {n}");
    }

    fn band_sample_field(u0: &BandSpectrum, d: f64, m: usize) -> SpectralField {
        let grid = FrequencyGrid::new(d, m).unwrap();
        SpectralField::from_fn(grid, |xi| u0.eval(xi))
    }

    #[test]
    fn a2_band_route_matches_refined_grid_route() {
        // band edges placed between grid nodes so the midpoint sums converge
        // at second order
        let mk = |h: f64| {
            BandSpectrum::new(vec![
                Band { lo: 0.5 + h, hi: 1.0 + h, amp: C64::new(1.0, 0.0) },
                Band { lo: -0.3 + h, hi: 0.2 + h, amp: C64::new(0.7, 0.1) },
            ])
            .unwrap()
        };
        let c = Coefficients::lax();
        let t = 0.05;
        let mut errs = Vec::new();
        for k in [7usize, 8] {
            let d = 1.0 / (1 << k) as f64;
            let u0 = mk(0.5 * d);
            let grid_route = a2_spectral(&band_sample_field(&u0, d, 3 << k), &c, t);
            // compare at a few output nodes
            let mut err = 0.0f64;
            let mut scale = 0.0f64;
            for frac in [-0.4f64, 0.35, 0.9, 1.4] {
                let n = (frac / d).round() as i64;
                let xi = n as f64 * d;
                let idx = (n + grid_route.grid.half_extent as i64) as usize;
                let band_route = a2_at(&u0, &c, t, xi);
                err = err.max((band_route - grid_route.values[idx]).norm());
                scale = scale.max(band_route.norm());
            }
            errs.push(err / scale);
        }
        assert!(errs[1] < 1e-3, "errors {errs:?}");
        assert!(errs[1] < 0.5 * errs[0], "no second-order decay: {errs:?}");
    }

    #[test]
    fn a3_band_route_matches_grid_route_on_wide_bands() {
        // band widths are whole numbers of grid cells so the half-offset
        // midpoint sampling carries no mass quantization error
        let d = 1.0 / 128.0;
        let u0 = BandSpectrum::new(vec![
            Band { lo: -1.0 + 0.5 * d, hi: -0.5 + 0.5 * d, amp: C64::new(0.8, 0.0) },
            Band { lo: 0.5 + 0.5 * d, hi: 1.0 + 0.5 * d, amp: C64::new(1.0, 0.0) },
        ])
        .unwrap();
        let c = Coefficients::new(1.0, 1.0, 2.0).unwrap();
        let t = 0.05;
        let closed = a3_spectral(&band_sample_field(&u0, d, 192), &c, t);
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for frac in [-2.25f64, -0.75, 0.75, 2.25] {
            let n = (frac / d).round() as i64;
            let xi = n as f64 * d;
            let idx = (n + closed.grid.half_extent as i64) as usize;
            let band_route = a3_at(&u0, &c, t, xi);
            err = err.max((band_route - closed.values[idx]).norm());
            scale = scale.max(band_route.norm());
        }
        assert!(err < 2e-3 * scale, "err {err} scale {scale}");
    }

    #[test]
    fn a3_pair_resonance_split_matches_brute_force() {
        // narrow bands at +-N with N^4 t large enough to trigger the split
        let n = 8.0f64;
        let w = n.powf(-1.5);
        let u0 = BandSpectrum::new(vec![
            Band { lo: -n - w, hi: -n + w, amp: C64::new(1.3, 0.0) },
            Band { lo: n - w, hi: n + w, amp: C64::new(1.0, 0.0) },
        ])
        .unwrap();
        let c = Coefficients::new(1.0, 1.0, 2.0).unwrap();
        let t = 0.1;
        for xi in [n + 0.2 * w, n - 0.7 * w] {
            let split = a3_pair_at(&u0, &c, t, xi);
            // brute force: full integrand everywhere, panels by the fast rate
            let mut brute = C64::new(0.0, 0.0);
            for bi in u0.bands() {
                for bj in u0.bands() {
                    for bk in u0.bands() {
                        let Some((lo1, hi1)) =
                            overlap(bi.lo, bi.hi, xi - bj.hi - bk.hi, xi - bj.lo - bk.lo)
                        else {
                            continue;
                        };
                        let bjt = (bj.lo, bj.hi, bj.amp);
                        let bkt = (bk.lo, bk.hi, bk.amp);
                        let inner_rate = 5.0 * quartic_gap_bound(bk.lo, bk.hi, bj.lo, bj.hi);
                        let fast = 5.0 * quartic_gap_bound(xi - hi1, xi - lo1, lo1, hi1);
                        brute += bi.amp
                            * integrate_paneled(
                                &mut |xi1: f64| {
                                    a3_pair_inner(&c, t, xi, xi1, bjt, bkt, inner_rate, false)
                                },
                                lo1,
                                hi1,
                                fast * t * (hi1 - lo1),
                                12,
                            );
                    }
                }
            }
            brute *= C64::new(0.0, xi) * phase(t, xi)
                / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
            // the tail keeps only the slowly-varying part of T; the dropped
            // oscillatory remainder is O(1/K^2) of the total at K = CORE_CYCLES
            assert!(
                (split - brute).norm() < 1e-2 * brute.norm(),
                "xi = {xi}: {split} vs {brute}"
            );
        }
    }

    #[test]
    fn support_pieces_merge_and_cover() {
        let u0 = BandSpectrum::new(vec![
            Band { lo: 1.0, hi: 2.0, amp: C64::new(1.0, 0.0) },
            Band { lo: -0.5, hi: 0.5, amp: C64::new(1.0, 0.0) },
        ])
        .unwrap();
        let p2 = a2_support_pieces(&u0);
        // pair sums: [2,4], [0.5,2.5], [-1,1] merge to [-1, 4], then split at
        // the interior endpoint sums {0, 0.5, 1, 1.5, 2, 2.5, 3}
        assert_eq!(p2.first().unwrap().0, -1.0);
        assert_eq!(p2.last().unwrap().1, 4.0);
        assert_eq!(p2.len(), 8);
        for pair in p2.windows(2) {
            assert_eq!(pair[0].1, pair[1].0, "pieces must tile without gaps");
        }
        assert!(p2.contains(&(0.0, 0.5)) && p2.contains(&(2.5, 3.0)));
        let far = BandSpectrum::new(vec![
            Band { lo: 10.0, hi: 10.1, amp: C64::new(1.0, 0.0) },
            Band { lo: -0.1, hi: 0.1, amp: C64::new(1.0, 0.0) },
        ])
        .unwrap();
        let p2 = a2_support_pieces(&far);
        // three separated clusters (near 0, 10, 20), each split internally
        assert!((p2.first().unwrap().0 - -0.2).abs() < 1e-15);
        assert!((p2.last().unwrap().1 - 20.2).abs() < 1e-15);
        let gaps = p2.windows(2).filter(|w| w[0].1 < w[1].0).count();
        assert_eq!(gaps, 2, "clusters stay separated: {p2:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn resonance_identities(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
            let lhs = resonance_q1(x, y);
            let rhs = (x + y).powi(5) - x.powi(5) - y.powi(5);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            let lhs = resonance_q2(x, y, z);
            let rhs = (x + y + z).powi(5) - x.powi(5) - y.powi(5) - z.powi(5);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn phi_obeys_size_bounds(q in -1e4f64..1e4, t in -3.0f64..3.0) {
            let v = phi_factor(q, t).norm();
            prop_assert!(v <= t.abs() * (1.0 + 1e-12));
            if q != 0.0 {
                prop_assert!(v <= 2.0 / q.abs() + 1e-12);
            }
        }
    }
}
