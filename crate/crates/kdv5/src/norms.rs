//! Weighted Sobolev and dispersive space-time norms.
//!
//! The one-parameter family `H^{s,a}` carries the weight
//! `<xi>^{s-a} |xi|^a`; the space-time norms additionally weight by powers of
//! the modulation `<tau - xi^5>` and are assembled from dyadic blocks
//! `A_j = {2^j <= <xi> < 2^{j+1}}`, `B_k = {2^k <= <tau - xi^5> < 2^{k+1}}`.
//!
//! Grid norms use the cell measure so they approximate integrals over the
//! line/plane. The origin frequency cell is special: `|xi|^{2a}` is averaged
//! analytically over the cell (for `a > -1/2`), and a norm with mass on the
//! origin cell and `a <= -1/2` is reported as [`NormValue::Divergent`] rather
//! than silently truncated.

use crate::bands::BandSpectrum;
use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpectralField};
use crate::quad::{integrate_adaptive, integrate_toward_zero};
use crate::C64;
use std::collections::BTreeMap;

/// Value of a norm that may fail to be finite by construction (not by
/// overflow): weights `|xi|^{2a}` with `a <= -1/2` are not integrable across
/// the origin cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormValue {
    Finite(f64),
    Divergent,
}

impl NormValue {
    pub fn is_divergent(&self) -> bool {
        matches!(self, NormValue::Divergent)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            NormValue::Finite(v) => Some(*v),
            NormValue::Divergent => None,
        }
    }

    /// Unwrap a value the caller knows must be finite.
    pub fn expect_finite(&self, context: &str) -> Result<f64> {
        self.finite()
            .ok_or_else(|| Error::DivergentNorm(context.to_string()))
    }

    fn from_sum_sq(sum_sq: f64) -> Self {
        if sum_sq.is_finite() {
            NormValue::Finite(sum_sq.sqrt())
        } else {
            NormValue::Divergent
        }
    }
}

impl std::fmt::Display for NormValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormValue::Finite(v) => write!(f, "{v}"),
            NormValue::Divergent => write!(f, "divergent"),
        }
    }
}

/// Norm selector used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `H^{s,a}` weighted Sobolev norm of a spectrum.
    Hsa,
    /// Space-time norm with weight `<xi>^{s-a} |xi|^a <tau-xi^5>^b`.
    Xsab,
    /// Dyadic-block norm: per-block `L^2`, `l^1` in modulation, `l^2` in frequency.
    X21,
    /// Low-frequency norm with modulation weight inside the `L^2`.
    XLab,
    /// Low-frequency norm with an `l^1` dyadic modulation sum outside.
    XLab1,
    /// Four-branch low-frequency norm dispatched on `a`.
    XLa,
    /// Two-part norm: high-frequency block norm plus low-frequency branch norm.
    Zsa,
    /// Dual-side norm: weighted `L^2` in frequency of `L^1` in modulation.
    DualL2L1,
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            NormKind::Hsa => "h_sa",
            NormKind::Xsab => "x_sab",
            NormKind::X21 => "x_21",
            NormKind::XLab => "xl_ab",
            NormKind::XLab1 => "xl_ab1",
            NormKind::XLa => "xl_a",
            NormKind::Zsa => "z_sa",
            NormKind::DualL2L1 => "dual_l2l1",
        };
        write!(f, "{name}")
    }
}

/// Weight and branch parameters shared by the space-time norms.
///
/// `eps1` tunes the modulation exponent of the `a = -7/8` branch (legal range
/// `(0, s + 1/4]`), `eps2` the `-3/2 < a < -7/8` branch (legal range
/// `(0, -(a + 7/8)]`). Defaults sit at half the maximal legal value and are
/// validated only when the corresponding branch is actually selected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl WeightParams {
    pub fn new(s: f64, a: f64, b: f64) -> Self {
        Self { s, a, b, eps1: 0.5 * (s + 0.25), eps2: -0.5 * (a + 0.875) }
    }

    pub fn with_eps1(mut self, eps1: f64) -> Self {
        self.eps1 = eps1;
        self
    }

    pub fn with_eps2(mut self, eps2: f64) -> Self {
        self.eps2 = eps2;
        self
    }
}

/// `<x> = sqrt(1 + x^2)`.
pub fn gauge(x: f64) -> f64 {
    x.hypot(1.0)
}

/// `H^{s,a}` weight `<xi>^{s-a} |xi|^a` (singular at 0 when `a < 0`).
pub fn weight_hsa(xi: f64, s: f64, a: f64) -> f64 {
    gauge(xi).powf(s - a) * xi.abs().powf(a)
}

/// Modulation `tau - xi^5`.
pub fn modulation(tau: f64, xi: f64) -> f64 {
    tau - xi.powi(5)
}

/// Dyadic block index `(j, k)`: `j = floor(log2 <xi>)`,
/// `k = floor(log2 <tau - xi^5>)`. Both gauges are >= 1, so indices are
/// nonnegative; blocks are closed below, open above.
pub fn dyadic_index(tau: f64, xi: f64) -> (u32, u32) {
    let j = gauge(xi).log2().floor() as u32;
    let k = gauge(modulation(tau, xi)).log2().floor() as u32;
    (j, k)
}

/// Low-frequency region split on `|xi| <= 1`: `D1` holds the points with
/// `|tau| >= |xi|^{-5/3}`, `D2` the rest. Points with `|xi| > 1` are `High`.
/// The boundary curve belongs to `D1`; the line `xi = 0` is assigned to `D2`
/// (finite `tau` never dominates the infinite threshold).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    High,
    D1,
    D2,
}

pub fn region_classify(tau: f64, xi: f64) -> Region {
    if xi.abs() > 1.0 {
        return Region::High;
    }
    if xi == 0.0 {
        return Region::D2;
    }
    if tau.abs() >= xi.abs().powf(-5.0 / 3.0) {
        Region::D1
    } else {
        Region::D2
    }
}

/// Critical Sobolev index `s_a = -2a - 2` for a given low-frequency exponent.
pub fn s_critical(a: f64) -> f64 {
    -2.0 * a - 2.0
}

/// Admissible `(s, a)` range for the two-part norm machinery:
/// `s >= max(-1/4, s_a)`, `-3/2 < a <= -1/4`, excluding the corner
/// `(-1/4, -7/8)`.
pub fn admissible(s: f64, a: f64) -> bool {
    if !(-1.5 < a && a <= -0.25) {
        return false;
    }
    if s < (-0.25f64).max(s_critical(a)) {
        return false;
    }
    !(s == -0.25 && a == -0.875)
}

/// Mean of `|xi|^{2a}` over the origin cell `[-d/2, d/2]`, as a multiplier on
/// `|f(0)|^2 * d`. Finite only for `a > -1/2`.
fn origin_cell_weight_sq(delta: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        (0.5 * delta).powf(2.0 * a) / (2.0 * a + 1.0)
    }
}

/// `H^{s,a}` norm of a spectrum on a uniform grid.
pub fn h_sa_norm(f: &SpectralField, s: f64, a: f64) -> NormValue {
    let delta = f.grid.delta_xi;
    let mut sum_sq = 0.0f64;
    for (i, v) in f.values.iter().enumerate() {
        let xi = f.grid.xi(i);
        let m = v.norm_sqr();
        if m == 0.0 {
            continue;
        }
        if xi == 0.0 {
            if a <= -0.5 {
                return NormValue::Divergent;
            }
            sum_sq += m * origin_cell_weight_sq(delta, a) * delta;
        } else {
            let w = weight_hsa(xi, s, a);
            sum_sq += m * w * w * delta;
        }
    }
    NormValue::from_sum_sq(sum_sq)
}

/// `H^{s,a}` norm of a band spectrum, integrating the weight exactly over
/// each band (adaptive panels; geometric refinement toward an origin inside a
/// band).
pub fn h_sa_norm_bands(f: &BandSpectrum, s: f64, a: f64) -> NormValue {
    let mut sum_sq = 0.0f64;
    for band in f.bands() {
        let m = band.amp.norm_sqr();
        if m == 0.0 {
            continue;
        }
        match piece_weight_integral(band.lo, band.hi, s, a, &mut |_| 1.0) {
            Some(v) => sum_sq += m * v,
            None => return NormValue::Divergent,
        }
    }
    NormValue::from_sum_sq(sum_sq)
}

/// Weighted `L^2` norm of a function-valued spectrum over explicit pieces:
/// `sqrt( sum_pieces int w_{s,a}(xi)^2 |f(xi)|^2 dxi )`. Pieces must be
/// pairwise disjoint; a piece may touch or straddle 0, in which case the
/// integrand is refined geometrically toward the origin and divergence is
/// detected from non-decaying panel contributions.
pub fn weighted_l2_pieces(
    pieces: &[(f64, f64)],
    f: &mut impl FnMut(f64) -> C64,
    s: f64,
    a: f64,
) -> NormValue {
    let mut sum_sq = 0.0f64;
    for &(lo, hi) in pieces {
        let mut density = |xi: f64| f(xi).norm_sqr();
        match piece_weight_integral(lo, hi, s, a, &mut density) {
            Some(v) => sum_sq += v,
            None => return NormValue::Divergent,
        }
    }
    NormValue::from_sum_sq(sum_sq)
}

/// Like [`weighted_l2_pieces`], but with a fixed composite Gauss-Legendre
/// rule (`panels` panels of the given order per piece, pieces cut at 0 so the
/// `|xi|^{2a}` kink never sits inside a panel). No divergence detection: the
/// caller must know the integrand is integrable (e.g. `f` vanishes fast
/// enough at the origin). Deterministic cost, tolerant of small ripples that
/// would send an adaptive rule chasing noise.
pub fn weighted_l2_pieces_fixed(
    pieces: &[(f64, f64)],
    f: &mut impl FnMut(f64) -> C64,
    s: f64,
    a: f64,
    order: usize,
    panels: usize,
) -> NormValue {
    let mut sum_sq = 0.0f64;
    for &(lo, hi) in pieces {
        let mut halves = Vec::new();
        if lo < 0.0 && hi > 0.0 {
            halves.push((lo, 0.0));
            halves.push((0.0, hi));
        } else {
            halves.push((lo, hi));
        }
        for (plo, phi) in halves {
            let width = (phi - plo) / panels as f64;
            for p in 0..panels {
                let a0 = plo + p as f64 * width;
                sum_sq += crate::quad::integrate_gl_real(
                    &mut |xi: f64| {
                        let w = weight_hsa(xi, s, a);
                        w * w * f(xi).norm_sqr()
                    },
                    a0,
                    a0 + width,
                    order,
                );
            }
        }
    }
    NormValue::from_sum_sq(sum_sq)
}

/// `int_lo^hi <xi>^{2(s-a)} |xi|^{2a} rho(xi) dxi`, or `None` if divergent.
fn piece_weight_integral(
    lo: f64,
    hi: f64,
    s: f64,
    a: f64,
    rho: &mut impl FnMut(f64) -> f64,
) -> Option<f64> {
    debug_assert!(lo < hi);
    let mut integrand = |xi: f64| {
        let w = weight_hsa(xi, s, a);
        w * w * rho(xi)
    };
    if lo >= 0.0 || hi <= 0.0 {
        let (lo_abs, hi_abs) = if lo >= 0.0 { (lo, hi) } else { (-hi, -lo) };
        let mut g = |r: f64| if lo >= 0.0 { integrand(r) } else { integrand(-r) };
        if lo_abs == 0.0 {
            if a >= 0.0 {
                return Some(
                    integrate_adaptive(&mut |x| C64::new(g(x), 0.0), 0.0, hi_abs, 1e-10, 1e-300)
                        .map(|v| v.re)
                        .unwrap_or(f64::NAN),
                );
            }
            return integrate_toward_zero(&mut g, hi_abs, 1e-10);
        }
        return Some(
            integrate_adaptive(&mut |x| C64::new(g(x), 0.0), lo_abs, hi_abs, 1e-10, 1e-300)
                .map(|v| v.re)
                .unwrap_or(f64::NAN),
        );
    }
    // Straddles 0: handle each side separately.
    let left = piece_weight_integral(lo, 0.0, s, a, rho)?;
    let right = piece_weight_integral(0.0, hi, s, a, rho)?;
    Some(left + right)
}

/// Space-time norm with pointwise weight `<xi>^{s-a} |xi|^a <tau-xi^5>^b`.
pub fn xsab_norm(f: &SpaceTimeField, s: f64, a: f64, b: f64) -> NormValue {
    let g = &f.grid;
    let measure = g.cell_measure();
    let mut sum_sq = 0.0f64;
    for j in 0..g.n_xi() {
        let xi = g.xi_at(j);
        let mut column = 0.0f64;
        let mut weighted = 0.0f64;
        for i in 0..g.n_tau() {
            let m = f.values[(i, j)].norm_sqr();
            if m == 0.0 {
                continue;
            }
            let wm = gauge(modulation(g.tau(i), xi)).powf(2.0 * b);
            column += m;
            weighted += m * wm;
        }
        if column == 0.0 {
            continue;
        }
        if xi == 0.0 {
            if a <= -0.5 {
                return NormValue::Divergent;
            }
            sum_sq += weighted * origin_cell_weight_sq(g.xi.delta_xi, a) * measure;
        } else {
            let w = weight_hsa(xi, s, a);
            sum_sq += weighted * w * w * measure;
        }
    }
    NormValue::from_sum_sq(sum_sq)
}

/// Dyadic-block norm: per-block weighted `L^2` (pointwise weight
/// `<xi>^s <tau-xi^5>^{1/2}`), then `l^1` over modulation blocks and `l^2`
/// over frequency blocks. No low-frequency weight, hence never divergent.
pub fn x21_norm(f: &SpaceTimeField, s: f64) -> f64 {
    let g = &f.grid;
    let measure = g.cell_measure();
    // block (j, k) -> sum of squares
    let mut blocks: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for j in 0..g.n_xi() {
        let xi = g.xi_at(j);
        let wx = gauge(xi).powf(2.0 * s);
        for i in 0..g.n_tau() {
            let m = f.values[(i, j)].norm_sqr();
            if m == 0.0 {
                continue;
            }
            let tau = g.tau(i);
            let idx = dyadic_index(tau, xi);
            let wm = gauge(modulation(tau, xi));
            *blocks.entry(idx).or_insert(0.0) += m * wx * wm * measure;
        }
    }
    // l^1 over k within each j, then l^2 over j.
    let mut per_j: BTreeMap<u32, f64> = BTreeMap::new();
    for ((j, _k), sum_sq) in blocks {
        *per_j.entry(j).or_insert(0.0) += sum_sq.sqrt();
    }
    per_j.values().map(|r| r * r).sum::<f64>().sqrt()
}

/// Restriction predicate for the low-frequency norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LowRestriction {
    /// `A_0 = {<xi> < 2}`.
    Shell0,
    /// `A_0` intersected with one of the `D` regions.
    Shell0Region(Region),
}

fn in_restriction(restriction: LowRestriction, tau: f64, xi: f64) -> bool {
    if gauge(xi) >= 2.0 {
        return false;
    }
    match restriction {
        LowRestriction::Shell0 => true,
        LowRestriction::Shell0Region(r) => region_classify(tau, xi) == r,
    }
}

/// Weighted `L^2` over a low-frequency restriction, modulation weight inside:
/// `|| |xi|^a <tau-xi^5>^b f ||_{L^2(restriction)}`.
fn xl_ab_restricted(
    f: &SpaceTimeField,
    a: f64,
    b: f64,
    restriction: LowRestriction,
) -> NormValue {
    let g = &f.grid;
    let measure = g.cell_measure();
    let mut sum_sq = 0.0f64;
    for j in 0..g.n_xi() {
        let xi = g.xi_at(j);
        for i in 0..g.n_tau() {
            let m = f.values[(i, j)].norm_sqr();
            if m == 0.0 {
                continue;
            }
            let tau = g.tau(i);
            if !in_restriction(restriction, tau, xi) {
                continue;
            }
            let wm = gauge(modulation(tau, xi)).powf(2.0 * b);
            if xi == 0.0 {
                if a <= -0.5 {
                    return NormValue::Divergent;
                }
                sum_sq += m * wm * origin_cell_weight_sq(g.xi.delta_xi, a) * measure;
            } else {
                let wx = xi.abs().powf(2.0 * a);
                sum_sq += m * wm * wx * measure;
            }
        }
    }
    NormValue::from_sum_sq(sum_sq)
}

/// Public `X_L^{a,b}` norm over the low shell.
pub fn xl_ab_norm(f: &SpaceTimeField, a: f64, b: f64) -> NormValue {
    xl_ab_restricted(f, a, b, LowRestriction::Shell0)
}

/// Low-frequency norm with the dyadic modulation sum outside:
/// `sum_k 2^{bk} || |xi|^a f ||_{L^2(restriction cap B_k)}`.
fn xl_ab1_restricted(
    f: &SpaceTimeField,
    a: f64,
    b: f64,
    restriction: LowRestriction,
) -> NormValue {
    let g = &f.grid;
    let measure = g.cell_measure();
    let mut per_k: BTreeMap<u32, f64> = BTreeMap::new();
    for j in 0..g.n_xi() {
        let xi = g.xi_at(j);
        for i in 0..g.n_tau() {
            let m = f.values[(i, j)].norm_sqr();
            if m == 0.0 {
                continue;
            }
            let tau = g.tau(i);
            if !in_restriction(restriction, tau, xi) {
                continue;
            }
            let (_, k) = dyadic_index(tau, xi);
            let cell = if xi == 0.0 {
                if a <= -0.5 {
                    return NormValue::Divergent;
                }
                m * origin_cell_weight_sq(g.xi.delta_xi, a) * measure
            } else {
                m * xi.abs().powf(2.0 * a) * measure
            };
            *per_k.entry(k).or_insert(0.0) += cell;
        }
    }
    let total: f64 = per_k
        .iter()
        .map(|(&k, &sum_sq)| 2f64.powf(b * k as f64) * sum_sq.sqrt())
        .sum();
    if total.is_finite() {
        NormValue::Finite(total)
    } else {
        NormValue::Divergent
    }
}

/// Public `X_L^{a,b,1}` norm over the low shell.
pub fn xl_ab1_norm(f: &SpaceTimeField, a: f64, b: f64) -> NormValue {
    xl_ab1_restricted(f, a, b, LowRestriction::Shell0)
}

/// Four-branch low-frequency norm dispatched on `a`:
///
/// * `a = -1/4`: modulation-weighted `L^2` on `D1` (exponent 3/4) plus the
///   dyadic `l^1` variant on `D2` (exponent 3/4);
/// * `-7/8 < a < -1/4`: dyadic `l^1` variant with exponent `3a/5 + 9/10`;
/// * `a = -7/8`: modulation-weighted `L^2`, exponent `3/8 + eps1/2`;
/// * `-3/2 < a < -7/8`: modulation-weighted `L^2`, exponent `3/8 + eps2/2`.
pub fn xl_a_norm(f: &SpaceTimeField, params: &WeightParams) -> Result<NormValue> {
    let a = params.a;
    if a == -0.25 {
        let part1 = xl_ab_restricted(f, a, 0.75, LowRestriction::Shell0Region(Region::D1));
        let part2 = xl_ab1_restricted(f, a, 0.75, LowRestriction::Shell0Region(Region::D2));
        return Ok(match (part1, part2) {
            (NormValue::Finite(x), NormValue::Finite(y)) => NormValue::Finite(x + y),
            _ => NormValue::Divergent,
        });
    }
    if -0.875 < a && a < -0.25 {
        let b = 0.6 * a + 0.9;
        return Ok(xl_ab1_restricted(f, a, b, LowRestriction::Shell0));
    }
    if a == -0.875 {
        let eps1 = params.eps1;
        if !(eps1 > 0.0 && eps1 <= params.s + 0.25) {
            return Err(Error::InvalidParameter(format!(
                "eps1 = {eps1} outside (0, s + 1/4] for s = {}",
                params.s
            )));
        }
        return Ok(xl_ab_restricted(f, a, 0.375 + 0.5 * eps1, LowRestriction::Shell0));
    }
    if -1.5 < a && a < -0.875 {
        let eps2 = params.eps2;
        if !(eps2 > 0.0 && eps2 <= -(a + 0.875)) {
            return Err(Error::InvalidParameter(format!(
                "eps2 = {eps2} outside (0, -(a + 7/8)] for a = {a}"
            )));
        }
        return Ok(xl_ab_restricted(f, a, 0.375 + 0.5 * eps2, LowRestriction::Shell0));
    }
    Err(Error::InvalidParameter(format!(
        "low-frequency norm needs -3/2 < a <= -1/4, got {a}"
    )))
}

/// Zero out cells with `|xi| < 1` (high-pass; keeps `|xi| = 1`).
pub fn project_high(f: &SpaceTimeField) -> SpaceTimeField {
    let mut out = f.clone();
    for j in 0..out.grid.n_xi() {
        if out.grid.xi_at(j).abs() < 1.0 {
            for i in 0..out.grid.n_tau() {
                out.values[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Zero out cells with `|xi| > 1` (low-pass; keeps `|xi| = 1`).
pub fn project_low(f: &SpaceTimeField) -> SpaceTimeField {
    let mut out = f.clone();
    for j in 0..out.grid.n_xi() {
        if out.grid.xi_at(j).abs() > 1.0 {
            for i in 0..out.grid.n_tau() {
                out.values[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Two-part norm: high-frequency dyadic block norm plus the dispatched
/// low-frequency norm. The split is at `|xi| = 1`, inclusive on both sides
/// (a measure-zero overlap on the grid's `|xi| = 1` nodes).
pub fn z_norm(f: &SpaceTimeField, params: &WeightParams) -> Result<NormValue> {
    let high = x21_norm(&project_high(f), params.s);
    let low = xl_a_norm(&project_low(f), params)?;
    Ok(match low {
        NormValue::Finite(l) => NormValue::Finite(high + l),
        NormValue::Divergent => NormValue::Divergent,
    })
}

/// Dual-side norm `|| <xi>^{s-a} |xi|^a <tau-xi^5>^{-1} f ||_{L^2_xi L^1_tau}`:
/// per frequency column an `L^1` in `tau` with weight `<tau-xi^5>^{-1}`, then
/// a weighted `L^2` across columns.
pub fn dual_l2l1_norm(f: &SpaceTimeField, s: f64, a: f64) -> NormValue {
    let g = &f.grid;
    let mut sum_sq = 0.0f64;
    for j in 0..g.n_xi() {
        let xi = g.xi_at(j);
        let mut column = 0.0f64;
        for i in 0..g.n_tau() {
            let m = f.values[(i, j)].norm();
            if m == 0.0 {
                continue;
            }
            column += m / gauge(modulation(g.tau(i), xi));
        }
        if column == 0.0 {
            continue;
        }
        column *= g.delta_tau;
        if xi == 0.0 {
            if a <= -0.5 {
                return NormValue::Divergent;
            }
            sum_sq += column * column * origin_cell_weight_sq(g.xi.delta_xi, a) * g.xi.delta_xi;
        } else {
            let w = weight_hsa(xi, s, a);
            sum_sq += column * column * w * w * g.xi.delta_xi;
        }
    }
    NormValue::from_sum_sq(sum_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::Band;
    use crate::grid::{FrequencyGrid, SpaceTimeGrid};
    use crate::quad::integrate_gl_real;
    use proptest::prelude::*;

    fn st_grid(delta_tau: f64, m_tau: usize, delta_xi: f64, m_xi: usize) -> SpaceTimeGrid {
        SpaceTimeGrid::centered(FrequencyGrid::new(delta_xi, m_xi).unwrap(), delta_tau, m_tau)
            .unwrap()
    }

    #[test]
    fn dyadic_index_examples() {
        assert_eq!(dyadic_index(49.0, 0.0), (0, 5)); // <49> in [32, 64)
        assert_eq!(dyadic_index(7f64.powi(5), 7.0), (2, 0)); // on the curve
        assert_eq!(dyadic_index(100.0, 0.0), (0, 6));
        assert_eq!(dyadic_index(0.0, 1.0), (0, 0)); // <1> = sqrt 2 in [1, 2)
    }

    #[test]
    fn region_classification() {
        assert_eq!(region_classify(100.0, 0.5), Region::D1); // 0.5^{-5/3} ~ 3.17
        assert_eq!(region_classify(2.0, 0.5), Region::D2);
        assert_eq!(region_classify(1e9, 0.0), Region::D2);
        assert_eq!(region_classify(0.0, 2.0), Region::High);
        // boundary belongs to D1
        let xi = 0.5f64;
        assert_eq!(region_classify(xi.powf(-5.0 / 3.0), xi), Region::D1);
    }

    #[test]
    fn admissible_region_truth_table() {
        assert!(admissible(-0.25, -0.25)); // corner of the admissible wedge
        assert!(admissible(0.0, -1.0)); // s_a = 0
        assert!(admissible(1.0, -0.5));
        assert!(!admissible(-0.3, -0.25)); // s below -1/4
        assert!(!admissible(-0.1, -1.2)); // s below s_a = 0.4
        assert!(!admissible(0.0, -1.5)); // a at the open endpoint
        assert!(!admissible(0.0, -0.2)); // a above -1/4
        assert!(!admissible(-0.25, -0.875)); // excluded corner
        assert!(admissible(-0.2, -0.875));
    }

    #[test]
    fn h_sa_matches_direct_sum_on_plain_l2() {
        let grid = FrequencyGrid::new(0.5, 10).unwrap();
        let f = SpectralField::from_fn(grid, |xi| C64::new((-xi * xi).exp(), 0.3 * xi));
        let direct = f.l2_norm();
        match h_sa_norm(&f, 0.0, 0.0) {
            NormValue::Finite(v) => assert!((v - direct).abs() < 1e-12 * direct),
            NormValue::Divergent => panic!("unexpected divergence"),
        }
    }

    #[test]
    fn h_sa_flags_divergence_only_with_origin_mass() {
        let grid = FrequencyGrid::new(0.25, 8).unwrap();
        // indicator of [0, 1]: origin node included
        let f = SpectralField::from_fn(grid, |xi| {
            if (0.0..=1.0).contains(&xi) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!(h_sa_norm(&f, 0.0, -0.75).is_divergent());
        assert!(!h_sa_norm(&f, 0.0, -0.4).is_divergent());
        // mass strictly away from 0: fine for any a
        let g = SpectralField::from_fn(grid, |xi| {
            if xi >= 0.5 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!(!h_sa_norm(&g, 0.0, -0.75).is_divergent());
    }

    #[test]
    fn h_sa_bands_matches_closed_form() {
        // single band [1, 2], amp 1, s = a = 0: integral = 1
        let f = BandSpectrum::new(vec![Band { lo: 1.0, hi: 2.0, amp: C64::new(1.0, 0.0) }])
            .unwrap();
        let v = h_sa_norm_bands(&f, 0.0, 0.0).finite().unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        // pure power weight on a band away from 1: s = a means weight = |xi|^a
        let v = h_sa_norm_bands(&f, -0.5, -0.5).finite().unwrap();
        // int_1^2 xi^{-1} dxi = ln 2
        assert!((v - 2f64.ln().sqrt()).abs() < 1e-9);
        // divergence: band over the origin with a <= -1/2
        let g = BandSpectrum::new(vec![Band { lo: -0.5, hi: 0.5, amp: C64::new(1.0, 0.0) }])
            .unwrap();
        assert!(h_sa_norm_bands(&g, 0.0, -0.5).is_divergent());
        assert!(!h_sa_norm_bands(&g, 0.0, -0.4).is_divergent());
    }

    #[test]
    fn weighted_pieces_handle_vanishing_integrand_at_origin() {
        // f(xi) = xi near 0 tames |xi|^{2a} for a = -1: integrand ~ const
        let pieces = [(0.0, 1.0)];
        let v = weighted_l2_pieces(&pieces, &mut |xi| C64::new(xi, 0.0), -1.0, -1.0);
        // integral of <xi>^0 xi^{-2} xi^2 = 1
        assert!((v.finite().unwrap() - 1.0).abs() < 1e-8);
        // but a flat function does diverge there
        let v = weighted_l2_pieces(&pieces, &mut |_| C64::new(1.0, 0.0), -1.0, -1.0);
        assert!(v.is_divergent());
    }

    #[test]
    fn xsab_matches_quadrature_oracle_under_refinement() {
        // indicator of tau in [0,1), xi in [1,2) with s=a=0, b=1/2:
        // norm^2 = int_1^2 int_0^1 <tau - xi^5> dtau dxi
        let inner = |xi: f64| {
            integrate_gl_real(&mut |tau: f64| gauge(modulation(tau, xi)), 0.0, 1.0, 32)
        };
        let oracle = integrate_gl_real(&mut |xi| inner(xi), 1.0, 2.0, 64).sqrt();
        let mut errs = Vec::new();
        for scale in [4usize, 8, 16] {
            let g = st_grid(1.0 / (8 * scale) as f64, 20 * 8 * scale, 1.0 / (scale * 4) as f64, 3 * scale * 4);
            let f = SpaceTimeField::from_fn(g, |tau, xi| {
                if (0.0..1.0).contains(&tau) && (1.0..2.0).contains(&xi) {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let v = xsab_norm(&f, 0.0, 0.0, 0.5).finite().unwrap();
            errs.push((v - oracle).abs() / oracle);
        }
        assert!(errs[2] < 0.02, "errors {errs:?} vs oracle {oracle}");
        assert!(errs[2] < errs[0], "no convergence: {errs:?}");
    }

    #[test]
    fn x21_single_block_in_pointwise_weight_bracket() {
        // block inside A_2 cap B_3 (xi ~ 5, tau ~ xi^5 + 10), plain L2 mass 1
        let g = st_grid(0.25, 80, 0.05, 120);
        let g = g.with_center(5f64.powi(5), 5.0);
        let mut f = SpaceTimeField::zeros(g);
        let mut cells = Vec::new();
        for i in 0..g.n_tau() {
            for j in 0..g.n_xi() {
                let (tau, xi) = (g.tau(i), g.xi_at(j));
                if dyadic_index(tau, xi) == (2, 3) && (xi - 5.0).abs() < 0.3
                    && (tau - xi.powi(5) - 10.0).abs() < 2.0
                {
                    cells.push((i, j));
                }
            }
        }
        assert!(!cells.is_empty());
        let amp = 1.0 / ((cells.len() as f64) * g.cell_measure()).sqrt();
        for &(i, j) in &cells {
            f.values[(i, j)] = C64::new(amp, 0.0);
        }
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        let v = x21_norm(&f, 0.0);
        // pointwise weight <tau-xi^5>^{1/2} in [2^{3/2}, 4) on B_3...
        assert!(v >= 2f64.powf(1.5) - 1e-12 && v < 4.0, "got {v}");
        // ...and the exact value equals an independent direct weighted sum.
        let direct: f64 = cells
            .iter()
            .map(|&(i, j)| {
                let (tau, xi) = (g.tau(i), g.xi_at(j));
                amp * amp * gauge(modulation(tau, xi)) * g.cell_measure()
            })
            .sum::<f64>()
            .sqrt();
        assert!((v - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn x21_l1_in_modulation_l2_in_frequency() {
        // two blocks in the same frequency shell, different modulation shells:
        // contributions add linearly; in different frequency shells: in quadrature.
        let g = st_grid(0.5, 400, 0.25, 60);
        let place = |f: &mut SpaceTimeField, xi0: f64, off: f64, amp: f64| {
            for i in 0..g.n_tau() {
                for j in 0..g.n_xi() {
                    let (tau, xi) = (g.tau(i), g.xi_at(j));
                    if (xi - xi0).abs() < 0.2 && (tau - xi.powi(5) - off).abs() < 1.0 {
                        f.values[(i, j)] = C64::new(amp, 0.0);
                    }
                }
            }
        };
        let mut f1 = SpaceTimeField::zeros(g);
        place(&mut f1, 2.5, 0.0, 1.0);
        let mut f2 = SpaceTimeField::zeros(g);
        place(&mut f2, 2.5, 40.0, 1.0);
        let mut f12 = SpaceTimeField::zeros(g);
        place(&mut f12, 2.5, 0.0, 1.0);
        place(&mut f12, 2.5, 40.0, 1.0);
        let (v1, v2, v12) = (x21_norm(&f1, 0.3), x21_norm(&f2, 0.3), x21_norm(&f12, 0.3));
        assert!((v12 - (v1 + v2)).abs() < 1e-10 * v12, "l1 failure: {v1} + {v2} != {v12}");
        let mut h = SpaceTimeField::zeros(g);
        place(&mut h, 2.5, 0.0, 1.0);
        place(&mut h, 6.5, 0.0, 1.0); // different A_j
        let mut h2 = SpaceTimeField::zeros(g);
        place(&mut h2, 6.5, 0.0, 1.0);
        let vh = x21_norm(&h, 0.3);
        let expect = (v1 * v1 + x21_norm(&h2, 0.3).powi(2)).sqrt();
        assert!((vh - expect).abs() < 1e-10 * vh, "l2 failure: {vh} vs {expect}");
    }

    #[test]
    fn xl_a_norm_block_examples() {
        // single block fully inside D2 cap B_2 with || |xi|^{-1/4} f ||_{L2} = 1.
        // Need |xi|^{-5/3} above the B_2 shell (|tau - xi^5| in [4,8) roughly),
        // so the window sits at xi ~ 0.2-0.27 where xi^{-5/3} > 8.8.
        let g = st_grid(0.25, 64, 0.01, 30);
        let mut f = SpaceTimeField::zeros(g);
        let mut cells = Vec::new();
        for i in 0..g.n_tau() {
            for j in 0..g.n_xi() {
                let (tau, xi) = (g.tau(i), g.xi_at(j));
                if xi > 0.205 && xi < 0.275 && dyadic_index(tau, xi).1 == 2
                    && region_classify(tau, xi) == Region::D2
                {
                    cells.push((i, j, xi));
                }
            }
        }
        assert!(!cells.is_empty());
        let mass: f64 = cells
            .iter()
            .map(|&(_, _, xi)| xi.abs().powf(-0.5) * g.cell_measure())
            .sum();
        let amp = mass.powf(-0.5);
        for &(i, j, _) in &cells {
            f.values[(i, j)] = C64::new(amp, 0.0);
        }
        // a = -1/4 branch: block in D2 -> l1 dyadic with b = 3/4: 2^{3/4 * 2}
        let p = WeightParams::new(0.0, -0.25, 0.5);
        let v = xl_a_norm(&f, &p).unwrap().finite().unwrap();
        assert!((v - 2f64.powf(1.5)).abs() < 1e-10, "a=-1/4 got {v}");
        // same block, a = -1/2: single l1 branch with b = 3a/5 + 9/10 = 3/5,
        // but the weight changes to |xi|^{-1}; renormalize first.
        let mass: f64 = cells
            .iter()
            .map(|&(_, _, xi)| xi.abs().powf(-1.0) * g.cell_measure())
            .sum();
        let amp = mass.powf(-0.5);
        let mut f = SpaceTimeField::zeros(g);
        for &(i, j, _) in &cells {
            f.values[(i, j)] = C64::new(amp, 0.0);
        }
        let p = WeightParams::new(0.0, -0.5, 0.5);
        let v = xl_a_norm(&f, &p).unwrap().finite().unwrap();
        assert!((v - 2f64.powf(1.2)).abs() < 1e-10, "a=-1/2 got {v}");
    }

    #[test]
    fn xl_a_norm_epsilon_validation() {
        let g = st_grid(0.5, 4, 0.25, 4);
        let f = SpaceTimeField::zeros(g);
        // a = -7/8 needs eps1 in (0, s + 1/4]
        let p = WeightParams::new(-0.25, -0.875, 0.5);
        assert!(xl_a_norm(&f, &p).is_err());
        let p = WeightParams::new(0.0, -0.875, 0.5);
        assert!(xl_a_norm(&f, &p).is_ok());
        let p = WeightParams::new(0.0, -0.875, 0.5).with_eps1(0.3); // > s + 1/4
        assert!(xl_a_norm(&f, &p).is_err());
        // a out of range entirely
        let p = WeightParams::new(0.0, -1.6, 0.5);
        assert!(xl_a_norm(&f, &p).is_err());
        let p = WeightParams::new(0.0, -1.2, 0.5);
        assert!(xl_a_norm(&f, &p).is_ok());
    }

    #[test]
    fn z_norm_blockwise_additivity_for_high_fields() {
        // For p_l f = 0 the squared two-part norm is additive across A_j.
        let g = st_grid(0.5, 200, 0.25, 40);
        let block = |xi0: f64| {
            let mut f = SpaceTimeField::zeros(g);
            for i in 0..g.n_tau() {
                for j in 0..g.n_xi() {
                    let (tau, xi) = (g.tau(i), g.xi_at(j));
                    if (xi - xi0).abs() < 0.3 && (tau - xi.powi(5)).abs() < 8.0 {
                        f.values[(i, j)] = C64::new(1.0, 0.5);
                    }
                }
            }
            f
        };
        let params = WeightParams::new(0.1, -0.5, 0.5);
        let f1 = block(1.6); // A_1
        let f2 = block(4.3); // A_2
        let mut sum = SpaceTimeField::zeros(g);
        for i in 0..g.n_tau() {
            for j in 0..g.n_xi() {
                sum.values[(i, j)] = f1.values[(i, j)] + f2.values[(i, j)];
            }
        }
        let z1 = z_norm(&f1, &params).unwrap().finite().unwrap();
        let z2 = z_norm(&f2, &params).unwrap().finite().unwrap();
        let z = z_norm(&sum, &params).unwrap().finite().unwrap();
        assert!((z * z - (z1 * z1 + z2 * z2)).abs() < 1e-9 * z * z);
    }

    #[test]
    fn dual_norm_single_cell() {
        let g = st_grid(0.5, 10, 0.25, 8);
        let mut f = SpaceTimeField::zeros(g);
        // cell at tau = 1, xi = 1 (modulation 0, weight 1)
        let (i, j) = (12, 12); // tau = (12-10)*0.5 = 1, xi = (12-8)*0.25 = 1
        f.values[(i, j)] = C64::new(2.0, 0.0);
        assert_eq!(g.tau(i), 1.0);
        assert_eq!(g.xi_at(j), 1.0);
        let v = dual_l2l1_norm(&f, 0.0, 0.0).finite().unwrap();
        // column L1: 2 * dtau = 1.0, then L2: 1.0 * sqrt(dxi) = 0.5
        assert!((v - (2.0 * 0.5 * 0.25f64.sqrt())).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn norms_are_absolutely_homogeneous(lambda in 0.01f64..100.0, seed in 0u64..1000) {
            let grid = FrequencyGrid::new(0.3, 12).unwrap();
            let f = SpectralField::from_fn(grid, |xi| {
                let t = (xi * 17.0 + seed as f64).sin();
                C64::new(t, t * t - 0.4)
            });
            let mut g = f.clone();
            for v in g.values.iter_mut() {
                *v *= lambda;
            }
            let (s, a) = (0.3, -0.4);
            let nf = h_sa_norm(&f, s, a).finite().unwrap();
            let ng = h_sa_norm(&g, s, a).finite().unwrap();
            prop_assert!((ng - lambda * nf).abs() <= 1e-10 * ng.max(1e-12));
        }

        #[test]
        fn spacetime_norms_homogeneous(lambda in 0.01f64..50.0) {
            let g = st_grid(0.5, 30, 0.2, 15);
            let f = SpaceTimeField::from_fn(g, |tau, xi| {
                C64::new((tau + 2.0 * xi).sin(), (tau * xi).cos() * 0.3)
            });
            let mut fl = f.clone();
            for v in fl.values.iter_mut() {
                *v *= lambda;
            }
            // a > -1/2 so the origin cell stays integrable (the sampled field
            // carries mass at xi = 0)
            let params = WeightParams::new(0.2, -0.4, 0.5);
            for (x, y) in [
                (x21_norm(&f, 0.2), x21_norm(&fl, 0.2)),
                (
                    z_norm(&f, &params).unwrap().finite().unwrap(),
                    z_norm(&fl, &params).unwrap().finite().unwrap(),
                ),
                (
                    dual_l2l1_norm(&f, 0.2, -0.4).finite().unwrap(),
                    dual_l2l1_norm(&fl, 0.2, -0.4).finite().unwrap(),
                ),
            ] {
                prop_assert!((y - lambda * x).abs() <= 1e-9 * y.max(1e-12));
            }
        }

        #[test]
        fn xsab_monotone_in_b_and_hsa_in_s(b1 in -1.0f64..1.0, db in 0.0f64..1.0) {
            // mass away from the curve tau = xi^5 and from |xi| < 1 so both
            // monotonicities are clean
            let g = st_grid(0.5, 60, 0.25, 20);
            let f = SpaceTimeField::from_fn(g, |tau, xi| {
                if xi.abs() >= 1.25 && (tau - xi.powi(5)).abs() >= 2.0 && tau.abs() < 25.0 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let v1 = xsab_norm(&f, 0.0, 0.0, b1).finite().unwrap();
            let v2 = xsab_norm(&f, 0.0, 0.0, b1 + db).finite().unwrap();
            prop_assert!(v2 >= v1 * (1.0 - 1e-12));
        }
    }
}
