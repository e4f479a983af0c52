//! Data families that concentrate near a single high frequency, and the
//! sheared spacetime rectangles used by the convolution lower bounds.
//!
//! Every family places its spectral mass on bands of width `N^-4` or `N^-3/2`
//! around `±N` (plus, for some families, a companion band near the origin),
//! with amplitudes sized so the relevant Sobolev norm stays bounded while a
//! Picard iterate or a bilinear ratio grows with `N`. The generators return
//! exact [`BandSpectrum`] values so that no uniform grid ever has to resolve
//! an `N^-4` band.
//!
//! The rectangle catalogue ([`appendix_rects`]) describes thin boxes hugging
//! the dispersion curve `tau = xi^5` near `xi = N` (and their images near
//! `-N`, `2N`, and the origin). [`example_pair`] bundles the four input pairs
//! whose convolutions have explicit lower bounds on a designated output
//! rectangle; those bounds drive the necessary-condition sweeps.

use crate::bands::{Band, BandSpectrum};
use crate::error::{Error, Result};
use crate::C64;

/// Smallest admissible family frequency: below this the "high" bands start
/// interacting with the near-origin companions and the closed forms degrade.
pub const MIN_FAMILY_N: u32 = 4;

fn family_n(n: u32) -> Result<f64> {
    if n < MIN_FAMILY_N {
        return Err(Error::InvalidParameter(format!(
            "family frequency N must be >= {MIN_FAMILY_N}, got {n}"
        )));
    }
    Ok(f64::from(n))
}

fn real_amp(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Two-band datum whose quadratic Duhamel iterate grows like `N` whenever the
/// gradient-coupling coefficients differ: amplitude `N^(2-s)` on
/// `[N-g, N+g]` plus `N^2` on `[g/2, g]`, with `g = N^-4`.
///
/// One-sided by construction (no mirror bands), hence not Hermitian; the
/// growth mechanism is linear-algebraic and does not need real data.
pub fn phi_n_c2(n: u32, s: f64) -> Result<BandSpectrum> {
    let nf = family_n(n)?;
    let g = nf.powi(-4);
    BandSpectrum::new(vec![
        Band {
            lo: 0.5 * g,
            hi: g,
            amp: real_amp(nf * nf),
        },
        Band {
            lo: nf - g,
            hi: nf + g,
            amp: real_amp(nf.powf(2.0 - s)),
        },
    ])
}

/// Hermitian two-band datum `delta * N^(2a+4)` on `[±N-g, ±N+g]`, `g = N^-4`:
/// the spectrum of `~ delta N^(2a+4) cos(Nx)` smeared over width `2g`. Its
/// `H^{s,a}` norm is `~ 2 delta N^(s+2a+2)`, so at `s = -2a-2` the family has
/// size `~ delta` uniformly in `N`.
pub fn phi_n_delta(n: u32, delta: f64, a: f64) -> Result<BandSpectrum> {
    let nf = family_n(n)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "band amplitude scale delta must lie in (0, 1], got {delta}"
        )));
    }
    let g = nf.powi(-4);
    let amp = real_amp(delta * nf.powf(2.0 * a + 4.0));
    let (lo, hi) = (nf - g, nf + g);
    BandSpectrum::new(vec![
        Band { lo: -hi, hi: -lo, amp },
        Band { lo, hi, amp },
    ])
}

/// Three-band datum pairing Hermitian-looking high bands with a one-sided
/// near-origin band: `N^(2-s)` on `[±N-g, ±N+g]` plus `N^(4a+2)` on
/// `[g/2, 3g/2]`, `g = N^-4`. The origin band carries `L^2` mass
/// `N^(8a+4) g` and keeps the whole `H^{s,a}` norm bounded while feeding the
/// low-frequency output of high-high interactions.
pub fn psi_n(n: u32, s: f64, a: f64) -> Result<BandSpectrum> {
    let nf = family_n(n)?;
    let g = nf.powi(-4);
    let high = real_amp(nf.powf(2.0 - s));
    let (lo, hi) = (nf - g, nf + g);
    BandSpectrum::new(vec![
        Band { lo: -hi, hi: -lo, amp: high },
        Band {
            lo: 0.5 * g,
            hi: 1.5 * g,
            amp: real_amp(nf.powf(4.0 * a + 2.0)),
        },
        Band { lo, hi, amp: high },
    ])
}

/// Hermitian pair of wide bands for the cubic-interaction growth test:
/// `N^(3/4-s)` on `[±N-w, ±N+w]`, `w = N^-3/2`. Total `L^2` mass squared is
/// exactly `4 N^(-2s)`.
pub fn phi_n_cubic(n: u32, s: f64) -> Result<BandSpectrum> {
    let nf = family_n(n)?;
    let w = nf.powf(-1.5);
    let amp = real_amp(nf.powf(0.75 - s));
    let (lo, hi) = (nf - w, nf + w);
    BandSpectrum::new(vec![
        Band { lo: -hi, hi: -lo, amp },
        Band { lo, hi, amp },
    ])
}

/// Rectangle in the `(tau, xi)` plane sheared along the line
/// `tau = c xi + d`: the point set
/// `{ |xi - xi_center| <= xi_halfwidth, |tau - (c xi + d)| <= tau_halfheight }`
/// carrying a constant complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearedRect {
    pub xi_center: f64,
    pub xi_halfwidth: f64,
    /// Slope `c` of the spine line `tau = c xi + d`.
    pub shear_slope: f64,
    /// Offset `d` of the spine line.
    pub shear_offset: f64,
    pub tau_halfheight: f64,
    pub amplitude: C64,
}

impl ShearedRect {
    pub fn new(
        xi_center: f64,
        xi_halfwidth: f64,
        shear_slope: f64,
        shear_offset: f64,
        tau_halfheight: f64,
        amplitude: C64,
    ) -> Result<Self> {
        if !(xi_halfwidth > 0.0) || !(tau_halfheight > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rectangle extents must be positive, got halfwidth {xi_halfwidth}, halfheight {tau_halfheight}"
            )));
        }
        for v in [xi_center, shear_slope, shear_offset] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(
                    "rectangle parameters must be finite".into(),
                ));
            }
        }
        Ok(Self {
            xi_center,
            xi_halfwidth,
            shear_slope,
            shear_offset,
            tau_halfheight,
            amplitude,
        })
    }

    /// Unit-amplitude rectangle.
    pub fn indicator(
        xi_center: f64,
        xi_halfwidth: f64,
        shear_slope: f64,
        shear_offset: f64,
        tau_halfheight: f64,
    ) -> Result<Self> {
        Self::new(
            xi_center,
            xi_halfwidth,
            shear_slope,
            shear_offset,
            tau_halfheight,
            C64::new(1.0, 0.0),
        )
    }

    pub fn xi_lo(&self) -> f64 {
        self.xi_center - self.xi_halfwidth
    }

    pub fn xi_hi(&self) -> f64 {
        self.xi_center + self.xi_halfwidth
    }

    /// Height of the spine line `c xi + d` over a frequency.
    pub fn spine_tau(&self, xi: f64) -> f64 {
        self.shear_slope * xi + self.shear_offset
    }

    /// Closed-set membership.
    pub fn contains(&self, tau: f64, xi: f64) -> bool {
        (xi - self.xi_center).abs() <= self.xi_halfwidth
            && (tau - self.spine_tau(xi)).abs() <= self.tau_halfheight
    }

    /// Image under the point reflection `(tau, xi) -> (-tau, -xi)`. The slope
    /// is invariant; center and offset flip sign.
    pub fn reflect(&self) -> Self {
        Self {
            xi_center: -self.xi_center,
            shear_offset: -self.shear_offset,
            amplitude: self.amplitude.conj(),
            ..*self
        }
    }

    /// Area `4 * halfwidth * halfheight` (the shear is area-preserving).
    pub fn area(&self) -> f64 {
        4.0 * self.xi_halfwidth * self.tau_halfheight
    }

    /// `L^2` mass squared: `|amplitude|^2 * area`.
    pub fn mass_sq(&self) -> f64 {
        self.amplitude.norm_sqr() * self.area()
    }

    /// Minimum modulus of the spine separation over the shared frequency
    /// range, or `None` when the frequency ranges overlap in at most a point.
    /// The separation is linear in `xi`, so the minimum sits at an endpoint
    /// or at a sign change.
    fn min_spine_separation(&self, other: &Self) -> Option<f64> {
        let lo = self.xi_lo().max(other.xi_lo());
        let hi = self.xi_hi().min(other.xi_hi());
        if !(lo < hi) {
            return None;
        }
        let d_lo = self.spine_tau(lo) - other.spine_tau(lo);
        let d_hi = self.spine_tau(hi) - other.spine_tau(hi);
        Some(if d_lo.signum() != d_hi.signum() {
            0.0
        } else {
            d_lo.abs().min(d_hi.abs())
        })
    }

    /// True when the two closed rectangles share interior measure (rects that
    /// merely touch along an edge do not count).
    pub fn overlaps(&self, other: &Self) -> bool {
        match self.min_spine_separation(other) {
            Some(sep) => sep < self.tau_halfheight + other.tau_halfheight,
            None => false,
        }
    }
}

/// Finite union of sheared rectangles with pairwise disjoint interiors. When
/// every rectangle shares one shear slope, convolutions of two such spectra
/// have an exact separable form; otherwise consumers must rasterize.
#[derive(Debug, Clone, PartialEq)]
pub struct RectSpectrum {
    rects: Vec<ShearedRect>,
}

impl RectSpectrum {
    pub fn new(rects: Vec<ShearedRect>) -> Result<Self> {
        for i in 0..rects.len() {
            for j in (i + 1)..rects.len() {
                if rects[i].overlaps(&rects[j]) {
                    return Err(Error::InvalidInput(format!(
                        "rectangles {i} and {j} overlap with positive measure"
                    )));
                }
            }
        }
        Ok(Self { rects })
    }

    pub fn single(rect: ShearedRect) -> Self {
        Self { rects: vec![rect] }
    }

    pub fn rects(&self) -> &[ShearedRect] {
        &self.rects
    }

    /// The common shear slope, if every rectangle has exactly the same one.
    pub fn common_slope(&self) -> Option<f64> {
        let first = self.rects.first()?.shear_slope;
        self.rects
            .iter()
            .all(|r| r.shear_slope == first)
            .then_some(first)
    }

    /// Pointwise value (rectangles have disjoint interiors; on a shared edge
    /// the first containing rectangle wins, which is measure-irrelevant).
    pub fn eval(&self, tau: f64, xi: f64) -> C64 {
        for r in &self.rects {
            if r.contains(tau, xi) {
                return r.amplitude;
            }
        }
        C64::new(0.0, 0.0)
    }

    /// `L^2` mass squared (valid because interiors are disjoint).
    pub fn mass_sq(&self) -> f64 {
        self.rects.iter().map(ShearedRect::mass_sq).sum()
    }
}

/// The six rectangles of the bilinear lower-bound geometry at frequency `N`,
/// all sheared along slope `5 N^4` (the tangent slope of `tau = xi^5` at
/// `xi = N`) and of unit `tau`-height.
#[derive(Debug, Clone, Copy)]
pub struct AppendixRects {
    /// `|xi - N| <= w`, spine `tau = 5N^4 xi - 4N^5` (tangent line at `N`).
    pub p1: ShearedRect,
    /// Point reflection of `p1`: `|xi + N| <= w`, spine `tau = 5N^4 xi + 4N^5`.
    pub p2: ShearedRect,
    /// Near-origin box `|xi - 2w| <= w`, spine `tau = 5N^4 xi`.
    pub q: ShearedRect,
    /// Output box `xi in [w/2, 3w/4]`, spine `tau = 5N^4 xi`.
    pub r1: ShearedRect,
    /// Output box `|xi - N| <= w/4` on the tangent line at `N`.
    pub r2: ShearedRect,
    /// Output box `|xi - 2N| <= w/2`, spine `tau = 5N^4 xi - 8N^5`.
    pub r3: ShearedRect,
}

/// Build the rectangle catalogue at frequency `N` (`w = N^-3/2` throughout).
pub fn appendix_rects(n: u32) -> Result<AppendixRects> {
    let nf = family_n(n)?;
    let w = nf.powf(-1.5);
    let slope = 5.0 * nf.powi(4);
    let drop = 4.0 * nf.powi(5);
    let p1 = ShearedRect::indicator(nf, w, slope, -drop, 0.5)?;
    let p2 = p1.reflect();
    let q = ShearedRect::indicator(2.0 * w, w, slope, 0.0, 0.5)?;
    let r1 = ShearedRect::indicator(0.625 * w, 0.125 * w, slope, 0.0, 0.5)?;
    let r2 = ShearedRect::indicator(nf, 0.25 * w, slope, -drop, 0.5)?;
    let r3 = ShearedRect::indicator(2.0 * nf, 0.5 * w, slope, -2.0 * drop, 0.5)?;
    Ok(AppendixRects { p1, p2, q, r1, r2, r3 })
}

/// Identifies one of the four input pairs with an explicit convolution lower
/// bound on a designated output rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// High-high pair with opposite signs: output near the origin.
    One,
    /// High-low pair: output near `N`.
    Two,
    /// High-high pair with equal signs: output near `2N`.
    ThreeA,
    /// Spread-high pair (`2N` box against `-N` box): output near `N`.
    ThreeB,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [
        ExampleId::One,
        ExampleId::Two,
        ExampleId::ThreeA,
        ExampleId::ThreeB,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ExampleId::One => "1",
            ExampleId::Two => "2",
            ExampleId::ThreeA => "3a",
            ExampleId::ThreeB => "3b",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "1" => Ok(ExampleId::One),
            "2" => Ok(ExampleId::Two),
            "3a" | "3A" => Ok(ExampleId::ThreeA),
            "3b" | "3B" => Ok(ExampleId::ThreeB),
            other => Err(Error::InvalidInput(format!(
                "unknown example id {other:?}; expected 1, 2, 3a, or 3b"
            ))),
        }
    }
}

impl std::fmt::Display for ExampleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One convolution test case: two unit-amplitude inputs plus the rectangle on
/// which `f*g` has an explicit lower bound of the order `N^-3/2`.
#[derive(Debug, Clone)]
pub struct ExamplePair {
    pub id: ExampleId,
    pub n: u32,
    pub f: RectSpectrum,
    pub g: RectSpectrum,
    /// Output rectangle carrying the lower bound.
    pub region: ShearedRect,
    /// Exact minimum of `f*g` over `region`, in units of `w = N^-3/2`
    /// (derived from the separable trapezoid-times-triangle closed form).
    pub floor_in_w: f64,
}

/// Assemble an input pair and its designated output rectangle.
///
/// The high-low pair's natural output box is NOT the catalogue's `r2`: the
/// convolution of the `N`-box with the near-origin box is supported on
/// `|xi - (N + 2w)| <= 2w`, so a box centered at `N` straddles the support
/// edge and has minimum zero. The designated region is therefore the
/// recentered core `|xi - (N + 2w)| <= w/4` on the same spine, where the
/// exact minimum is `(7/8) w`.
pub fn example_pair(id: ExampleId, n: u32) -> Result<ExamplePair> {
    let rects = appendix_rects(n)?;
    let nf = f64::from(n);
    let w = nf.powf(-1.5);
    let (f, g, region, floor_in_w) = match id {
        ExampleId::One => (rects.p1, rects.p2, rects.r1, 0.625),
        ExampleId::Two => {
            let core = ShearedRect::indicator(
                nf + 2.0 * w,
                0.25 * w,
                rects.r2.shear_slope,
                rects.r2.shear_offset,
                rects.r2.tau_halfheight,
            )?;
            (rects.p1, rects.q, core, 0.875)
        }
        ExampleId::ThreeA => (rects.p1, rects.p1, rects.r3, 0.75),
        ExampleId::ThreeB => (rects.r3, rects.p2, rects.r2, 0.5),
    };
    Ok(ExamplePair {
        id,
        n,
        f: RectSpectrum::single(f),
        g: RectSpectrum::single(g),
        region,
        floor_in_w,
    })
}

/// Least-squares fit of `log(value)` against `log(N)`.
///
/// Returns `(slope, intercept, residual)` where `residual` is the root-mean-
/// square deviation of `log(value)` from the fitted line. Requires at least
/// three points, strictly positive `N` spanning more than one value, and
/// strictly positive values.
pub fn growth_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "growth fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, v) in points {
        if !(n > 0.0) || !(v > 0.0) || !n.is_finite() || !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "growth fit needs positive finite points, got ({n}, {v})"
            )));
        }
        xs.push(n.ln());
        ys.push(v.ln());
    }
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "growth fit needs at least two distinct N values".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok((slope, intercept, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{h_sa_norm_bands, NormValue};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn finite(v: NormValue) -> f64 {
        v.finite().expect("norm should be finite")
    }

    #[test]
    fn quadratic_family_mass_matches_closed_form() {
        for n in [4u32, 8, 16, 32] {
            for s in [0.0, -0.5, 0.3] {
                let nf = f64::from(n);
                let g = nf.powi(-4);
                let spec = phi_n_c2(n, s).unwrap();
                let expected = nf.powf(2.0 * (2.0 - s)) * 2.0 * g + nf.powi(4) * 0.5 * g;
                assert_relative_eq!(spec.l2_norm().powi(2), expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_family_l2_norm_at_s_zero_is_sqrt_five_halves() {
        // amp N^2 over width 2 N^-4 gives mass 2; the origin band adds 1/2.
        let spec = phi_n_c2(16, 0.0).unwrap();
        assert_relative_eq!(spec.l2_norm(), 2.5f64.sqrt(), max_relative = 1e-12);
        let h00 = finite(h_sa_norm_bands(&spec, 0.0, 0.0));
        assert_relative_eq!(h00, 2.5f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn quadratic_family_sobolev_norm_is_uniform_in_n() {
        for s in [0.0, -0.5, -1.0] {
            let norms: Vec<f64> = [8u32, 16, 32, 64]
                .iter()
                .map(|&n| finite(h_sa_norm_bands(&phi_n_c2(n, s).unwrap(), s, 0.0)))
                .collect();
            let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = norms.iter().cloned().fold(0.0, f64::max);
            assert!(
                hi / lo < 1.05,
                "s={s}: norms {norms:?} should be N-uniform"
            );
        }
    }

    #[test]
    fn delta_family_is_hermitian_with_predicted_norm() {
        let (s, a) = (-0.5, -0.75);
        for n in [8u32, 16, 32, 64] {
            for delta in [0.1, 1.0] {
                let spec = phi_n_delta(n, delta, a).unwrap();
                assert_eq!(spec.hermitian_defect(), 0.0);
                let norm = finite(h_sa_norm_bands(&spec, s, a));
                let predicted = 2.0 * delta * f64::from(n).powf(s + 2.0 * a + 2.0);
                assert_relative_eq!(norm, predicted, max_relative = 0.01);
            }
        }
    }

    #[test]
    fn delta_family_norm_is_n_independent_at_matched_regularity() {
        // At s = -2a - 2 the predicted size is just 2*delta.
        let a = -0.75;
        let s = -2.0 * a - 2.0;
        let norms: Vec<f64> = [8u32, 16, 32, 64]
            .iter()
            .map(|&n| finite(h_sa_norm_bands(&phi_n_delta(n, 0.3, a).unwrap(), s, a)))
            .collect();
        for v in &norms {
            assert_relative_eq!(*v, 0.6, max_relative = 0.01);
        }
    }

    #[test]
    fn three_band_family_has_disjoint_bands_and_low_band_mass() {
        for n in [4u32, 8, 32] {
            let (s, a) = (-0.5, -0.5);
            let spec = psi_n(n, s, a).unwrap();
            assert_eq!(spec.bands().len(), 3);
            let nf = f64::from(n);
            let g = nf.powi(-4);
            let low = spec.bands()[1];
            assert!(low.lo > 0.0 && low.hi < 1.0, "origin band sits near zero");
            let low_mass_sq = low.amp.norm_sqr() * low.width();
            assert_relative_eq!(
                low_mass_sq,
                nf.powf(8.0 * a + 4.0) * g,
                max_relative = 1e-12
            );
            assert!(spec.hermitian_defect() > 0.0, "one-sided origin band");
        }
    }

    #[test]
    fn three_band_family_norm_is_uniform_in_n() {
        for (s, a) in [(-0.5, -0.5), (0.0, -0.25)] {
            let norms: Vec<f64> = [8u32, 16, 32, 64]
                .iter()
                .map(|&n| finite(h_sa_norm_bands(&psi_n(n, s, a).unwrap(), s, a)))
                .collect();
            let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = norms.iter().cloned().fold(0.0, f64::max);
            assert!(
                hi / lo < 1.05,
                "(s,a)=({s},{a}): norms {norms:?} should be N-uniform"
            );
        }
    }

    #[test]
    fn cubic_family_mass_and_symmetry() {
        for n in [4u32, 16, 64] {
            for s in [-0.25, -0.5] {
                let spec = phi_n_cubic(n, s).unwrap();
                assert_eq!(spec.hermitian_defect(), 0.0);
                assert_relative_eq!(
                    spec.l2_norm().powi(2),
                    4.0 * f64::from(n).powf(-2.0 * s),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn family_generators_reject_small_n_and_bad_delta() {
        assert!(phi_n_c2(3, 0.0).is_err());
        assert!(phi_n_delta(8, 0.0, -0.5).is_err());
        assert!(phi_n_delta(8, 1.5, -0.5).is_err());
        assert!(psi_n(2, 0.0, -0.5).is_err());
        assert!(phi_n_cubic(0, -0.25).is_err());
    }

    #[test]
    fn rect_catalogue_shares_slope_and_tangency() {
        for n in [8u32, 16, 32] {
            let nf = f64::from(n);
            let r = appendix_rects(n).unwrap();
            let slope = 5.0 * nf.powi(4);
            for rect in [r.p1, r.p2, r.q, r.r1, r.r2, r.r3] {
                assert_eq!(rect.shear_slope, slope);
                assert_eq!(rect.tau_halfheight, 0.5);
            }
            // The spine of the N-box is the tangent line of xi^5 at N, so it
            // passes through (N^5, N) exactly (all quantities are integers).
            assert_eq!(r.p1.spine_tau(nf), nf.powi(5));
            assert_eq!(r.p2.spine_tau(-nf), -nf.powi(5));
            assert_eq!(r.q.spine_tau(0.0), 0.0);
        }
    }

    #[test]
    fn reflection_is_an_involution_matching_the_mirror_box() {
        let r = appendix_rects(8).unwrap();
        assert_eq!(r.p2.xi_center, -r.p1.xi_center);
        assert_eq!(r.p2.shear_offset, -r.p1.shear_offset);
        assert_eq!(r.p2.reflect(), r.p1);
        // Membership transforms covariantly (sample inside the thin box).
        let xi = r.p1.xi_center + 0.4 * r.p1.xi_halfwidth;
        let tau = r.p1.spine_tau(xi) + 0.3;
        assert!(r.p1.contains(tau, xi));
        assert!(r.p2.contains(-tau, -xi));
    }

    #[test]
    fn rect_membership_is_closed_and_sheared() {
        let rect = ShearedRect::indicator(2.0, 0.5, 3.0, -1.0, 0.25).unwrap();
        assert!(rect.contains(rect.spine_tau(2.0), 2.0));
        assert!(rect.contains(rect.spine_tau(2.5) + 0.25, 2.5));
        assert!(!rect.contains(rect.spine_tau(2.5) + 0.2500001, 2.5));
        assert!(!rect.contains(rect.spine_tau(2.51), 2.51));
        assert_relative_eq!(rect.area(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn rect_spectrum_rejects_overlap_but_allows_touching() {
        let a = ShearedRect::indicator(0.0, 1.0, 2.0, 0.0, 0.5).unwrap();
        let shifted_up = ShearedRect::indicator(0.5, 1.0, 2.0, 0.9, 0.5).unwrap();
        assert!(RectSpectrum::new(vec![a, shifted_up]).is_err());
        let touching = ShearedRect::indicator(0.5, 1.0, 2.0, 1.0, 0.5).unwrap();
        assert!(RectSpectrum::new(vec![a, touching]).is_ok());
        let disjoint_xi = ShearedRect::indicator(2.5, 1.0, 7.0, 0.0, 0.5).unwrap();
        assert!(RectSpectrum::new(vec![a, disjoint_xi]).is_ok());
        // Different slopes whose spines cross inside the shared xi-range.
        let crossing = ShearedRect::indicator(0.5, 1.0, -2.0, 0.0, 0.1).unwrap();
        assert!(RectSpectrum::new(vec![a, crossing]).is_err());
    }

    #[test]
    fn output_box_near_origin_sits_inside_the_convolution_support() {
        for n in [8u32, 32, 128] {
            let r = appendix_rects(n).unwrap();
            // Support of the high-high convolution in xi.
            let lo = r.p1.xi_lo() + r.p2.xi_lo();
            let hi = r.p1.xi_hi() + r.p2.xi_hi();
            assert!(r.r1.xi_lo() > lo && r.r1.xi_hi() < hi);
        }
    }

    #[test]
    fn example_pairs_share_slope_and_region_geometry() {
        let n = 16;
        let nf = f64::from(n);
        let w = nf.powf(-1.5);
        for id in ExampleId::ALL {
            let pair = example_pair(id, n).unwrap();
            let slope = pair.f.common_slope().unwrap();
            assert_eq!(pair.g.common_slope().unwrap(), slope);
            assert_eq!(pair.region.shear_slope, slope);
            // Designated region sits inside the xi-support of f*g.
            let f = &pair.f.rects()[0];
            let g = &pair.g.rects()[0];
            assert!(pair.region.xi_lo() >= f.xi_lo() + g.xi_lo() - 1e-12);
            assert!(pair.region.xi_hi() <= f.xi_hi() + g.xi_hi() + 1e-12);
        }
        let two = example_pair(ExampleId::Two, n).unwrap();
        assert_relative_eq!(two.region.xi_center, nf + 2.0 * w, max_relative = 1e-15);
        assert_relative_eq!(two.region.xi_halfwidth, 0.25 * w, max_relative = 1e-15);
    }

    #[test]
    fn example_id_labels_round_trip() {
        for id in ExampleId::ALL {
            assert_eq!(ExampleId::parse(id.label()).unwrap(), id);
        }
        assert!(ExampleId::parse("4").is_err());
    }

    #[test]
    fn growth_fit_recovers_exact_power_laws() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0].iter().map(|&n| (n, n)).collect();
        let (slope, _, residual) = growth_fit(&pts).unwrap();
        assert_relative_eq!(slope, 1.0, max_relative = 1e-12);
        assert!(residual < 1e-12);

        let pts: Vec<(f64, f64)> = [4.0f64, 8.0, 16.0]
            .iter()
            .map(|&n| (n, 3.7 * n.sqrt()))
            .collect();
        let (slope, intercept, residual) = growth_fit(&pts).unwrap();
        assert_relative_eq!(slope, 0.5, max_relative = 1e-12);
        assert_relative_eq!(intercept, 3.7f64.ln(), max_relative = 1e-12);
        assert!(residual < 1e-12);
    }

    #[test]
    fn growth_fit_rejects_degenerate_input() {
        assert!(growth_fit(&[(8.0, 1.0), (16.0, 2.0)]).is_err());
        assert!(growth_fit(&[(8.0, 1.0), (16.0, -2.0), (32.0, 4.0)]).is_err());
        assert!(growth_fit(&[(8.0, 1.0), (8.0, 2.0), (8.0, 4.0)]).is_err());
    }

    proptest! {
        #[test]
        fn growth_fit_recovers_random_power_laws(
            slope in -3.0f64..3.0,
            scale in 0.01f64..100.0,
        ) {
            let pts: Vec<(f64, f64)> = [4.0f64, 8.0, 12.0, 20.0, 64.0]
                .iter()
                .map(|&n| (n, scale * n.powf(slope)))
                .collect();
            let (fit_slope, fit_intercept, residual) = growth_fit(&pts).unwrap();
            prop_assert!((fit_slope - slope).abs() < 1e-9);
            prop_assert!((fit_intercept - scale.ln()).abs() < 1e-8);
            prop_assert!(residual < 1e-9);
        }

        #[test]
        fn delta_family_mass_closed_form(
            n in 4u32..200,
            delta in 0.01f64..1.0,
            a in -1.0f64..0.0,
        ) {
            let spec = phi_n_delta(n, delta, a).unwrap();
            let nf = f64::from(n);
            let expected = 2.0 * (delta * nf.powf(2.0 * a + 4.0)).powi(2) * 2.0 * nf.powi(-4);
            let got = spec.l2_norm().powi(2);
            // Band edges N +- N^-4 are rounded to ulp(N), so the stored width
            // carries a relative error up to ulp(N) * N^4 / 2 (~5e-5 at the
            // top of the N range).
            prop_assert!((got - expected).abs() <= 1e-3 * expected);
        }

        #[test]
        fn reflection_preserves_area_and_mass(
            c in -5.0f64..5.0,
            d in -10.0f64..10.0,
            xc in -4.0f64..4.0,
            hw in 0.01f64..2.0,
            hh in 0.01f64..2.0,
        ) {
            let rect = ShearedRect::indicator(xc, hw, c, d, hh).unwrap();
            let back = rect.reflect().reflect();
            prop_assert_eq!(back, rect);
            prop_assert!((rect.reflect().area() - rect.area()).abs() < 1e-12);
        }
    }
}
