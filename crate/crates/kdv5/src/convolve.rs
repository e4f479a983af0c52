//! Convolution of spacetime spectra: an exact engine for unions of
//! rectangles sheared along a common line, and a sparse grid engine for
//! everything else.
//!
//! A rectangle sheared along `tau = c xi + d` factorizes, in the coordinates
//! `(xi, sigma = tau - c xi)`, into a product of two interval indicators.
//! Since `sigma` is additive under convolution (for a fixed common `c`), the
//! convolution of two such rectangles is a tensor product of two interval
//! convolutions, i.e. a trapezoid in `xi` times a trapezoid in `sigma`. Sums
//! of rectangles give sums of such products: a piecewise-bilinear surface
//! whose exact minimum or maximum over any same-shear rectangle is attained
//! on the grid of profile breakpoints. This is what makes the `N^-3/2` lower
//! bounds on the designated output boxes testable to round-off rather than
//! quadrature accuracy.

use crate::counterexamples::{RectSpectrum, ShearedRect};
use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpaceTimeGrid};
use crate::C64;

/// Continuous piecewise-linear function with compact support: linear between
/// sorted breakpoints, zero outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pts: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    /// Convolution of the indicators of `[c1-a1, c1+a1]` and `[c2-a2, c2+a2]`:
    /// a trapezoid centered at `c1+c2` with plateau height `2*min(a1,a2)`,
    /// plateau halfwidth `|a1-a2|`, and support halfwidth `a1+a2` (a triangle
    /// when the halfwidths match).
    pub fn indicator_convolution(c1: f64, a1: f64, c2: f64, a2: f64) -> Self {
        debug_assert!(a1 > 0.0 && a2 > 0.0);
        let c = c1 + c2;
        let (amin, amax) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        let h = 2.0 * amin;
        let inner = amax - amin;
        let outer = amax + amin;
        let mut pts = vec![(c - outer, 0.0)];
        if inner > 0.0 {
            pts.push((c - inner, h));
            pts.push((c + inner, h));
        } else {
            pts.push((c, h));
        }
        pts.push((c + outer, 0.0));
        Self { pts }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.pts
    }

    pub fn support(&self) -> (f64, f64) {
        (self.pts[0].0, self.pts[self.pts.len() - 1].0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.pts;
        let last = pts.len() - 1;
        if x <= pts[0].0 || x >= pts[last].0 {
            return 0.0;
        }
        let k = pts.partition_point(|p| p.0 <= x);
        let (x0, y0) = pts[k - 1];
        let (x1, y1) = pts[k];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Exact integral (trapezoid rule on the breakpoints is exact here).
    pub fn integral(&self) -> f64 {
        self.pts
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum()
    }

    fn extremum_on(&self, lo: f64, hi: f64, pick_max: bool) -> f64 {
        debug_assert!(lo <= hi);
        let mut best = if pick_max {
            self.eval(lo).max(self.eval(hi))
        } else {
            self.eval(lo).min(self.eval(hi))
        };
        for &(x, _) in &self.pts {
            if x > lo && x < hi {
                let v = self.eval(x);
                best = if pick_max { best.max(v) } else { best.min(v) };
            }
        }
        best
    }

    /// Exact minimum over the closed interval `[lo, hi]` (the function is
    /// linear between breakpoints, so candidates are endpoints and interior
    /// breakpoints).
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremum_on(lo, hi, false)
    }

    /// Exact maximum over the closed interval `[lo, hi]`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremum_on(lo, hi, true)
    }
}

/// One rectangle-pair contribution to an exact convolution: a complex weight
/// times a product of profiles in `xi` and in `sigma = tau - slope * xi`.
#[derive(Debug, Clone)]
struct SurfaceComponent {
    weight: C64,
    xi_profile: PiecewiseLinear,
    sigma_profile: PiecewiseLinear,
}

/// Exact convolution of two same-shear [`RectSpectrum`] values: a sum of
/// separable piecewise-bilinear components in `(xi, sigma)`.
#[derive(Debug, Clone)]
pub struct PiecewiseBilinearSurface {
    slope: f64,
    components: Vec<SurfaceComponent>,
}

impl PiecewiseBilinearSurface {
    /// Shear slope shared by all components (and by both inputs).
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Value in sheared coordinates `(xi, sigma = tau - slope * xi)`.
    pub fn value_sheared(&self, xi: f64, sigma: f64) -> C64 {
        self.components
            .iter()
            .map(|c| c.weight * c.xi_profile.eval(xi) * c.sigma_profile.eval(sigma))
            .sum()
    }

    /// Value at absolute coordinates `(tau, xi)`.
    pub fn value_at(&self, tau: f64, xi: f64) -> C64 {
        self.value_sheared(xi, tau - self.slope * xi)
    }

    fn merged_breakpoints(&self, f: impl Fn(&SurfaceComponent) -> &PiecewiseLinear) -> Vec<f64> {
        let mut xs: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| f(c).points().iter().map(|p| p.0))
            .collect();
        xs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        xs.dedup();
        xs
    }

    /// Sorted union of the `xi` breakpoints of all components.
    pub fn xi_breakpoints(&self) -> Vec<f64> {
        self.merged_breakpoints(|c| &c.xi_profile)
    }

    /// Sorted union of the `sigma` breakpoints of all components.
    pub fn sigma_breakpoints(&self) -> Vec<f64> {
        self.merged_breakpoints(|c| &c.sigma_profile)
    }

    /// Frequency support (union over components).
    pub fn xi_support(&self) -> (f64, f64) {
        let xs = self.xi_breakpoints();
        (xs[0], xs[xs.len() - 1])
    }

    /// `sigma` support (union over components).
    pub fn sigma_support(&self) -> (f64, f64) {
        let xs = self.sigma_breakpoints();
        (xs[0], xs[xs.len() - 1])
    }

    /// True when every component weight is real and nonnegative, which makes
    /// the whole surface real and nonnegative (profiles are convolutions of
    /// indicators, hence nonnegative).
    pub fn is_real_nonnegative(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.weight.im == 0.0 && c.weight.re >= 0.0)
    }

    fn extremum_on_rect(&self, rect: &ShearedRect, pick_max: bool) -> Result<f64> {
        if rect.shear_slope != self.slope {
            return Err(Error::InvalidInput(format!(
                "rectangle shear slope {} differs from surface slope {}",
                rect.shear_slope, self.slope
            )));
        }
        if !self.is_real_nonnegative() {
            return Err(Error::InvalidInput(
                "exact extrema are only available for real nonnegative surfaces".into(),
            ));
        }
        // On each cell of the breakpoint grid the surface is bilinear, so
        // extrema over an axis-aligned rectangle (in sheared coordinates)
        // are attained at cell corners clipped to the rectangle.
        let (xi_lo, xi_hi) = (rect.xi_lo(), rect.xi_hi());
        let (s_lo, s_hi) = (
            rect.shear_offset - rect.tau_halfheight,
            rect.shear_offset + rect.tau_halfheight,
        );
        let mut xs = vec![xi_lo, xi_hi];
        xs.extend(self.xi_breakpoints().into_iter().filter(|&x| x > xi_lo && x < xi_hi));
        let mut ss = vec![s_lo, s_hi];
        ss.extend(self.sigma_breakpoints().into_iter().filter(|&s| s > s_lo && s < s_hi));
        let mut best: Option<f64> = None;
        for &x in &xs {
            for &s in &ss {
                let v = self.value_sheared(x, s).re;
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        if pick_max {
                            b.max(v)
                        } else {
                            b.min(v)
                        }
                    }
                });
            }
        }
        Ok(best.expect("corner set is nonempty"))
    }

    /// Exact minimum of the (real nonnegative) surface over a same-shear
    /// rectangle.
    pub fn min_on_rect(&self, rect: &ShearedRect) -> Result<f64> {
        self.extremum_on_rect(rect, false)
    }

    /// Exact maximum of the (real nonnegative) surface over a same-shear
    /// rectangle.
    pub fn max_on_rect(&self, rect: &ShearedRect) -> Result<f64> {
        self.extremum_on_rect(rect, true)
    }

    /// Exact global maximum of the (real nonnegative) surface.
    pub fn peak(&self) -> Result<f64> {
        if !self.is_real_nonnegative() {
            return Err(Error::InvalidInput(
                "exact extrema are only available for real nonnegative surfaces".into(),
            ));
        }
        let xs = self.xi_breakpoints();
        let ss = self.sigma_breakpoints();
        let mut best = 0.0f64;
        for &x in &xs {
            for &s in &ss {
                best = best.max(self.value_sheared(x, s).re);
            }
        }
        Ok(best)
    }
}

/// Exact convolution `f*g` of two rectangle spectra sharing one shear slope.
///
/// Errors when either spectrum is empty or the slopes are not literally
/// identical; heterogeneous-slope inputs must be rasterized and fed to
/// [`convolve_grid`] instead.
pub fn convolve_exact(f: &RectSpectrum, g: &RectSpectrum) -> Result<PiecewiseBilinearSurface> {
    let sf = f.common_slope().ok_or_else(|| {
        Error::InvalidInput("left spectrum is empty or mixes shear slopes".into())
    })?;
    let sg = g.common_slope().ok_or_else(|| {
        Error::InvalidInput("right spectrum is empty or mixes shear slopes".into())
    })?;
    if sf != sg {
        return Err(Error::InvalidInput(format!(
            "shear slopes {sf} and {sg} differ; rasterize and use the grid convolution"
        )));
    }
    let mut components = Vec::with_capacity(f.rects().len() * g.rects().len());
    for rf in f.rects() {
        for rg in g.rects() {
            components.push(SurfaceComponent {
                weight: rf.amplitude * rg.amplitude,
                xi_profile: PiecewiseLinear::indicator_convolution(
                    rf.xi_center,
                    rf.xi_halfwidth,
                    rg.xi_center,
                    rg.xi_halfwidth,
                ),
                sigma_profile: PiecewiseLinear::indicator_convolution(
                    rf.shear_offset,
                    rf.tau_halfheight,
                    rg.shear_offset,
                    rg.tau_halfheight,
                ),
            });
        }
    }
    Ok(PiecewiseBilinearSurface { slope: sf, components })
}

/// Sample a same-shear rectangle spectrum onto a grid whose `tau` axis is
/// read as the sheared coordinate `sigma = tau - slope * xi`. Each cell gets
/// the exact cell average (interval-overlap product), so the total mass is
/// exact regardless of how band edges fall against the grid.
pub fn rasterize_sheared(spec: &RectSpectrum, grid: SpaceTimeGrid) -> Result<SpaceTimeField> {
    spec.common_slope().ok_or_else(|| {
        Error::InvalidInput("sheared rasterization needs a nonempty common-slope spectrum".into())
    })?;
    let half_dxi = 0.5 * grid.xi.delta_xi;
    let half_dtau = 0.5 * grid.delta_tau;
    let mut field = SpaceTimeField::zeros(grid);
    let overlap = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| -> f64 {
        (hi1.min(hi2) - lo1.max(lo2)).max(0.0)
    };
    for i in 0..field.grid.n_tau() {
        let sigma = field.grid.tau(i);
        for j in 0..field.grid.n_xi() {
            let xi = field.grid.xi_at(j);
            let mut acc = C64::new(0.0, 0.0);
            for r in spec.rects() {
                let wx = overlap(xi - half_dxi, xi + half_dxi, r.xi_lo(), r.xi_hi());
                if wx == 0.0 {
                    continue;
                }
                let ws = overlap(
                    sigma - half_dtau,
                    sigma + half_dtau,
                    r.shear_offset - r.tau_halfheight,
                    r.shear_offset + r.tau_halfheight,
                );
                if ws == 0.0 {
                    continue;
                }
                acc += r.amplitude * (wx * ws);
            }
            if acc != C64::new(0.0, 0.0) {
                field.values[(i, j)] = acc / field.grid.cell_measure();
            }
        }
    }
    Ok(field)
}

/// Discrete convolution scaled by the cell measure, so it approximates the
/// continuum convolution of the underlying densities. Requires equal cell
/// spacings; window centers and extents add. Cost is proportional to the
/// product of the nonzero-cell counts, which is what the sparse dyadic-block
/// harness and the rasterized-rectangle comparisons need.
pub fn convolve_grid(f: &SpaceTimeField, g: &SpaceTimeField) -> Result<SpaceTimeField> {
    let (gf, gg) = (&f.grid, &g.grid);
    if gf.delta_tau != gg.delta_tau || gf.xi.delta_xi != gg.xi.delta_xi {
        return Err(Error::GridMismatch(format!(
            "cell spacings differ: ({}, {}) vs ({}, {})",
            gf.delta_tau, gf.xi.delta_xi, gg.delta_tau, gg.xi.delta_xi
        )));
    }
    let xi_out = crate::grid::FrequencyGrid::new(
        gf.xi.delta_xi,
        gf.xi.half_extent + gg.xi.half_extent,
    )?;
    let grid_out = SpaceTimeGrid::centered(
        xi_out,
        gf.delta_tau,
        gf.tau_half_extent + gg.tau_half_extent,
    )?
    .with_center(gf.tau_center + gg.tau_center, gf.xi_center + gg.xi_center);
    let mut out = SpaceTimeField::zeros(grid_out);

    let nonzero = |field: &SpaceTimeField| -> Vec<(isize, isize, C64)> {
        let ht = field.grid.tau_half_extent as isize;
        let hx = field.grid.xi.half_extent as isize;
        field
            .values
            .indexed_iter()
            .filter(|(_, v)| **v != C64::new(0.0, 0.0))
            .map(|((i, j), &v)| (i as isize - ht, j as isize - hx, v))
            .collect()
    };
    let fs = nonzero(f);
    let gs = nonzero(g);
    let ht_out = out.grid.tau_half_extent as isize;
    let hx_out = out.grid.xi.half_extent as isize;
    let measure = gf.cell_measure();
    for &(it, ix, vf) in &fs {
        for &(jt, jx, vg) in &gs {
            let i = (it + jt + ht_out) as usize;
            let j = (ix + jx + hx_out) as usize;
            out.values[(i, j)] += vf * vg * measure;
        }
    }
    Ok(out)
}
