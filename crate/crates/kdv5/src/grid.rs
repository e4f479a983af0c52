//! Frequency and space-time grids and the fields living on them.
//!
//! All spectra use the continuum normalization: a grid value approximates the
//! transform `u_hat(xi) = integral of u(x) exp(-i xi x) dx`, and sums over
//! nodes are weighted by the cell measure (`delta_xi`, or `delta_tau *
//! delta_xi` in space-time) so that grid norms approximate integrals over the
//! real line.

use crate::error::{Error, Result};
use crate::C64;
use ndarray::Array2;

/// Uniform symmetric frequency grid: nodes `m * delta_xi` for `|m| <= half_extent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub delta_xi: f64,
    pub half_extent: usize,
}

impl FrequencyGrid {
    pub fn new(delta_xi: f64, half_extent: usize) -> Result<Self> {
        if !(delta_xi > 0.0) || !delta_xi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta_xi must be positive and finite, got {delta_xi}"
            )));
        }
        Ok(Self { delta_xi, half_extent })
    }

    /// Number of nodes, `2 * half_extent + 1`.
    pub fn len(&self) -> usize {
        2 * self.half_extent + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency of node `idx` (`idx = 0` is the most negative node).
    pub fn xi(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_extent as f64) * self.delta_xi
    }

    /// Index of the `xi = 0` node.
    pub fn origin_index(&self) -> usize {
        self.half_extent
    }

    /// Largest represented frequency magnitude.
    pub fn xi_max(&self) -> f64 {
        self.half_extent as f64 * self.delta_xi
    }

    pub fn iter_xi(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.xi(i))
    }
}

/// Complex spectrum sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: FrequencyGrid,
    pub values: Vec<C64>,
}

impl SpectralField {
    pub fn new(grid: FrequencyGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "grid has {} nodes but {} values were supplied",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        Self { values: vec![C64::new(0.0, 0.0); grid.len()], grid }
    }

    /// Sample a closed-form spectrum on the grid.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.xi(i))).collect();
        Self { grid, values }
    }

    /// Value at the `xi = 0` node.
    pub fn origin_value(&self) -> C64 {
        self.values[self.grid.origin_index()]
    }

    /// Largest Hermitian-symmetry defect `|u_hat(-xi) - conj(u_hat(xi))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.values.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mirrored = self.values[n - 1 - i].conj();
            worst = worst.max((self.values[i] - mirrored).norm());
        }
        worst
    }

    /// Plain (unweighted) `L^2` norm with cell measure `delta_xi`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.delta_xi).sqrt()
    }

    /// Pointwise multiply by a function of `xi`, in place.
    pub fn scale_by(&mut self, f: impl Fn(f64) -> C64) {
        for (i, v) in self.values.iter_mut().enumerate() {
            *v *= f(self.grid.xi(i));
        }
    }
}

/// Periodic collocation grid on `[-length/2, length/2)` with `n` points.
///
/// `n` must be an even power of two so that transforms map cleanly onto a
/// symmetric [`FrequencyGrid`] with `delta_xi = 2 pi / length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub length: f64,
    pub n: usize,
}

impl PeriodicGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidResolution(format!(
                "n must be a power of two >= 4, got {n}"
            )));
        }
        Ok(Self { length, n })
    }

    /// Collocation point `x_j = -L/2 + j L / n`.
    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + (j as f64) * self.length / (self.n as f64)
    }

    pub fn delta_x(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn delta_xi(&self) -> f64 {
        std::f64::consts::TAU / self.length
    }

    /// Frequency grid produced by [`crate::transform::forward_transform`]:
    /// `half_extent = n/2`, with the Nyquist coefficient split across the
    /// `+/- n/2` nodes.
    pub fn frequency_grid(&self) -> FrequencyGrid {
        FrequencyGrid { delta_xi: self.delta_xi(), half_extent: self.n / 2 }
    }

    /// Sample a function at the collocation points.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|j| f(self.x(j))).collect()
    }
}

/// Rectangular window in the `(tau, xi)` plane with uniform spacing on both
/// axes. Axes are symmetric about the window center; the default center is
/// the origin, and rasterized rectangle windows shift it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeGrid {
    pub xi: FrequencyGrid,
    pub delta_tau: f64,
    pub tau_half_extent: usize,
    /// Window center on the `tau` axis (0 for norm harness grids).
    pub tau_center: f64,
    /// Window center on the `xi` axis (0 for norm harness grids).
    pub xi_center: f64,
}

impl SpaceTimeGrid {
    pub fn centered(xi: FrequencyGrid, delta_tau: f64, tau_half_extent: usize) -> Result<Self> {
        if !(delta_tau > 0.0) || !delta_tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta_tau must be positive and finite, got {delta_tau}"
            )));
        }
        Ok(Self { xi, delta_tau, tau_half_extent, tau_center: 0.0, xi_center: 0.0 })
    }

    pub fn with_center(mut self, tau_center: f64, xi_center: f64) -> Self {
        self.tau_center = tau_center;
        self.xi_center = xi_center;
        self
    }

    pub fn n_tau(&self) -> usize {
        2 * self.tau_half_extent + 1
    }

    pub fn n_xi(&self) -> usize {
        self.xi.len()
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.tau_center + (i as f64 - self.tau_half_extent as f64) * self.delta_tau
    }

    pub fn xi_at(&self, j: usize) -> f64 {
        self.xi_center + self.xi.xi(j)
    }

    /// Cell measure `delta_tau * delta_xi`.
    pub fn cell_measure(&self) -> f64 {
        self.delta_tau * self.xi.delta_xi
    }
}

/// Complex field on a [`SpaceTimeGrid`]; row index runs over `tau`, column
/// index over `xi`.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: SpaceTimeGrid,
    pub values: Array2<C64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        Self { values: Array2::zeros((grid.n_tau(), grid.n_xi())), grid }
    }

    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Array2::zeros((grid.n_tau(), grid.n_xi()));
        for i in 0..grid.n_tau() {
            for j in 0..grid.n_xi() {
                values[(i, j)] = f(grid.tau(i), grid.xi_at(j));
            }
        }
        Self { grid, values }
    }

    /// Iterate over `(tau, xi, value)` of nonzero cells.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (f64, f64, C64)> + '_ {
        self.values.indexed_iter().filter_map(move |((i, j), &v)| {
            if v != C64::new(0.0, 0.0) {
                Some((self.grid.tau(i), self.grid.xi_at(j), v))
            } else {
                None
            }
        })
    }

    /// Plain `L^2` norm with the cell measure.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.cell_measure()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_grid_is_symmetric() {
        let g = FrequencyGrid::new(0.5, 4).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.xi(0), -2.0);
        assert_eq!(g.xi(8), 2.0);
        assert_eq!(g.xi(g.origin_index()), 0.0);
    }

    #[test]
    fn periodic_grid_rejects_bad_sizes() {
        assert!(PeriodicGrid::new(1.0, 48).is_err());
        assert!(PeriodicGrid::new(1.0, 2).is_err());
        assert!(PeriodicGrid::new(-1.0, 64).is_err());
        assert!(PeriodicGrid::new(1.0, 64).is_ok());
    }

    #[test]
    fn periodic_grid_points_span_centered_box() {
        let g = PeriodicGrid::new(8.0, 8).unwrap();
        assert_eq!(g.x(0), -4.0);
        assert_eq!(g.x(4), 0.0);
        assert!((g.delta_xi() - std::f64::consts::TAU / 8.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_defect_detects_asymmetry() {
        let g = FrequencyGrid::new(1.0, 2).unwrap();
        let f = SpectralField::from_fn(g, |xi| C64::new(xi * xi, xi));
        // conj symmetry: real part even, imaginary part odd -> defect 0.
        assert!(f.hermitian_defect() < 1e-15);
        let f = SpectralField::from_fn(g, |xi| C64::new(xi, 0.0));
        assert!(f.hermitian_defect() > 1.0);
    }

    #[test]
    fn spacetime_window_offsets_apply() {
        let xi = FrequencyGrid::new(0.25, 2).unwrap();
        let g = SpaceTimeGrid::centered(xi, 0.5, 3).unwrap().with_center(10.0, -1.0);
        assert_eq!(g.tau(3), 10.0);
        assert_eq!(g.xi_at(2), -1.0);
        assert_eq!(g.n_tau(), 7);
    }
}
