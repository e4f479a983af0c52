//! Transforms between collocation samples and spectra, the free propagator,
//! and the low-frequency smoothing projector.
//!
//! Conventions: `u_hat(xi) = integral u(x) exp(-i xi x) dx`, discretized as
//! `(L/n) * sum_j u(x_j) exp(-i xi x_j)`; the inverse carries `1/(2 pi)`
//! against the frequency cell measure, i.e. `u(x) = (1/L) * sum_m u_hat(xi_m)
//! exp(i xi_m x)`. The Nyquist coefficient is split evenly across the
//! `+/- n/2` nodes, which keeps the spectrum symmetric, round trips exact,
//! and real data Hermitian.

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PeriodicGrid, SpectralField};
use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Forward transform of complex samples on a periodic grid.
pub fn forward_transform(samples: &[C64], grid: &PeriodicGrid) -> Result<SpectralField> {
    if samples.len() != grid.n {
        return Err(Error::GridMismatch(format!(
            "expected {} samples, got {}",
            grid.n,
            samples.len()
        )));
    }
    let n = grid.n;
    let mut buf = samples.to_vec();
    plan(n, false).process(&mut buf);
    let scale = grid.length / n as f64;
    let fgrid = grid.frequency_grid();
    let half = n / 2;
    let mut out = SpectralField::zeros(fgrid);
    // DFT bin m represents xi_m for m < n/2 and xi_{m-n} for m > n/2; the
    // alternating sign accounts for the grid starting at x = -L/2.
    for m in 0..n {
        let signed = if m < half { m as isize } else { m as isize - n as isize };
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let value = buf[m] * sign * scale;
        if signed == -(half as isize) {
            // Nyquist: split across the +/- n/2 nodes.
            out.values[0] += value * 0.5;
            out.values[2 * half] += value * 0.5;
        } else {
            out.values[(signed + half as isize) as usize] = value;
        }
    }
    Ok(out)
}

/// Forward transform of real samples.
pub fn forward_transform_real(samples: &[f64], grid: &PeriodicGrid) -> Result<SpectralField> {
    let complex: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    forward_transform(&complex, grid)
}

/// Inverse transform back to collocation samples.
pub fn inverse_transform(field: &SpectralField, grid: &PeriodicGrid) -> Result<Vec<C64>> {
    let fgrid = grid.frequency_grid();
    if field.grid != fgrid {
        return Err(Error::GridMismatch(format!(
            "field grid {:?} does not match collocation grid {:?}",
            field.grid, fgrid
        )));
    }
    let n = grid.n;
    let half = n / 2;
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for m in 0..n {
        let signed = if m < half { m as isize } else { m as isize - n as isize };
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let value = if signed == -(half as isize) {
            // Recombine the split Nyquist pair.
            field.values[0] + field.values[2 * half]
        } else {
            field.values[(signed + half as isize) as usize]
        };
        buf[m] = value * sign;
    }
    plan(n, true).process(&mut buf);
    let scale = 1.0 / grid.length;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    Ok(buf)
}

/// Inverse transform that insists on (numerically) real output.
pub fn inverse_transform_real(field: &SpectralField, grid: &PeriodicGrid) -> Result<Vec<f64>> {
    let complex = inverse_transform(field, grid)?;
    let scale: f64 = complex.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let worst = complex.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if worst > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "inverse transform has imaginary residue {worst:.3e} (relative {:.3e})",
            worst / scale
        )));
    }
    Ok(complex.iter().map(|v| v.re).collect())
}

/// Semidiscrete transform evaluated at an arbitrary frequency (not
/// necessarily a grid node): `(L/n) * sum_j u(x_j) exp(-i xi x_j)`.
pub fn evaluate_transform_at(samples: &[C64], grid: &PeriodicGrid, xi: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (j, &u) in samples.iter().enumerate() {
        let x = grid.x(j);
        acc += u * C64::new(0.0, -xi * x).exp();
    }
    acc * (grid.length / grid.n as f64)
}

/// Multiply a spectrum by the free propagator `exp(i t xi^5)` (the symbol of
/// `exp(t d^5/dx^5)`); an exact spectral isometry.
pub fn apply_propagator(field: &SpectralField, t: f64) -> SpectralField {
    let mut out = field.clone();
    out.scale_by(|xi| C64::new(0.0, t * xi.powi(5)).exp());
    out
}

/// Low-frequency smoothing projector: multiply by `|xi|^a` on `|xi| <= 1`,
/// zero elsewhere.
///
/// At the origin node with `a < 0` the pointwise symbol is singular; for
/// `a > -1/2` the node takes the root-mean-square of `|xi|^{2a}` over its
/// frequency cell (the value that makes discrete `L^2` norms match the cell
/// integral), while for `a <= -1/2` a nonzero origin amplitude is mapped to
/// infinity so that downstream norms report the divergence.
pub fn apply_projector_p(field: &SpectralField, a: f64) -> SpectralField {
    let delta = field.grid.delta_xi;
    let origin_multiplier = if a == 0.0 {
        1.0
    } else if a > -0.5 {
        // RMS cell value: sqrt( (1/d) * int_{-d/2}^{d/2} |xi|^{2a} dxi )
        (0.5 * delta).powf(a) / (2.0 * a + 1.0).sqrt()
    } else {
        f64::INFINITY
    };
    let mut out = field.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        let xi = out.grid.xi(i);
        if xi == 0.0 {
            if *v == C64::new(0.0, 0.0) {
                // No mass at the origin: nothing to amplify.
                continue;
            }
            *v *= origin_multiplier;
        } else if xi.abs() <= 1.0 {
            *v *= xi.abs().powf(a);
        } else {
            *v = C64::new(0.0, 0.0);
        }
    }
    out
}

/// Largest magnitude over grid nodes of the combined symbol of the projector
/// composed with `d/dx`, i.e. `|xi|^{a+1}` on `0 < |xi| <= 1` (the derivative
/// annihilates the origin node). Bounded by 1 whenever `a >= -1`.
pub fn projector_dx_multiplier_bound(grid: &FrequencyGrid, a: f64) -> f64 {
    let mut worst = 0.0f64;
    for xi in grid.iter_xi() {
        if xi != 0.0 && xi.abs() <= 1.0 {
            worst = worst.max(xi.abs().powf(a + 1.0));
        }
    }
    worst
}

/// Smooth time cutoff: 1 on `|t| <= 1`, 0 on `|t| >= 2`, and a raised-cosine
/// ramp `cos^2(pi (|t| - 1) / 2)` in between. Even, C^1, non-increasing in
/// `|t|`.
pub fn smooth_cutoff(t: f64) -> f64 {
    let r = t.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let c = (std::f64::consts::FRAC_PI_2 * (r - 1.0)).cos();
        c * c
    }
}
