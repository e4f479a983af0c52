//! Piecewise-constant band spectra.
//!
//! The ill-posedness data families concentrate on frequency bands whose width
//! shrinks like a negative power of the band frequency; uniform grids cannot
//! resolve them at interesting sizes, so the families are stored exactly as
//! lists of `(lo, hi, amplitude)` bands. Conversion to a uniform grid happens
//! only when a consumer genuinely needs one.

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, SpectralField};
use crate::C64;

/// One frequency band `[lo, hi)` carrying a constant complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub amp: C64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Sorted list of pairwise disjoint bands.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpectrum {
    bands: Vec<Band>,
}

impl BandSpectrum {
    pub fn new(mut bands: Vec<Band>) -> Result<Self> {
        for b in &bands {
            if !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "band [{}, {}] is empty or not finite",
                    b.lo, b.hi
                )));
            }
        }
        bands.sort_by(|x, y| x.lo.partial_cmp(&y.lo).unwrap());
        for w in bands.windows(2) {
            if w[0].hi > w[1].lo {
                return Err(Error::InvalidInput(format!(
                    "bands [{}, {}] and [{}, {}] overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Spectrum value at a frequency (bands are half-open `[lo, hi)`).
    pub fn eval(&self, xi: f64) -> C64 {
        for b in &self.bands {
            if xi >= b.lo && xi < b.hi {
                return b.amp;
            }
        }
        C64::new(0.0, 0.0)
    }

    /// Plain `L^2` mass: `sum |amp|^2 * width`, square-rooted.
    pub fn l2_norm(&self) -> f64 {
        self.bands
            .iter()
            .map(|b| b.amp.norm_sqr() * b.width())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest deviation from conjugate symmetry `f(-xi) = conj f(xi)`,
    /// sampled at band quarter points and midpoints (robustly interior even
    /// for bands much narrower than one ulp of their location).
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for b in &self.bands {
            for frac in [0.25, 0.5, 0.75] {
                let xi = b.lo + frac * b.width();
                let defect = (self.eval(xi) - self.eval(-xi).conj()).norm();
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// True when some band contains (or touches) the origin with nonzero
    /// amplitude.
    pub fn has_origin_mass(&self) -> bool {
        self.bands
            .iter()
            .any(|b| b.lo <= 0.0 && b.hi >= 0.0 && b.amp != C64::new(0.0, 0.0))
    }

    /// Band endpoints, ascending (useful as convolution breakpoints).
    pub fn endpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.bands.len());
        for b in &self.bands {
            out.push(b.lo);
            out.push(b.hi);
        }
        out
    }

    /// Sample onto a uniform grid (node value = band value at the node).
    pub fn to_grid(&self, grid: FrequencyGrid) -> SpectralField {
        SpectralField::from_fn(grid, |xi| self.eval(xi))
    }

    /// Serialize as plain text: one `xi_lo xi_hi re_amp im_amp` line per band.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.bands {
            out.push_str(&format!("{:.17e} {:.17e} {:.17e} {:.17e}\n", b.lo, b.hi, b.amp.re, b.amp.im));
        }
        out
    }

    /// Parse the plain-text band format; `#`-prefixed lines and blank lines
    /// are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut bands = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected 4 fields (xi_lo xi_hi re_amp im_amp), got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("line {}: bad number {s:?}", lineno + 1))
                })
            };
            bands.push(Band {
                lo: parse(fields[0])?,
                hi: parse(fields[1])?,
                amp: C64::new(parse(fields[2])?, parse(fields[3])?),
            });
        }
        Self::new(bands)
    }
}
