//! Spectral toolkit for the fifth-order KdV equation
//!
//! ```text
//! u_t - u_xxxxx + c1 (u^3)_x + c2 ((u_x)^2)_x + c3 (u u_xx)_x = 0,   c3 != 0
//! ```
//!
//! The crate provides the numerical machinery needed to probe well-posedness
//! questions for this equation at low regularity:
//!
//! * [`grid`], [`transform`] — frequency grids, forward/inverse transforms with
//!   continuum normalization, the free propagator `exp(t d^5/dx^5)`, and the
//!   low-frequency smoothing projector.
//! * [`norms`] — weighted Sobolev norms `H^{s,a}` and the dispersive
//!   space-time norms built from dyadic decompositions in `<xi>` and
//!   `<tau - xi^5>`, including the low-frequency norm with its four-branch
//!   exponent dispatch and the combined two-part norm.
//! * [`duhamel`] — resonance polynomials, the oscillatory time factor, and the
//!   quadratic/cubic coefficients of the small-data expansion of the flow map,
//!   computed along two independent routes (closed-form time integral vs.
//!   quadrature of the iterated integral form).
//! * [`counterexamples`] — banded initial-data families whose second or third
//!   expansion coefficient grows with the band frequency, plus the sheared
//!   rectangle configurations used by the convolution estimates.
//! * [`convolve`], [`estimates`], [`multiplier`] — exact and rasterized
//!   convolution engines for same-shear rectangles, ratio sweeps for the
//!   trilinear estimate, measure bounds for resonance level sets, and best
//!   constants for convolution multipliers on lattice hyperplanes.
//! * [`solver`] — a dealiased integrating-factor RK4 time stepper with
//!   conservation monitors, an a-priori bound checker, and the scaling
//!   transform.
//! * [`experiments`] — the experiment drivers behind the command-line runner;
//!   each returns plain rows ready for CSV serialization.

pub mod bands;
pub mod convolve;
pub mod counterexamples;
pub mod duhamel;
pub mod error;
pub mod estimates;
pub mod experiments;
pub mod grid;
pub mod multiplier;
pub mod norms;
pub mod quad;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
pub use grid::{FrequencyGrid, PeriodicGrid, SpaceTimeField, SpaceTimeGrid, SpectralField};
pub use norms::NormValue;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
