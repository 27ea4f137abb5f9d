//! Constructive m-term trigonometric approximation on the d-dimensional torus.
//!
//! Functions are trigonometric polynomials stored by their Fourier
//! coefficients ([`spectrum`]). They are split into dyadic blocks
//! ([`decomposition`]), measured in Besov-type norms ([`norms`]) and
//! approximated by harmonic-budget schedules ([`approx`]). [`testfuncs`]
//! generates class representatives and [`ratelab`] holds the exponent table
//! and the rate experiments.

mod error;
mod serde_inf;

pub mod approx;
pub mod decomposition;
pub mod norms;
pub mod ratelab;
pub mod rng;
pub mod spectrum;
pub mod testfuncs;

pub use error::{Error, Result};
