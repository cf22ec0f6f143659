//! Characterization toolkit for surface-acoustic-wave resonators.
//!
//! The crate covers the full analysis chain used when comparing surface
//! treatments of lithium-niobate resonators:
//!
//! * [`resonance`]: complex S11 fits (single Lorentzian and a primary mode
//!   coupled to a dark mode) with quality-factor extraction.
//! * [`tls`]: the standard-tunneling-model frequency shift and loss
//!   formulas and the inverse fits for the `F·δ⁰` product.
//! * [`xps`]: charge referencing, Shirley background, pseudo-Voigt band
//!   deconvolution and atomic percentages.
//! * [`afm`]: line flattening, three-point leveling, roughness and
//!   terrace step heights.
//! * [`walkoff`]: beam-steering angle formula, smoothing and zero finding.
//!
//! [`spectra`] holds the shared domain types, text formats and synthetic
//! generators. [`lsq`] is the damped least-squares engine behind every
//! nonlinear fit, and [`par`] selects between rayon and sequential
//! execution for batch work.

pub mod afm;
pub mod constants;
pub mod error;
pub mod lsq;
pub mod par;
pub mod resonance;
pub mod spectra;
pub mod tls;
pub mod walkoff;
pub mod xps;

pub use error::{Error, Result};
pub use par::Execution;
