//! Wavelet estimation of the memory parameter for M(d) processes.
//!
//! The crate is organised as a pipeline: a B-spline wavelet family
//! ([`wavelet_basis`]) produces per-scale filters, [`dwt`] applies them to a
//! series, [`spectra`] evaluates the exact and limiting densities of the
//! resulting coefficients, [`estimator`] regresses log scale variances on
//! scale to estimate `d`, [`simulate`] draws exact Gaussian samples, and
//! [`harness`] runs Monte Carlo experiments against the theory.

pub mod dwt;
pub mod error;
pub mod estimator;
pub mod fft;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod simulate;
pub mod special;
pub mod spectra;
pub mod wavelet_basis;

pub use error::{Error, Result};
pub use wavelet_basis::{FilterBank, FrequencyDescriptor, ScaleFilter, ShannonDescriptor, WaveletFamily};
