//! Numerical kernels for N-body quantum scattering at desk scale.
//!
//! The geometric, classical and formula layers (`coords`, `potentials`,
//! `manybody`, `scattering::orbit`, `scattering::phase`, `observe`) build
//! without the standard library. Everything that touches sampled
//! wavefunctions sits behind the default `std` feature because the FFT
//! backend needs it.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod coords;
pub mod error;
pub mod linalg;
pub mod manybody;
pub mod observe;
pub mod potentials;
pub mod quad;
pub mod scattering;
pub mod smooth;

#[cfg(feature = "std")]
pub mod dynamics;
#[cfg(feature = "std")]
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used for all sampled wavefunctions.
pub type C64 = num_complex::Complex<f64>;
