//! Survival amplitudes and survival probabilities of unstable states.
//!
//! The amplitude `A(t) = ∫ρ(E) e^{-iEt} dE` of a spectral density `ρ` is
//! computed as a pole (exponential) term plus an integral along the rotated
//! axis `E_th - ix` (power-law term); a direct oscillatory quadrature of the
//! Fourier integral serves as an independent check.
//!
//! ```no_run
//! use decaylab::models::{make_breit_wigner, BreitWignerParams};
//! use decaylab::spectral::{Energy, TimePoint};
//! use decaylab::survival::{survival_amplitude, QuadratureSpec};
//!
//! let p = BreitWignerParams::new(0.542, 0.498, 0.27914, 1.1);
//! let rho = make_breit_wigner(p)?.normalize(Energy(20.0))?;
//! let tau = rho.principal_pole()?.tau;
//! let (a_exp, a_tail) = survival_amplitude(&rho, TimePoint::from_lifetimes(5.0, tau)?, &QuadratureSpec::default())?;
//! println!("P(5τ) = {}", (a_exp + a_tail).norm_sqr());
//! # Ok::<(), decaylab::Error>(())
//! ```

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod models;
pub mod poles;
pub mod quadrature;
pub mod spectral;
pub mod spline;
pub mod survival;

pub use error::{Error, Result};
pub use spectral::{
    ComplexEnergy, Energy, ResonancePole, SpectralDensity, SpectralModel, TimePoint, HBAR_GEV_S,
};
