//! Concrete spectral-density models.

pub mod breit_wigner;
pub mod bugg;
pub mod phase_shift;

pub use breit_wigner::{make_breit_wigner, BreitWigner, BreitWignerParams};
pub use bugg::{make_bugg_sigma, BuggParams, BuggSigma};
pub use phase_shift::{
    beth_uhlenbeck_dos, dwell_time_dos, fit_spectral_density, Differentiation, FitReport,
    PhaseShiftRow, PhaseShiftTable, SampledDensity,
};
