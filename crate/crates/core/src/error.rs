use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("energy {energy} GeV is below threshold {threshold} GeV")]
    Domain { energy: f64, threshold: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("continuation at z = {z} lands within {distance:e} GeV of pole {pole}")]
    Continuation {
        z: Complex64,
        pole: Complex64,
        distance: f64,
    },

    #[error("branch evaluation of (z - E_th)^gamma on the cut at z = {0}")]
    Branch(Complex64),

    #[error("pole search ambiguous: {} in-window candidate(s) {:?}", in_window.len(), in_window)]
    PoleAmbiguity {
        in_window: Vec<Complex64>,
        all_roots: Vec<Complex64>,
    },

    #[error("pole search failed: {0}")]
    PoleSearch(String),

    #[error("quadrature did not reach tolerance {requested:e} (achieved error estimate {achieved:e} with {intervals} intervals)")]
    Quadrature {
        requested: f64,
        achieved: f64,
        intervals: usize,
    },

    #[error("direct Fourier oracle out of range: {0}")]
    OracleRange(String),

    #[error("time grid cannot resolve the requested quantity: {0}")]
    Resolution(String),

    #[error("fit window starts too early: {0}")]
    WindowTooEarly(String),

    #[error("data error at row {row}: {msg}")]
    Data { row: usize, msg: String },

    #[error("l = {l}: dδ/dE diverges like (E - E_th)^(-1/2) at threshold; use the dwell-time density instead")]
    ThresholdSingularity { l: u32 },

    #[error("{path}:{line}:{column}: {msg}")]
    Config {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}
