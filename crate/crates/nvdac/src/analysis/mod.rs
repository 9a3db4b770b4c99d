//! Curve fitting and physical-parameter extraction.
//!
//! Lorentzian dips for spectra, damped cosines for Rabi/FID traces, plain
//! exponentials for relaxation; coupling extraction from the resonance
//! formulas; weighted linear pressure trends; and the ODMR field inversion.
//! All fitters report curvature-based 1σ uncertainties validated by
//! Monte-Carlo coverage tests.

mod extract;
mod field_fit;
mod levmar;
mod models;

pub use extract::{
    contrast_from_fit, extract_qa, linear_trend, spectrum_contrast, ExtractionRecord, Measured,
    QaExtraction, TrendFit,
};
pub use field_fit::{canonical_orientation, fit_field_from_odmr, FieldFit};
pub use levmar::{levenberg_marquardt, numeric_jacobian, LevMarConfig, LevMarOutcome};
pub use models::{
    damped_cosine_model, exponential_model, fit_damped_cosine, fit_exponential, fit_lorentzian,
    lorentzian_model, FitResult,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("initialization failed: {0}")]
    Initialization(String),
    #[error("underdetermined: {count} resonance centers, need at least 4")]
    Underdetermined { count: usize },
    #[error("model mismatch: residual {residual:.3e} Hz exceeds {threshold:.3e} Hz")]
    ModelMismatch { residual: f64, threshold: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
