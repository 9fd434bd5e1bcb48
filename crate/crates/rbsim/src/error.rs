//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition. The message names
    /// the offending quantity.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Noise calibration could not reach the requested coherence times.
    /// Carries the best parameters found and the times they achieve.
    #[error(
        "calibration failed: {reason} (best sigma={best_sigma:.6e} rad/s, \
         tau_c={best_tau_c:.6e} s, achieved fid={achieved_fid:.6e} s, hahn={achieved_hahn:.6e} s)"
    )]
    CalibrationFailure {
        reason: String,
        best_sigma: f64,
        best_tau_c: f64,
        achieved_fid: f64,
        achieved_hahn: f64,
    },

    /// A nonlinear fit did not converge or produced out-of-range parameters.
    #[error("fit failed: {reason} (model {model}, {iterations} iterations, residual {residual:.6e})")]
    FitFailure {
        model: &'static str,
        reason: String,
        iterations: usize,
        residual: f64,
    },

    /// A noise trajectory does not cover the schedule it is applied to.
    #[error("noise trajectory too short: needs {needed} samples, has {got}")]
    TrajectoryTooShort { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
