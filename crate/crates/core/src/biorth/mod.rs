//! Biorthogonal families to decaying exponentials and minimal-norm controls.
//!
//! The minimal biorthogonal element to `e^{-x_n t}` lies in the span of the
//! family and has `‖ψ_n‖² = (G⁻¹)_nn`. Gram matrices of exponentials are
//! badly conditioned, so every solve checks `G⁻¹G = I` and the precision
//! ladder in [`precision`] retries at wider mantissas.

mod control;
mod gram;
mod linalg;
pub mod precision;

pub use control::{
    closed_loop, contrast, control_sweep, min_norm_control, min_norm_control_at, quadrature_gram, sweep_verdict,
    ClosedLoop, ContrastVerdict, ControlResult, ControlSetup, ControlSweep, SweepVerdict, BLOWUP_SLOPE,
    BOUNDED_RATIO,
};
pub use gram::{
    cauchy_diag, cauchy_diag_at, cauchy_log_diag, gram, growth_fit, growth_fit_report, min_norm_biorth, min_norm_biorth_with,
    BiorthReport, CauchyDiag, ExponentFamily, GramSystem, GrowthFit, COINCIDENCE_GAP,
    MIN_FIT_POINTS, RESIDUAL_TOL,
};
pub use linalg::{cholesky, mat_mul, mat_vec, Cholesky, PivotFailure};
pub use precision::{escalate, run_at, Attempt, Escalated, PrecisionTask, DEFAULT_BITS, SUPPORTED_BITS};
