//! Tolerance constants shared across the crate.

/// Algebraic identities (sum-preservation, sign coupling, monotone distances).
pub const EQ_TOL: f64 = 1e-12;

/// Relative tolerance of the diagonal reconstruction `diag(r) W0 diag(c) = W`.
pub const RECON_TOL: f64 = 1e-9;

/// Residual above which the accumulator is reported as inconsistent.
pub const RECON_FAIL_TOL: f64 = 1e-6;

/// Default convergence threshold on `d_B` for scaling runs.
pub const CONV_TOL: f64 = 1e-10;

/// Minimum `d_B` decrease over a `10 N` step window before a run counts as stalled.
pub const STALL_DECREASE: f64 = 1e-16;

/// Line-sum tolerance for the Birkhoff decomposition hypothesis.
pub const BIRKHOFF_HYP_TOL: f64 = 1e-10;
