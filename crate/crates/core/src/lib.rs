//! Row/column matrix normalization under arbitrary schedules, support and
//! K-diagonal analysis, decentralized random walks, and an entropic optimal
//! transport underflow study.

pub mod drw;
pub mod engine;
pub mod error;
pub mod io;
pub mod matrix;
pub mod ot;
pub mod support;
pub mod tol;

pub use engine::{
    predict_asymptotics, run_scaling, run_scaling_with, verify_limit_class, LimitReport, RunConfig,
    RunResult, ScalingState, Schedule, StopReason,
};
pub use error::{Error, Result};
pub use matrix::{
    apply_step, distances, marginal_deviation, normalize_step, transpose_duality_check, Axis,
    DiagonalAccumulator, Distances, NonNegMatrix, ScheduleStep, SquareMatrix,
};
pub use support::{KDiagonal, KSpec};
