use serde::Serialize;

use super::{d_b_of, run_scaling_with, RunConfig, Schedule};
use crate::error::{Error, Result};
use crate::matrix::{NonNegMatrix, SquareMatrix};
use crate::support::{has_k_diagonal, k_positive_part, KSpec};

/// Step budget per run in [`schedule_independence_check`].
pub const INDEPENDENCE_BUDGET: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    /// `d_B(A) <= tol`.
    pub is_doubly_stochastic: bool,
    /// Positivity pattern of `A` (entries below `tol` read as zero) equals
    /// that of the K0-positive part of `W0`.
    pub pattern_matches_k_part: bool,
    /// Largest gap between cross-ratios of `A` and `W0` over 2x2 sub-patterns
    /// positive in both.
    pub cross_ratio_max_error: f64,
    /// Number of 2x2 sub-patterns compared.
    pub cross_ratio_count: usize,
    /// Whether `W0` has a positive K0-diagonal.
    pub predicted_convergent: bool,
    pub k_full: bool,
}

impl LimitReport {
    /// Pattern and cross-ratio checks pass, and `A` is doubly stochastic when
    /// K0 is full.
    pub fn passed(&self, cross_tol: f64) -> bool {
        self.pattern_matches_k_part
            && self.cross_ratio_max_error <= cross_tol
            && (!self.k_full || self.is_doubly_stochastic)
    }
}

/// Checks that `a` looks like the limit of a run from `w0` whose schedule
/// recurs over `k0`.
pub fn verify_limit_class(
    w0: &NonNegMatrix,
    k0: &KSpec,
    a: &SquareMatrix,
    tol: f64,
) -> Result<LimitReport> {
    let n = w0.n();
    if a.n() != n {
        return Err(Error::arg(format!(
            "limit has order {}, initial matrix has order {n}",
            a.n()
        )));
    }
    k0.validate(n)?;
    let part = k_positive_part(w0, k0)?;
    let pos_a = |i: usize, j: usize| a.get(i, j) > tol;
    let mut pattern = true;
    for i in 0..n {
        for j in 0..n {
            if pos_a(i, j) != part.is_positive(i, j) {
                pattern = false;
            }
        }
    }

    let both = |i: usize, j: usize| pos_a(i, j) && w0.is_positive(i, j);
    let mut err: f64 = 0.0;
    let mut count = 0;
    for i in 0..n {
        for i2 in i + 1..n {
            for j in 0..n {
                if !(both(i, j) && both(i2, j)) {
                    continue;
                }
                for j2 in j + 1..n {
                    if !(both(i, j2) && both(i2, j2)) {
                        continue;
                    }
                    let ra = a.get(i, j) * a.get(i2, j2) / (a.get(i, j2) * a.get(i2, j));
                    let rw = w0.get(i, j) * w0.get(i2, j2) / (w0.get(i, j2) * w0.get(i2, j));
                    err = err.max((ra - rw).abs());
                    count += 1;
                }
            }
        }
    }

    Ok(LimitReport {
        is_doubly_stochastic: d_b_of(a) <= tol,
        pattern_matches_k_part: pattern,
        cross_ratio_max_error: err,
        cross_ratio_count: count,
        predicted_convergent: has_k_diagonal(w0, k0)?,
        k_full: k0.is_full(n),
    })
}

/// Runs both schedules to `tol / 10` and reports whether the final matrices
/// agree entrywise within `tol`. A run that fails to converge within
/// [`INDEPENDENCE_BUDGET`] steps gives [`Error::Inconclusive`].
pub fn schedule_independence_check(
    w0: &NonNegMatrix,
    s1: &Schedule,
    s2: &Schedule,
    tol: f64,
) -> Result<bool> {
    schedule_independence_check_with_budget(w0, s1, s2, tol, INDEPENDENCE_BUDGET)
}

pub fn schedule_independence_check_with_budget(
    w0: &NonNegMatrix,
    s1: &Schedule,
    s2: &Schedule,
    tol: f64,
    budget: usize,
) -> Result<bool> {
    let n = w0.n();
    for s in [s1, s2] {
        if !s.recurrent_set().is_full(n) {
            return Err(Error::arg(format!(
                "{} schedule does not recur over every line",
                s.name()
            )));
        }
    }
    let cfg = RunConfig::new(budget, tol / 10.0).without_trace();
    let mut finals = Vec::with_capacity(2);
    for s in [s1, s2] {
        let r = run_scaling_with(w0, s, cfg)?;
        if !r.converged {
            return Err(Error::Inconclusive(format!(
                "{} schedule stopped ({:?}) at d_B = {:e} after {} steps",
                s.name(),
                r.stop_reason,
                r.final_d_b,
                r.steps_taken
            )));
        }
        finals.push(r.final_matrix);
    }
    Ok(finals[0].max_abs_diff(&finals[1]) <= tol)
}
