//! Normalized sequences: drive single-line normalizations under a schedule,
//! record the `d_B` trace and step deviations, and check what the limit looks
//! like.

mod limit;
mod schedule;

pub use limit::{
    schedule_independence_check, schedule_independence_check_with_budget, verify_limit_class,
    LimitReport, INDEPENDENCE_BUDGET,
};
pub(crate) use schedule::seeded_rng;
pub use schedule::{Schedule, ScheduleKind, Scheduler, PRNG_NAME};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{
    l1_from_one, Axis, DiagonalAccumulator, Distances, NonNegMatrix, ScheduleStep,
};
use crate::support::{has_k_diagonal, KSpec};
use crate::tol::{EQ_TOL, STALL_DECREASE};

/// Evolving matrix with tracked line sums and its diagonal accumulator.
///
/// Line sums are updated incrementally and recomputed from scratch every `N`
/// steps, so a step costs `O(N)` amortized.
#[derive(Debug, Clone)]
pub struct ScalingState {
    w0: NonNegMatrix,
    w: NonNegMatrix,
    acc: DiagonalAccumulator,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    since_refresh: usize,
}

impl ScalingState {
    pub fn new(w0: NonNegMatrix) -> Self {
        let n = w0.n();
        let row_sums = w0.row_sums();
        let col_sums = w0.col_sums();
        ScalingState {
            w: w0.clone(),
            w0,
            acc: DiagonalAccumulator::identity(n),
            row_sums,
            col_sums,
            since_refresh: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    pub fn matrix(&self) -> &NonNegMatrix {
        &self.w
    }

    pub fn initial(&self) -> &NonNegMatrix {
        &self.w0
    }

    pub fn accumulator(&self) -> &DiagonalAccumulator {
        &self.acc
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn deviation(&self, step: ScheduleStep) -> f64 {
        match step.axis {
            Axis::Row => self.row_sums[step.index] - 1.0,
            Axis::Col => self.col_sums[step.index] - 1.0,
        }
    }

    pub fn distances(&self) -> Distances {
        Distances::from_sums(&self.row_sums, &self.col_sums)
    }

    /// Sum of the absolute deviations over the lines in `k`.
    pub fn k_deviation(&self, k: &KSpec) -> f64 {
        k.steps().into_iter().map(|s| self.deviation(s).abs()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.row_sums.iter().sum()
    }

    /// Normalizes one line and returns its deviation before the step.
    pub fn apply(&mut self, step: ScheduleStep) -> Result<f64> {
        let n = self.n();
        if step.index >= n {
            return Err(Error::arg(format!(
                "step {step} out of range for order {n}"
            )));
        }
        let l = step.index;
        let m = self.w.raw_mut();
        let s = m.line_sum(step.axis, l);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numeric(format!(
                "{} {} sums to {s}; an entry underflowed and the line became null",
                step.axis,
                l + 1
            )));
        }
        match step.axis {
            Axis::Row => {
                for j in 0..n {
                    let old = m.get(l, j);
                    let new = old / s;
                    m.set(l, j, new);
                    self.col_sums[j] += new - old;
                }
                self.row_sums[l] = m.row_sum(l);
            }
            Axis::Col => {
                for i in 0..n {
                    let old = m.get(i, l);
                    let new = old / s;
                    m.set(i, l, new);
                    self.row_sums[i] += new - old;
                }
                self.col_sums[l] = m.col_sum(l);
            }
        }
        self.acc.record(step, s);
        self.since_refresh += 1;
        if self.since_refresh >= n {
            self.refresh();
        }
        Ok(s - 1.0)
    }

    /// Recomputes every line sum exactly.
    pub fn refresh(&mut self) {
        self.row_sums = self.w.row_sums();
        self.col_sums = self.w.col_sums();
        self.since_refresh = 0;
    }

    pub fn reconstruction_residual(&self) -> f64 {
        self.acc.residual(&self.w0, &self.w)
    }

    pub fn into_parts(self) -> (NonNegMatrix, NonNegMatrix, DiagonalAccumulator) {
        (self.w0, self.w, self.acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `d_B <= tol`.
    Tolerance,
    MaxSteps,
    /// `d_B` fell by less than 1e-16 over `10 N` consecutive steps.
    Stalled,
    /// A finite trace schedule ran out of steps.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub max_steps: usize,
    pub tol: f64,
    /// Keep the per-step trace; otherwise only endpoints are stored.
    pub record_trace: bool,
}

impl RunConfig {
    pub fn new(max_steps: usize, tol: f64) -> Self {
        RunConfig {
            max_steps,
            tol,
            record_trace: true,
        }
    }

    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_matrix: NonNegMatrix,
    pub accumulator: DiagonalAccumulator,
    pub steps_taken: usize,
    /// Steps applied, in order (empty when the trace is not recorded).
    pub steps: Vec<ScheduleStep>,
    /// `d_B` before the first step and after every step.
    pub d_b_trace: Vec<f64>,
    /// Deviation of the targeted line just before each step.
    pub step_deviations: Vec<f64>,
    /// `ln Π 1/(1 + d_t)`.
    pub log_product_bound: f64,
    /// `Σ d_t`.
    pub deviation_sum: f64,
    pub initial_d_b: f64,
    pub final_d_b: f64,
    /// Smallest positive entry of `W0`.
    pub min_positive_entry0: f64,
    /// `max(max entry of W0, 1)`.
    pub max_entry0_or_one: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl RunResult {
    /// `Π 1/(1 + d_t)`, the product of all step factors.
    pub fn product_bound(&self) -> f64 {
        self.log_product_bound.exp()
    }

    /// Lower bound on every entry of `W0` that lies on a positive diagonal,
    /// valid along the whole run: `w_min (w_min / w_max)^(N-1) exp(-2 d_B(W0))`.
    pub fn entry_floor(&self) -> f64 {
        let n = self.final_matrix.n() as f64;
        let (lo, hi) = (self.min_positive_entry0, self.max_entry0_or_one);
        lo * (lo / hi).powf(n - 1.0) * (-2.0 * self.initial_d_b).exp()
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            n: self.final_matrix.n(),
            steps_taken: self.steps_taken,
            converged: self.converged,
            stop_reason: self.stop_reason,
            initial_d_b: self.initial_d_b,
            final_d_b: self.final_d_b,
            deviation_sum: self.deviation_sum,
            product_bound: self.product_bound(),
            log_product_bound: self.log_product_bound,
            product_floor: (-2.0 * self.initial_d_b).exp(),
            min_positive_entry0: self.min_positive_entry0,
            max_entry0_or_one: self.max_entry0_or_one,
            entry_floor: self.entry_floor(),
            row_factors: self.accumulator.row_factors(),
            col_factors: self.accumulator.col_factors(),
            final_matrix: self.final_matrix.rows().map(|r| r.to_vec()).collect(),
        }
    }

    /// One record per applied step (requires a recorded trace).
    pub fn trace_records(&self) -> impl Iterator<Item = TraceRecord> + '_ {
        self.steps.iter().enumerate().map(|(t, s)| TraceRecord {
            t: t + 1,
            axis: s.axis,
            index: s.index + 1,
            d_t: self.step_deviations[t],
            d_b: self.d_b_trace[t + 1],
        })
    }
}

/// Serializable summary of a [`RunResult`].
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub n: usize,
    pub steps_taken: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub initial_d_b: f64,
    pub final_d_b: f64,
    pub deviation_sum: f64,
    pub product_bound: f64,
    pub log_product_bound: f64,
    pub product_floor: f64,
    pub min_positive_entry0: f64,
    pub max_entry0_or_one: f64,
    pub entry_floor: f64,
    pub row_factors: Vec<f64>,
    pub col_factors: Vec<f64>,
    pub final_matrix: Vec<Vec<f64>>,
}

/// One line of the JSON-lines run trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub axis: Axis,
    pub index: usize,
    pub d_t: f64,
    #[serde(rename = "d_B")]
    pub d_b: f64,
}

/// Runs `schedule` from `w0` until `d_B <= tol`, a stall, or `max_steps`,
/// recording the full trace.
pub fn run_scaling(
    w0: &NonNegMatrix,
    schedule: &Schedule,
    max_steps: usize,
    tol: f64,
) -> Result<RunResult> {
    run_scaling_with(w0, schedule, RunConfig::new(max_steps, tol))
}

pub fn run_scaling_with(
    w0: &NonNegMatrix,
    schedule: &Schedule,
    cfg: RunConfig,
) -> Result<RunResult> {
    if cfg.max_steps == 0 {
        return Err(Error::arg("max_steps must be at least 1"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::arg("tol must be positive"));
    }
    let n = w0.n();
    schedule.validate(n)?;

    let mut state = ScalingState::new(w0.clone());
    let mut sched = schedule.start();
    let initial_d_b = state.distances().d_b;
    let mut d_b = initial_d_b;

    let mut steps = Vec::new();
    let mut d_b_trace = vec![initial_d_b];
    let mut step_deviations = Vec::new();
    let mut log_product = 0.0;
    let mut deviation_sum = 0.0;
    let mut taken = 0;

    let window = 10 * n;
    let mut window_start_d_b = d_b;
    let mut since_window = 0;

    let stop_reason = loop {
        if d_b <= cfg.tol {
            break StopReason::Tolerance;
        }
        if taken >= cfg.max_steps {
            break StopReason::MaxSteps;
        }
        let Some(step) = sched.next_step(&state) else {
            break StopReason::Exhausted;
        };
        let slack = EQ_TOL * state.total_mass().max(1.0);
        let d_t = state.apply(step)?;
        taken += 1;
        let next = state.distances().d_b;
        if next > d_b + slack {
            return Err(Error::InvariantViolation(format!(
                "d_B rose from {d_b:e} to {next:e} at step {taken} {step}"
            )));
        }
        d_b = next;
        log_product -= d_t.ln_1p();
        deviation_sum += d_t;
        if cfg.record_trace {
            steps.push(step);
            step_deviations.push(d_t);
            d_b_trace.push(d_b);
        }

        since_window += 1;
        if since_window >= window {
            if window_start_d_b - d_b < STALL_DECREASE && d_b > cfg.tol {
                break StopReason::Stalled;
            }
            window_start_d_b = d_b;
            since_window = 0;
        }
    };

    state.refresh();
    let final_d_b = state.distances().d_b;
    if !cfg.record_trace {
        d_b_trace.push(final_d_b);
    }
    let min_positive_entry0 = w0.min_positive().unwrap_or(0.0);
    let max_entry0_or_one = w0.max_entry().max(1.0);
    let (_, final_matrix, accumulator) = state.into_parts();
    Ok(RunResult {
        final_matrix,
        accumulator,
        steps_taken: taken,
        steps,
        d_b_trace,
        step_deviations,
        log_product_bound: log_product,
        deviation_sum,
        initial_d_b,
        final_d_b,
        min_positive_entry0,
        max_entry0_or_one,
        converged: stop_reason == StopReason::Tolerance,
        stop_reason,
    })
}

/// Whether every deviation indexed by `k0` tends to zero along schedules that
/// eventually visit exactly `k0` infinitely often: true iff `W0` has a
/// positive K0-diagonal.
pub fn predict_asymptotics(w0: &NonNegMatrix, k0: &KSpec) -> Result<bool> {
    has_k_diagonal(w0, k0)
}

/// `d_B` straight from a matrix, without a running state.
pub fn d_b_of(w: &crate::matrix::SquareMatrix) -> f64 {
    l1_from_one(&w.row_sums()) + l1_from_one(&w.col_sums())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> NonNegMatrix {
        NonNegMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn ones_converge_in_one_row_pass() {
        let r = run_scaling(
            &m(&[&[1.0, 1.0], &[1.0, 1.0]]),
            &Schedule::cyclic(2),
            100,
            1e-10,
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.steps_taken <= 4);
        assert!(r.final_matrix.max_abs_diff(&m(&[&[0.5, 0.5], &[0.5, 0.5]])) == 0.0);
    }

    #[test]
    fn two_by_two_limit() {
        // D1 [[1,2],[2,1]] D2 doubly stochastic: by symmetry x + 2y scaling
        // gives [[1/3, 2/3], [2/3, 1/3]]
        let r = run_scaling(
            &m(&[&[1.0, 2.0], &[2.0, 1.0]]),
            &Schedule::cyclic(2),
            10_000,
            1e-10,
        )
        .unwrap();
        assert!(r.converged);
        let expect = m(&[&[1.0 / 3.0, 2.0 / 3.0], &[2.0 / 3.0, 1.0 / 3.0]]);
        assert!(r.final_matrix.max_abs_diff(&expect) < 1e-8);
        assert!(
            r.accumulator
                .residual(&m(&[&[1.0, 2.0], &[2.0, 1.0]]), &r.final_matrix)
                < 1e-9
        );
    }

    #[test]
    fn star_does_not_converge() {
        let star = m(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let r = run_scaling(&star, &Schedule::cyclic(3), 100_000, 1e-10).unwrap();
        assert!(!r.converged);
        let floor = r.d_b_trace.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(floor > 0.5, "{floor}");
    }

    #[test]
    fn trace_schedule_stops_when_exhausted() {
        let w = m(&[&[2.0, 0.0], &[0.0, 2.0]]);
        let r = run_scaling(&w, &Schedule::trace(vec![ScheduleStep::row(0)]), 10, 1e-10).unwrap();
        assert_eq!(r.stop_reason, StopReason::Exhausted);
        assert_eq!(r.steps_taken, 1);
        assert_eq!(r.step_deviations, vec![1.0]);
        assert_eq!(r.d_b_trace, vec![4.0, 2.0]);
    }

    #[test]
    fn bad_arguments() {
        let w = NonNegMatrix::identity(2);
        assert!(matches!(
            run_scaling(&w, &Schedule::cyclic(2), 0, 1e-10),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            run_scaling(&w, &Schedule::cyclic(2), 10, 0.0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            run_scaling(&w, &Schedule::cyclic(3), 10, 1e-3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn predictions() {
        let pos = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert!(predict_asymptotics(&pos, &KSpec::full(2)).unwrap());
        let star = m(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert!(!predict_asymptotics(&star, &KSpec::full(3)).unwrap());
        assert!(predict_asymptotics(&star, &KSpec::new([1, 2], [1, 2])).unwrap());
    }
}
