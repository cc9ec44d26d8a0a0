use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ScalingState;
use crate::error::{Error, Result};
use crate::matrix::{Axis, ScheduleStep};
use crate::support::KSpec;

/// Name of the pseudo-random generator behind every seeded component.
pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// N row steps `1..=N`, then N column steps, repeated.
    CyclicSinkhorn,
    /// I.i.d. uniform draws over the recurrent set.
    UniformRandom { seed: u64 },
    /// Line with the largest absolute deviation; ties go to rows, then the
    /// lowest index.
    GreedyDeviation,
    /// A finite, explicit list of steps.
    Trace(Vec<ScheduleStep>),
}

/// A step generator together with the set of lines it visits infinitely often.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    recurrent_set: KSpec,
}

impl Schedule {
    pub fn cyclic(n: usize) -> Self {
        Schedule {
            kind: ScheduleKind::CyclicSinkhorn,
            recurrent_set: KSpec::full(n),
        }
    }

    pub fn greedy(n: usize) -> Self {
        Schedule {
            kind: ScheduleKind::GreedyDeviation,
            recurrent_set: KSpec::full(n),
        }
    }

    pub fn uniform_random(seed: u64, recurrent_set: KSpec) -> Result<Self> {
        if recurrent_set.is_empty() {
            return Err(Error::arg(
                "a random schedule needs a nonempty recurrent set",
            ));
        }
        Ok(Schedule {
            kind: ScheduleKind::UniformRandom { seed },
            recurrent_set,
        })
    }

    pub fn trace(steps: Vec<ScheduleStep>) -> Self {
        Schedule {
            kind: ScheduleKind::Trace(steps),
            recurrent_set: KSpec::empty(),
        }
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn recurrent_set(&self) -> &KSpec {
        &self.recurrent_set
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScheduleKind::CyclicSinkhorn => "cyclic",
            ScheduleKind::UniformRandom { .. } => "random",
            ScheduleKind::GreedyDeviation => "greedy",
            ScheduleKind::Trace(_) => "trace",
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        self.recurrent_set.validate(n)?;
        if let ScheduleKind::Trace(steps) = &self.kind {
            if let Some(s) = steps.iter().find(|s| s.index >= n) {
                return Err(Error::arg(format!(
                    "trace step {s} out of range for order {n}"
                )));
            }
        }
        match self.kind {
            ScheduleKind::CyclicSinkhorn | ScheduleKind::GreedyDeviation
                if !self.recurrent_set.is_full(n) =>
            {
                Err(Error::arg(format!(
                    "{} schedule must recur over all {n} rows and columns",
                    self.name()
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn start(&self) -> Scheduler<'_> {
        let rng = match self.kind {
            ScheduleKind::UniformRandom { seed } => Some(seeded_rng(seed)),
            _ => None,
        };
        Scheduler {
            schedule: self,
            t: 0,
            rng,
            pool: self.recurrent_set.steps(),
        }
    }
}

/// Iteration state of a [`Schedule`].
#[derive(Debug, Clone)]
pub struct Scheduler<'a> {
    schedule: &'a Schedule,
    t: usize,
    rng: Option<ChaCha8Rng>,
    pool: Vec<ScheduleStep>,
}

impl Scheduler<'_> {
    /// Next step, or `None` once a trace is exhausted.
    pub fn next_step(&mut self, state: &ScalingState) -> Option<ScheduleStep> {
        let n = state.n();
        let t = self.t;
        self.t += 1;
        match &self.schedule.kind {
            ScheduleKind::CyclicSinkhorn => {
                let axis = if (t / n) % 2 == 0 {
                    Axis::Row
                } else {
                    Axis::Col
                };
                Some(ScheduleStep { axis, index: t % n })
            }
            ScheduleKind::UniformRandom { .. } => {
                let rng = self.rng.as_mut().expect("random schedule owns an rng");
                Some(self.pool[rng.gen_range(0..self.pool.len())])
            }
            ScheduleKind::GreedyDeviation => Some(greedy_pick(state)),
            ScheduleKind::Trace(steps) => steps.get(t).copied(),
        }
    }
}

fn greedy_pick(state: &ScalingState) -> ScheduleStep {
    let mut best = ScheduleStep::row(0);
    let mut best_dev = f64::NEG_INFINITY;
    let candidates = state
        .row_sums()
        .iter()
        .enumerate()
        .map(|(i, s)| (ScheduleStep::row(i), s))
        .chain(
            state
                .col_sums()
                .iter()
                .enumerate()
                .map(|(j, s)| (ScheduleStep::col(j), s)),
        );
    for (step, s) in candidates {
        let d = (s - 1.0).abs();
        if d > best_dev {
            best_dev = d;
            best = step;
        }
    }
    best
}
