//! Decentralized random walk: the walker normalizes the column and then the
//! row of the vertex it stands on, and moves along the freshly normalized row.

use rand::Rng;
use serde::Serialize;

use crate::engine::seeded_rng;
use crate::error::{Error, Result};
use crate::matrix::{Axis, NonNegMatrix, ScheduleStep};
use crate::support::{is_irreducible, positive_part};
use crate::tol::EQ_TOL;

#[derive(Debug, Clone)]
pub struct DrwConfig {
    w0: NonNegMatrix,
    start: usize,
    total_steps: usize,
    seed: u64,
}

impl DrwConfig {
    /// `start` is 0-based. Fails unless the positive part of `w0` is
    /// irreducible.
    pub fn new(w0: NonNegMatrix, start: usize, total_steps: usize, seed: u64) -> Result<Self> {
        let n = w0.n();
        if start >= n {
            return Err(Error::arg(format!(
                "start vertex {} out of range 1..={n}",
                start + 1
            )));
        }
        if total_steps == 0 {
            return Err(Error::arg("total_steps must be at least 1"));
        }
        let plus = positive_part(&w0);
        if !is_irreducible(&plus) {
            return Err(Error::domain(
                "the positive part of the matrix is not irreducible; the walk has no uniform limit",
            ));
        }
        Ok(DrwConfig {
            w0,
            start,
            total_steps,
            seed,
        })
    }

    pub fn initial(&self) -> &NonNegMatrix {
        &self.w0
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone)]
pub struct DrwResult {
    /// Visits to each vertex over `X_1..X_T`.
    pub visit_counts: Vec<u64>,
    /// `transition_counts[i][j]` counts moves `i -> j`, including the first
    /// move out of the start vertex.
    pub transition_counts: Vec<Vec<u64>>,
    pub final_matrix: NonNegMatrix,
    /// `d_B` of the initial matrix and then after every `N` steps.
    pub d_b_trace: Vec<f64>,
    pub final_d_b: f64,
    /// FNV-1a digest of the 1-based visit sequence.
    pub trajectory_hash: u64,
    pub total_steps: usize,
    pub final_vertex: usize,
}

impl DrwResult {
    pub fn report(&self) -> DrwReport {
        let (max_dev, freq) = visitation_report(self);
        DrwReport {
            n: self.visit_counts.len(),
            steps: self.total_steps,
            freq,
            max_dev,
            d_b_final: self.final_d_b,
            trajectory_hash: format!("{:016x}", self.trajectory_hash),
            visit_counts: self.visit_counts.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DrwReport {
    pub n: usize,
    pub steps: usize,
    pub freq: Vec<f64>,
    pub max_dev: f64,
    #[serde(rename = "d_B_final")]
    pub d_b_final: f64,
    pub trajectory_hash: String,
    pub visit_counts: Vec<u64>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, v: u64) -> u64 {
    for b in v.to_le_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn normalize_checked(w: &mut NonNegMatrix, step: ScheduleStep) -> Result<()> {
    let s = w.line_sum(step.axis, step.index);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Numeric(format!(
            "{} {} sums to {s}",
            step.axis,
            step.index + 1
        )));
    }
    w.normalize_line(step);
    Ok(())
}

/// Inverse-CDF draw from row `v` in ascending column order. Rounding can leave
/// the cumulative sum just short of `u`; the last positive entry takes it.
fn sample_row<R: Rng + ?Sized>(w: &NonNegMatrix, v: usize, rng: &mut R) -> Result<usize> {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (j, &x) in w.row(v).iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = Some(j);
            if u < acc {
                return Ok(j);
            }
        }
    }
    last.ok_or_else(|| {
        Error::InvariantViolation(format!("row {} is null after normalization", v + 1))
    })
}

fn step_in_place<R: Rng + ?Sized>(w: &mut NonNegMatrix, v: usize, rng: &mut R) -> Result<usize> {
    normalize_checked(
        w,
        ScheduleStep {
            axis: Axis::Col,
            index: v,
        },
    )?;
    normalize_checked(
        w,
        ScheduleStep {
            axis: Axis::Row,
            index: v,
        },
    )?;
    sample_row(w, v, rng)
}

/// One walk step from 0-based vertex `v`: normalize column `v`, then row `v`,
/// then draw the next vertex from row `v`.
pub fn drw_step<R: Rng + ?Sized>(
    w: &NonNegMatrix,
    v: usize,
    rng: &mut R,
) -> Result<(NonNegMatrix, usize)> {
    if v >= w.n() {
        return Err(Error::arg(format!(
            "vertex {} out of range 1..={}",
            v + 1,
            w.n()
        )));
    }
    let mut next = w.clone();
    let v2 = step_in_place(&mut next, v, rng)?;
    Ok((next, v2))
}

pub fn drw_run(cfg: &DrwConfig) -> Result<DrwResult> {
    let n = cfg.w0.n();
    let mut rng = seeded_rng(cfg.seed);
    let mut w = cfg.w0.clone();
    let mut visits = vec![0u64; n];
    let mut transitions = vec![vec![0u64; n]; n];
    let mut d_b = crate::engine::d_b_of(&w);
    let mut d_b_trace = vec![d_b];
    let mut hash = FNV_OFFSET;
    let mut v = cfg.start;

    for t in 1..=cfg.total_steps {
        let next = step_in_place(&mut w, v, &mut rng)?;
        transitions[v][next] += 1;
        visits[next] += 1;
        hash = fnv1a(hash, next as u64 + 1);
        v = next;
        if t % n == 0 {
            let now = crate::engine::d_b_of(&w);
            if now > d_b + EQ_TOL * n as f64 {
                return Err(Error::InvariantViolation(format!(
                    "d_B rose from {d_b:e} to {now:e} by step {t}"
                )));
            }
            d_b = now;
            d_b_trace.push(d_b);
        }
    }

    Ok(DrwResult {
        visit_counts: visits,
        transition_counts: transitions,
        final_d_b: crate::engine::d_b_of(&w),
        final_matrix: w,
        d_b_trace,
        trajectory_hash: hash,
        total_steps: cfg.total_steps,
        final_vertex: v,
    })
}

/// Empirical visit frequencies and their largest distance from `1/N`.
pub fn visitation_report(res: &DrwResult) -> (f64, Vec<f64>) {
    visitation_from_counts(&res.visit_counts)
}

pub fn visitation_from_counts(counts: &[u64]) -> (f64, Vec<f64>) {
    let total: u64 = counts.iter().sum();
    let n = counts.len() as f64;
    let freq: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if total == 0 {
                0.0
            } else {
                c as f64 / total as f64
            }
        })
        .collect();
    let max_dev = freq.iter().map(|f| (f - 1.0 / n).abs()).fold(0.0, f64::max);
    (max_dev, freq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle3() -> NonNegMatrix {
        NonNegMatrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn cycle_is_deterministic() {
        let mut rng = seeded_rng(0);
        let (w, v) = drw_step(&cycle3(), 0, &mut rng).unwrap();
        assert_eq!(w, cycle3());
        assert_eq!(v, 1);
        let res = drw_run(&DrwConfig::new(cycle3(), 0, 30, 5).unwrap()).unwrap();
        assert_eq!(res.visit_counts, vec![10, 10, 10]);
        assert_eq!(visitation_report(&res).0, 0.0);
    }

    #[test]
    fn doubly_stochastic_is_fixed() {
        let w = NonNegMatrix::from_rows(&[[0.25, 0.75], [0.75, 0.25]]).unwrap();
        let (w2, _) = drw_step(&w, 1, &mut seeded_rng(3)).unwrap();
        assert_eq!(w, w2);
    }

    #[test]
    fn column_then_row() {
        let w = NonNegMatrix::from_rows(&[[1.0 * 1.3, 2.0 * 0.7], [2.0 * 1.3, 1.0 * 0.7]]).unwrap();
        let (w2, _) = drw_step(&w, 0, &mut seeded_rng(1)).unwrap();
        // column 1 sums to 3.9, then row 1 is (1/3, 1.4)
        let r = [1.3 / 3.9, 1.4];
        let s = r[0] + r[1];
        assert!((w2.get(0, 0) - r[0] / s).abs() < 1e-15);
        assert!((w2.get(0, 1) - r[1] / s).abs() < 1e-15);
        assert!((w2.get(1, 0) - 2.6 / 3.9).abs() < 1e-15);
        assert_eq!(w2.get(1, 1), w.get(1, 1));
        assert!((w2.row_sum(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counts_and_report() {
        let (d, f) = visitation_from_counts(&[2, 1, 1]);
        assert!((d - (0.5 - 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(f, vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn rejects_reducible() {
        let w = NonNegMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(DrwConfig::new(w, 0, 10, 1), Err(Error::Domain(_))));
        assert!(matches!(
            DrwConfig::new(cycle3(), 3, 10, 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn seeds_differ() {
        let w =
            NonNegMatrix::from_rows(&[[1.0, 2.0, 3.0], [3.0, 1.0, 2.0], [2.0, 3.0, 1.0]]).unwrap();
        let a = drw_run(&DrwConfig::new(w.clone(), 0, 1000, 1).unwrap()).unwrap();
        let b = drw_run(&DrwConfig::new(w.clone(), 0, 1000, 1).unwrap()).unwrap();
        let c = drw_run(&DrwConfig::new(w, 0, 1000, 2).unwrap()).unwrap();
        assert_eq!(a.trajectory_hash, b.trajectory_hash);
        assert_ne!(a.trajectory_hash, c.trajectory_hash);
        assert_eq!(a.visit_counts.iter().sum::<u64>(), 1000);
    }
}
