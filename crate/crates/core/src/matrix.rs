//! Dense square nonnegative matrices, marginal deviations, L1 distances to the
//! row/column/bistochastic sets, and single-line normalization with diagonal
//! scaling bookkeeping.
//!
//! Storage is row-major `f64`. Every line sum is taken in ascending index order
//! so that repeated evaluations of the same quantity agree bit for bit.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::RECON_FAIL_TOL;

/// Which family of lines a normalization acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "r")]
    Row,
    #[serde(rename = "c")]
    Col,
}

impl Axis {
    pub fn short(self) -> &'static str {
        match self {
            Axis::Row => "r",
            Axis::Col => "c",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Col => f.write_str("column"),
        }
    }
}

/// One normalization action: rescale line `index` (0-based) of `axis` to sum 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScheduleStep {
    pub axis: Axis,
    pub index: usize,
}

impl ScheduleStep {
    pub const fn row(index: usize) -> Self {
        ScheduleStep {
            axis: Axis::Row,
            index,
        }
    }

    pub const fn col(index: usize) -> Self {
        ScheduleStep {
            axis: Axis::Col,
            index,
        }
    }
}

impl fmt::Display for ScheduleStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.axis.short(), self.index + 1)
    }
}

/// Dense N×N matrix of finite nonnegative reals. Null rows and columns are
/// allowed here; [`NonNegMatrix`] is the validated working domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("matrix order must be positive"));
        }
        if data.len() != n * n {
            return Err(Error::domain(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::domain(format!(
                "entry ({}, {}) = {} is not a finite nonnegative real",
                k / n + 1,
                k % n + 1,
                data[k]
            )));
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::domain(format!(
                    "row {} has {} entries, matrix is not square ({n} rows)",
                    i + 1,
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        SquareMatrix::new(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn line_sum(&self, axis: Axis, l: usize) -> f64 {
        match axis {
            Axis::Row => self.row_sum(l),
            Axis::Col => self.col_sum(l),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row_sum(i)).collect()
    }

    /// Column sums, each accumulated over ascending row index.
    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.col_sum(j)).collect()
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j];
            }
        }
        SquareMatrix { n, data }
    }

    pub fn is_positive(&self, i: usize, j: usize) -> bool {
        self.get(i, j) > 0.0
    }

    pub fn positive_count(&self) -> usize {
        self.data.iter().filter(|&&x| x > 0.0).count()
    }

    pub fn is_null(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// First null line, rows checked before columns.
    pub fn first_null_line(&self) -> Option<(Axis, usize)> {
        let n = self.n;
        if let Some(i) = (0..n).find(|&i| self.row(i).iter().all(|&x| x == 0.0)) {
            return Some((Axis::Row, i));
        }
        (0..n)
            .find(|&j| (0..n).all(|i| self.get(i, j) == 0.0))
            .map(|j| (Axis::Col, j))
    }

    /// Same positivity pattern as `other` (entries `> 0.0`).
    pub fn same_pattern(&self, other: &SquareMatrix) -> bool {
        self.n == other.n
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| (*a > 0.0) == (*b > 0.0))
    }

    pub fn scaled(&self, s: f64) -> Result<SquareMatrix> {
        SquareMatrix::new(self.n, self.data.iter().map(|x| x * s).collect())
    }

    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.n, other.n, "order mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest strictly positive entry.
    pub fn min_positive(&self) -> Option<f64> {
        self.data
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Rescales line `l` to unit sum in place and returns the previous sum.
    /// The caller guarantees the line is not null.
    pub(crate) fn normalize_line(&mut self, step: ScheduleStep) -> f64 {
        let n = self.n;
        let l = step.index;
        match step.axis {
            Axis::Row => {
                let row = &mut self.data[l * n..(l + 1) * n];
                let s: f64 = row.iter().sum();
                for x in row.iter_mut() {
                    *x /= s;
                }
                s
            }
            Axis::Col => {
                let s = self.col_sum(l);
                for i in 0..n {
                    self.data[i * n + l] /= s;
                }
                s
            }
        }
    }
}

/// Nonnegative square matrix with no null row and no null column.
#[derive(Debug, Clone, PartialEq)]
pub struct NonNegMatrix(SquareMatrix);

impl NonNegMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        SquareMatrix::new(n, data).and_then(NonNegMatrix::try_from)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        SquareMatrix::from_rows(rows).and_then(NonNegMatrix::try_from)
    }

    pub fn identity(n: usize) -> Self {
        NonNegMatrix(SquareMatrix::identity(n))
    }

    pub fn as_square(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_inner(self) -> SquareMatrix {
        self.0
    }

    /// Normalizes in place; line sums stay positive so the domain is preserved.
    pub(crate) fn normalize_line(&mut self, step: ScheduleStep) -> f64 {
        self.0.normalize_line(step)
    }

    pub fn transpose(&self) -> NonNegMatrix {
        NonNegMatrix(self.0.transpose())
    }

    /// Mutable access for callers that keep every line positive.
    pub(crate) fn raw_mut(&mut self) -> &mut SquareMatrix {
        &mut self.0
    }
}

impl TryFrom<SquareMatrix> for NonNegMatrix {
    type Error = Error;

    fn try_from(m: SquareMatrix) -> Result<Self> {
        match m.first_null_line() {
            Some((axis, l)) => Err(Error::domain(format!(
                "{axis} {} is null; the scaling domain excludes null rows and columns",
                l + 1
            ))),
            None => Ok(NonNegMatrix(m)),
        }
    }
}

impl Deref for NonNegMatrix {
    type Target = SquareMatrix;

    fn deref(&self) -> &SquareMatrix {
        &self.0
    }
}

fn check_index(w: &SquareMatrix, l: usize) -> Result<()> {
    if l >= w.n() {
        return Err(Error::arg(format!(
            "line index {} out of range 1..={}",
            l + 1,
            w.n()
        )));
    }
    Ok(())
}

/// `(sum of line l) - 1` along `axis`.
pub fn marginal_deviation(w: &SquareMatrix, axis: Axis, l: usize) -> Result<f64> {
    check_index(w, l)?;
    Ok(w.line_sum(axis, l) - 1.0)
}

/// L1 distances to the row-stochastic, column-stochastic and bistochastic sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distances {
    pub d_r: f64,
    pub d_c: f64,
    pub d_b: f64,
}

impl Distances {
    pub fn from_sums(row_sums: &[f64], col_sums: &[f64]) -> Self {
        let d_r = l1_from_one(row_sums);
        let d_c = l1_from_one(col_sums);
        Distances {
            d_r,
            d_c,
            d_b: d_r + d_c,
        }
    }
}

pub(crate) fn l1_from_one(sums: &[f64]) -> f64 {
    sums.iter().map(|s| (s - 1.0).abs()).sum()
}

pub fn distances(w: &SquareMatrix) -> Distances {
    Distances::from_sums(&w.row_sums(), &w.col_sums())
}

/// Checks `d_R(W) == d_C(Wᵀ)` bit for bit.
pub fn transpose_duality_check(w: &SquareMatrix) -> bool {
    let lhs = distances(w).d_r;
    let rhs = distances(&w.transpose()).d_c;
    lhs == rhs
}

/// Normalizes one line, returning the new matrix and the applied factor
/// `1 / (1 + deviation)`.
pub fn normalize_step(w: &NonNegMatrix, step: ScheduleStep) -> Result<(NonNegMatrix, f64)> {
    check_index(w, step.index)?;
    let mut out = w.clone();
    let s = out.normalize_line(step);
    Ok((out, 1.0 / s))
}

/// Accumulated diagonal scalings `D_r`, `D_c` with `W_t = D_r W_0 D_c`.
///
/// Factors are stored as natural logarithms so that long runs on kernels with
/// subnormal entries cannot overflow the bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalAccumulator {
    log_row: Vec<f64>,
    log_col: Vec<f64>,
}

impl DiagonalAccumulator {
    pub fn identity(n: usize) -> Self {
        DiagonalAccumulator {
            log_row: vec![0.0; n],
            log_col: vec![0.0; n],
        }
    }

    pub fn from_factors(row_factors: &[f64], col_factors: &[f64]) -> Result<Self> {
        if row_factors.len() != col_factors.len() {
            return Err(Error::arg("row and column factor counts differ"));
        }
        let to_log = |v: &[f64]| -> Result<Vec<f64>> {
            v.iter()
                .map(|&f| {
                    if f.is_finite() && f > 0.0 {
                        Ok(f.ln())
                    } else {
                        Err(Error::arg(format!(
                            "scaling factor {f} is not positive and finite"
                        )))
                    }
                })
                .collect()
        };
        Ok(DiagonalAccumulator {
            log_row: to_log(row_factors)?,
            log_col: to_log(col_factors)?,
        })
    }

    pub fn n(&self) -> usize {
        self.log_row.len()
    }

    pub fn row_factor(&self, i: usize) -> f64 {
        self.log_row[i].exp()
    }

    pub fn col_factor(&self, j: usize) -> f64 {
        self.log_col[j].exp()
    }

    pub fn row_factors(&self) -> Vec<f64> {
        self.log_row.iter().map(|x| x.exp()).collect()
    }

    pub fn col_factors(&self) -> Vec<f64> {
        self.log_col.iter().map(|x| x.exp()).collect()
    }

    pub fn log_row_factors(&self) -> &[f64] {
        &self.log_row
    }

    pub fn log_col_factors(&self) -> &[f64] {
        &self.log_col
    }

    /// Records a normalization of `step` whose line summed to `line_sum`.
    pub(crate) fn record(&mut self, step: ScheduleStep, line_sum: f64) {
        let slot = match step.axis {
            Axis::Row => &mut self.log_row[step.index],
            Axis::Col => &mut self.log_col[step.index],
        };
        *slot -= line_sum.ln();
    }

    /// `diag(row) · W0 · diag(col)`.
    pub fn reconstruct(&self, w0: &SquareMatrix) -> SquareMatrix {
        let n = w0.n();
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let w = w0.get(i, j);
                if w > 0.0 {
                    out.set(i, j, (w.ln() + self.log_row[i] + self.log_col[j]).exp());
                }
            }
        }
        out
    }

    /// Largest entrywise relative residual between the reconstruction and `w`.
    pub fn residual(&self, w0: &SquareMatrix, w: &SquareMatrix) -> f64 {
        let r = self.reconstruct(w0);
        r.data()
            .iter()
            .zip(w.data())
            .map(|(a, b)| {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Applies `step` to `w` and folds its factor into `acc`.
pub fn apply_step(
    w0: &NonNegMatrix,
    acc: &DiagonalAccumulator,
    w: &NonNegMatrix,
    step: ScheduleStep,
) -> Result<(NonNegMatrix, DiagonalAccumulator)> {
    if acc.n() != w.n() || w0.n() != w.n() {
        return Err(Error::arg("matrix and accumulator orders differ"));
    }
    check_index(w, step.index)?;
    let mut next = w.clone();
    let s = next.normalize_line(step);
    let mut acc = acc.clone();
    acc.record(step, s);
    let res = acc.residual(w0, &next);
    if res > RECON_FAIL_TOL {
        return Err(Error::InternalState(format!(
            "diagonal accumulator does not reconstruct W after step {step}: relative residual {res:e}"
        )));
    }
    Ok((next, acc))
}
