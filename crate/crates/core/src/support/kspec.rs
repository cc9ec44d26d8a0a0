use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Axis, ScheduleStep};

/// A set of rows and columns (0-based) that a diagonal must cover exactly once.
///
/// Serialized as `{"rows":[...],"cols":[...]}` with 1-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "KSpecJson", try_from = "KSpecJson")]
pub struct KSpec {
    pub rows: BTreeSet<usize>,
    pub cols: BTreeSet<usize>,
}

#[derive(Serialize, Deserialize)]
struct KSpecJson {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl From<KSpec> for KSpecJson {
    fn from(k: KSpec) -> Self {
        KSpecJson {
            rows: k.rows.iter().map(|i| i + 1).collect(),
            cols: k.cols.iter().map(|j| j + 1).collect(),
        }
    }
}

impl TryFrom<KSpecJson> for KSpec {
    type Error = String;

    fn try_from(j: KSpecJson) -> std::result::Result<Self, String> {
        let shift = |v: Vec<usize>| -> std::result::Result<BTreeSet<usize>, String> {
            v.into_iter()
                .map(|x| {
                    x.checked_sub(1)
                        .ok_or_else(|| "K indices are 1-based".to_string())
                })
                .collect()
        };
        Ok(KSpec {
            rows: shift(j.rows)?,
            cols: shift(j.cols)?,
        })
    }
}

impl KSpec {
    pub fn empty() -> Self {
        KSpec::default()
    }

    pub fn full(n: usize) -> Self {
        KSpec {
            rows: (0..n).collect(),
            cols: (0..n).collect(),
        }
    }

    pub fn new(
        rows: impl IntoIterator<Item = usize>,
        cols: impl IntoIterator<Item = usize>,
    ) -> Self {
        KSpec {
            rows: rows.into_iter().collect(),
            cols: cols.into_iter().collect(),
        }
    }

    pub fn from_steps(steps: impl IntoIterator<Item = ScheduleStep>) -> Self {
        let mut k = KSpec::empty();
        for s in steps {
            k.insert(s);
        }
        k
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.cols.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len() + self.cols.len()
    }

    pub fn is_full(&self, n: usize) -> bool {
        self.rows.len() == n && self.cols.len() == n
    }

    pub fn contains(&self, step: ScheduleStep) -> bool {
        match step.axis {
            Axis::Row => self.rows.contains(&step.index),
            Axis::Col => self.cols.contains(&step.index),
        }
    }

    pub fn insert(&mut self, step: ScheduleStep) {
        match step.axis {
            Axis::Row => self.rows.insert(step.index),
            Axis::Col => self.cols.insert(step.index),
        };
    }

    pub fn remove(&mut self, step: ScheduleStep) {
        match step.axis {
            Axis::Row => self.rows.remove(&step.index),
            Axis::Col => self.cols.remove(&step.index),
        };
    }

    /// Members as steps: rows ascending, then columns ascending.
    pub fn steps(&self) -> Vec<ScheduleStep> {
        self.rows
            .iter()
            .map(|&i| ScheduleStep::row(i))
            .chain(self.cols.iter().map(|&j| ScheduleStep::col(j)))
            .collect()
    }

    pub fn is_subset(&self, other: &KSpec) -> bool {
        self.rows.is_subset(&other.rows) && self.cols.is_subset(&other.cols)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&i) = self.rows.iter().find(|&&i| i >= n) {
            return Err(Error::arg(format!("K row {} out of range 1..={n}", i + 1)));
        }
        if let Some(&j) = self.cols.iter().find(|&&j| j >= n) {
            return Err(Error::arg(format!(
                "K column {} out of range 1..={n}",
                j + 1
            )));
        }
        Ok(())
    }

    /// A cell may appear in a K-diagonal only if it covers a K row or K column.
    #[inline]
    pub fn covers(&self, i: usize, j: usize) -> bool {
        self.rows.contains(&i) || self.cols.contains(&j)
    }
}

/// Cells `(row, col)` of a K-diagonal, kept sorted.
///
/// A K-diagonal of an order-`n` matrix has at most `2n - 2` cells when K is
/// proper and at most `n` when K is full. The bound is stated relative to the
/// matrix order: a star on `n` vertices is an order-`n` matrix, so its
/// extremal diagonal has `2n - 2` cells with the centre row and column each
/// used `n - 1` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KDiagonal {
    cells: Vec<(usize, usize)>,
}

impl KDiagonal {
    pub fn new(mut cells: Vec<(usize, usize)>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        KDiagonal { cells }
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Exact single coverage of every K line and no cell outside K lines.
    pub fn is_k_diagonal(&self, k: &KSpec) -> bool {
        if !self.cells.iter().all(|&(i, j)| k.covers(i, j)) {
            return false;
        }
        let rows_ok = k
            .rows
            .iter()
            .all(|&r| self.cells.iter().filter(|c| c.0 == r).count() == 1);
        let cols_ok = k
            .cols
            .iter()
            .all(|&c| self.cells.iter().filter(|x| x.1 == c).count() == 1);
        rows_ok && cols_ok
    }

    /// 0/1 indicator matrix (the K-permutation matrix).
    pub fn indicator(&self, n: usize) -> crate::matrix::SquareMatrix {
        let mut m = crate::matrix::SquareMatrix::zeros(n);
        for &(i, j) in &self.cells {
            m.set(i, j, 1.0);
        }
        m
    }
}

impl Serialize for KDiagonal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let one_based: Vec<[usize; 2]> = self.cells.iter().map(|&(i, j)| [i + 1, j + 1]).collect();
        one_based.serialize(s)
    }
}
