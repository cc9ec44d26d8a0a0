use serde::Serialize;

use super::{KDiagonal, KNetwork, KSpec};
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::tol::BIRKHOFF_HYP_TOL;

/// Residual entries at or below this are treated as spent.
const CRUMB: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffTerm {
    pub weight: f64,
    pub cells: KDiagonal,
}

/// Convex combination of K-permutation matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BirkhoffDecomposition {
    pub terms: Vec<BirkhoffTerm>,
}

impl BirkhoffDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn reconstruct(&self, n: usize) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(n);
        for t in &self.terms {
            for &(i, j) in t.cells.cells() {
                m.set(i, j, m.get(i, j) + t.weight);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// `W` restricted to entries whose row or column belongs to `k`.
pub fn restrict_to_k(w: &SquareMatrix, k: &KSpec) -> SquareMatrix {
    let n = w.n();
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if k.covers(i, j) {
                out.set(i, j, w.get(i, j));
            }
        }
    }
    out
}

fn max_k_line_sum(r: &SquareMatrix, k: &KSpec) -> f64 {
    k.rows
        .iter()
        .map(|&i| r.row_sum(i))
        .chain(k.cols.iter().map(|&j| r.col_sum(j)))
        .fold(0.0, f64::max)
}

/// Writes the K-restricted part of `w` as a convex combination of
/// K-permutation matrices.
///
/// Requires every line named in `k` to sum to 1 within 1e-10. Each round finds
/// a positive K-diagonal of the residual, removes its smallest entry times the
/// indicator, and zeroes at least one cell, so the loop ends after at most as
/// many rounds as there are positive entries.
pub fn birkhoff_decompose(w: &SquareMatrix, k: &KSpec) -> Result<BirkhoffDecomposition> {
    let n = w.n();
    k.validate(n)?;
    for s in k.steps() {
        let dev = w.line_sum(s.axis, s.index) - 1.0;
        if dev.abs() > BIRKHOFF_HYP_TOL {
            return Err(Error::arg(format!(
                "{} {} sums to 1{:+e}; every K line must sum to 1",
                s.axis,
                s.index + 1,
                dev
            )));
        }
    }

    let mut residual = restrict_to_k(w, k);
    let mut terms = Vec::new();
    let max_rounds = residual.positive_count() + 1;
    for _ in 0..max_rounds {
        if residual.is_null() || k.is_empty() {
            break;
        }
        let Some(diag) = KNetwork::build(&residual, k).solve() else {
            // leftovers from rounding in the hypothesis tolerance
            if max_k_line_sum(&residual, k) <= 2.0 * BIRKHOFF_HYP_TOL {
                break;
            }
            return Err(Error::InvariantViolation(format!(
                "no positive K-diagonal left while K lines still carry mass {:e}",
                max_k_line_sum(&residual, k)
            )));
        };
        let (mut lambda, mut argmin) = (f64::INFINITY, (0, 0));
        for &(i, j) in diag.cells() {
            let v = residual.get(i, j);
            if v < lambda {
                lambda = v;
                argmin = (i, j);
            }
        }
        for &(i, j) in diag.cells() {
            let v = residual.get(i, j) - lambda;
            residual.set(i, j, if v <= CRUMB { 0.0 } else { v });
        }
        residual.set(argmin.0, argmin.1, 0.0);
        terms.push(BirkhoffTerm {
            weight: lambda,
            cells: diag,
        });
    }
    if !residual.is_null() && max_k_line_sum(&residual, k) > 2.0 * BIRKHOFF_HYP_TOL {
        return Err(Error::InvariantViolation(
            "Birkhoff rounds exhausted before the residual vanished".into(),
        ));
    }

    let total: f64 = terms.iter().map(|t| t.weight).sum();
    if total > 0.0 {
        for t in &mut terms {
            t.weight /= total;
        }
    }
    Ok(BirkhoffDecomposition { terms })
}
