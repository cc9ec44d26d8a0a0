//! Combinatorics of positivity patterns: support, total support, positive
//! supported parts, K-diagonals and the blocking sub-matrices that prevent
//! them.
//!
//! An entry is positive iff it is `> 0.0`. Subnormal values count as positive.

mod birkhoff;
mod flow;
mod kspec;
pub mod matching;
pub mod scc;

pub use birkhoff::{birkhoff_decompose, BirkhoffDecomposition, BirkhoffTerm};
pub use kspec::{KDiagonal, KSpec};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

use flow::BoundedNetwork;
use matching::{hopcroft_karp, Matching};
use scc::tarjan_scc;

fn row_adjacency(w: &SquareMatrix) -> Vec<Vec<usize>> {
    w.rows()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Maximum matching on the positivity pattern.
pub fn max_matching(w: &SquareMatrix) -> Matching {
    hopcroft_karp(&row_adjacency(w), w.n())
}

/// True iff some permutation picks only positive entries.
pub fn has_support(w: &SquareMatrix) -> bool {
    max_matching(w).is_perfect()
}

/// Keeps exactly the positive entries lying on some positive diagonal.
///
/// With a perfect matching `M` fixed, an unmatched edge `(i, j)` lies on a
/// perfect matching iff it closes an `M`-alternating cycle, i.e. iff row `i`
/// and the row matched to column `j` share a strongly connected component of
/// the digraph `i -> mate(j)` over positive `(i, j)`.
pub fn positive_part(w: &SquareMatrix) -> SquareMatrix {
    let n = w.n();
    let adj = row_adjacency(w);
    let m = hopcroft_karp(&adj, n);
    if !m.is_perfect() {
        return SquareMatrix::zeros(n);
    }
    let mate = |j: usize| m.col_to_row[j].expect("perfect matching");
    let graph: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(i, cols)| cols.iter().map(|&j| mate(j)).filter(|&r| r != i).collect())
        .collect();
    let (_, comp) = tarjan_scc(&graph);

    let mut out = SquareMatrix::zeros(n);
    for (i, cols) in adj.iter().enumerate() {
        for &j in cols {
            if m.row_to_col[i] == Some(j) || comp[i] == comp[mate(j)] {
                out.set(i, j, w.get(i, j));
            }
        }
    }
    out
}

/// Every positive entry lies on a positive diagonal, and there is at least
/// one positive diagonal.
pub fn has_total_support(w: &SquareMatrix) -> bool {
    !w.is_null() && positive_part(w).same_pattern(w)
}

fn pattern_digraph(w: &SquareMatrix) -> Vec<Vec<usize>> {
    row_adjacency(w)
}

/// True iff no communicating class of the positivity digraph has an edge
/// leaving it.
pub fn closed_classes_check(w: &SquareMatrix) -> bool {
    let g = pattern_digraph(w);
    let (_, comp) = tarjan_scc(&g);
    g.iter()
        .enumerate()
        .all(|(i, succ)| succ.iter().all(|&j| comp[i] == comp[j]))
}

/// One strongly connected component spanning every vertex.
pub fn is_irreducible(w: &SquareMatrix) -> bool {
    let (k, _) = tarjan_scc(&pattern_digraph(w));
    k == 1
}

/// Flow model of positive K-diagonals. Node layout: source `0`, rows
/// `1..=n`, columns `n+1..=2n`, sink `2n+1`.
struct KNetwork {
    net: BoundedNetwork,
    cells: Vec<((usize, usize), usize)>,
    source: usize,
    sink: usize,
}

impl KNetwork {
    fn build(w: &SquareMatrix, k: &KSpec) -> Self {
        let n = w.n();
        let cap = n as i64;
        let (source, sink) = (0, 2 * n + 1);
        let mut net = BoundedNetwork::new(2 * n + 2);
        for i in 0..n {
            let (lo, hi) = if k.rows.contains(&i) {
                (1, 1)
            } else {
                (0, cap)
            };
            net.add_edge(source, 1 + i, lo, hi);
        }
        for j in 0..n {
            let (lo, hi) = if k.cols.contains(&j) {
                (1, 1)
            } else {
                (0, cap)
            };
            net.add_edge(1 + n + j, sink, lo, hi);
        }
        let mut cells = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if w.get(i, j) > 0.0 && k.covers(i, j) {
                    let e = net.add_edge(1 + i, 1 + n + j, 0, 1);
                    cells.push(((i, j), e));
                }
            }
        }
        KNetwork {
            net,
            cells,
            source,
            sink,
        }
    }

    fn solve(&self) -> Option<KDiagonal> {
        let flow = self.net.feasible_flow(self.source, self.sink)?;
        Some(KDiagonal::new(
            self.cells
                .iter()
                .filter(|(_, e)| flow[*e] > 0)
                .map(|(c, _)| *c)
                .collect(),
        ))
    }
}

/// A positive K-diagonal, if one exists. The empty K yields the empty diagonal.
pub fn find_k_diagonal(w: &SquareMatrix, k: &KSpec) -> Result<Option<KDiagonal>> {
    k.validate(w.n())?;
    if k.is_empty() {
        return Ok(Some(KDiagonal::new(Vec::new())));
    }
    Ok(KNetwork::build(w, k).solve())
}

pub fn has_k_diagonal(w: &SquareMatrix, k: &KSpec) -> Result<bool> {
    Ok(find_k_diagonal(w, k)?.is_some())
}

/// Keeps the positive entries lying on some positive K-diagonal.
pub fn k_positive_part(w: &SquareMatrix, k: &KSpec) -> Result<SquareMatrix> {
    let n = w.n();
    k.validate(n)?;
    if k.is_full(n) {
        return Ok(positive_part(w));
    }
    let mut out = SquareMatrix::zeros(n);
    if k.is_empty() {
        return Ok(out);
    }
    let base = KNetwork::build(w, k);
    let Some(witness) = base.solve() else {
        return Ok(out);
    };
    for &(i, j) in witness.cells() {
        out.set(i, j, w.get(i, j));
    }
    let mut trial = base;
    for idx in 0..trial.cells.len() {
        let ((i, j), e) = trial.cells[idx];
        if out.get(i, j) > 0.0 {
            continue;
        }
        trial.net.set_bounds(e, 1, 1);
        if let Some(d) = trial.solve() {
            // every cell of a found diagonal is itself on a positive K-diagonal
            for &(a, b) in d.cells() {
                out.set(a, b, w.get(a, b));
            }
        }
        trial.net.set_bounds(e, 0, 1);
    }
    Ok(out)
}

/// Greedy element removal down to a minimal subset of `k` with no positive
/// K-diagonal. Members are tried rows first, then columns, ascending.
pub fn minimal_blocking_subset(w: &SquareMatrix, k: &KSpec) -> Result<KSpec> {
    if has_k_diagonal(w, k)? {
        return Err(Error::arg(
            "minimal_blocking_subset requires that no positive K-diagonal exists",
        ));
    }
    let mut current = k.clone();
    for step in k.steps() {
        current.remove(step);
        if has_k_diagonal(w, &current)? {
            current.insert(step);
        }
    }
    Ok(current)
}

/// Positive entries crossing out of the block of `kb`: `(l, j)` with row `l`
/// in `kb` and column `j` not in it, or `(i, l)` with column `l` in `kb` and
/// row `i` not in it.
///
/// Minimal blockers do not always satisfy the zero-crossing property, so this
/// reports the offending entries instead of assuming there are none.
pub fn zero_crossing_violations(w: &SquareMatrix, kb: &KSpec) -> Vec<(usize, usize)> {
    let n = w.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if w.get(i, j) > 0.0 && kb.rows.contains(&i) != kb.cols.contains(&j) {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(rows: &[&[f64]]) -> SquareMatrix {
        SquareMatrix::from_rows(rows).unwrap()
    }

    fn star3() -> SquareMatrix {
        sq(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]])
    }

    #[test]
    fn support_examples() {
        assert!(has_support(&sq(&[&[1.0, 1.0], &[1.0, 0.0]])));
        assert!(!has_support(&star3()));
        assert!(has_support(&SquareMatrix::identity(5)));
    }

    #[test]
    fn positive_part_examples() {
        assert_eq!(
            positive_part(&sq(&[&[1.0, 1.0], &[1.0, 0.0]])),
            sq(&[&[0.0, 1.0], &[1.0, 0.0]])
        );
        assert_eq!(
            positive_part(&SquareMatrix::identity(3)),
            SquareMatrix::identity(3)
        );
        assert!(positive_part(&star3()).is_null());
    }

    #[test]
    fn total_support_examples() {
        assert!(has_total_support(&sq(&[&[0.0, 1.0], &[1.0, 0.0]])));
        assert!(!has_total_support(&sq(&[&[1.0, 1.0], &[1.0, 0.0]])));
        assert!(has_total_support(&sq(&[&[0.5, 0.5], &[0.5, 0.5]])));
    }

    #[test]
    fn closed_class_examples() {
        assert!(closed_classes_check(&sq(&[&[0.0, 1.0], &[1.0, 0.0]])));
        assert!(!closed_classes_check(&sq(&[&[1.0, 1.0], &[0.0, 1.0]])));
        assert!(closed_classes_check(&SquareMatrix::identity(4)));
    }

    #[test]
    fn k_diagonal_examples() {
        let k = KSpec::new([1, 2], [1, 2]);
        let d = find_k_diagonal(&star3(), &k).unwrap().unwrap();
        assert_eq!(d.cells(), &[(0, 1), (0, 2), (1, 0), (2, 0)]);
        assert!(!has_k_diagonal(&star3(), &KSpec::full(3)).unwrap());
        assert!(has_k_diagonal(&star3(), &KSpec::empty()).unwrap());
        assert!(matches!(
            has_k_diagonal(&star3(), &KSpec::new([3], [])),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn k_positive_part_examples() {
        let w = sq(&[&[1.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(
            k_positive_part(&w, &KSpec::full(2)).unwrap(),
            positive_part(&w)
        );
        let k = KSpec::new([1, 2], [1, 2]);
        assert_eq!(k_positive_part(&star3(), &k).unwrap(), star3());
        assert_eq!(
            k_positive_part(&w, &KSpec::new([0], [])).unwrap(),
            sq(&[&[1.0, 1.0], &[0.0, 0.0]])
        );
    }

    #[test]
    fn blocking_subset_star() {
        let kb = minimal_blocking_subset(&star3(), &KSpec::full(3)).unwrap();
        let a = KSpec::new([1, 2], [0]);
        let b = KSpec::new([0], [1, 2]);
        assert!(kb == a || kb == b, "{kb:?}");
        assert!(zero_crossing_violations(&star3(), &kb).is_empty());
    }

    #[test]
    fn blocking_subset_requires_infeasibility() {
        let w = sq(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
        // rows alone always admit a diagonal: every row has a positive entry
        let k = KSpec::new([0, 1, 2], []);
        assert!(has_k_diagonal(&w, &k).unwrap());
        assert!(matches!(
            minimal_blocking_subset(&w, &k),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn minimal_blocker_can_cross_out_of_its_block() {
        // columns 1 and 2 only reach row 1; rows 2 and 3 only reach column 3
        let w = sq(&[&[1.0, 1.0, 1.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]]);
        let kb = minimal_blocking_subset(&w, &KSpec::full(3)).unwrap();
        assert_eq!(kb, KSpec::new([1, 2], [2]));
        for s in kb.steps() {
            let mut smaller = kb.clone();
            smaller.remove(s);
            assert!(has_k_diagonal(&w, &smaller).unwrap());
        }
        assert_eq!(zero_crossing_violations(&w, &kb), vec![(0, 2)]);
    }
}
