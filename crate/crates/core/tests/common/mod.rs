//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rcscale::{KSpec, NonNegMatrix, ScheduleStep, SquareMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries in `(0, 1]` with probability `density`, zero otherwise.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, density: f64) -> SquareMatrix {
    let data = (0..n * n)
        .map(|_| {
            if rng.gen::<f64>() < density {
                1.0 - rng.gen::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    SquareMatrix::new(n, data).unwrap()
}

/// Like [`random_matrix`], redrawn until no line is null.
pub fn random_nonneg<R: Rng>(rng: &mut R, n: usize, density: f64) -> NonNegMatrix {
    loop {
        if let Ok(m) = NonNegMatrix::try_from(random_matrix(rng, n, density)) {
            return m;
        }
    }
}

pub fn random_positive<R: Rng>(rng: &mut R, n: usize) -> NonNegMatrix {
    random_nonneg(rng, n, 1.0)
}

/// Star on three vertices: centre 1 joined to 2 and 3.
pub fn star3() -> NonNegMatrix {
    NonNegMatrix::from_rows(&[[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap()
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn brute_has_support(w: &SquareMatrix) -> bool {
    let mut found = false;
    for_each_permutation(w.n(), |p| {
        if !found && p.iter().enumerate().all(|(i, &j)| w.get(i, j) > 0.0) {
            found = true;
        }
    });
    found
}

/// Union of all positive diagonals.
pub fn brute_positive_pattern(w: &SquareMatrix) -> Vec<bool> {
    let n = w.n();
    let mut keep = vec![false; n * n];
    for_each_permutation(n, |p| {
        if p.iter().enumerate().all(|(i, &j)| w.get(i, j) > 0.0) {
            for (i, &j) in p.iter().enumerate() {
                keep[i * n + j] = true;
            }
        }
    });
    keep
}

/// Every positive K-diagonal of `w`, by enumerating subsets of the positive
/// cells that touch a K line.
pub fn brute_k_diagonals(w: &SquareMatrix, k: &KSpec) -> Vec<Vec<(usize, usize)>> {
    let n = w.n();
    let cand: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| w.get(i, j) > 0.0 && (k.rows.contains(&i) || k.cols.contains(&j)))
        .collect();
    assert!(cand.len() <= 20, "exhaustive search is exponential");
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << cand.len()) {
        let mut rows = vec![0; n];
        let mut cols = vec![0; n];
        for (b, &(i, j)) in cand.iter().enumerate() {
            if mask >> b & 1 == 1 {
                rows[i] += 1;
                cols[j] += 1;
            }
        }
        if k.rows.iter().all(|&i| rows[i] == 1) && k.cols.iter().all(|&j| cols[j] == 1) {
            out.push(
                cand.iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &c)| c)
                    .collect(),
            );
        }
    }
    out
}

pub fn random_kspec<R: Rng>(rng: &mut R, n: usize) -> KSpec {
    let rows: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    let cols: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    KSpec { rows, cols }
}

/// Nonempty, not full.
pub fn random_proper_kspec<R: Rng>(rng: &mut R, n: usize) -> KSpec {
    loop {
        let k = random_kspec(rng, n);
        if !k.is_empty() && !k.is_full(n) {
            return k;
        }
    }
}

/// Random K-diagonal built directly from its definition, or `None` when the
/// drawn shape cannot be completed.
pub fn random_k_diagonal<R: Rng>(rng: &mut R, n: usize, k: &KSpec) -> Option<Vec<(usize, usize)>> {
    let mut kr: Vec<usize> = k.rows.iter().copied().collect();
    let mut kc: Vec<usize> = k.cols.iter().copied().collect();
    kr.shuffle(rng);
    kc.shuffle(rng);
    let free_rows: Vec<usize> = (0..n).filter(|i| !k.rows.contains(i)).collect();
    let free_cols: Vec<usize> = (0..n).filter(|j| !k.cols.contains(j)).collect();
    let m = rng.gen_range(0..=kr.len().min(kc.len()));
    let mut cells: Vec<(usize, usize)> =
        kr.iter().zip(&kc).take(m).map(|(&i, &j)| (i, j)).collect();
    for &i in &kr[m..] {
        cells.push((i, *free_cols.choose(rng)?));
    }
    for &j in &kc[m..] {
        cells.push((*free_rows.choose(rng)?, j));
    }
    cells.sort_unstable();
    Some(cells)
}

/// Convex combination of `terms` random permutation matrices.
pub fn random_doubly_stochastic<R: Rng>(rng: &mut R, n: usize, terms: usize) -> SquareMatrix {
    let weights: Vec<f64> = (0..terms).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut data = vec![0.0; n * n];
    for w in weights {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        for (i, &j) in p.iter().enumerate() {
            data[i * n + j] += w / total;
        }
    }
    SquareMatrix::new(n, data).unwrap()
}

pub fn random_steps<R: Rng>(rng: &mut R, n: usize, len: usize) -> Vec<ScheduleStep> {
    (0..len)
        .map(|_| {
            let i = rng.gen_range(0..n);
            if rng.gen_bool(0.5) {
                ScheduleStep::row(i)
            } else {
                ScheduleStep::col(i)
            }
        })
        .collect()
}

/// `d_B` recomputed from scratch.
pub fn d_b(w: &SquareMatrix) -> f64 {
    let n = w.n();
    let mut s = 0.0;
    for i in 0..n {
        s += ((0..n).map(|j| w.get(i, j)).sum::<f64>() - 1.0).abs();
    }
    for j in 0..n {
        s += ((0..n).map(|i| w.get(i, j)).sum::<f64>() - 1.0).abs();
    }
    s
}
