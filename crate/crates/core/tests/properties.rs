mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;

use rcscale::drw::{drw_run, DrwConfig};
use rcscale::engine::{predict_asymptotics, run_scaling, RunConfig, ScalingState, Schedule};
use rcscale::io::{matrix_to_csv, parse_matrix_csv, to_json};
use rcscale::matrix::{
    apply_step, distances, normalize_step, transpose_duality_check, DiagonalAccumulator,
};
use rcscale::ot::{
    epsilon_support_threshold, gibbs_kernel, log_grid, mixture_quantile_grid, sinkhorn_ot,
    uniform_marginal, BetaMixture,
};
use rcscale::support::{
    birkhoff_decompose, closed_classes_check, find_k_diagonal, has_support, has_total_support,
    positive_part,
};
use rcscale::{Axis, KSpec, NonNegMatrix, ScheduleStep, SquareMatrix};

fn nonneg(n_max: usize) -> impl Strategy<Value = NonNegMatrix> {
    (1..=n_max, 0.2f64..1.0, any::<u64>())
        .prop_map(|(n, p, seed)| random_nonneg(&mut rng(seed), n, p))
}

fn square(n_max: usize) -> impl Strategy<Value = SquareMatrix> {
    (1..=n_max, 0.1f64..0.9, any::<u64>())
        .prop_map(|(n, p, seed)| random_matrix(&mut rng(seed), n, p))
}

fn step_for(n: usize) -> impl Strategy<Value = ScheduleStep> {
    (any::<bool>(), 0..n).prop_map(|(row, i)| {
        if row {
            ScheduleStep::row(i)
        } else {
            ScheduleStep::col(i)
        }
    })
}

fn with_step(n_max: usize) -> impl Strategy<Value = (NonNegMatrix, ScheduleStep)> {
    nonneg(n_max).prop_flat_map(|w| {
        let n = w.n();
        (Just(w), step_for(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn single_step_never_raises_d_b((w, s) in with_step(10)) {
        let (w2, _) = normalize_step(&w, s).unwrap();
        prop_assert!(distances(&w2).d_b <= distances(&w).d_b + 1e-12);
    }

    #[test]
    fn line_sum_changes_share_a_sign((w, s) in with_step(10)) {
        let (w2, _) = normalize_step(&w, s).unwrap();
        let (r0, c0, r1, c1) = (w.row_sums(), w.col_sums(), w2.row_sums(), w2.col_sums());
        for i in 0..w.n() {
            for j in 0..w.n() {
                prop_assert!((r1[i] - r0[i]) * (c1[j] - c0[j]) >= -1e-12);
            }
        }
    }

    #[test]
    fn step_zeroes_its_line_and_spares_the_parallel_ones((w, s) in with_step(10)) {
        let (w2, factor) = normalize_step(&w, s).unwrap();
        prop_assert!((factor * w.line_sum(s.axis, s.index) - 1.0).abs() <= 1e-15);
        prop_assert!((w2.line_sum(s.axis, s.index) - 1.0).abs() <= 1e-15 * (w.n() as f64).max(1.0));
        for l in (0..w.n()).filter(|&l| l != s.index) {
            prop_assert_eq!(w2.line_sum(s.axis, l), w.line_sum(s.axis, l));
        }
    }

    #[test]
    fn transpose_duality(w in nonneg(20)) {
        prop_assert!(transpose_duality_check(&w));
    }

    #[test]
    fn positive_part_has_total_support_or_is_null(w in square(8)) {
        let p = positive_part(&w);
        prop_assert!(p.is_null() || has_total_support(&p));
        if !p.is_null() {
            prop_assert_eq!(positive_part(&p), p.clone());
            prop_assert!(closed_classes_check(&p));
        }
        prop_assert_eq!(p.is_null(), !has_support(&w));
    }

    #[test]
    fn k_diagonal_size_bound(w in square(8), seed in any::<u64>()) {
        let n = w.n();
        let k = random_kspec(&mut rng(seed), n);
        if let Some(d) = find_k_diagonal(&w, &k).unwrap() {
            prop_assert!(d.is_k_diagonal(&k));
            if k.is_full(n) {
                prop_assert!(d.len() <= n);
            } else if n >= 2 {
                prop_assert!(d.len() <= 2 * n - 2);
            }
        }
    }

    #[test]
    fn kspec_json_round_trip(seed in any::<u64>(), n in 1usize..12) {
        let k = random_kspec(&mut rng(seed), n);
        let text = serde_json::to_string(&k).unwrap();
        prop_assert_eq!(serde_json::from_str::<KSpec>(&text).unwrap(), k);
    }

    #[test]
    fn csv_round_trip(w in square(12)) {
        prop_assert_eq!(parse_matrix_csv(&matrix_to_csv(&w)).unwrap(), w);
    }

    #[test]
    fn run_bounds(w in nonneg(8), seed in any::<u64>()) {
        let n = w.n();
        let k = random_proper_kspec(&mut rng(seed), n.max(2)).clone();
        let k = if n == 1 { KSpec::full(1) } else { k };
        let sched = Schedule::uniform_random(seed, k.clone()).unwrap();
        let res = run_scaling(&w, &sched, 2000, 1e-300).unwrap();
        let d0 = res.initial_d_b;
        for pair in res.d_b_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-12 * w.data().iter().sum::<f64>().max(1.0));
        }
        if predict_asymptotics(&w, &k).unwrap() {
            prop_assert!(res.deviation_sum.abs() <= 2.0 * d0 + 1e-9);
            prop_assert!(res.product_bound() >= (-2.0 * d0).exp() - 1e-12);
        }
    }
}

#[test]
fn accumulator_reconstructs_after_long_random_runs() {
    let mut r = rng(21);
    for _ in 0..10 {
        let w0 = random_nonneg(&mut r, 10, 0.7);
        let mut w = w0.clone();
        let mut acc = DiagonalAccumulator::identity(10);
        for s in random_steps(&mut r, 10, 10_000) {
            let (w2, a2) = apply_step(&w0, &acc, &w, s).unwrap();
            w = w2;
            acc = a2;
        }
        assert!(acc.residual(&w0, &w) <= 1e-9);
    }
}

#[test]
fn entry_floor_holds_on_positive_diagonals() {
    let mut r = rng(22);
    let mut checked = 0;
    for _ in 0..60 {
        let n = r.gen_range(2..=6);
        let w0 = random_nonneg(&mut r, n, 0.6);
        if !has_support(&w0) {
            continue;
        }
        let plus = positive_part(&w0);
        let sched = Schedule::uniform_random(r.gen(), KSpec::full(n)).unwrap();
        let res = run_scaling(&w0, &sched, 3000, 1e-300).unwrap();
        let floor = res.entry_floor();
        let mut state = ScalingState::new(w0.clone());
        for &s in &res.steps {
            state.apply(s).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if plus.is_positive(i, j) {
                        assert!(state.matrix().get(i, j) >= floor - 1e-12);
                    }
                }
            }
        }
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn state_sums_track_the_matrix() {
    let mut r = rng(23);
    let w0 = random_nonneg(&mut r, 7, 0.5);
    let mut st = ScalingState::new(w0);
    for s in random_steps(&mut r, 7, 5000) {
        st.apply(s).unwrap();
        let exact = st.matrix().row_sums();
        for (a, b) in st.row_sums().iter().zip(&exact) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}

#[test]
fn birkhoff_on_partial_k_fixtures() {
    let mut r = rng(24);
    let mut built = 0;
    while built < 40 {
        let n = r.gen_range(2..=6);
        let k = random_proper_kspec(&mut r, n);
        let diags: Vec<_> = (0..r.gen_range(1..=5))
            .filter_map(|_| random_k_diagonal(&mut r, n, &k))
            .collect();
        if diags.is_empty() {
            continue;
        }
        let weights: Vec<f64> = diags.iter().map(|_| 1.0 - r.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let mut data = vec![0.0; n * n];
        for (d, w) in diags.iter().zip(&weights) {
            for &(i, j) in d {
                data[i * n + j] += w / total;
            }
        }
        for i in (0..n).filter(|i| !k.rows.contains(i)) {
            for j in (0..n).filter(|j| !k.cols.contains(j)) {
                data[i * n + j] += r.gen::<f64>();
            }
        }
        let w = SquareMatrix::new(n, data).unwrap();
        let dec = birkhoff_decompose(&w, &k).unwrap();
        assert!((dec.weight_sum() - 1.0).abs() < 1e-12);
        let restricted = SquareMatrix::new(
            n,
            (0..n * n)
                .map(|c| {
                    if k.rows.contains(&(c / n)) || k.cols.contains(&(c % n)) {
                        w.get(c / n, c % n)
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
        .unwrap();
        assert!(dec.reconstruct(n).max_abs_diff(&restricted) < 1e-10);
        assert!(dec.terms.iter().all(|t| t.cells.is_k_diagonal(&k)));
        built += 1;
    }
}

#[test]
fn quantile_grids_increase_and_hit_levels() {
    for mix in [BetaMixture::source(), BetaMixture::target()] {
        let g = mixture_quantile_grid(&mix, 400).unwrap();
        for (k, pair) in g.windows(2).enumerate() {
            assert!(pair[1] > pair[0], "grid not increasing at {k}");
        }
        for (k, &x) in g.iter().enumerate() {
            let level = (k as f64 + 0.5) / 400.0;
            assert!((mix.cdf(x).unwrap() - level).abs() <= 1e-10);
        }
    }
}

#[test]
fn sinkhorn_marginals_and_factorization() {
    let mut r = rng(25);
    for _ in 0..20 {
        let n = r.gen_range(2..=8);
        let cost = SquareMatrix::new(n, (0..n * n).map(|_| r.gen::<f64>()).collect()).unwrap();
        let k = gibbs_kernel(&cost, 0.2).unwrap();
        let a = uniform_marginal(n);
        let tol = 1e-11;
        let s = sinkhorn_ot(&k, &a, &a, tol, 100_000).unwrap();
        assert!(s.converged);
        for i in 0..n {
            assert!((s.coupling.row_sum(i) - a[i]).abs() <= tol);
            assert!((s.coupling.col_sum(i) - a[i]).abs() <= tol);
            for j in 0..n {
                let g = s.u[i] * k.xi.get(i, j) * s.v[j];
                assert!((s.coupling.get(i, j) - g).abs() <= 1e-12 * g);
            }
        }
    }
}

#[test]
fn support_loss_is_monotone_on_random_costs() {
    let mut r = rng(26);
    for _ in 0..10 {
        let n = r.gen_range(2..=12);
        let cost = SquareMatrix::new(n, (0..n * n).map(|_| r.gen::<f64>()).collect()).unwrap();
        let rep = epsilon_support_threshold(&cost, &log_grid(1.0, 1e-5, 40), Some(2)).unwrap();
        assert!(rep.monotone);
        let mut zeros = 0;
        for row in &rep.rows {
            assert!(row.zero_count >= zeros);
            zeros = row.zero_count;
        }
    }
}

#[test]
fn unsupported_kernels_do_not_scale() {
    // an underflowed Gibbs kernel without support stays away from the
    // bistochastic set, or is rejected for a null line
    let mut r = rng(27);
    let mut seen = 0;
    for _ in 0..200 {
        let n = r.gen_range(2..=6);
        let cost = SquareMatrix::new(n, (0..n * n).map(|_| r.gen::<f64>()).collect()).unwrap();
        let k = gibbs_kernel(&cost, 3e-4).unwrap();
        if k.has_support {
            continue;
        }
        seen += 1;
        let scaled = k.xi.scaled(n as f64).unwrap();
        match NonNegMatrix::try_from(scaled) {
            Err(e) => assert!(matches!(e, rcscale::Error::Domain(_))),
            Ok(w) => {
                let res = rcscale::engine::run_scaling_with(
                    &w,
                    &Schedule::cyclic(n),
                    RunConfig::new(100_000, 1e-8).without_trace(),
                );
                assert!(res.map(|r| !r.converged).unwrap_or(true));
            }
        }
    }
    assert!(seen > 10);
}

#[test]
fn drw_counts_and_monotone_trace() {
    let mut r = rng(28);
    for _ in 0..10 {
        let n = r.gen_range(2..=6);
        let w = random_positive(&mut r, n);
        let res = drw_run(&DrwConfig::new(w, r.gen_range(0..n), 5000, r.gen()).unwrap()).unwrap();
        assert_eq!(res.visit_counts.iter().sum::<u64>(), 5000);
        for pair in res.d_b_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }
}

#[test]
fn drw_seeds_give_different_trajectories() {
    let w = random_positive(&mut rng(29), 5);
    let hashes: std::collections::BTreeSet<u64> = (0..20)
        .map(|seed| {
            drw_run(&DrwConfig::new(w.clone(), 0, 2000, seed).unwrap())
                .unwrap()
                .trajectory_hash
        })
        .collect();
    assert_eq!(hashes.len(), 20);
}

#[test]
fn reports_serialize() {
    let w = star3();
    let res = run_scaling(&w, &Schedule::cyclic(3), 50, 1e-10).unwrap();
    let text = to_json(&res.report()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["steps_taken"].as_u64().unwrap() <= 50);
    assert_eq!(v["converged"], false);
    let rec = res.trace_records().next().unwrap();
    assert_eq!(rec.axis, Axis::Row);
    assert_eq!(rec.index, 1);
}
