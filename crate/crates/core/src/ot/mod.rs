//! Entropic optimal transport between two quantized Beta mixtures, and the
//! study of how the Gibbs kernel loses support as the regularization shrinks.

mod beta;

pub use beta::{beta_cdf, beta_pdf, beta_quantile, ln_beta};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{Axis, SquareMatrix};
use crate::support::{has_support, has_total_support, positive_part};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaComponent {
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaMixture {
    components: Vec<BetaComponent>,
}

impl BetaMixture {
    /// Components as `(alpha, beta, weight)`; weights must sum to 1 within
    /// 1e-12.
    pub fn new(components: &[(f64, f64, f64)]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::arg("a mixture needs at least one component"));
        }
        let mut out = Vec::with_capacity(components.len());
        for &(alpha, beta, weight) in components {
            if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                return Err(Error::arg(format!("invalid Beta shape ({alpha}, {beta})")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::arg(format!(
                    "mixture weight {weight} must be positive"
                )));
            }
            out.push(BetaComponent {
                alpha,
                beta,
                weight,
            });
        }
        let total: f64 = out.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(BetaMixture { components: out })
    }

    /// Beta(20, 150) and Beta(300, 900), equal weights.
    pub fn source() -> Self {
        BetaMixture::new(&[(20.0, 150.0, 0.5), (300.0, 900.0, 0.5)]).expect("valid mixture")
    }

    /// Beta(120, 100) and Beta(85, 25), equal weights.
    pub fn target() -> Self {
        BetaMixture::new(&[(120.0, 100.0, 0.5), (85.0, 25.0, 0.5)]).expect("valid mixture")
    }

    pub fn components(&self) -> &[BetaComponent] {
        &self.components
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.components {
            s += c.weight * beta_cdf(c.alpha, c.beta, x)?;
        }
        Ok(s.clamp(0.0, 1.0))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.components {
            s += c.weight * beta_pdf(c.alpha, c.beta, x)?;
        }
        Ok(s)
    }

    /// Mixture quantile by bisection on the mixture cdf within `[lo, hi]`.
    pub fn quantile_in(&self, u: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::arg(format!(
                "probability level {u} is outside (0, 1)"
            )));
        }
        let mut best = (f64::INFINITY, lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f = self.cdf(mid)? - u;
            if f.abs() < best.0 {
                best = (f.abs(), mid);
            }
            if f == 0.0 || mid <= lo || mid >= hi {
                break;
            }
            if f > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if best.0 > 1e-10 {
            return Err(Error::Numeric(format!(
                "mixture quantile at {u} stalled with cdf error {:e}",
                best.0
            )));
        }
        Ok(best.1)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.quantile_in(u, 0.0, 1.0)
    }
}

/// Midpoint probability levels `(n - 1/2) / N`, `n = 1..=N`.
pub fn midpoint_levels(n: usize) -> Vec<f64> {
    (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect()
}

/// Quantiles of `mix` at the midpoint levels.
pub fn mixture_quantile_grid(mix: &BetaMixture, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::arg("a quantile grid needs at least 2 points"));
    }
    let mut out = Vec::with_capacity(n);
    let mut lo = 0.0;
    for u in midpoint_levels(n) {
        let x = mix.quantile_in(u, lo, 1.0)?;
        out.push(x);
        lo = x;
    }
    if out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Numeric(
            "quantile grid is not strictly increasing".into(),
        ));
    }
    Ok(out)
}

/// Quadratic cost `C_ij = (p_i - q_j)^2`.
pub fn build_cost(p: &[f64], q: &[f64]) -> Result<SquareMatrix> {
    if p.len() != q.len() {
        return Err(Error::arg(format!(
            "grids have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let n = p.len();
    let mut data = Vec::with_capacity(n * n);
    for &pi in p {
        for &qj in q {
            data.push((pi - qj) * (pi - qj));
        }
    }
    SquareMatrix::new(n, data)
}

/// Cost matrix of the Beta-mixture transport problem on `n` quantiles.
pub fn mixture_problem_cost(n: usize) -> Result<SquareMatrix> {
    let p = mixture_quantile_grid(&BetaMixture::source(), n)?;
    let q = mixture_quantile_grid(&BetaMixture::target(), n)?;
    build_cost(&p, &q)
}

/// `exp(-C / epsilon)` in binary64, underflow included.
#[derive(Debug, Clone)]
pub struct GibbsKernel {
    pub xi: SquareMatrix,
    pub epsilon: f64,
    /// Entries equal to exactly 0.0; subnormals count as positive.
    pub zero_count: usize,
    pub has_support: bool,
    pub has_total_support: bool,
}

impl GibbsKernel {
    pub fn n(&self) -> usize {
        self.xi.n()
    }

    pub fn min_positive_entry(&self) -> Option<f64> {
        self.xi.min_positive()
    }
}

fn exp_kernel(cost: &SquareMatrix, epsilon: f64) -> Result<SquareMatrix> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::arg(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    SquareMatrix::new(
        cost.n(),
        cost.data().iter().map(|c| (-c / epsilon).exp()).collect(),
    )
}

pub fn gibbs_kernel(cost: &SquareMatrix, epsilon: f64) -> Result<GibbsKernel> {
    let xi = exp_kernel(cost, epsilon)?;
    let zero_count = xi.data().iter().filter(|&&x| x == 0.0).count();
    Ok(GibbsKernel {
        has_support: has_support(&xi),
        has_total_support: has_total_support(&xi),
        xi,
        epsilon,
        zero_count,
    })
}

#[derive(Debug, Clone)]
pub struct OtSolution {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub coupling: SquareMatrix,
    /// Largest absolute deviation of the coupling's row and column sums from
    /// the marginals.
    pub marginal_err: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl OtSolution {
    pub fn summary(&self, epsilon: f64) -> OtSummary {
        OtSummary {
            n: self.u.len(),
            epsilon,
            iterations: self.iterations,
            converged: self.converged,
            marginal_err: self.marginal_err,
            total_mass: self.coupling.data().iter().sum(),
            u_min: self.u.iter().copied().fold(f64::INFINITY, f64::min),
            u_max: self.u.iter().copied().fold(0.0, f64::max),
            v_min: self.v.iter().copied().fold(f64::INFINITY, f64::min),
            v_max: self.v.iter().copied().fold(0.0, f64::max),
            coupling_zero_count: self.coupling.data().iter().filter(|&&x| x == 0.0).count(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OtSummary {
    pub n: usize,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub marginal_err: f64,
    pub total_mass: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub coupling_zero_count: usize,
}

fn check_marginal(name: &str, m: &[f64], n: usize) -> Result<()> {
    if m.len() != n {
        return Err(Error::arg(format!(
            "marginal {name} has length {}, kernel has order {n}",
            m.len()
        )));
    }
    if let Some(i) = m.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::arg(format!(
            "marginal {name} entry {} is not positive",
            i + 1
        )));
    }
    let s: f64 = m.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::arg(format!("marginal {name} sums to {s}, not 1")));
    }
    Ok(())
}

/// Sinkhorn iterations `u <- a / (xi v)`, `v <- b / (xi^T u)` from `v = 1`,
/// without any log-domain stabilization.
pub fn sinkhorn_ot(
    kernel: &GibbsKernel,
    a: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<OtSolution> {
    let xi = &kernel.xi;
    let n = xi.n();
    check_marginal("a", a, n)?;
    check_marginal("b", b, n)?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::arg("tol must be positive and max_iter at least 1"));
    }
    if let Some((axis, index)) = xi.first_null_line() {
        return Err(Error::Infeasible { axis, index });
    }

    let mut u = vec![0.0; n];
    let mut v = vec![1.0; n];
    let mut kv = vec![0.0; n];
    let mut ktu = vec![0.0; n];
    let mut err = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        for i in 0..n {
            kv[i] = xi.row(i).iter().zip(&v).map(|(x, vj)| x * vj).sum();
            u[i] = a[i] / kv[i];
        }
        ktu.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            for (acc, x) in ktu.iter_mut().zip(xi.row(i)) {
                *acc += x * u[i];
            }
        }
        for j in 0..n {
            v[j] = b[j] / ktu[j];
        }
        if let Some(bad) = u.iter().chain(&v).find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::Numeric(format!(
                "scaling vector entry became {bad} after {iterations} iterations"
            )));
        }
        err = marginal_error(xi, &u, &v, a, b);
        if err <= tol {
            break;
        }
    }
    let coupling = coupling(xi, &u, &v);
    Ok(OtSolution {
        u,
        v,
        coupling,
        marginal_err: err,
        iterations,
        converged: err <= tol,
    })
}

fn coupling(xi: &SquareMatrix, u: &[f64], v: &[f64]) -> SquareMatrix {
    let n = xi.n();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for (x, vj) in xi.row(i).iter().zip(v) {
            data.push(u[i] * x * vj);
        }
    }
    SquareMatrix::new(n, data).expect("products of nonnegative finite values")
}

fn marginal_error(xi: &SquareMatrix, u: &[f64], v: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = xi.n();
    let mut cols = vec![0.0; n];
    let mut err: f64 = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for (j, x) in xi.row(i).iter().enumerate() {
            let g = u[i] * x * v[j];
            r += g;
            cols[j] += g;
        }
        err = err.max((r - a[i]).abs());
    }
    for j in 0..n {
        err = err.max((cols[j] - b[j]).abs());
    }
    err
}

pub fn uniform_marginal(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// 60 logarithmically spaced values from 1 down to 1e-6.
pub fn default_eps_grid() -> Vec<f64> {
    log_grid(1.0, 1e-6, 60)
}

/// `count` logarithmically spaced values from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.log10(), lo.log10());
    (0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub zero_count: usize,
    pub has_support: bool,
    pub has_total_support: bool,
    /// The positive supported part of the kernel is the zero matrix.
    pub positive_part_null: bool,
    /// `None` when every entry underflowed.
    pub log10_min_positive_entry: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Largest grid epsilon at which support fails.
    pub first_failure: Option<f64>,
    /// Grid epsilon just above `first_failure`, where support still held.
    pub last_supported: Option<f64>,
    /// Once lost, support never comes back further down the grid.
    pub monotone: bool,
}

fn sweep_row(cost: &SquareMatrix, epsilon: f64) -> Result<SweepRow> {
    let k = gibbs_kernel(cost, epsilon)?;
    let plus_null = if k.has_total_support {
        false
    } else {
        positive_part(&k.xi).is_null()
    };
    Ok(SweepRow {
        epsilon,
        zero_count: k.zero_count,
        has_support: k.has_support,
        has_total_support: k.has_total_support,
        positive_part_null: plus_null,
        log10_min_positive_entry: k.min_positive_entry().map(f64::log10),
    })
}

/// Support diagnostics of `exp(-C / epsilon)` along a strictly descending
/// grid. `jobs` caps the worker threads (`None` uses the rayon default).
pub fn epsilon_support_threshold(
    cost: &SquareMatrix,
    eps_grid: &[f64],
    jobs: Option<usize>,
) -> Result<SweepReport> {
    if eps_grid.is_empty() {
        return Err(Error::arg("epsilon grid is empty"));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::arg("epsilon grid values must be positive"));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("epsilon grid must be strictly descending"));
    }
    let compute = || {
        eps_grid
            .par_iter()
            .map(|&e| sweep_row(cost, e))
            .collect::<Result<Vec<_>>>()
    };
    let rows = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InternalState(format!("thread pool: {e}")))?
            .install(compute)?,
        None => compute()?,
    };
    let first = rows.iter().position(|r| !r.has_support);
    let monotone = match first {
        Some(k) => rows[k..].iter().all(|r| !r.has_support),
        None => true,
    };
    Ok(SweepReport {
        first_failure: first.map(|k| rows[k].epsilon),
        last_supported: first
            .and_then(|k| k.checked_sub(1))
            .map(|k| rows[k].epsilon),
        monotone,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub source_pdf: f64,
    pub target_pdf: f64,
    pub source_cdf: f64,
    pub target_cdf: f64,
}

/// Densities and cdfs of both mixtures on `points` evenly spaced abscissae in
/// `[0, 1]`.
pub fn density_table(points: usize) -> Result<Vec<DensityRow>> {
    if points < 2 {
        return Err(Error::arg("need at least 2 abscissae"));
    }
    let (src, tgt) = (BetaMixture::source(), BetaMixture::target());
    (0..points)
        .map(|k| {
            let x = k as f64 / (points - 1) as f64;
            Ok(DensityRow {
                x,
                source_pdf: src.pdf(x)?,
                target_pdf: tgt.pdf(x)?,
                source_cdf: src.cdf(x)?,
                target_cdf: tgt.cdf(x)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileRow {
    pub n: usize,
    pub level: f64,
    pub source_quantile: f64,
    pub target_quantile: f64,
}

pub fn quantile_table(n: usize) -> Result<Vec<QuantileRow>> {
    let p = mixture_quantile_grid(&BetaMixture::source(), n)?;
    let q = mixture_quantile_grid(&BetaMixture::target(), n)?;
    Ok(midpoint_levels(n)
        .into_iter()
        .enumerate()
        .map(|(k, level)| QuantileRow {
            n: k + 1,
            level,
            source_quantile: p[k],
            target_quantile: q[k],
        })
        .collect())
}

/// Row or column of `xi` that is entirely zero, if any.
pub fn null_line(kernel: &GibbsKernel) -> Option<(Axis, usize)> {
    kernel.xi.first_null_line()
}
