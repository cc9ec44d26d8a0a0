use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const CF_TOL: f64 = 1e-14;
const CF_MAX_TERMS: usize = 300;
const TINY: f64 = 1e-300;
const QUANTILE_MAX_ITER: usize = 200;
const QUANTILE_TOL: f64 = 1e-12;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn check_shape(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::arg(format!(
            "Beta shape parameters must be positive and finite, got ({a}, {b})"
        )));
    }
    Ok(())
}

/// Remainder of Stirling's series for `ln Γ(x)`, `x >= 10`.
fn stirling_tail(x: f64) -> f64 {
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let r = 1.0 / (x * x);
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * r + c;
    }
    acc / x
}

/// `ln B(a, b)`. Large arguments go through Stirling differences so the big
/// `ln Γ` terms cancel analytically.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let s = p + q;
    if p >= 10.0 {
        let corr = stirling_tail(p) + stirling_tail(q) - stirling_tail(s);
        -0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * (p / s).ln() + q * (-p / s).ln_1p()
    } else if q >= 10.0 {
        let corr = stirling_tail(q) - stirling_tail(s);
        ln_gamma(p) + corr + p - p * s.ln() + (q - 0.5) * (-p / s).ln_1p()
    } else {
        ln_gamma(p) + ln_gamma(q) - ln_gamma(s)
    }
}

fn continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_TERMS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            return Ok(h);
        }
    }
    Err(Error::Numeric(format!(
        "incomplete beta continued fraction did not settle in {CF_MAX_TERMS} terms at a={a}, b={b}, x={x}"
    )))
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg(format!("x = {x} is outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * continued_fraction(a, b, x)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * continued_fraction(b, a, 1.0 - x)? / b)
    }
}

/// Beta density; at the endpoints it is the one-sided limit (possibly
/// infinite).
pub fn beta_pdf(a: f64, b: f64, x: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg(format!("x = {x} is outside [0, 1]")));
    }
    let edge = |shape: f64, other: f64| {
        if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            other
        } else {
            0.0
        }
    };
    if x == 0.0 {
        return Ok(edge(a, b));
    }
    if x == 1.0 {
        return Ok(edge(b, a));
    }
    Ok(((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp())
}

/// Solves `I_x(a, b) = u` by Newton steps kept inside a shrinking bisection
/// bracket.
pub fn beta_quantile(a: f64, b: f64, u: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::arg(format!(
            "probability level {u} is outside (0, 1)"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = a / (a + b);
    let mut best = (f64::INFINITY, x);
    for _ in 0..QUANTILE_MAX_ITER {
        let f = beta_cdf(a, b, x)? - u;
        if f.abs() < best.0 {
            best = (f.abs(), x);
        }
        if f.abs() <= 0.1 * QUANTILE_TOL {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let pdf = beta_pdf(a, b, x)?;
        let newton = x - f / pdf;
        x = if pdf > 0.0 && pdf.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            mid
        };
    }
    if best.0 <= QUANTILE_TOL {
        Ok(best.1)
    } else {
        Err(Error::Numeric(format!(
            "Beta({a}, {b}) quantile at {u} stalled with cdf error {:e}",
            best.0
        )))
    }
}
