//! Special functions: Bernoulli numbers, complex log-Gamma, and the
//! logarithmic-power tail integrals used by the envelope bounds.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Largest Bernoulli index kept in the table.
pub const MAX_BERNOULLI: usize = 60;

/// Exact Bernoulli numbers B_0..B_60 (convention B_1 = +1/2), computed once
/// with the Akiyama–Tanigawa recurrence.
pub fn bernoulli_exact() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n_max = MAX_BERNOULLI;
        let mut a: Vec<BigRational> = Vec::with_capacity(n_max + 1);
        let mut out = Vec::with_capacity(n_max + 1);
        for m in 0..=n_max {
            a.push(BigRational::new(BigInt::from(1), BigInt::from(m + 1)));
            for j in (1..=m).rev() {
                let diff = &a[j - 1] - &a[j];
                a[j - 1] = diff * BigRational::from_integer(BigInt::from(j));
            }
            out.push(a[0].clone());
        }
        out
    })
}

/// B_{2j} / (2j)! as doubles, index j = 0..=30.
pub fn bernoulli_over_factorial() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let b = bernoulli_exact();
        let mut fact = BigInt::from(1);
        let mut out = Vec::new();
        for n in 0..=MAX_BERNOULLI {
            if n > 0 {
                fact *= BigInt::from(n);
            }
            if n % 2 == 0 {
                let r = &b[n] / BigRational::from_integer(fact.clone());
                out.push(r.to_f64().unwrap_or(0.0));
            }
        }
        out
    })
}

/// B_{2j} as doubles, index j = 0..=30.
pub fn bernoulli_even() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        bernoulli_exact()
            .iter()
            .step_by(2)
            .map(|b| if b.is_zero() { 0.0 } else { b.to_f64().unwrap_or(f64::NAN) })
            .collect()
    })
}

/// Relative accuracy claimed for [`ln_gamma`] after exponentiation, folded
/// into downstream error budgets.
pub const GAMMA_REL_ERROR: f64 = 1e-13;

const STIRLING_SHIFT: f64 = 15.0;

/// log Γ(z) on some branch (only exp(log Γ) is meaningful). Uses recurrence
/// up to Re z ≥ 15, the Stirling series with ten Bernoulli corrections, and
/// reflection for Re z < 1/2. Infinite at the poles z = 0, −1, −2, ….
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let ls = ln_sin_pi(z);
        return Complex64::new(PI.ln(), 0.0) - ls - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < STIRLING_SHIFT {
        shift += w.ln();
        w += 1.0;
    }
    stirling(w) - shift
}

fn stirling(w: Complex64) -> Complex64 {
    let b = bernoulli_even();
    let mut series = Complex64::new(0.0, 0.0);
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for k in 1..=10 {
        let kk = (2 * k) as f64;
        series += pow * (b[k] / (kk * (kk - 1.0)));
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series
}

/// log sin(πz), stable for large |Im z|.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if z.im > 15.0 {
        let e = (2.0 * PI * i * z).exp();
        Complex64::new(0.5, 0.0).ln() + i * (PI / 2.0) - i * PI * z + (Complex64::new(1.0, 0.0) - e).ln()
    } else if z.im < -15.0 {
        let e = (-2.0 * PI * i * z).exp();
        Complex64::new(0.5, 0.0).ln() - i * (PI / 2.0) + i * PI * z + (Complex64::new(1.0, 0.0) - e).ln()
    } else {
        (PI * z).sin().ln()
    }
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// Γ(x) for real x > 0.
pub fn gamma_real(x: f64) -> f64 {
    ln_gamma(Complex64::new(x, 0.0)).exp().re
}

/// ∫_X^∞ (log x)^k x^{−1−σ} dx = Γ(k+1, σ log X) / σ^{k+1} for integer k ≥ 0.
pub fn log_power_tail(k: u32, sigma: f64, x: f64) -> f64 {
    let z = sigma * x.max(1.0).ln();
    // Γ(k+1, z) = k! e^{-z} Σ_{j≤k} z^j / j!
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=k {
        term *= z / j as f64;
        sum += term;
    }
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    fact * (-z).exp() * sum / sigma.powi(k as i32 + 1)
}
