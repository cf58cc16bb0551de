//! Dirichlet L-functions through the Hurwitz zeta function.
//!
//! ζ(s, a) is evaluated by Euler–Maclaurin summation with a rigorous bound
//! on the omitted remainder plus an allowance for floating-point rounding.
//! L(s, χ) is the q-term combination q^{−s} Σ χ(a) ζ(s, a/q), which covers
//! the whole complex plane. For non-principal χ the pole terms cancel and a
//! regularized Hurwitz value is used, so s = 1 is fine there.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::characters::{gauss_sum, DirichletCharacter};
use crate::error::{Error, Result};
use crate::numeric::{expm1, BoundedValue, ComplexSum, EPS};
use crate::special::{bernoulli_over_factorial, ln_gamma, GAMMA_REL_ERROR};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalSettings {
    /// Minimum number of directly summed terms K. The effective K is at
    /// least 2|Im s|.
    pub shift_terms: usize,
    /// Largest number of Euler–Maclaurin corrections (at most 30).
    pub bernoulli_terms: usize,
    pub target_abs_error: f64,
    /// How many times K may be doubled before giving up.
    pub max_doublings: u32,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { shift_terms: 16, bernoulli_terms: 30, target_abs_error: 1e-15, max_doublings: 8 }
    }
}

impl EvalSettings {
    pub fn with_target(target_abs_error: f64) -> Self {
        EvalSettings { target_abs_error, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.bernoulli_terms == 0 || self.bernoulli_terms > 30 {
            return Err(Error::Domain(format!(
                "bernoulli_terms must be in 1..=30, got {}",
                self.bernoulli_terms
            )));
        }
        if !(self.target_abs_error > 0.0) {
            return Err(Error::Domain("target_abs_error must be positive".into()));
        }
        Ok(())
    }

    /// The K actually used first for a given s.
    pub fn effective_shift(&self, s: Complex64) -> usize {
        self.shift_terms.max((2.0 * s.im.abs()).ceil() as usize).max(1)
    }
}

/// Hurwitz zeta ζ(s, a) for a ∈ (0, 1], s ≠ 1.
pub fn hurwitz_zeta(s: Complex64, a: f64, settings: &EvalSettings) -> Result<BoundedValue> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(Error::Pole("ζ(s, a) has a pole at s = 1".into()));
    }
    hurwitz_core(s, a, settings, false)
}

/// ζ(s, a) − 1/(s − 1), analytic everywhere.
pub fn hurwitz_zeta_regularized(s: Complex64, a: f64, settings: &EvalSettings) -> Result<BoundedValue> {
    hurwitz_core(s, a, settings, true)
}

fn hurwitz_core(s: Complex64, a: f64, settings: &EvalSettings, regularized: bool) -> Result<BoundedValue> {
    settings.validate()?;
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!("Hurwitz parameter a must lie in (0, 1], got {a}")));
    }
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Domain("s must be finite".into()));
    }
    let coeffs = bernoulli_over_factorial();
    let sigma = s.re;
    let mut k_terms = settings.effective_shift(s);
    let mut best = f64::INFINITY;
    for _ in 0..=settings.max_doublings {
        let x = k_terms as f64 + a;
        // Smallest B whose remainder bound meets the target.
        let mut rising = s; // (s)_{2j-1}
        let mut chosen = None;
        for b in 1..=settings.bernoulli_terms {
            if b > 1 {
                let k = (2 * b - 3) as f64;
                rising *= (s + k) * (s + k + 1.0);
            }
            let exponent = sigma + (2 * b) as f64 - 1.0;
            if exponent <= 0.0 {
                continue;
            }
            let rising_next = rising.norm() * (s + (2 * b - 1) as f64).norm();
            let bound = 4.0 * rising_next * (-((2 * b) as f64) * (2.0 * PI).ln() - exponent * x.ln()).exp()
                / exponent;
            best = best.min(bound);
            if bound <= settings.target_abs_error {
                chosen = Some((b, bound));
                break;
            }
        }
        if let Some((b, bound)) = chosen {
            return Ok(euler_maclaurin(s, a, k_terms, b, bound, regularized, coeffs));
        }
        k_terms = k_terms.saturating_mul(2);
    }
    Err(Error::Convergence(format!(
        "Hurwitz zeta at s = {s} did not reach {:.1e} with K = {} (best bound {best:.2e})",
        settings.target_abs_error,
        k_terms / 2
    )))
}

fn euler_maclaurin(
    s: Complex64,
    a: f64,
    k_terms: usize,
    b: usize,
    truncation: f64,
    regularized: bool,
    coeffs: &[f64],
) -> BoundedValue {
    let mut sum = ComplexSum::default();
    for k in 0..k_terms {
        sum.add((-s * (k as f64 + a).ln()).exp());
    }
    let direct_abs = sum.abs_total();
    let x = k_terms as f64 + a;
    let lx = x.ln();
    let x_pow = (-s * lx).exp(); // x^{-s}
    let one = Complex64::new(1.0, 0.0);
    let main = if regularized {
        // (x^{1-s} - 1)/(s - 1) = -log x · expm1(w)/w with w = (1 - s) log x
        let w = (one - s) * lx;
        let ratio = if w.norm() > 1e-8 { expm1(w) / w } else { one + w * 0.5 };
        -lx * ratio
    } else {
        x_pow * x / (s - 1.0)
    };
    let mut tail = ComplexSum::default();
    tail.add(main);
    tail.add(x_pow * 0.5);
    let mut rising = s;
    let mut x_odd = x_pow / x; // x^{-s-2j+1} for j = 1
    let inv_x2 = 1.0 / (x * x);
    for j in 1..=b {
        if j > 1 {
            let k = (2 * j - 3) as f64;
            rising *= (s + k) * (s + k + 1.0);
            x_odd *= inv_x2;
        }
        tail.add(rising * x_odd * coeffs[j]);
    }
    let value = sum.value() + tail.value();
    let rounding = EPS * (direct_abs + tail.abs_total()) * (4.0 + s.norm() * lx)
        + sum.error_bound()
        + tail.error_bound();
    BoundedValue::new(value, truncation + rounding)
}

/// L(s, χ) = q^{−s} Σ_{a=1..q} χ(a) ζ(s, a/q).
pub fn l_function(s: Complex64, chi: &DirichletCharacter, settings: &EvalSettings) -> Result<BoundedValue> {
    let q = chi.modulus();
    let principal = chi.is_principal();
    if principal && s == Complex64::new(1.0, 0.0) {
        return Err(Error::Pole("L(s, χ) for principal χ has a pole at s = 1".into()));
    }
    let mut acc = ComplexSum::default();
    let mut err = 0.0;
    let mut abs_total = 0.0;
    for a in 1..=q {
        let c = chi.eval_complex(a);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let h = if principal {
            hurwitz_zeta(s, a as f64 / q as f64, settings)?
        } else {
            hurwitz_zeta_regularized(s, a as f64 / q as f64, settings)?
        };
        acc.add(c * h.value);
        err += h.abs_error;
        abs_total += h.value.norm();
    }
    let lq = (q as f64).ln();
    let scale = (-s * lq).exp();
    let value = scale * acc.value();
    let rounding = EPS * scale.norm() * abs_total * (4.0 + s.norm() * lq) + scale.norm() * acc.error_bound();
    Ok(BoundedValue::new(value, scale.norm() * err + rounding))
}

/// Root number ε(χ) = τ(χ) / (i^a √q) for primitive χ.
pub fn root_number(chi: &DirichletCharacter) -> Result<Complex64> {
    let tau = gauss_sum(chi)?;
    let ia = if chi.parity() < 0 { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
    Ok(tau / (ia * (chi.modulus() as f64).sqrt()))
}

fn parity_shift(chi: &DirichletCharacter) -> f64 {
    if chi.parity() < 0 {
        1.0
    } else {
        0.0
    }
}

// Distance in s below which the completed function is averaged over a
// circle instead of multiplying a huge Γ value by a tiny L value.
const GAMMA_POLE_GUARD: f64 = 0.1;
const CIRCLE_RADIUS: f64 = 0.5;

/// Completed L-function Λ(s, χ) = (q/π)^{(s+a)/2} Γ((s+a)/2) L(s, χ).
pub fn completed_l(s: Complex64, chi: &DirichletCharacter, settings: &EvalSettings) -> Result<BoundedValue> {
    if !chi.is_primitive() {
        return Err(Error::Domain("the completed L-function needs a primitive character".into()));
    }
    let a = parity_shift(chi);
    if chi.modulus() == 1 {
        for pole in [0.0, 1.0] {
            if (s - pole).norm() < CIRCLE_RADIUS + 0.1 {
                return Err(Error::Pole(format!("Λ(s) for the trivial character has a pole at s = {pole}")));
            }
        }
    }
    let z = (s + a) * 0.5;
    let near_pole = z.re < 0.25 && (z.re - z.re.round()).abs() * 2.0 < GAMMA_POLE_GUARD
        && z.im.abs() * 2.0 < GAMMA_POLE_GUARD;
    if near_pole {
        return circle_average(s, chi, settings);
    }
    completed_direct(s, chi, settings)
}

fn completed_direct(s: Complex64, chi: &DirichletCharacter, settings: &EvalSettings) -> Result<BoundedValue> {
    let a = parity_shift(chi);
    let q = chi.modulus() as f64;
    let z = (s + a) * 0.5;
    let log_pref = z * (q / PI).ln() + ln_gamma(z);
    let pref = log_pref.exp();
    let l = l_function(s, chi, settings)?;
    let value = pref * l.value;
    let rel = GAMMA_REL_ERROR + 4.0 * EPS * (1.0 + z.norm() * (q / PI).ln().abs());
    Ok(BoundedValue::new(value, pref.norm() * l.abs_error + rel * value.norm()))
}

// Mean-value property of the entire function Λ on a circle; the aliasing
// error is estimated from the difference between 16 and 32 nodes.
fn circle_average(s: Complex64, chi: &DirichletCharacter, settings: &EvalSettings) -> Result<BoundedValue> {
    let n = 32;
    let mut vals = Vec::with_capacity(n);
    let mut err = 0.0f64;
    for k in 0..n {
        let w = Complex64::from_polar(CIRCLE_RADIUS, 2.0 * PI * k as f64 / n as f64);
        let v = completed_direct(s + w, chi, settings)?;
        err += v.abs_error;
        vals.push(v.value);
    }
    let mean32: Complex64 = vals.iter().sum::<Complex64>() / n as f64;
    let mean16: Complex64 = vals.iter().step_by(2).sum::<Complex64>() / (n / 2) as f64;
    let aliasing = (mean32 - mean16).norm();
    Ok(BoundedValue::new(mean32, err / n as f64 + aliasing + 4.0 * EPS * mean32.norm()))
}

#[derive(Clone, Copy, Debug)]
pub struct FunctionalEquationCheck {
    pub residual: f64,
    /// Combined propagated error of both sides.
    pub budget: f64,
    pub lhs: BoundedValue,
    pub rhs: BoundedValue,
    pub root_number: Complex64,
}

/// Mismatch |Λ(s, χ) − ε(χ) Λ(1 − s, χ̄)| together with its error budget.
pub fn functional_equation_residual(
    s: Complex64,
    chi: &DirichletCharacter,
    settings: &EvalSettings,
) -> Result<FunctionalEquationCheck> {
    if !chi.is_primitive() {
        return Err(Error::Domain("functional equation check needs a primitive character".into()));
    }
    let eps = root_number(chi)?;
    let lhs = completed_l(s, chi, settings)?;
    let rhs_raw = completed_l(Complex64::new(1.0, 0.0) - s, &chi.conj(), settings)?;
    let q = chi.modulus() as f64;
    let rhs = rhs_raw.scale(eps, 8.0 * EPS * q);
    let residual = (lhs.value - rhs.value).norm();
    Ok(FunctionalEquationCheck { residual, budget: lhs.abs_error + rhs.abs_error, lhs, rhs, root_number: eps })
}

#[derive(Clone, Copy, Debug)]
pub struct ReflectionCheck {
    /// |L(1 − σ − i(2πn + r), χ̄)| · log n
    pub lhs: f64,
    pub lhs_error: f64,
    /// |L(σ + i(2πn + r), χ)| / n^{1/2 − σ}
    pub rhs: f64,
    pub rhs_error: f64,
}

/// The two L-value magnitudes compared along the spike ordinates t = 2πn + r.
pub fn reflection_check(
    n: u64,
    sigma: f64,
    r: f64,
    chi: &DirichletCharacter,
    settings: &EvalSettings,
) -> Result<ReflectionCheck> {
    if n < 2 {
        return Err(Error::Precondition(format!("n must be at least 2, got {n}")));
    }
    if !(sigma > 0.0 && sigma <= 0.5) {
        return Err(Error::Precondition(format!("σ must lie in (0, 1/2], got {sigma}")));
    }
    if !(0.0..=sigma).contains(&r) {
        return Err(Error::Precondition(format!("r must lie in [0, σ], got {r}")));
    }
    let t = 2.0 * PI * n as f64 + r;
    let ln_n = (n as f64).ln();
    let left = l_function(Complex64::new(1.0 - sigma, -t), &chi.conj(), settings)?;
    let right = l_function(Complex64::new(sigma, t), chi, settings)?;
    let scale = (n as f64).powf(sigma - 0.5);
    Ok(ReflectionCheck {
        lhs: left.value.norm() * ln_n,
        lhs_error: left.abs_error * ln_n,
        rhs: right.value.norm() * scale,
        rhs_error: right.abs_error * scale,
    })
}
