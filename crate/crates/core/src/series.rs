//! The Dirichlet series F(s) = Σ f(n) n^{−s} of a modified character,
//! evaluated two independent ways, and the pole lattice of 1/E_f.
//!
//! The Euler-product route uses F(s) = E_χ(s)/E_f(s) · L(s, χ) with the
//! finite products E_g(s) = Π_{p∈S} (1 − g(p) p^{−s}). The integral route
//! sums the partial sums against x^{−s−1} exactly on each unit interval.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::Frac128;
use crate::lfunction::{l_function, EvalSettings};
use crate::modchar::{ModifiedCharacter, PartialSumTrace, Theta};
use crate::numeric::{expm1, BoundedValue, ComplexSum, EPS};
use crate::phase::cis_turns;
use crate::special::log_power_tail;
use crate::torus::TorusConfig;

/// |E_f(s)| below this is treated as a pole of F.
pub const POLE_THRESHOLD: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrimeFactor {
    pub p: u64,
    /// 1 − f(p) p^{−s}
    pub f_factor: Complex64,
    /// 1 − χ(p) p^{−s}
    pub chi_factor: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EulerFactors {
    pub e_f: Complex64,
    pub e_chi: Complex64,
    pub factors: Vec<PrimeFactor>,
    /// Relative rounding error bounds of e_f and e_chi.
    pub e_f_rel_error: f64,
    pub e_chi_rel_error: f64,
}

impl EulerFactors {
    fn from_factors(factors: Vec<PrimeFactor>, term_rel: &[f64]) -> EulerFactors {
        let e_f = factors.iter().map(|f| f.f_factor).product();
        let e_chi = factors.iter().map(|f| f.chi_factor).product();
        let rel = |pick: &dyn Fn(&PrimeFactor) -> Complex64| -> f64 {
            factors
                .iter()
                .zip(term_rel)
                .map(|(f, r)| {
                    let v = pick(f);
                    // |1 − v| = |factor|; the term g(p)p^{-s} = 1 − factor
                    (r * (Complex64::new(1.0, 0.0) - v).norm() + EPS) / v.norm()
                })
                .sum::<f64>()
                + 2.0 * EPS * factors.len() as f64
        };
        let e_f_rel_error = rel(&|f| f.f_factor);
        let e_chi_rel_error = rel(&|f| f.chi_factor);
        EulerFactors { e_f, e_chi, factors, e_f_rel_error, e_chi_rel_error }
    }
}

/// Both finite Euler products at s, with the per-prime breakdown.
pub fn euler_factors(f: &ModifiedCharacter, s: Complex64) -> EulerFactors {
    let mut factors = Vec::new();
    let mut rel = Vec::new();
    for p in f.primes() {
        let lp = (p as f64).ln();
        let ps = (-s * lp).exp();
        factors.push(PrimeFactor {
            p,
            f_factor: Complex64::new(1.0, 0.0) - f.prime_value(p) * ps,
            chi_factor: Complex64::new(1.0, 0.0) - f.base().eval_complex(p) * ps,
        });
        rel.push(4.0 * EPS * (1.0 + s.norm() * lp));
    }
    EulerFactors::from_factors(factors, &rel)
}

/// The Euler products at s = σ + i(2πn + r), with the phase of p^{−2πin}
/// taken from the fixed-point orbit so that it stays exact for large n.
/// `cfg` must be the torus of `f`.
pub fn euler_factors_on_orbit(
    f: &ModifiedCharacter,
    cfg: &TorusConfig,
    sigma: f64,
    n: u64,
    r: f64,
) -> Result<EulerFactors> {
    if cfg.primes() != f.primes().as_slice() {
        return Err(Error::Domain("torus configuration does not match the modified character".into()));
    }
    let mut factors = Vec::new();
    let mut rel = Vec::new();
    for (i, p) in f.primes().into_iter().enumerate() {
        let lp = (p as f64).ln();
        // frac(n log p), exact up to quantization
        let phase = cfg.alpha()[i].mul_int(n as i128);
        let chi_p = f.base().eval_complex(p);
        // p^{-s} = p^{-σ} e^{-i r log p} e^{-2πi n log p}
        let ps = Complex64::from_polar((-sigma * lp).exp(), -r * lp) * cis_turns(-phase.to_f64());
        // f(p) p^{-2πin} = e^{-2πi(n log p − θ_p)}: use the orbit coordinate directly
        let coord = phase.sub(theta_fraction(f, p));
        let f_term = Complex64::from_polar((-sigma * lp).exp(), -r * lp) * cis_turns(-coord.to_f64());
        factors.push(PrimeFactor {
            p,
            f_factor: Complex64::new(1.0, 0.0) - f_term,
            chi_factor: Complex64::new(1.0, 0.0) - chi_p * ps,
        });
        rel.push(4.0 * EPS * (1.0 + (sigma.abs() + r.abs()) * lp));
    }
    Ok(EulerFactors::from_factors(factors, &rel))
}

fn theta_fraction(f: &ModifiedCharacter, p: u64) -> Frac128 {
    match f.theta(p) {
        Some(Theta::Exact(r)) => Frac128::from_ratio(r.numerator(), r.denominator()),
        Some(Theta::Float(x)) => Frac128::from_f64(x),
        None => Frac128::ZERO,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoleLocation {
    pub p: u64,
    pub z: i64,
    /// t = 2π(z + θ_p)/log p
    pub t: f64,
}

fn pole_t(p: u64, z: i64, theta: f64) -> f64 {
    2.0 * PI * (z as f64 + theta) / (p as f64).ln()
}

/// The pole of 1/E_f on Re(s) = 0 nearest to ordinate t.
pub fn nearest_pole(f: &ModifiedCharacter, t: f64) -> Option<PoleLocation> {
    f.modifications()
        .iter()
        .map(|(&p, th)| {
            let theta = th.turns();
            let z = (t * (p as f64).ln() / (2.0 * PI) - theta).round() as i64;
            PoleLocation { p, z, t: pole_t(p, z, theta) }
        })
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
}

/// All poles of 1/E_f with ordinate in [t_lo, t_hi], sorted by t.
pub fn poles_of_inverse_ef(f: &ModifiedCharacter, t_lo: f64, t_hi: f64) -> Result<Vec<PoleLocation>> {
    if !(t_lo.is_finite() && t_hi.is_finite()) || t_lo > t_hi {
        return Err(Error::Domain(format!("invalid ordinate range [{t_lo}, {t_hi}]")));
    }
    let mut out = Vec::new();
    if t_lo == t_hi {
        return Ok(out);
    }
    for (&p, th) in f.modifications() {
        let theta = th.turns();
        let scale = (p as f64).ln() / (2.0 * PI);
        let z_lo = (t_lo * scale - theta).floor() as i64 - 1;
        let z_hi = (t_hi * scale - theta).ceil() as i64 + 1;
        for z in z_lo..=z_hi {
            let t = pole_t(p, z, theta);
            if t >= t_lo && t <= t_hi {
                out.push(PoleLocation { p, z, t });
            }
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.p.cmp(&b.p)));
    Ok(out)
}

fn pole_error(f: &ModifiedCharacter, s: Complex64, e_f: Complex64) -> Error {
    let near = nearest_pole(f, s.im)
        .map(|pl| format!("; nearest lattice point p = {}, z = {}, t = {}", pl.p, pl.z, pl.t))
        .unwrap_or_default();
    Error::Pole(format!("|E_f({s})| = {:.3e} is below {POLE_THRESHOLD:e}{near}", e_f.norm()))
}

/// F(s) = E_χ(s)/E_f(s) · L(s, χ).
pub fn f_euler(f: &ModifiedCharacter, s: Complex64, settings: &EvalSettings) -> Result<BoundedValue> {
    let ef = euler_factors(f, s);
    combine(f, s, &ef, settings)
}

/// F at s = σ + i(2πn + r) using orbit-exact Euler factors.
pub fn f_euler_on_orbit(
    f: &ModifiedCharacter,
    cfg: &TorusConfig,
    sigma: f64,
    n: u64,
    r: f64,
    settings: &EvalSettings,
) -> Result<(BoundedValue, EulerFactors)> {
    let ef = euler_factors_on_orbit(f, cfg, sigma, n, r)?;
    let s = Complex64::new(sigma, 2.0 * PI * n as f64 + r);
    let v = combine(f, s, &ef, settings)?;
    Ok((v, ef))
}

fn combine(f: &ModifiedCharacter, s: Complex64, ef: &EulerFactors, settings: &EvalSettings) -> Result<BoundedValue> {
    if ef.e_f.norm() < POLE_THRESHOLD {
        return Err(pole_error(f, s, ef.e_f));
    }
    let l = l_function(s, f.base(), settings)?;
    let ratio = ef.e_chi / ef.e_f;
    let rel = ef.e_f_rel_error + ef.e_chi_rel_error + 2.0 * EPS;
    Ok(l.scale(ratio, rel))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralSettings {
    /// Inflation applied to the empirical envelope constant C_f.
    pub safety: f64,
    /// If set, a tail bound above this is a resource error.
    pub target_abs_error: Option<f64>,
}

impl Default for IntegralSettings {
    fn default() -> Self {
        IntegralSettings { safety: 4.0, target_abs_error: None }
    }
}

/// Empirical envelope constant C_f = sup |M(y)|/(log y)^{|S|} over
/// y ∈ [max(3, √X), X].
pub fn envelope_constant(f: &ModifiedCharacter, trace: &PartialSumTrace) -> f64 {
    let y0 = ((trace.x_max as f64).sqrt() as u64).max(3);
    let c = trace.envelope_constant(f.s_size() as u32, y0);
    if c > 0.0 {
        c
    } else {
        // X < 3: fall back to the largest |M| seen
        trace.running_sup.last().copied().unwrap_or(1.0).max(1.0)
    }
}

fn integral_tail(s: Complex64, k: u32, c: f64, m_x: f64, x: f64) -> f64 {
    let sigma = s.re;
    s.norm() * (c * log_power_tail(k, sigma, x) + m_x * x.powf(-sigma) / sigma)
}

/// F(s) = s∫_1^∞ M(x) x^{−s−1} dx for Re s > 0, truncated at X.
///
/// The head Σ_{n<X} M(n)(n^{−s} − (n+1)^{−s}) + M(X) X^{−s} is exact; the
/// remainder s∫_X^∞ (M(x) − M(X)) x^{−s−1} dx is bounded through the
/// envelope |M(x)| ≤ C (log x)^{|S|} with the inflated empirical C.
pub fn f_integral(
    f: &ModifiedCharacter,
    s: Complex64,
    trace: &PartialSumTrace,
    settings: &IntegralSettings,
) -> Result<BoundedValue> {
    if !(s.re > 0.0) {
        return Err(Error::Domain(format!("the integral route needs Re(s) > 0, got {s}")));
    }
    if !trace.is_dense() {
        return Err(Error::Domain("the integral route needs a dense partial-sum trace (stride 1)".into()));
    }
    let x = trace.x_max;
    let mut acc = ComplexSum::default();
    let mut abs_total = 0.0;
    for n in 1..x {
        let nf = n as f64;
        let ln = nf.ln();
        // n^{-s} − (n+1)^{-s} = n^{-s} · (−expm1(−s log1p(1/n)))
        let diff = (-s * ln).exp() * -expm1(-s * (1.0 / nf).ln_1p());
        let term = trace.m(n) * diff;
        abs_total += term.norm();
        acc.add(term);
    }
    let xf = x as f64;
    let last = trace.m(x) * (-s * xf.ln()).exp();
    abs_total += last.norm();
    acc.add(last);
    let k = f.s_size() as u32;
    let c = settings.safety * envelope_constant(f, trace);
    let tail = integral_tail(s, k, c, trace.m(x).norm(), xf);
    let rounding = EPS * abs_total * (8.0 + s.norm() * xf.ln()) + acc.error_bound() + trace.sum_error_bound * xf.powf(-s.re);
    if let Some(target) = settings.target_abs_error {
        if tail > target {
            let mut needed = xf;
            while integral_tail(s, k, c, trace.m(x).norm(), needed) > target && needed < 1e18 {
                needed *= 2.0;
            }
            return Err(Error::Resource(format!(
                "tail bound {tail:.3e} exceeds the target {target:.1e}; X of about {needed:.3e} is required"
            )));
        }
    }
    Ok(BoundedValue::new(acc.value(), tail + rounding))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::enumerate_characters;
    use crate::modchar::{make_modified, parse_mods, partial_sums};

    fn example(mods: &str) -> ModifiedCharacter {
        let chi = enumerate_characters(4).unwrap().remove(1);
        make_modified(&chi, parse_mods(mods).unwrap()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn factor_examples() {
        let f = example("3:0");
        let e = euler_factors(&f, c(2.0, 0.0));
        assert!((e.e_f - c(8.0 / 9.0, 0.0)).norm() < 1e-15);
        assert!((e.e_chi - c(10.0 / 9.0, 0.0)).norm() < 1e-15);
        assert_eq!(euler_factors(&f, c(0.0, 0.0)).e_f, c(0.0, 0.0));
        let e = euler_factors(&f, c(50.0, 0.0));
        assert!((e.e_f - 1.0).norm() < 1e-14 && (e.e_chi - 1.0).norm() < 1e-14);
    }

    #[test]
    fn euler_route_values() {
        let f = example("3:0");
        let s = EvalSettings::default();
        let catalan = 0.915_965_594_177_219_015_054_6;
        let v = f_euler(&f, c(2.0, 0.0), &s).unwrap();
        assert!((v.value.re - 1.25 * catalan).abs() < 1e-13);
        let v = f_euler(&f, c(1.0, 0.0), &s).unwrap();
        assert!((v.value.re - PI / 2.0).abs() < 1e-13);
        let err = f_euler(&f, c(0.0, 0.0), &s).unwrap_err();
        assert!(matches!(err, Error::Pole(ref m) if m.contains("p = 3")));
    }

    #[test]
    fn pole_lattice() {
        let f = example("3:0");
        let p = poles_of_inverse_ef(&f, -0.1, 0.1).unwrap();
        assert_eq!(p, vec![PoleLocation { p: 3, z: 0, t: 0.0 }]);
        assert!(poles_of_inverse_ef(&f, 100.0, 100.0).unwrap().is_empty());
        let g = example("3:1/3");
        let p = poles_of_inverse_ef(&g, 0.0, 3.0).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].t - 2.0 * PI / 3.0 / 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn integral_route_small() {
        let f = example("3:0");
        let trace = partial_sums(&f, 1, 1).unwrap();
        let v = f_integral(&f, c(2.0, 0.0), &trace, &IntegralSettings::default()).unwrap();
        assert_eq!(v.value, c(1.0, 0.0));
        assert!(v.abs_error > 0.1);
        let trace = partial_sums(&f, 20_000, 1).unwrap();
        let v = f_integral(&f, c(2.0, 0.0), &trace, &IntegralSettings::default()).unwrap();
        let e = f_euler(&f, c(2.0, 0.0), &EvalSettings::default()).unwrap();
        assert!(v.overlaps(&e));
        let strict = IntegralSettings { target_abs_error: Some(1e-30), ..Default::default() };
        assert!(matches!(f_integral(&f, c(2.0, 0.0), &trace, &strict), Err(Error::Resource(_))));
        assert!(f_integral(&f, c(0.0, 1.0), &trace, &IntegralSettings::default()).is_err());
    }

    #[test]
    fn orbit_factors_match_float_factors() {
        let f = example("3:1/3");
        let cfg = TorusConfig::from_modified(&f).unwrap();
        for n in [2u64, 17, 400] {
            let a = euler_factors_on_orbit(&f, &cfg, 0.3, n, 0.1).unwrap();
            let b = euler_factors(&f, c(0.3, 2.0 * PI * n as f64 + 0.1));
            assert!((a.e_f - b.e_f).norm() < 1e-11 && (a.e_chi - b.e_chi).norm() < 1e-11);
        }
    }
}
