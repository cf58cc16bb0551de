//! The quantitative pipeline: both sides of the Plancherel identity, the
//! Γ-moment identity, the spike scan at box hits, the moment sum over Q_T
//! and the σ-scaling fit.
//!
//! Quantities that rest on an empirical envelope or on extrapolation are
//! listed in the `heuristics` field of each report.

use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lfunction::{l_function, EvalSettings};
use crate::modchar::{ModifiedCharacter, PartialSumTrace};
use crate::numeric::{BoundedValue, FitReport, RealSum, EPS};
use crate::quad::{integrate, QuadSettings};
use crate::series::{envelope_constant, f_euler, f_euler_on_orbit, poles_of_inverse_ef};
use crate::special::{gamma_real, log_power_tail};
use crate::torus::{box_hits, TorusConfig};

/// Inflation applied to every heuristic tail estimate.
pub const TAIL_INFLATION: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaMoment {
    pub numeric: f64,
    pub abs_error: f64,
    pub closed_form: f64,
}

/// ∫_1^∞ (log x)^N x^{−1−σ} dx by quadrature in u = σ log x, next to the
/// closed form Γ(N+1)/σ^{N+1}.
pub fn gamma_moment(n: f64, sigma: f64) -> Result<GammaMoment> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("σ must be positive, got {sigma}")));
    }
    if !(n >= 0.0) {
        return Err(Error::Domain(format!("N must be non-negative, got {n}")));
    }
    let upper = n + 60.0;
    let breaks = [0.0, 1.0, n.max(1.0) + 1.0, n + 10.0, n + 25.0, upper];
    let mut breaks = breaks.to_vec();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let settings = QuadSettings { abs_tol: 0.0, rel_tol: 1e-13, ..Default::default() };
    let r = integrate(&|u: f64| if u == 0.0 { if n == 0.0 { 1.0 } else { 0.0 } } else { (n * u.ln() - u).exp() }, &breaks, &settings)?;
    // ∫_U^∞ u^N e^{-u} du ≤ U^N e^{-U} / (1 − N/U)
    let tail = (n * upper.ln() - upper).exp() / (1.0 - n / upper);
    let scale = sigma.powf(-n - 1.0);
    Ok(GammaMoment {
        numeric: r.value * scale,
        abs_error: (r.abs_error + tail) * scale,
        closed_form: gamma_real(n + 1.0) * scale,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LhsResult {
    pub value: BoundedValue,
    /// Σ_{n<X} |M(n)|² (n^{−2σ} − (n+1)^{−2σ})/(2σ)
    pub head: f64,
    pub tail_estimate: f64,
    pub envelope_constant: f64,
    pub heuristics: Vec<String>,
}

/// ∫_1^∞ |M(x)|² x^{−1−2σ} dx from a dense trace.
pub fn plancherel_lhs(f: &ModifiedCharacter, sigma: f64, trace: &PartialSumTrace) -> Result<LhsResult> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("σ must be positive, got {sigma}")));
    }
    if !trace.is_dense() {
        return Err(Error::Domain("the Plancherel LHS needs a dense partial-sum trace".into()));
    }
    let x = trace.x_max;
    let two_sigma = 2.0 * sigma;
    let mut head = RealSum::default();
    for n in 1..x {
        let nf = n as f64;
        // n^{-2σ} − (n+1)^{-2σ} = n^{-2σ} · (−expm1(−2σ log1p(1/n)))
        let w = (-two_sigma * nf.ln()).exp() * -(-two_sigma * (1.0 / nf).ln_1p()).exp_m1() / two_sigma;
        head.add(trace.m(n).norm_sqr() * w);
    }
    let k = f.s_size() as u32;
    let c = envelope_constant(f, trace);
    let xf = x as f64;
    let bound = TAIL_INFLATION * c * c * log_power_tail(2 * k, two_sigma, xf);
    // Mean |M|² over the last decade, continued as a constant.
    let start = (x / 10).max(1);
    let count = (x - start + 1) as f64;
    let mean_sq = (start..=x).map(|n| trace.m(n).norm_sqr()).sum::<f64>() / count;
    let estimate = mean_sq * xf.powf(-two_sigma) / two_sigma;
    let head_v = head.value();
    let rounding = head.error_bound() + 8.0 * EPS * head_v;
    Ok(LhsResult {
        value: BoundedValue::real(head_v + estimate, bound.max(estimate) + rounding),
        head: head_v,
        tail_estimate: estimate,
        envelope_constant: c,
        heuristics: vec![
            format!("tail bound from the empirical envelope |M(x)| <= C (log x)^{k}, C = {c:.6e}, inflated x{TAIL_INFLATION}"),
            "tail estimate continues the last-decade mean of |M|^2".into(),
        ],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhsSettings {
    pub quad: QuadSettings,
    pub eval: EvalSettings,
    /// Width of the uniform initial panels.
    pub panel_width: f64,
    /// Samples per side used for the tail estimate.
    pub tail_samples: usize,
}

impl Default for RhsSettings {
    fn default() -> Self {
        RhsSettings {
            quad: QuadSettings { abs_tol: 1e-10, rel_tol: 1e-9, ..Default::default() },
            eval: EvalSettings::with_target(1e-13),
            panel_width: 1.0,
            tail_samples: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhsResult {
    pub value: BoundedValue,
    pub quadrature: f64,
    pub quadrature_error: f64,
    pub tail_estimate: f64,
    pub panels: usize,
    pub evaluations: usize,
    pub heuristics: Vec<String>,
}

/// (1/2π) ∫ |F(σ+it)|²/|σ+it|² dt over |t| ≤ T_cut plus an extrapolated tail.
pub fn plancherel_rhs(f: &ModifiedCharacter, sigma: f64, t_cut: f64, settings: &RhsSettings) -> Result<RhsResult> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("σ must be positive, got {sigma}")));
    }
    if !(t_cut > 1.0) {
        return Err(Error::Domain(format!("T_cut must exceed 1, got {t_cut}")));
    }
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let max_rel = Mutex::new(0.0f64);
    let eval = |t: f64| -> f64 {
        let s = Complex64::new(sigma, t);
        match f_euler(f, s, &settings.eval) {
            Ok(v) => {
                let n = v.value.norm();
                if n > 0.0 {
                    let mut m = max_rel.lock().expect("lock");
                    *m = m.max(v.abs_error / n);
                }
                v.value.norm_sqr() / s.norm_sqr() / (2.0 * PI)
            }
            Err(e) => {
                failure.lock().expect("lock").get_or_insert(e);
                0.0
            }
        }
    };
    let mut breaks: Vec<f64> = Vec::new();
    let panels = (2.0 * t_cut / settings.panel_width).ceil().max(2.0) as usize;
    for i in 0..=panels {
        breaks.push(-t_cut + 2.0 * t_cut * i as f64 / panels as f64);
    }
    breaks.extend(poles_of_inverse_ef(f, -t_cut, t_cut)?.into_iter().map(|p| p.t));
    // spikes at t = 2πn for the box hits n
    if let Ok(cfg) = TorusConfig::from_modified(f) {
        let n_hi = (t_cut / (2.0 * PI)).floor() as u64;
        if n_hi >= 1 && sigma < 1.0 {
            for n in box_hits(&cfg, 1, n_hi, sigma)? {
                let t = 2.0 * PI * n as f64;
                breaks.push(t);
                breaks.push(-t);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = integrate(&eval, &breaks, &settings.quad)?;
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    // Tail: |F|² grows at most like t^γ on average, γ = max(0, 1 − 2σ).
    let gamma = (1.0 - 2.0 * sigma).max(0.0);
    let mut tail = 0.0;
    for side in [1.0, -1.0] {
        let k = settings.tail_samples.max(2);
        let mut mean = 0.0;
        for i in 0..k {
            let t = side * (t_cut / 10.0 + (t_cut - t_cut / 10.0) * (i as f64 + 0.5) / k as f64);
            let s = Complex64::new(sigma, t);
            let v = f_euler(f, s, &settings.eval)?;
            mean += v.value.norm_sqr() * (t_cut / t.abs()).powf(gamma);
        }
        mean /= k as f64;
        tail += mean / (2.0 * PI * t_cut * (1.0 - gamma));
    }
    let rel = *max_rel.lock().expect("lock");
    let err = q.abs_error + TAIL_INFLATION * tail + 2.0 * rel * q.value + 8.0 * EPS * q.value;
    Ok(RhsResult {
        value: BoundedValue::real(q.value + tail, err),
        quadrature: q.value,
        quadrature_error: q.abs_error,
        tail_estimate: tail,
        panels: q.panels,
        evaluations: q.evaluations,
        heuristics: vec![format!(
            "tail beyond |t| = {t_cut} extrapolates the last-decade mean of |F|^2 t^-{gamma:.3}, inflated x{TAIL_INFLATION}"
        )],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlancherelReport {
    pub sigma: f64,
    pub lhs: BoundedValue,
    pub rhs: BoundedValue,
    pub relative_gap: f64,
    /// (lhs.abs_error + rhs.abs_error) / max(|lhs|, |rhs|)
    pub relative_budget: f64,
    pub x_used: u64,
    pub t_used: f64,
    pub heuristics: Vec<String>,
}

impl PlancherelReport {
    /// Whether the two sides agree within their errors plus `slack` relative.
    pub fn agrees(&self, slack: f64) -> bool {
        self.relative_gap <= self.relative_budget + slack
    }
}

pub fn plancherel_check(
    f: &ModifiedCharacter,
    sigma: f64,
    trace: &PartialSumTrace,
    t_cut: f64,
    settings: &RhsSettings,
) -> Result<PlancherelReport> {
    let lhs = plancherel_lhs(f, sigma, trace)?;
    let rhs = plancherel_rhs(f, sigma, t_cut, settings)?;
    let scale = lhs.value.value.re.abs().max(rhs.value.value.re.abs());
    let mut heuristics = lhs.heuristics.clone();
    heuristics.extend(rhs.heuristics.iter().cloned());
    Ok(PlancherelReport {
        sigma,
        lhs: lhs.value,
        rhs: rhs.value,
        relative_gap: (lhs.value.value - rhs.value.value).norm() / scale,
        relative_budget: (lhs.value.abs_error + rhs.value.abs_error) / scale,
        x_used: trace.x_max,
        t_used: t_cut,
        heuristics,
    })
}

/// Which box defines a spike.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoxPolicy {
    /// The cube [0, 1/log T)^{|S|} with T = e^{1/σ}, i.e. side σ.
    QtCube,
    /// The wider cube [0, 10σ)^{|S|}; only meaningful for σ < 0.1.
    WideBox,
}

impl BoxPolicy {
    pub fn side(&self, sigma: f64) -> f64 {
        match self {
            BoxPolicy::QtCube => sigma,
            BoxPolicy::WideBox => 10.0 * sigma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpikeHit {
    pub n: u64,
    /// |1/E_f| · σ^{|S|}
    pub inv_ef_scaled: f64,
    /// |E_χ|
    pub e_chi: f64,
    /// |F(s)|²/|s|² · n^{1+2σ} (log n)² σ^{2|S|} at s = σ + i(2πn + r)
    pub normalized_ratio: f64,
    /// |L(1 − σ − 2πin, χ̄)| · log n
    pub reflected_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpikeReport {
    pub sigma: f64,
    /// T = e^{1/σ}
    pub t_param: f64,
    pub window: (u64, u64),
    pub policy: BoxPolicy,
    pub box_side: f64,
    pub r_averaged: bool,
    pub hits: Vec<SpikeHit>,
    pub min_inv_ef_scaled: Option<f64>,
    pub min_e_chi: Option<f64>,
    pub min_normalized_ratio: Option<f64>,
    pub median_normalized_ratio: Option<f64>,
    pub min_reflected_l: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpikeSettings {
    pub policy: BoxPolicy,
    /// Average the ratio over r ∈ {0, σ/2, σ} instead of r = 0.
    pub r_average: bool,
    pub eval: EvalSettings,
}

impl Default for SpikeSettings {
    fn default() -> Self {
        SpikeSettings { policy: BoxPolicy::QtCube, r_average: false, eval: EvalSettings::with_target(1e-12) }
    }
}

fn min_of(v: impl Iterator<Item = f64>) -> Option<f64> {
    v.fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))))
}

/// Evaluates the spike diagnostics at every box hit n in the window.
pub fn spike_scan(
    f: &ModifiedCharacter,
    sigma: f64,
    window: (u64, u64),
    settings: &SpikeSettings,
) -> Result<SpikeReport> {
    if !(sigma > 0.0 && sigma <= 0.3) {
        return Err(Error::Precondition(format!("spike scan needs 0 < σ ≤ 0.3, got {sigma}")));
    }
    let side = settings.policy.side(sigma);
    if side >= 1.0 {
        return Err(Error::Precondition(format!(
            "box side {side} is not below 1 for σ = {sigma}; the box would cover the torus"
        )));
    }
    let (n_lo, n_hi) = window;
    if n_lo < 2 || n_lo > n_hi {
        return Err(Error::Precondition(format!("invalid window [{n_lo}, {n_hi}]; need 2 ≤ n_lo ≤ n_hi")));
    }
    let cfg = TorusConfig::from_modified(f)?;
    let hit_ns = box_hits(&cfg, n_lo, n_hi, side)?;
    let k = f.s_size() as i32;
    let conj = f.base().conj();
    let rs: Vec<f64> = if settings.r_average { vec![0.0, sigma / 2.0, sigma] } else { vec![0.0] };
    let mut hits = Vec::with_capacity(hit_ns.len());
    for n in hit_ns {
        let nf = n as f64;
        let ln = nf.ln();
        let mut ratio = 0.0;
        let mut first = None;
        for &r in &rs {
            let (fv, ef) = f_euler_on_orbit(f, &cfg, sigma, n, r, &settings.eval)?;
            let s = Complex64::new(sigma, 2.0 * PI * nf + r);
            let norm = (-(1.0 + 2.0 * sigma) * ln).exp();
            ratio += fv.value.norm_sqr() / s.norm_sqr() / norm * ln * ln * sigma.powi(2 * k);
            first.get_or_insert(ef);
        }
        ratio /= rs.len() as f64;
        let ef = first.expect("at least one r");
        let refl = l_function(Complex64::new(1.0 - sigma, -2.0 * PI * nf), &conj, &settings.eval)?;
        hits.push(SpikeHit {
            n,
            inv_ef_scaled: sigma.powi(k) / ef.e_f.norm(),
            e_chi: ef.e_chi.norm(),
            normalized_ratio: ratio,
            reflected_l: refl.value.norm() * ln,
        });
    }
    let mut flags = Vec::new();
    if hits.is_empty() {
        flags.push("no box hits in window".into());
    }
    if f.s_size() <= 3 {
        flags.push("lower bound vacuous at this |S|".into());
    }
    if settings.r_average {
        flags.push("ratio averaged over r in {0, sigma/2, sigma}".into());
    }
    let mut ratios: Vec<f64> = hits.iter().map(|h| h.normalized_ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let median = if ratios.is_empty() { None } else { Some(ratios[ratios.len() / 2]) };
    Ok(SpikeReport {
        sigma,
        t_param: (1.0 / sigma).exp(),
        window,
        policy: settings.policy,
        box_side: side,
        r_averaged: settings.r_average,
        min_inv_ef_scaled: min_of(hits.iter().map(|h| h.inv_ef_scaled)),
        min_e_chi: min_of(hits.iter().map(|h| h.e_chi)),
        min_normalized_ratio: ratios.first().copied(),
        median_normalized_ratio: median,
        min_reflected_l: min_of(hits.iter().map(|h| h.reflected_l)),
        hits,
        flags,
    })
}

/// The n-range of the moment sum: T ≤ 2πn ≤ T^κ with T = e^{1/σ}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MomentWindow {
    /// κ = 5.
    Full,
    Truncated { kappa: f64 },
}

impl MomentWindow {
    pub fn kappa(&self) -> f64 {
        match self {
            MomentWindow::Full => 5.0,
            MomentWindow::Truncated { kappa } => *kappa,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub sigma: f64,
    pub window_policy: MomentWindow,
    pub n_range: (u64, u64),
    pub hit_count: u64,
    /// Σ_{n∈Q_T, window} n^{−1−2σ} (log n)^{−2}
    pub sum: f64,
    /// σ^{|S|+1}
    pub predicted_scale: f64,
    pub ratio: f64,
    pub flags: Vec<String>,
}

/// Largest n the moment sum will enumerate by default.
pub const DEFAULT_MOMENT_BUDGET: u64 = 1_000_000_000;

/// The moment sum over box hits of Q_T inside the window.
pub fn moment_accumulate(
    f: &ModifiedCharacter,
    sigma: f64,
    window: MomentWindow,
    n_budget: u64,
) -> Result<MomentReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain(format!("σ must lie in (0, 1), got {sigma}")));
    }
    let kappa = window.kappa();
    if !(kappa > 1.0 && kappa <= 5.0) {
        return Err(Error::Domain(format!("window exponent must lie in (1, 5], got {kappa}")));
    }
    let t = (1.0 / sigma).exp();
    let hi_real = (kappa / sigma).exp() / (2.0 * PI);
    if !(hi_real <= n_budget as f64) {
        let min_sigma = kappa / (2.0 * PI * n_budget as f64).ln();
        return Err(Error::Resource(format!(
            "window reaches n = {hi_real:.3e}, over the budget {n_budget}; this policy is feasible for σ ≥ {min_sigma:.4}"
        )));
    }
    let n_lo = ((t / (2.0 * PI)).ceil() as u64).max(2);
    let n_hi = hi_real.floor() as u64;
    let cfg = TorusConfig::from_modified(f)?;
    let mut flags = vec![format!("n >= 2 enforced (log n = 0 at n = 1)")];
    let hits = if n_lo <= n_hi { box_hits(&cfg, n_lo, n_hi, sigma.min(1.0))? } else { Vec::new() };
    let mut sum = RealSum::default();
    for &n in &hits {
        let nf = n as f64;
        let ln = nf.ln();
        sum.add((-(1.0 + 2.0 * sigma) * ln).exp() / (ln * ln));
    }
    if hits.is_empty() {
        flags.push("no box hits in window".into());
    }
    let predicted = sigma.powi(f.s_size() as i32 + 1);
    Ok(MomentReport {
        sigma,
        window_policy: window,
        n_range: (n_lo, n_hi),
        hit_count: hits.len() as u64,
        sum: sum.value(),
        predicted_scale: predicted,
        ratio: sum.value() / predicted,
        flags,
    })
}

/// Slope of log(lhs) against log(1/σ): the fitted N + 1 of lhs ≈ c/σ^{N+1}.
pub fn omega_fit(sigmas: &[f64], values: &[f64]) -> Result<FitReport> {
    if sigmas.len() != values.len() {
        return Err(Error::Fit("σ grid and values differ in length".into()));
    }
    if sigmas.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", sigmas.len())));
    }
    if sigmas.iter().chain(values).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Fit("σ values and moments must be positive and finite".into()));
    }
    let lo = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sigmas.iter().copied().fold(0.0, f64::max);
    if hi < 2.0 * lo {
        return Err(Error::Fit(format!("σ grid spans [{lo}, {hi}], less than a factor 2")));
    }
    let inv: Vec<f64> = sigmas.iter().map(|s| 1.0 / s).collect();
    let mut fit = FitReport::log_log(&inv, values, 1.0);
    fit.xs = sigmas.to_vec();
    fit.flags.push(format!(
        "implied partial-sum exponent (fitted - 1)/2 = {:.6}",
        (fit.exponent - 1.0) / 2.0
    ));
    Ok(fit)
}
