//! The rotation n ↦ nα − θ (mod 1) on the d-torus, with α = (log p)_{p∈S}.
//!
//! Coordinates are 128-bit fixed-point fractions, so the orbit is computed
//! by exact modular arithmetic; the only error is the quantization of the
//! stored α and θ, at most (n + 1)·2^−128 per coordinate. Boxes are
//! half-open, [0, β).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::is_prime;
use crate::error::{Error, Result};
use crate::fixed::{log_fraction, Frac128};
use crate::modchar::{ModifiedCharacter, Theta};
use crate::numeric::FitReport;

/// Largest orbit index accepted: beyond it the quantization error
/// n·2^−127 would exceed 10^−20.
pub const MAX_ORBIT_INDEX: u64 = 1 << 60;

const SCAN_CHUNK: u64 = 1 << 18;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusConfig {
    primes: Vec<u64>,
    alpha: Vec<Frac128>,
    int_parts: Vec<u64>,
    theta: Vec<Frac128>,
}

impl TorusConfig {
    /// α = frac(log p) for the given increasing primes, θ in turns.
    pub fn new(primes: &[u64], theta: &[f64]) -> Result<Self> {
        let theta: Vec<Frac128> = theta.iter().map(|t| Frac128::from_f64(*t)).collect();
        Self::from_fractions(primes, theta)
    }

    pub fn from_fractions(primes: &[u64], theta: Vec<Frac128>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::Domain("the torus needs at least one prime".into()));
        }
        if theta.len() != primes.len() {
            return Err(Error::Domain(format!(
                "{} phases given for {} primes",
                theta.len(),
                primes.len()
            )));
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("primes must be distinct and increasing".into()));
        }
        let mut alpha = Vec::with_capacity(primes.len());
        let mut int_parts = Vec::with_capacity(primes.len());
        for &p in primes {
            if !is_prime(p) {
                return Err(Error::Domain(format!("{p} is not prime")));
            }
            let lf = log_fraction(p)?;
            alpha.push(lf.to_frac128());
            int_parts.push(lf.int_part);
        }
        Ok(TorusConfig { primes: primes.to_vec(), alpha, int_parts, theta })
    }

    /// The torus attached to a modified character: S and its phases θ_p.
    pub fn from_modified(f: &ModifiedCharacter) -> Result<Self> {
        let primes = f.primes();
        let theta = f
            .modifications()
            .values()
            .map(|t| match t {
                Theta::Exact(r) => Frac128::from_ratio(r.numerator(), r.denominator()),
                Theta::Float(x) => Frac128::from_f64(*x),
            })
            .collect();
        Self::from_fractions(&primes, theta)
    }

    /// Arbitrary rotation vector, bypassing the log-prime construction.
    /// Intended for controls such as α = 1/2 or the constant sequence α = 0.
    pub fn with_alpha(alpha: &[f64], theta: &[f64]) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != theta.len() {
            return Err(Error::Domain("alpha and theta must have the same non-zero length".into()));
        }
        Ok(TorusConfig {
            primes: Vec::new(),
            alpha: alpha.iter().map(|a| Frac128::from_f64(*a)).collect(),
            int_parts: vec![0; alpha.len()],
            theta: theta.iter().map(|t| Frac128::from_f64(*t)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Empty for configurations built with [`TorusConfig::with_alpha`].
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn alpha(&self) -> &[Frac128] {
        &self.alpha
    }

    pub fn int_parts(&self) -> &[u64] {
        &self.int_parts
    }

    pub fn theta(&self) -> &[Frac128] {
        &self.theta
    }

    /// frac(m·α) for an integer vector m.
    pub fn linear_form(&self, m: &[i64]) -> Frac128 {
        m.iter().zip(&self.alpha).fold(Frac128::ZERO, |acc, (mi, a)| acc.add(a.mul_int(*mi as i128)))
    }

    fn theta_form(&self, m: &[i64]) -> Frac128 {
        m.iter().zip(&self.theta).fold(Frac128::ZERO, |acc, (mi, t)| acc.add(t.mul_int(*mi as i128)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusPoint {
    pub coords: Vec<Frac128>,
    /// Bound on the per-coordinate quantization error.
    pub error_bound: f64,
}

impl TorusPoint {
    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64()).collect()
    }
}

impl Serialize for Frac128 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

fn check_index(n: u64) -> Result<()> {
    if n > MAX_ORBIT_INDEX {
        return Err(Error::Precision(format!(
            "orbit index {n} exceeds the fixed-point budget {MAX_ORBIT_INDEX}"
        )));
    }
    Ok(())
}

pub fn orbit_error_bound(n: u64) -> f64 {
    (n as f64 + 1.0) * 2f64.powi(-128)
}

/// frac(nα − θ) coordinatewise.
pub fn orbit_point(cfg: &TorusConfig, n: u64) -> Result<TorusPoint> {
    check_index(n)?;
    let coords = cfg
        .alpha
        .iter()
        .zip(&cfg.theta)
        .map(|(a, t)| a.mul_int(n as i128).sub(*t))
        .collect();
    Ok(TorusPoint { coords, error_bound: orbit_error_bound(n) })
}

fn eps_fraction(eps: f64) -> Result<Option<Frac128>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("box side must lie in (0, 1], got {eps}")));
    }
    Ok(if eps == 1.0 { None } else { Some(Frac128::from_f64(eps)) })
}

// Walks n = lo..=hi, counting (and optionally recording) box hits.
fn scan_chunk(cfg: &TorusConfig, lo: u64, hi: u64, eps: Option<Frac128>, hits: &mut Vec<u64>, count_only: &mut u64, keep: bool) {
    let mut point: Vec<Frac128> =
        cfg.alpha.iter().zip(&cfg.theta).map(|(a, t)| a.mul_int(lo as i128).sub(*t)).collect();
    let mut n = lo;
    loop {
        let inside = match eps {
            None => true,
            Some(e) => point.iter().all(|c| *c < e),
        };
        if inside {
            *count_only += 1;
            if keep {
                hits.push(n);
            }
        }
        if n == hi {
            break;
        }
        for (c, a) in point.iter_mut().zip(&cfg.alpha) {
            *c = c.add(*a);
        }
        n += 1;
    }
}

fn chunks(lo: u64, hi: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut a = lo;
    while a <= hi {
        let b = a.saturating_add(SCAN_CHUNK - 1).min(hi);
        out.push((a, b));
        if b == hi {
            break;
        }
        a = b + 1;
    }
    out
}

/// All n ∈ [n_lo, n_hi] whose orbit point lies in [0, eps)^d.
pub fn box_hits(cfg: &TorusConfig, n_lo: u64, n_hi: u64, eps: f64) -> Result<Vec<u64>> {
    let e = eps_fraction(eps)?;
    check_index(n_hi)?;
    if n_lo > n_hi {
        return Ok(Vec::new());
    }
    let parts: Vec<Vec<u64>> = chunks(n_lo, n_hi)
        .into_par_iter()
        .map(|(a, b)| {
            let mut hits = Vec::new();
            let mut count = 0;
            scan_chunk(cfg, a, b, e, &mut hits, &mut count, true);
            hits
        })
        .collect();
    Ok(parts.concat())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxCount {
    pub count: u64,
    pub expected: f64,
    pub deviation: f64,
}

/// Number of n ∈ [1, x] hitting [0, eps)^d, against the volume prediction.
pub fn count_q(cfg: &TorusConfig, x: u64, eps: f64) -> Result<BoxCount> {
    let e = eps_fraction(eps)?;
    check_index(x)?;
    let count = if x == 0 {
        0
    } else {
        chunks(1, x)
            .into_par_iter()
            .map(|(a, b)| {
                let mut count = 0;
                scan_chunk(cfg, a, b, e, &mut Vec::new(), &mut count, false);
                count
            })
            .sum()
    };
    let expected = x as f64 * eps.powi(cfg.dim() as i32);
    Ok(BoxCount { count, expected, deviation: (count as f64 - expected).abs() })
}

/// Orbit points for n = lo..=hi, one column per coordinate.
pub fn orbit_columns(cfg: &TorusConfig, lo: u64, hi: u64) -> Result<Vec<Vec<Frac128>>> {
    check_index(hi)?;
    let mut cols = Vec::with_capacity(cfg.dim());
    for (a, t) in cfg.alpha.iter().zip(&cfg.theta) {
        let mut c = a.mul_int(lo as i128).sub(*t);
        let mut col = Vec::with_capacity((hi.saturating_sub(lo) + 1) as usize);
        if lo <= hi {
            for _ in lo..=hi {
                col.push(c);
                c = c.add(*a);
            }
        }
        cols.push(col);
    }
    Ok(cols)
}

/// Largest point set handled by the exact star discrepancy, per dimension.
pub fn exact_limit(d: usize) -> Option<usize> {
    match d {
        1 => Some(10_000_000),
        2 => Some(5_000),
        3 => Some(1_000),
        _ => None,
    }
}

/// Which limit realizes the supremum at the witnessing corner β.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoxSide {
    /// Points on the upper faces counted, i.e. the limit of [0, β + ε).
    Closed,
    Open,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub n_points: usize,
    pub exact_dstar: Option<f64>,
    pub worst_box: Option<Vec<f64>>,
    pub worst_side: Option<BoxSide>,
    pub et_bound: Option<f64>,
    pub y_cutoff: Option<u64>,
    pub c_d: Option<f64>,
    /// The C_d/y part of the bound.
    pub inverse_y_term: Option<f64>,
    /// (m, |S_m|/r(m)) for every frequency with m in the upper half-space.
    pub per_m_terms: Option<Vec<(Vec<i64>, f64)>>,
}

/// Exact star discrepancy of a point set, sup over anchored boxes [0, β).
pub fn exact_star_discrepancy(points: &[TorusPoint]) -> Result<DiscrepancyReport> {
    let d = points.first().map(|p| p.coords.len()).unwrap_or(0);
    if points.iter().any(|p| p.coords.len() != d) {
        return Err(Error::Domain("points of mixed dimension".into()));
    }
    let cols: Vec<Vec<Frac128>> = (0..d).map(|k| points.iter().map(|p| p.coords[k]).collect()).collect();
    exact_star_discrepancy_columns(&cols)
}

/// As [`exact_star_discrepancy`], with the coordinates given columnwise.
pub fn exact_star_discrepancy_columns(cols: &[Vec<Frac128>]) -> Result<DiscrepancyReport> {
    let d = cols.len();
    let n = cols.first().map(Vec::len).unwrap_or(0);
    if n == 0 {
        return Err(Error::Domain("star discrepancy of an empty point set".into()));
    }
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::Domain("coordinate columns of different lengths".into()));
    }
    let limit = exact_limit(d).ok_or_else(|| {
        Error::Capability(format!("exact star discrepancy is not available in dimension {d}; use the ET bound"))
    })?;
    if n > limit {
        return Err(Error::Capability(format!(
            "exact star discrepancy in dimension {d} is limited to {limit} points (got {n}); use the ET bound"
        )));
    }
    let (value, beta, side) = if d == 1 { star_1d(&cols[0]) } else { star_grid(cols) };
    Ok(DiscrepancyReport {
        n_points: n,
        exact_dstar: Some(value),
        worst_box: Some(beta),
        worst_side: Some(side),
        ..Default::default()
    })
}

fn star_1d(col: &[Frac128]) -> (f64, Vec<f64>, BoxSide) {
    let mut v = col.to_vec();
    v.sort_unstable();
    let nf = v.len() as f64;
    let mut best = (f64::NEG_INFINITY, vec![1.0], BoxSide::Open);
    let mut consider = |val: f64, beta: f64, side: BoxSide| {
        if val > best.0 {
            best = (val, vec![beta], side);
        }
    };
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let b = v[i].to_f64();
        consider(j as f64 / nf - b, b, BoxSide::Closed);
        consider(b - i as f64 / nf, b, BoxSide::Open);
        i = j;
    }
    consider(1.0 - v.len() as f64 / nf, 1.0, BoxSide::Open);
    best
}

struct Grid {
    // Sorted distinct coordinates followed by the value 1.
    values: Vec<f64>,
}

fn star_grid(cols: &[Vec<Frac128>]) -> (f64, Vec<f64>, BoxSide) {
    let d = cols.len();
    let n = cols[0].len();
    let mut grids = Vec::with_capacity(d);
    let mut idx: Vec<[u32; 3]> = vec![[0; 3]; n];
    for (k, col) in cols.iter().enumerate() {
        let mut uniq = col.clone();
        uniq.sort_unstable();
        uniq.dedup();
        for (i, c) in col.iter().enumerate() {
            idx[i][k] = uniq.binary_search(c).expect("present") as u32;
        }
        let mut values: Vec<f64> = uniq.iter().map(|u| u.to_f64()).collect();
        values.push(1.0);
        grids.push(Grid { values });
    }
    let mut best = (f64::NEG_INFINITY, vec![0u32; d], BoxSide::Open);
    for side in [BoxSide::Closed, BoxSide::Open] {
        let mut pts = idx.clone();
        let mut corner = vec![0u32; d];
        let (v, w) = sweep(&mut pts, 0, 1.0, side, &grids, n as f64, &mut corner);
        if v > best.0 {
            best = (v, w, side);
        }
    }
    let beta = best.1.iter().enumerate().map(|(k, i)| grids[k].values[*i as usize]).collect();
    (best.0, beta, best.2)
}

// Best value over corners whose first `level` coordinates are fixed in
// `corner`; `pts` holds exactly the points inside the box in those
// coordinates.
fn sweep(
    pts: &mut [[u32; 3]],
    level: usize,
    prefix_vol: f64,
    side: BoxSide,
    grids: &[Grid],
    nf: f64,
    corner: &mut Vec<u32>,
) -> (f64, Vec<u32>) {
    let d = grids.len();
    let g = &grids[level].values;
    let mut best = (f64::NEG_INFINITY, corner.clone());
    pts.sort_unstable_by_key(|p| p[level]);
    if level + 2 == d {
        let last = &grids[d - 1].values;
        let mut hist = vec![0u32; last.len()];
        let mut added = 0;
        for (i, gi) in g.iter().enumerate() {
            let i = i as u32;
            while added < pts.len()
                && (pts[added][level] < i || (side == BoxSide::Closed && pts[added][level] == i))
            {
                hist[pts[added][d - 1] as usize] += 1;
                added += 1;
            }
            let pv = prefix_vol * gi;
            let mut below = 0u32; // points with last index < j
            for (j, gj) in last.iter().enumerate() {
                let val = match side {
                    BoxSide::Closed => (below + hist[j]) as f64 / nf - pv * gj,
                    BoxSide::Open => pv * gj - below as f64 / nf,
                };
                if val > best.0 {
                    corner[level] = i;
                    corner[d - 1] = j as u32;
                    best = (val, corner.clone());
                }
                below += hist[j];
            }
        }
        return best;
    }
    let mut cut = 0;
    for (i, gi) in g.iter().enumerate() {
        let i = i as u32;
        while cut < pts.len() && (pts[cut][level] < i || (side == BoxSide::Closed && pts[cut][level] == i)) {
            cut += 1;
        }
        corner[level] = i;
        let mut sub = pts[..cut].to_vec();
        let r = sweep(&mut sub, level + 1, prefix_vol * gi, side, grids, nf, corner);
        if r.0 > best.0 {
            best = r;
        }
    }
    best
}

/// Default Erdős–Turán–Koksma constant C_d = 2·(3/2)^d.
pub fn default_etk_constant(d: usize) -> f64 {
    2.0 * 1.5f64.powi(d as i32)
}

/// Largest number of frequencies the ET bound will enumerate.
pub const MAX_FREQUENCIES: u64 = 200_000_000;

/// |Σ_{n≤x} e^{2πi n β}| for β = frac(m·α), computed in closed form.
fn geometric_modulus(beta: Frac128, x: u64) -> f64 {
    if beta == Frac128::ZERO {
        return x as f64;
    }
    let tx = beta.mul_int(x as i128).dist_to_int().to_f64();
    let tb = beta.dist_to_int().to_f64();
    ((PI * tx).sin() / (PI * tb).sin()).abs()
}

// Calls `visit` for every non-zero m ∈ [−y, y]^d whose first non-zero
// coordinate is positive.
fn for_each_half_space(d: usize, y: i64, mut visit: impl FnMut(&[i64])) {
    let mut m = vec![-y; d];
    m[0] = 0;
    loop {
        let first = m.iter().find(|v| **v != 0);
        if matches!(first, Some(v) if *v > 0) {
            visit(&m);
        }
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if m[k] < y {
                m[k] += 1;
                break;
            }
            m[k] = if k == 0 { 0 } else { -y };
        }
    }
}

/// Erdős–Turán–Koksma upper bound on the star discrepancy of the first x
/// orbit points: C_d (1/y + (1/x) Σ_{0<|m|∞≤y} |S_m| / r(m)).
pub fn et_bound(
    cfg: &TorusConfig,
    x: u64,
    y_cutoff: u64,
    c_d: Option<f64>,
    keep_terms: bool,
) -> Result<DiscrepancyReport> {
    if y_cutoff == 0 {
        return Err(Error::Domain("y_cutoff must be at least 1".into()));
    }
    if x == 0 {
        return Err(Error::Domain("x must be at least 1".into()));
    }
    let d = cfg.dim();
    let freqs = (2.0 * y_cutoff as f64 + 1.0).powi(d as i32);
    if freqs > MAX_FREQUENCIES as f64 {
        return Err(Error::Resource(format!(
            "{freqs:.3e} frequencies exceed the limit {MAX_FREQUENCIES}; lower y"
        )));
    }
    let c = c_d.unwrap_or_else(|| default_etk_constant(d));
    let mut sum = 0.0;
    let mut terms = Vec::new();
    for_each_half_space(d, y_cutoff as i64, |m| {
        let r: f64 = m.iter().map(|v| (v.unsigned_abs().max(1)) as f64).product();
        let t = geometric_modulus(cfg.linear_form(m), x) / r;
        sum += 2.0 * t;
        if keep_terms {
            terms.push((m.to_vec(), t));
        }
    });
    let inverse_y = c / y_cutoff as f64;
    Ok(DiscrepancyReport {
        n_points: x as usize,
        et_bound: Some(inverse_y + c * sum / x as f64),
        y_cutoff: Some(y_cutoff),
        c_d: Some(c),
        inverse_y_term: Some(inverse_y),
        per_m_terms: keep_terms.then_some(terms),
        ..Default::default()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpSum {
    /// Σ_{n=1..x} e^{2πi m·(nα − θ)}
    pub value: Complex64,
    /// 2/|e^{2πi m·α} − 1|, a bound on |value| for every x.
    pub bound: f64,
    /// The weaker 1/(2‖m·α‖).
    pub coarse_bound: f64,
    /// ‖m·α‖, distance to the nearest integer.
    pub distance: f64,
}

/// The orbit exponential sum in closed form.
pub fn exp_sum(cfg: &TorusConfig, m: &[i64], x: u64) -> Result<ExpSum> {
    if m.len() != cfg.dim() {
        return Err(Error::Domain(format!("frequency of length {} for dimension {}", m.len(), cfg.dim())));
    }
    if m.iter().all(|v| *v == 0) {
        return Err(Error::Domain("frequency vector must be non-zero".into()));
    }
    let beta = cfg.linear_form(m);
    let phi = cfg.theta_form(m);
    let distance = beta.dist_to_int().to_f64();
    if beta == Frac128::ZERO {
        let value = Complex64::from_polar(x as f64, -2.0 * PI * phi.to_f64());
        return Ok(ExpSum { value, bound: f64::INFINITY, coarse_bound: f64::INFINITY, distance });
    }
    // e^{2πi(β−φ)}(e^{2πixβ} − 1)/(e^{2πiβ} − 1)
    //   = e^{2πi(β/2 + {xβ}/2 − φ)} sin(π{xβ}) / sin(πβ)
    let tx = beta.mul_int(x as i128);
    let phase = Frac128(beta.0 >> 1).add(Frac128(tx.0 >> 1)).sub(phi);
    let num = (PI * tx.dist_to_int().to_f64()).sin();
    let den = (PI * distance).sin();
    let value = Complex64::from_polar(num / den, 2.0 * PI * phase.to_f64());
    Ok(ExpSum { value, bound: 1.0 / den, coarse_bound: 1.0 / (2.0 * distance), distance })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BakerStep {
    /// |m|∞
    pub norm: u64,
    /// min ‖m·α‖ over 0 < |m|∞ ≤ norm (m₀ taken as the nearest integer).
    pub min_distance: f64,
    pub m: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BakerProfile {
    /// Record minima: the points where the running minimum drops.
    pub staircase: Vec<BakerStep>,
    /// Fit of log min_distance against log |m|∞; `exponent` is κ̂.
    pub fit: FitReport,
    /// ĉ = e^{intercept}
    pub c_hat: f64,
    pub exhaustive: bool,
    pub max_norm: u64,
}

/// Exhaustive search is used while (2M+1)^d stays below this.
pub const EXHAUSTIVE_BUDGET: f64 = 2e9;

/// Empirical profile of min ‖m·α‖ against |m|∞ ≤ M.
pub fn baker_profile(cfg: &TorusConfig, max_norm: u64) -> Result<BakerProfile> {
    if max_norm == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    let d = cfg.dim();
    let exhaustive = (2.0 * max_norm as f64 + 1.0).powi(d as i32) <= EXHAUSTIVE_BUDGET;
    let candidates: Vec<(u64, Frac128, Vec<i64>)> = if exhaustive {
        exhaustive_minima(cfg, max_norm)
    } else if d <= 6 {
        lattice_shortlist(cfg, max_norm)
    } else {
        return Err(Error::Capability(format!(
            "Baker profile in dimension {d} with M = {max_norm} is beyond both the exhaustive and lattice routes"
        )));
    };
    let mut staircase: Vec<BakerStep> = Vec::new();
    let mut sorted = candidates;
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = Frac128(u128::MAX);
    for (norm, dist, m) in sorted {
        if dist < best {
            best = dist;
            staircase.push(BakerStep { norm, min_distance: dist.to_f64(), m });
        }
    }
    let xs: Vec<f64> = staircase.iter().map(|s| s.norm as f64).collect();
    let ys: Vec<f64> = staircase.iter().map(|s| s.min_distance.max(f64::MIN_POSITIVE)).collect();
    let mut fit = if xs.len() >= 2 {
        FitReport::log_log(&xs, &ys, -1.0)
    } else {
        FitReport {
            exponent: f64::NAN,
            intercept: f64::NAN,
            residuals: vec![],
            r2: f64::NAN,
            xs,
            ys,
            flags: vec!["fewer than two records; no fit".into()],
        }
    };
    fit.flags.push("EMPIRICAL".into());
    fit.flags.push("m0 reduced to the nearest integer".into());
    if !exhaustive {
        fit.flags.push("lattice shortlist, not exhaustive".into());
    }
    let c_hat = fit.intercept.exp();
    Ok(BakerProfile { staircase, fit, c_hat, exhaustive, max_norm })
}

// For each norm k the smallest ‖m·α‖ over the half-space with |m|∞ = k.
fn exhaustive_minima(cfg: &TorusConfig, max_norm: u64) -> Vec<(u64, Frac128, Vec<i64>)> {
    let d = cfg.dim();
    let big = max_norm as i64;
    let mut best: Vec<(Frac128, Vec<i64>)> = vec![(Frac128(u128::MAX), vec![]); max_norm as usize + 1];
    let last = cfg.alpha[d - 1];
    let outer_dims = d - 1;
    let mut outer = vec![0i64; outer_dims];
    if outer_dims > 0 {
        outer[0] = 0;
        for v in outer.iter_mut().skip(1) {
            *v = -big;
        }
    }
    loop {
        let first = outer.iter().find(|v| **v != 0);
        let all_zero = first.is_none();
        let positive = matches!(first, Some(v) if *v > 0);
        if all_zero || positive {
            let outer_norm = outer.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            let base = outer
                .iter()
                .zip(&cfg.alpha)
                .fold(Frac128::ZERO, |acc, (mi, a)| acc.add(a.mul_int(*mi as i128)));
            let start = if all_zero { 1 } else { -big };
            let mut val = base.add(last.mul_int(start as i128));
            for ml in start..=big {
                let norm = outer_norm.max(ml.unsigned_abs()) as usize;
                let dist = val.dist_to_int();
                if dist < best[norm].0 {
                    let mut m = outer.clone();
                    m.push(ml);
                    best[norm] = (dist, m);
                }
                val = val.add(last);
            }
        }
        // advance the outer odometer
        let mut k = outer_dims;
        let done = loop {
            if k == 0 {
                break true;
            }
            k -= 1;
            if outer[k] < big {
                outer[k] += 1;
                break false;
            }
            outer[k] = if k == 0 { 0 } else { -big };
        };
        if done {
            break;
        }
    }
    best.into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, (_, m))| !m.is_empty())
        .map(|(k, (dist, m))| (k as u64, dist, m))
        .collect()
}

// Short vectors of the lattice spanned by (e_i, C·α_i) and (0, C) over a
// ladder of scales C, reduced with LLL in double precision.
fn lattice_shortlist(cfg: &TorusConfig, max_norm: u64) -> Vec<(u64, Frac128, Vec<i64>)> {
    let d = cfg.dim();
    let alpha: Vec<f64> = cfg.alpha.iter().map(|a| a.to_f64()).collect();
    let top = ((d as f64) * (max_norm as f64).log2() + 4.0).min(48.0) as i32;
    let mut out = Vec::new();
    for j in 1..=top {
        let c = 2f64.powi(j);
        let mut basis: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut row = vec![0.0; d + 1];
                row[i] = 1.0;
                row[d] = c * alpha[i];
                row
            })
            .collect();
        let mut last = vec![0.0; d + 1];
        last[d] = c;
        basis.push(last);
        lll(&mut basis, 0.75);
        for row in &basis {
            let m: Vec<i64> = row[..d].iter().map(|v| v.round() as i64).collect();
            let norm = m.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            if norm == 0 || norm > max_norm {
                continue;
            }
            out.push((norm, cfg.linear_form(&m).dist_to_int(), m));
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lll(b: &mut [Vec<f64>], delta: f64) {
    let n = b.len();
    let gram_schmidt = |b: &[Vec<f64>]| {
        let mut bs: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut mu = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut v = b[i].clone();
            for j in 0..i {
                mu[i][j] = dot(&b[i], &bs[j]) / dot(&bs[j], &bs[j]);
                for (vk, bk) in v.iter_mut().zip(&bs[j]) {
                    *vk -= mu[i][j] * bk;
                }
            }
            bs.push(v);
        }
        (bs, mu)
    };
    let (mut bs, mut mu) = gram_schmidt(b);
    let mut k = 1;
    let mut guard = 0;
    while k < n && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= q * y;
                }
                let (nbs, nmu) = gram_schmidt(b);
                bs = nbs;
                mu = nmu;
            }
        }
        if dot(&bs[k], &bs[k]) >= (delta - mu[k][k - 1] * mu[k][k - 1]) * dot(&bs[k - 1], &bs[k - 1]) {
            k += 1;
        } else {
            b.swap(k, k - 1);
            let (nbs, nmu) = gram_schmidt(b);
            bs = nbs;
            mu = nmu;
            k = (k - 1).max(1);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiscrepancyKind {
    Exact,
    EtBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// `exponent` is δ̂, the negated slope of log D against log x.
    pub fit: FitReport,
    pub per_x: Vec<(u64, f64, DiscrepancyKind)>,
}

/// Fits D_x ≈ c·x^{−δ} over the grid, using the exact D* where feasible and
/// the ET bound with cutoff `y_cutoff` elsewhere.
pub fn discrepancy_decay_fit(cfg: &TorusConfig, x_grid: &[u64], y_cutoff: u64) -> Result<DecayFit> {
    if x_grid.len() < 4 {
        return Err(Error::Precondition(format!("need at least 4 grid points, got {}", x_grid.len())));
    }
    if x_grid.windows(2).any(|w| w[0] >= w[1]) || x_grid[0] == 0 {
        return Err(Error::Precondition("x grid must be positive and strictly increasing".into()));
    }
    let d = cfg.dim();
    let mut per_x = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let feasible = exact_limit(d).is_some_and(|l| x as usize <= l);
        if feasible {
            let cols = orbit_columns(cfg, 1, x)?;
            let r = exact_star_discrepancy_columns(&cols)?;
            per_x.push((x, r.exact_dstar.unwrap_or(f64::NAN), DiscrepancyKind::Exact));
        } else {
            let r = et_bound(cfg, x, y_cutoff, None, false)?;
            per_x.push((x, r.et_bound.unwrap_or(f64::NAN), DiscrepancyKind::EtBound));
        }
    }
    let xs: Vec<f64> = per_x.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = per_x.iter().map(|p| p.1).collect();
    let mut fit = FitReport::log_log(&xs, &ys, -1.0);
    if fit.exponent.abs() < 0.05 {
        fit.flags.push("no decay".into());
    }
    if per_x.iter().any(|p| p.2 == DiscrepancyKind::EtBound) {
        fit.flags.push("ET bound used for some x".into());
    }
    Ok(DecayFit { fit, per_x })
}
