//! Modified characters f, their sieved partial sums M(x) = Σ_{n≤x} f(n), and
//! the (T, N, D) exponent bookkeeping.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{factorize, is_prime, isqrt, lcm, primes_up_to};
use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::numeric::ComplexSum;
use crate::phase::{cis_turns, cis_turns_exact, CharValue, RationalPhase};

/// The phase θ_p of a modified prime value f(p) = e^{2πiθ_p}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Theta {
    Exact(RationalPhase),
    Float(f64),
}

impl Theta {
    pub fn turns(&self) -> f64 {
        match self {
            Theta::Exact(p) => p.turns(),
            Theta::Float(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Theta::Exact(p) => p.is_identity(),
            Theta::Float(x) => *x == 0.0,
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Exact(p) if p.is_identity() => write!(f, "0"),
            Theta::Exact(p) => write!(f, "{p}"),
            Theta::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Parses a modification map such as `"3:0,7:1/3,11:0.125"`.
pub fn parse_mods(text: &str) -> Result<BTreeMap<u64, Theta>> {
    let mut out = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (p, th) = item
            .split_once(':')
            .ok_or_else(|| Error::Modification(format!("expected `p:theta`, got `{item}`")))?;
        let p: u64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Modification(format!("bad prime `{p}`")))?;
        let th = th.trim();
        let theta = if let Some((num, den)) = th.split_once('/') {
            let num: i64 = num
                .trim()
                .parse()
                .map_err(|_| Error::Modification(format!("bad numerator in `{th}`")))?;
            let den: u64 = den
                .trim()
                .parse()
                .map_err(|_| Error::Modification(format!("bad denominator in `{th}`")))?;
            Theta::Exact(RationalPhase::new(num, den).map_err(|e| Error::Modification(e.to_string()))?)
        } else if let Ok(k) = th.parse::<i64>() {
            Theta::Exact(RationalPhase::new(k, 1).expect("den 1"))
        } else {
            let x: f64 = th
                .parse()
                .map_err(|_| Error::Modification(format!("bad phase `{th}`")))?;
            Theta::Float(x)
        };
        if out.insert(p, theta).is_some() {
            return Err(Error::Modification(format!("prime {p} listed twice")));
        }
    }
    Ok(out)
}

/// A completely multiplicative f with f(p) = χ(p) off S and f(p) = e^{2πiθ_p}
/// on S.
#[derive(Clone, Debug)]
pub struct ModifiedCharacter {
    base: DirichletCharacter,
    mods: BTreeMap<u64, Theta>,
}

/// Validates and builds a modification of a primitive character.
pub fn make_modified(chi: &DirichletCharacter, mods: BTreeMap<u64, Theta>) -> Result<ModifiedCharacter> {
    if !chi.is_primitive() {
        return Err(Error::Modification(format!(
            "base character mod {} is not primitive (conductor {})",
            chi.modulus(),
            chi.conductor()
        )));
    }
    if mods.is_empty() {
        return Err(Error::Modification("modification set S must be non-empty".into()));
    }
    for (&p, theta) in &mods {
        if !is_prime(p) {
            return Err(Error::Modification(format!("modification key {p} is not prime")));
        }
        if let Theta::Float(x) = theta {
            if !(0.0..1.0).contains(x) || !x.is_finite() {
                return Err(Error::Modification(format!("θ_{p} = {x} outside [0, 1)")));
            }
        }
        let coincides = match (chi.eval_u64(p), theta) {
            (CharValue::Zero, _) => false,
            (CharValue::Phase(lambda), Theta::Exact(th)) => lambda == *th,
            (CharValue::Phase(lambda), Theta::Float(th)) => {
                let d = (lambda.turns() - th).rem_euclid(1.0);
                d.min(1.0 - d) < 1e-12
            }
        };
        if coincides {
            return Err(Error::Modification(format!(
                "θ_{p} = {theta} reproduces χ({p}); the modification must change the value"
            )));
        }
    }
    Ok(ModifiedCharacter { base: chi.clone(), mods })
}

/// f(n) before conversion to a complex number.
#[derive(Clone, Copy, Debug, PartialEq)]
struct RawValue {
    zero: bool,
    exact: RationalPhase,
    float_turns: f64,
}

impl RawValue {
    fn to_complex(self) -> Complex64 {
        if self.zero {
            return Complex64::new(0.0, 0.0);
        }
        let v = self.exact.to_complex();
        if self.float_turns == 0.0 {
            v
        } else {
            v * cis_turns(self.float_turns)
        }
    }
}

impl ModifiedCharacter {
    pub fn base(&self) -> &DirichletCharacter {
        &self.base
    }

    pub fn modifications(&self) -> &BTreeMap<u64, Theta> {
        &self.mods
    }

    /// The primes of S in increasing order.
    pub fn primes(&self) -> Vec<u64> {
        self.mods.keys().copied().collect()
    }

    pub fn s_size(&self) -> usize {
        self.mods.len()
    }

    pub fn theta(&self, p: u64) -> Option<Theta> {
        self.mods.get(&p).copied()
    }

    /// f(p) for a prime p.
    pub fn prime_value(&self, p: u64) -> Complex64 {
        match self.mods.get(&p) {
            Some(Theta::Exact(ph)) => ph.to_complex(),
            Some(Theta::Float(x)) => cis_turns(*x),
            None => self.base.eval_complex(p),
        }
    }

    /// Short human-readable descriptor, e.g. `chi[q=4,k=1] S{3:0}`.
    pub fn descriptor(&self) -> String {
        let mods: Vec<String> = self.mods.iter().map(|(p, t)| format!("{p}:{t}")).collect();
        let index = self.base.index().map(|k| k.to_string()).unwrap_or_else(|| "?".into());
        format!("chi[q={},k={}] S{{{}}}", self.base.modulus(), index, mods.join(","))
    }

    fn raw_prime_power(&self, p: u64, a: u32, acc: &mut RawValue) {
        match self.mods.get(&p) {
            Some(Theta::Exact(ph)) => acc.exact = acc.exact * ph.pow(a as u64),
            Some(Theta::Float(x)) => acc.float_turns += a as f64 * x,
            None => match self.base.eval_u64(p) {
                CharValue::Zero => acc.zero = true,
                CharValue::Phase(ph) => acc.exact = acc.exact * ph.pow(a as u64),
            },
        }
    }

    fn raw_value(&self, n: u64) -> RawValue {
        let mut acc = RawValue { zero: false, exact: RationalPhase::ONE, float_turns: 0.0 };
        for (p, a) in factorize(n) {
            self.raw_prime_power(p, a, &mut acc);
        }
        acc
    }

    /// f(n) by trial-division factorization.
    pub fn eval(&self, n: u64) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::Domain("f(n) is defined for n >= 1".into()));
        }
        Ok(self.raw_value(n).to_complex())
    }

    /// (T, N, D) with T = #{p∈S : f(p)=1} − #{p∈S : χ(p)=1},
    /// N = max(0, T) for odd χ and max(0, T−1) for even χ, and
    /// D = max(1, N, (|S|−3)/2).
    pub fn exponents(&self) -> Exponents {
        let f_one = self.mods.values().filter(|t| t.is_zero()).count() as i64;
        let chi_one = self
            .mods
            .keys()
            .filter(|&&p| self.base.eval_u64(p) == CharValue::ONE)
            .count() as i64;
        let t = f_one - chi_one;
        let n = if self.base.parity() == -1 { t.max(0) } else { (t - 1).max(0) };
        let half = Rational64::new(self.s_size() as i64 - 3, 2);
        let d = half.max(Rational64::from_integer(n)).max(Rational64::from_integer(1));
        Exponents { t, n, d }
    }
}

/// f evaluated on n ≥ 1.
pub fn eval_f(f: &ModifiedCharacter, n: u64) -> Result<Complex64> {
    f.eval(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exponents {
    pub t: i64,
    pub n: i64,
    pub d: Rational64,
}

impl Exponents {
    pub fn d_f64(&self) -> f64 {
        *self.d.numer() as f64 / *self.d.denom() as f64
    }
}

pub fn exponents(f: &ModifiedCharacter) -> Exponents {
    f.exponents()
}

/// Tuning of the segmented sieve behind [`partial_sums`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SieveConfig {
    pub block_size: usize,
    /// Upper bound on the bytes held by the returned trace.
    pub memory_budget: usize,
    /// Blocks sieved concurrently before their prefix sums are merged.
    pub blocks_in_flight: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            block_size: 1 << 22,
            memory_budget: 2 << 30,
            blocks_in_flight: rayon::current_num_threads().max(1),
        }
    }
}

/// Segmented evaluator of f over consecutive blocks of integers.
struct BlockSieve<'a> {
    f: &'a ModifiedCharacter,
    small_primes: Vec<u64>,
    denom: u64,
    /// Numerator over `denom` of the exact phase of each small prime, `None`
    /// when f vanishes at that prime.
    small_phase: Vec<Option<u64>>,
    float_theta: Vec<f64>,
}

impl<'a> BlockSieve<'a> {
    fn new(f: &'a ModifiedCharacter, x_max: u64) -> Self {
        let mut denom = 1u64;
        for v in f.base.values() {
            if let CharValue::Phase(p) = v {
                denom = lcm(denom, p.denominator());
            }
        }
        for t in f.mods.values() {
            if let Theta::Exact(p) = t {
                denom = lcm(denom, p.denominator());
            }
        }
        let small_primes = primes_up_to(isqrt(x_max).max(1));
        let mut sieve = BlockSieve { f, small_primes, denom, small_phase: Vec::new(), float_theta: Vec::new() };
        let (phases, floats): (Vec<_>, Vec<_>) =
            sieve.small_primes.iter().map(|&p| sieve.prime_phase(p)).unzip();
        sieve.small_phase = phases;
        sieve.float_theta = floats;
        sieve
    }

    fn prime_phase(&self, p: u64) -> (Option<u64>, f64) {
        let scale = |ph: RationalPhase| ph.numerator() * (self.denom / ph.denominator());
        match self.f.mods.get(&p) {
            Some(Theta::Exact(ph)) => (Some(scale(*ph)), 0.0),
            Some(Theta::Float(x)) => (Some(0), *x),
            None => match self.f.base.eval_u64(p) {
                CharValue::Zero => (None, 0.0),
                CharValue::Phase(ph) => (Some(scale(ph)), 0.0),
            },
        }
    }

    /// f(n) for n in [lo, hi).
    fn block(&self, lo: u64, hi: u64) -> Vec<Complex64> {
        let len = (hi - lo) as usize;
        let mut rem: Vec<u64> = (lo..hi).collect();
        let mut acc = vec![0u64; len];
        let mut zero = vec![false; len];
        let mut fl = vec![0.0f64; len];
        let d = self.denom;
        for (i, &p) in self.small_primes.iter().enumerate() {
            if p * p >= hi {
                break;
            }
            let phase = self.small_phase[i];
            let ft = self.float_theta[i];
            let mut m = lo.div_ceil(p) * p;
            while m < hi {
                let j = (m - lo) as usize;
                let mut a = 0u64;
                while rem[j] % p == 0 {
                    rem[j] /= p;
                    a += 1;
                }
                match phase {
                    None => zero[j] = true,
                    Some(num) => {
                        acc[j] = ((acc[j] as u128 + a as u128 * num as u128) % d as u128) as u64;
                        if ft != 0.0 {
                            fl[j] += a as f64 * ft;
                        }
                    }
                }
                m += p;
            }
        }
        (0..len)
            .map(|j| {
                if rem[j] > 1 {
                    match self.prime_phase(rem[j]) {
                        (None, _) => zero[j] = true,
                        (Some(num), ft) => {
                            acc[j] = ((acc[j] as u128 + num as u128) % d as u128) as u64;
                            fl[j] += ft;
                        }
                    }
                }
                if zero[j] {
                    Complex64::new(0.0, 0.0)
                } else if fl[j] == 0.0 {
                    cis_turns_exact(acc[j], d)
                } else {
                    cis_turns_exact(acc[j], d) * cis_turns(fl[j])
                }
            })
            .collect()
    }
}

/// Visits (n, f(n)) for n = 1..=x_max in order, sieving blocks concurrently.
pub fn for_each_value(
    f: &ModifiedCharacter,
    x_max: u64,
    cfg: &SieveConfig,
    mut visit: impl FnMut(u64, Complex64),
) {
    if x_max == 0 {
        return;
    }
    let sieve = BlockSieve::new(f, x_max);
    let block = cfg.block_size.max(1024) as u64;
    let wave = cfg.blocks_in_flight.max(1) as u64;
    let mut lo = 1u64;
    while lo <= x_max {
        let starts: Vec<u64> = (0..wave)
            .map(|k| lo + k * block)
            .filter(|&s| s <= x_max)
            .collect();
        let blocks: Vec<Vec<Complex64>> = starts
            .par_iter()
            .map(|&s| sieve.block(s, (s + block).min(x_max + 1)))
            .collect();
        for (s, vals) in starts.iter().zip(blocks) {
            for (k, v) in vals.into_iter().enumerate() {
                visit(s + k as u64, v);
            }
        }
        lo = starts.last().copied().unwrap_or(lo) + block;
    }
}

/// f(n) for n in [lo, hi) through the sieve path; exposed for cross-checks.
pub fn sieve_values(f: &ModifiedCharacter, lo: u64, hi: u64) -> Vec<Complex64> {
    BlockSieve::new(f, hi).block(lo.max(1), hi)
}

/// M(x) sampled along [1, X].
#[derive(Clone, Debug, Serialize)]
pub struct PartialSumTrace {
    pub x_max: u64,
    pub stride: u64,
    /// Sample points: x = 1, every multiple of the stride, and X.
    pub xs: Vec<u64>,
    pub values: Vec<Complex64>,
    /// sup_{y ≤ x} |M(y)| at each sample point.
    pub running_sup: Vec<f64>,
    /// Bound on the rounding error accumulated in M(X).
    pub sum_error_bound: f64,
}

impl PartialSumTrace {
    /// True when every n ≤ X is sampled.
    pub fn is_dense(&self) -> bool {
        self.stride == 1
    }

    /// M(n) from a dense trace; M(0) = 0.
    pub fn m(&self, n: u64) -> Complex64 {
        debug_assert!(self.is_dense());
        if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(n - 1) as usize]
        }
    }

    pub fn final_value(&self) -> Complex64 {
        *self.values.last().expect("trace is never empty")
    }

    /// sup_{y0 ≤ y ≤ X} |M(y)| / (log y)^k over the sampled y, with y0 ≥ 3.
    pub fn envelope_constant(&self, k: u32, y0: u64) -> f64 {
        self.xs
            .iter()
            .zip(&self.values)
            .filter(|(&x, _)| x >= y0.max(3))
            .map(|(&x, m)| m.norm() / (x as f64).ln().powi(k as i32))
            .fold(0.0, f64::max)
    }
}

/// Streams M(n) for n ≤ X through the segmented sieve and records a trace.
pub fn partial_sums(f: &ModifiedCharacter, x_max: u64, stride: u64) -> Result<PartialSumTrace> {
    partial_sums_with(f, x_max, stride, &SieveConfig::default())
}

pub fn partial_sums_with(
    f: &ModifiedCharacter,
    x_max: u64,
    stride: u64,
    cfg: &SieveConfig,
) -> Result<PartialSumTrace> {
    if x_max == 0 {
        return Err(Error::Domain("X must be at least 1".into()));
    }
    let stride = stride.max(1);
    let samples = (x_max / stride + 2) as usize;
    let bytes = samples * (8 + 16 + 8) + cfg.block_size * 48 * cfg.blocks_in_flight.max(1);
    if bytes > cfg.memory_budget {
        return Err(Error::Resource(format!(
            "trace for X = {x_max} at stride {stride} needs about {bytes} bytes, over the \
             budget of {}; raise the stride or use more, smaller blocks",
            cfg.memory_budget
        )));
    }
    let mut xs = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    let mut running_sup = Vec::with_capacity(samples);
    let mut sum = ComplexSum::default();
    let mut sup = 0.0f64;
    for_each_value(f, x_max, cfg, |n, v| {
        sum.add(v);
        let m = sum.value();
        sup = sup.max(m.norm());
        if n == 1 || n % stride == 0 || n == x_max {
            xs.push(n);
            values.push(m);
            running_sup.push(sup);
        }
    });
    Ok(PartialSumTrace { x_max, stride, xs, values, running_sup, sum_error_bound: sum.error_bound() })
}

/// sup_{y≤x} |M(y)| / (log x)^D at the checkpoints x = 10^k ≤ X.
pub fn growth_record(f: &ModifiedCharacter, x_max: u64, d: f64) -> Result<Vec<(u64, f64)>> {
    if x_max < 10 {
        return Err(Error::Domain("growth record needs X >= 10".into()));
    }
    if d < 0.0 {
        return Err(Error::Domain("exponent D must be non-negative".into()));
    }
    let mut out = Vec::new();
    let mut next = 10u64;
    let mut sum = ComplexSum::default();
    let mut sup = 0.0f64;
    for_each_value(f, x_max, &SieveConfig::default(), |n, v| {
        sum.add(v);
        sup = sup.max(sum.value().norm());
        if n == next {
            out.push((n, sup / (n as f64).ln().powf(d)));
            next = next.saturating_mul(10);
        }
    });
    Ok(out)
}
