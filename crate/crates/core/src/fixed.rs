//! 128-bit fixed-point fractions of the unit interval and high-precision
//! fractional parts of log p.
//!
//! A [`Frac128`] stores ⌊x·2^128⌉ for x ∈ [0, 1); addition and integer
//! multiples wrap modulo 2^128, which is exactly reduction modulo 1.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::is_prime;
use crate::error::{Error, Result};

const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac128(pub u128);

impl Frac128 {
    pub const ZERO: Frac128 = Frac128(0);

    /// Exact conversion of frac(x) for finite x.
    pub fn from_f64(x: f64) -> Frac128 {
        let f = x - x.floor();
        if f >= 1.0 {
            return Frac128(0);
        }
        // f = mant · 2^exp with a 53-bit mantissa, so the shift is exact.
        if f == 0.0 {
            return Frac128(0);
        }
        let bits = f.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let (mant, e) = if exp == 0 {
            ((bits & ((1u64 << 52) - 1)) as u128, -1074)
        } else {
            (((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as u128, exp - 1075)
        };
        let shift = e + 128;
        if shift >= 0 {
            Frac128(mant << shift)
        } else if shift > -128 {
            Frac128(mant >> (-shift))
        } else {
            Frac128(0)
        }
    }

    /// ⌊num/den · 2^128⌋ for num < den.
    pub fn from_ratio(num: u64, den: u64) -> Frac128 {
        assert!(den > 0 && num < den);
        let (n, d) = (num as u128, den as u128);
        let hi = (n << 64) / d;
        let rem = (n << 64) % d;
        let lo = (rem << 64) / d;
        Frac128((hi << 64) | lo)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / TWO_POW_128
    }

    pub fn neg(self) -> Frac128 {
        Frac128(self.0.wrapping_neg())
    }

    pub fn add(self, other: Frac128) -> Frac128 {
        Frac128(self.0.wrapping_add(other.0))
    }

    pub fn sub(self, other: Frac128) -> Frac128 {
        Frac128(self.0.wrapping_sub(other.0))
    }

    /// frac(k·x) for a signed integer k.
    pub fn mul_int(self, k: i128) -> Frac128 {
        Frac128(self.0.wrapping_mul(k as u128))
    }

    /// Distance to the nearest integer, as a fraction in [0, 1/2].
    pub fn dist_to_int(self) -> Frac128 {
        Frac128(self.0.min(self.0.wrapping_neg()))
    }
}

/// frac(log p) to 256 bits, as a big integer scaled by 2^256, with the
/// integer part of log p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogFraction {
    pub frac256: BigUint,
    pub int_part: u64,
}

impl LogFraction {
    /// ⌊frac·2^128⌉, rounded to nearest.
    pub fn to_frac128(&self) -> Frac128 {
        let rounded: BigUint = (&self.frac256 + (BigUint::one() << 127u32)) >> 128u32;
        let mask = (BigUint::one() << 128u32) - 1u32;
        let low = rounded & mask;
        Frac128(low.to_u128().unwrap_or(0))
    }
}

fn table() -> &'static HashMap<u64, LogFraction> {
    static TABLE: OnceLock<HashMap<u64, LogFraction>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let text = include_str!("../data/log_primes_256.txt");
        let mut map = HashMap::new();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            let p: u64 = parts.next().and_then(|s| s.parse().ok()).expect("table prime");
            let frac = parts.next().and_then(|s| BigUint::parse_bytes(s.as_bytes(), 16)).expect("table hex");
            let int_part: u64 = parts.next().and_then(|s| s.parse().ok()).expect("table integer part");
            map.insert(p, LogFraction { frac256: frac, int_part });
        }
        map
    })
}

/// Largest prime covered by the bundled 256-bit table.
pub const TABLE_LIMIT: u64 = 10_000;

/// 256-bit frac(log p) from the bundled table, for primes up to 10^4.
pub fn table_log_fraction(p: u64) -> Option<LogFraction> {
    table().get(&p).cloned()
}

/// log n to `bits` fractional bits, as ⌊log n · 2^bits⌋ up to a few units
/// in the last place. Uses log n = k log 2 + 2 atanh((m−1)/(m+1)) with
/// m = n/2^k ∈ [1, 2).
pub fn log_fixed_big(n: u64, bits: u32) -> BigInt {
    assert!(n >= 1);
    let guard = bits + 64;
    let k = 63 - n.leading_zeros();
    // atanh((n - 2^k)/(n + 2^k))
    let num = BigInt::from(n) - (BigInt::one() << k);
    let den = BigInt::from(n) + (BigInt::one() << k);
    let ln_m = atanh_ratio(&num, &den, guard) << 1u32;
    let ln2 = atanh_ratio(&BigInt::one(), &BigInt::from(3), guard) << 1u32;
    let total = ln2 * BigInt::from(k) + ln_m;
    total >> (guard - bits)
}

// atanh(num/den) · 2^w for 0 ≤ num/den ≤ 1/3.
fn atanh_ratio(num: &BigInt, den: &BigInt, w: u32) -> BigInt {
    if num.is_zero() {
        return BigInt::zero();
    }
    let y = (num << w) / den;
    let y2 = (&y * &y) >> w;
    let mut power = y;
    let mut sum = BigInt::zero();
    let mut j = 1u64;
    while !power.is_zero() {
        sum += &power / BigInt::from(j);
        power = (&power * &y2) >> w;
        j += 2;
    }
    sum
}

/// 256-bit frac(log p) for any prime: the table when available, otherwise
/// the series evaluation.
pub fn log_fraction(p: u64) -> Result<LogFraction> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if let Some(v) = table_log_fraction(p) {
        return Ok(v);
    }
    Ok(series_log_fraction(p))
}

/// frac(log p) from the series, independent of the table.
pub fn series_log_fraction(p: u64) -> LogFraction {
    let full = log_fixed_big(p, 256);
    let (sign, mag) = full.into_parts();
    debug_assert!(sign != Sign::Minus);
    let int_part = (&mag >> 256u32).to_u64().unwrap_or(0);
    let frac256 = mag & ((BigUint::one() << 256u32) - 1u32);
    LogFraction { frac256, int_part }
}
