//! Exact roots of unity e^{2πi·num/den} kept as reduced fractions of a turn.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::gcd;
use crate::error::{Error, Result};

/// A unimodular complex number e^{2πi·num/den} stored as a reduced fraction
/// with `0 <= num < den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPhase {
    num: u64,
    den: u64,
}

impl RationalPhase {
    pub const ONE: RationalPhase = RationalPhase { num: 0, den: 1 };

    /// Builds the phase `num/den` turns, reducing modulo one and to lowest
    /// terms. Negative numerators are allowed.
    pub fn new(num: i64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("phase denominator must be positive".into()));
        }
        let r = (num as i128).rem_euclid(den as i128) as u64;
        Ok(Self::reduced(r, den))
    }

    fn reduced(num: u64, den: u64) -> Self {
        if num == 0 {
            return Self::ONE;
        }
        let g = gcd(num, den);
        RationalPhase {
            num: num / g,
            den: den / g,
        }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn is_identity(&self) -> bool {
        self.num == 0
    }

    /// The phase as a fraction of a turn in [0, 1).
    pub fn turns(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn conj(&self) -> Self {
        Self::reduced((self.den - self.num) % self.den, self.den)
    }

    pub fn pow(&self, k: u64) -> Self {
        let r = (self.num as u128 * k as u128 % self.den as u128) as u64;
        Self::reduced(r, self.den)
    }

    pub fn to_complex(&self) -> Complex64 {
        cis_turns_exact(self.num, self.den)
    }
}

impl Mul for RationalPhase {
    type Output = RationalPhase;

    fn mul(self, rhs: RationalPhase) -> RationalPhase {
        let den = self.den as u128 * rhs.den as u128;
        let num = (self.num as u128 * rhs.den as u128 + rhs.num as u128 * self.den as u128) % den;
        let g = gcd128(num, den);
        let (num, den) = (num / g.max(1), den / g.max(1));
        if num == 0 {
            return RationalPhase::ONE;
        }
        RationalPhase {
            num: num as u64,
            den: den as u64,
        }
    }
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl fmt::Display for RationalPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// e^{2πi·num/den}, exact at multiples of a quarter turn.
pub fn cis_turns_exact(num: u64, den: u64) -> Complex64 {
    let num = num % den;
    if (4 * num as u128) % den as u128 == 0 {
        return match (4 * num as u128 / den as u128) as u8 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    cis_turns(num as f64 / den as f64)
}

/// e^{2πi·x} for a real number of turns x.
pub fn cis_turns(x: f64) -> Complex64 {
    let frac = x - x.floor();
    let (s, c) = (std::f64::consts::TAU * frac).sin_cos();
    Complex64::new(c, s)
}

/// A value of a Dirichlet character or a modified character: zero or a root
/// of unity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharValue {
    Zero,
    Phase(RationalPhase),
}

impl CharValue {
    pub const ONE: CharValue = CharValue::Phase(RationalPhase::ONE);

    pub fn is_zero(&self) -> bool {
        matches!(self, CharValue::Zero)
    }

    pub fn phase(&self) -> Option<RationalPhase> {
        match self {
            CharValue::Zero => None,
            CharValue::Phase(p) => Some(*p),
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            CharValue::Zero => CharValue::Zero,
            CharValue::Phase(p) => CharValue::Phase(p.conj()),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match self {
            CharValue::Zero => Complex64::new(0.0, 0.0),
            CharValue::Phase(p) => p.to_complex(),
        }
    }
}

impl Mul for CharValue {
    type Output = CharValue;

    fn mul(self, rhs: CharValue) -> CharValue {
        match (self, rhs) {
            (CharValue::Phase(a), CharValue::Phase(b)) => CharValue::Phase(a * b),
            _ => CharValue::Zero,
        }
    }
}
