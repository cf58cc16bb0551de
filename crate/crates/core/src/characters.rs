//! Dirichlet characters modulo q as exact value tables.
//!
//! The unit group (Z/qZ)* is split by the Chinese remainder theorem into
//! cyclic factors, one per odd prime power and up to two for the power of 2
//! (generated by -1 and 5). A character is fixed by the images of these
//! generators, `chi(g_i) = e^{2πi k_i / o_i}`, and characters are indexed by
//! the exponent tuple `(k_1, ..., k_r)` in lexicographic order with the first
//! factor most significant. Factors are ordered by increasing prime; for the
//! prime 2 the `-1` factor precedes the `5` factor. Index 0 is the principal
//! character.

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{euler_phi, factorize, gcd, inv_mod, mul_mod, primitive_root_prime_power};
use crate::error::{Error, Result};
use crate::numeric::ComplexSum;
use crate::phase::{CharValue, RationalPhase};

/// One cyclic factor of (Z/qZ)*: a generator lifted to Z/qZ and its order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CyclicFactor {
    pub prime: u64,
    pub generator: u64,
    pub order: u64,
}

/// The character group modulo q together with a discrete-log table.
#[derive(Clone, Debug)]
pub struct CharacterGroup {
    modulus: u64,
    factors: Vec<CyclicFactor>,
    /// `logs[n]` holds the exponent tuple of the unit n, `None` for non-units.
    logs: Vec<Option<Vec<u64>>>,
}

impl CharacterGroup {
    pub fn new(modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Domain("modulus must be positive".into()));
        }
        let q = modulus;
        let mut factors = Vec::new();
        for (p, e) in factorize(q) {
            let pe = p.pow(e);
            let lift = |g: u64| crt_lift(g, pe, q);
            if p == 2 {
                if e >= 2 {
                    factors.push(CyclicFactor { prime: 2, generator: lift(pe - 1), order: 2 });
                }
                if e >= 3 {
                    factors.push(CyclicFactor { prime: 2, generator: lift(5), order: 1 << (e - 2) });
                }
            } else {
                let g = primitive_root_prime_power(p, e);
                factors.push(CyclicFactor { prime: p, generator: lift(g), order: euler_phi(pe) });
            }
        }

        let orders: Vec<u64> = factors.iter().map(|f| f.order).collect();
        let mut logs = vec![None; q as usize];
        let mut exps = vec![0u64; factors.len()];
        loop {
            let n = factors
                .iter()
                .zip(&exps)
                .fold(1 % q, |acc, (f, &k)| mul_mod(acc, crate::arith::pow_mod(f.generator, k, q), q));
            logs[n as usize] = Some(exps.clone());
            if !advance(&mut exps, &orders) {
                break;
            }
        }
        Ok(CharacterGroup { modulus, factors, logs })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn factors(&self) -> &[CyclicFactor] {
        &self.factors
    }

    /// Number of characters, φ(q).
    pub fn size(&self) -> u64 {
        self.factors.iter().map(|f| f.order).product()
    }

    /// Exponent tuple for the character with the given index.
    pub fn exponents_of(&self, index: u64) -> Result<Vec<u64>> {
        if index >= self.size() {
            return Err(Error::Domain(format!(
                "character index {index} out of range: modulus {} has {} characters",
                self.modulus,
                self.size()
            )));
        }
        let mut rest = index;
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = rest % f.order;
            rest /= f.order;
        }
        Ok(out)
    }

    pub fn character(&self, index: u64) -> Result<DirichletCharacter> {
        let exps = self.exponents_of(index)?;
        let q = self.modulus;
        let values: Vec<CharValue> = self
            .logs
            .iter()
            .map(|log| {
                let Some(log) = log else {
                    return CharValue::Zero;
                };
                let phase = log
                    .iter()
                    .zip(&exps)
                    .zip(&self.factors)
                    .fold(RationalPhase::ONE, |acc, ((&j, &k), f)| {
                        acc * RationalPhase::new(((j * k) % f.order) as i64, f.order).expect("order > 0")
                    });
                CharValue::Phase(phase)
            })
            .collect();
        Ok(DirichletCharacter::from_table(q, values, Some(index)))
    }

    pub fn characters(&self) -> Vec<DirichletCharacter> {
        (0..self.size()).map(|k| self.character(k).expect("index in range")).collect()
    }
}

fn advance(exps: &mut [u64], orders: &[u64]) -> bool {
    for (slot, &order) in exps.iter_mut().zip(orders).rev() {
        *slot += 1;
        if *slot < order {
            return true;
        }
        *slot = 0;
    }
    false
}

/// The residue mod q that is `g` mod `pe` and 1 mod `q / pe`.
fn crt_lift(g: u64, pe: u64, q: u64) -> u64 {
    let rest = q / pe;
    if rest == 1 {
        return g % q;
    }
    let t = mul_mod((g + pe - 1) % pe, inv_mod(rest % pe, pe), pe);
    (1 + rest * t) % q
}

/// All φ(q) characters modulo q, principal character first.
pub fn enumerate_characters(q: u64) -> Result<Vec<DirichletCharacter>> {
    Ok(CharacterGroup::new(q)?.characters())
}

/// A Dirichlet character modulo q stored as its full value table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    values: Vec<CharValue>,
    conductor: u64,
    parity: i8,
    index: Option<u64>,
}

impl DirichletCharacter {
    /// Wraps a value table, deriving conductor and parity.
    ///
    /// The table is trusted to be a character; `enumerate_characters` and
    /// [`CharacterGroup::character`] are the intended constructors.
    pub fn from_table(modulus: u64, values: Vec<CharValue>, index: Option<u64>) -> Self {
        assert_eq!(values.len() as u64, modulus, "value table must have length q");
        let mut chi = DirichletCharacter { modulus, values, conductor: 0, parity: 1, index };
        chi.parity = chi.compute_parity();
        chi.conductor = chi.compute_conductor();
        chi
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn index(&self) -> Option<u64> {
        self.index
    }

    pub fn values(&self) -> &[CharValue] {
        &self.values
    }

    pub fn eval(&self, n: i64) -> CharValue {
        self.values[n.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn eval_u64(&self, n: u64) -> CharValue {
        self.values[(n % self.modulus) as usize]
    }

    pub fn eval_complex(&self, n: u64) -> Complex64 {
        self.eval_u64(n).to_complex()
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus
    }

    pub fn is_principal(&self) -> bool {
        self.values.iter().all(|v| v.is_zero() || *v == CharValue::ONE)
    }

    /// χ(-1) as ±1.
    pub fn parity(&self) -> i8 {
        self.parity
    }

    /// The complex-conjugate character χ̄.
    pub fn conj(&self) -> DirichletCharacter {
        let values = self.values.iter().map(CharValue::conj).collect();
        DirichletCharacter {
            modulus: self.modulus,
            values,
            conductor: self.conductor,
            parity: self.parity,
            index: None,
        }
    }

    fn compute_parity(&self) -> i8 {
        match self.eval(-1) {
            CharValue::Phase(p) if p.is_identity() => 1,
            CharValue::Phase(p) if p.numerator() == 1 && p.denominator() == 2 => -1,
            // χ(-1)^2 = χ(1) = 1, and χ(-1) is never zero.
            other => unreachable!("χ(-1) must be ±1, got {other:?}"),
        }
    }

    /// Conductor as a product of local conductors: for each p^e ∥ q, the
    /// least p^c such that χ is trivial on units congruent to 1 mod p^c and
    /// to 1 mod q/p^e.
    fn compute_conductor(&self) -> u64 {
        let q = self.modulus;
        let mut conductor = 1u64;
        for (p, e) in factorize(q) {
            let pe = p.pow(e);
            let local = (0..=e)
                .map(|c| p.pow(c))
                .find(|&pc| {
                    (0..pe)
                        .filter(|u| u % pc == 1 % pc && gcd(*u, p) == 1)
                        .all(|u| self.eval_u64(crt_lift(u, pe, q)) == CharValue::ONE)
                })
                .unwrap_or(pe);
            conductor *= local;
        }
        conductor
    }
}

/// τ(χ) = Σ_{a mod q} χ(a) e^{2πi a/q}. Only defined here for primitive χ,
/// where |τ(χ)| = √q.
pub fn gauss_sum(chi: &DirichletCharacter) -> Result<Complex64> {
    if !chi.is_primitive() {
        return Err(Error::Domain(format!(
            "gauss sum requested for a non-primitive character (modulus {}, conductor {})",
            chi.modulus(),
            chi.conductor()
        )));
    }
    let q = chi.modulus();
    let mut acc = ComplexSum::default();
    for a in 1..=q {
        if let CharValue::Phase(p) = chi.eval_u64(a) {
            let additive = RationalPhase::new((a % q) as i64, q).expect("q > 0");
            acc.add((p * additive).to_complex());
        }
    }
    Ok(acc.value())
}
