use std::collections::BTreeMap;
use std::f64::consts::PI;

use modchar_core::characters::{enumerate_characters, CharacterGroup, DirichletCharacter};
use modchar_core::modchar::{
    growth_record, make_modified, parse_mods, partial_sums, partial_sums_with, sieve_values, ModifiedCharacter,
    SieveConfig, Theta,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chi(q: u64, k: u64) -> DirichletCharacter {
    CharacterGroup::new(q).unwrap().character(k).unwrap()
}

fn modified(q: u64, k: u64, mods: &str) -> ModifiedCharacter {
    make_modified(&chi(q, k), parse_mods(mods).unwrap()).unwrap()
}

// Trial division, with f(p) taken straight from the character table or θ_p.
fn naive(f: &ModifiedCharacter, mut n: u64) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    let mut p = 2;
    while n > 1 {
        if p * p > n {
            p = n;
        }
        while n % p == 0 {
            n /= p;
            let v = match f.theta(p) {
                Some(t) => Complex64::from_polar(1.0, 2.0 * PI * t.turns()),
                None => f.base().eval_complex(p),
            };
            out *= v;
        }
        p += 1;
    }
    out
}

fn samples() -> Vec<ModifiedCharacter> {
    vec![
        modified(4, 1, "3:0"),
        modified(5, 1, "2:1/3,3:0.2"),
        modified(7, 2, "2:0,3:0,5:1/2"),
        modified(3, 1, "2:0.123456789,5:0"),
        modified(13, 5, "2:0,5:3/7,11:0.9"),
    ]
}

#[test]
fn sieve_matches_naive() {
    for f in samples() {
        let vals = sieve_values(&f, 1, 10_001);
        for (i, v) in vals.iter().enumerate() {
            let n = i as u64 + 1;
            let want = naive(&f, n);
            assert!((v - want).norm() < 1e-12, "{} n = {n}: {v} vs {want}", f.descriptor());
            assert!((f.eval(n).unwrap() - want).norm() < 1e-12);
        }
        // a window far from the origin, where large primes survive the sieve
        let lo = 5_000_000_000u64;
        for (i, v) in sieve_values(&f, lo, lo + 2_000).iter().enumerate() {
            let want = naive(&f, lo + i as u64);
            assert!((v - want).norm() < 1e-11, "{} n = {}", f.descriptor(), lo + i as u64);
        }
    }
}

#[test]
fn multiplicativity_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in samples() {
        for _ in 0..2_000 {
            let m = rng.gen_range(1..1_000_000u64);
            let n = rng.gen_range(1..1_000_000u64);
            let lhs = f.eval(m * n).unwrap();
            let rhs = f.eval(m).unwrap() * f.eval(n).unwrap();
            assert!((lhs - rhs).norm() < 1e-12, "{} m = {m} n = {n}", f.descriptor());
        }
    }
}

#[test]
fn partial_sums_match_cumulative_naive() {
    let small = SieveConfig { block_size: 1024, memory_budget: 1 << 30, blocks_in_flight: 3 };
    for f in samples() {
        let trace = partial_sums_with(&f, 20_000, 1, &small).unwrap();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut sup = 0.0f64;
        for n in 1..=20_000u64 {
            acc += naive(&f, n);
            sup = sup.max(acc.norm());
            assert!((trace.m(n) - acc).norm() < 1e-9, "{} n = {n}", f.descriptor());
            assert!((trace.running_sup[n as usize - 1] - sup).abs() < 1e-9);
        }
        let strided = partial_sums(&f, 20_000, 1000).unwrap();
        assert_eq!(strided.xs.first(), Some(&1));
        assert_eq!(strided.xs.last(), Some(&20_000));
        for (x, v) in strided.xs.iter().zip(&strided.values) {
            assert!((trace.m(*x) - v).norm() < 1e-9);
        }
    }
}

#[test]
fn growth_record_checkpoints() {
    let f = modified(4, 1, "3:0");
    let rec = growth_record(&f, 100_000, 1.0).unwrap();
    let xs: Vec<u64> = rec.iter().map(|r| r.0).collect();
    assert_eq!(xs, vec![10, 100, 1000, 10_000, 100_000]);
    assert!(rec.iter().all(|r| r.1.is_finite() && r.1 > 0.0));
    assert!(growth_record(&f, 5, 1.0).is_err());
}

#[test]
fn modification_validation() {
    let chi4 = chi(4, 1);
    assert!(make_modified(&chi4, BTreeMap::new()).is_err());
    assert!(make_modified(&chi4, parse_mods("9:0").unwrap()).is_err());
    // χ_4(5) = 1, so θ_5 = 0 leaves f unchanged
    assert!(make_modified(&chi4, parse_mods("5:0").unwrap()).is_err());
    assert!(make_modified(&chi4, parse_mods("3:1/2").unwrap()).is_err());
    assert!(make_modified(&chi4, parse_mods("2:0").unwrap()).is_ok());
    assert!(make_modified(&chi(8, 0), parse_mods("3:0").unwrap()).is_err());
    assert!(parse_mods("3:1.5").map(|m| make_modified(&chi4, m)).map_or(true, |r| r.is_err()));
    assert!(parse_mods("3").is_err());
    assert!(parse_mods("3:abc").is_err());
}

#[test]
fn exponent_rules() {
    // χ_4 odd, f(3) = 1 where χ_4(3) = −1: T = 1, N = 1
    let e = modified(4, 1, "3:0").exponents();
    assert_eq!((e.t, e.n, e.d_f64()), (1, 1, 1.0));
    // even real character mod 5 with two primes moved to 1
    let even5 = enumerate_characters(5).unwrap().into_iter().find(|c| c.parity() == 1 && !c.is_principal()).unwrap();
    let f = make_modified(&even5, parse_mods("2:0,3:0").unwrap()).unwrap();
    let e = f.exponents();
    assert_eq!((e.t, e.n), (2, 1));
    // many modified primes push D to (|S| − 3)/2
    let f = modified(4, 1, "2:1/3,3:1/3,5:1/3,7:1/3,11:1/3,13:1/3,17:1/3,19:1/3");
    assert_eq!(f.exponents().d_f64(), 2.5);
    assert!(matches!(f.theta(3), Some(Theta::Exact(_))));
}

proptest! {
    #[test]
    fn completely_multiplicative(m in 1u64..200_000, n in 1u64..200_000, q_idx in 0usize..5) {
        let f = &samples()[q_idx];
        let lhs = f.eval(m * n).unwrap();
        let rhs = f.eval(m).unwrap() * f.eval(n).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert!((lhs.norm() - 1.0).abs() < 1e-12 || lhs.norm() == 0.0);
    }
}
