use std::f64::consts::PI;

use modchar_core::characters::CharacterGroup;
use modchar_core::lfunction::EvalSettings;
use modchar_core::modchar::{make_modified, parse_mods, partial_sums, ModifiedCharacter};
use modchar_core::series::{euler_factors, f_euler, f_integral, nearest_pole, poles_of_inverse_ef, IntegralSettings};
use modchar_core::Error;
use num_complex::Complex64;

fn modified(q: u64, k: u64, mods: &str) -> ModifiedCharacter {
    let chi = CharacterGroup::new(q).unwrap().character(k).unwrap();
    make_modified(&chi, parse_mods(mods).unwrap()).unwrap()
}

#[test]
fn listed_poles_are_zeros_of_the_euler_product() {
    let f = modified(4, 1, "3:0,7:1/3");
    let poles = poles_of_inverse_ef(&f, -10.0, 100.0).unwrap();
    assert!(poles.windows(2).all(|w| w[0].t <= w[1].t));
    for pl in &poles {
        let e = euler_factors(&f, Complex64::new(0.0, pl.t));
        assert!(e.e_f.norm() <= 1e-10, "p = {} z = {}: |E_f| = {:e}", pl.p, pl.z, e.e_f.norm());
    }
    // per prime, the lattice 2π(z + θ)/log p inside the window
    for (p, theta) in [(3u64, 0.0), (7, 1.0 / 3.0)] {
        let lp = (p as f64).ln();
        let want = (-30..300)
            .map(|z: i64| 2.0 * PI * (z as f64 + theta) / lp)
            .filter(|t| (-10.0..=100.0).contains(t))
            .count();
        assert_eq!(poles.iter().filter(|pl| pl.p == p).count(), want, "p = {p}");
    }
    assert!(poles_of_inverse_ef(&f, 5.0, 5.0).unwrap().is_empty());
    assert!(poles_of_inverse_ef(&f, 5.0, 1.0).is_err());
}

#[test]
fn evaluation_on_a_pole_is_refused() {
    let f = modified(4, 1, "3:0");
    let t = 2.0 * PI / 3f64.ln();
    let err = f_euler(&f, Complex64::new(0.0, t), &EvalSettings::default()).unwrap_err();
    assert!(matches!(err, Error::Pole(_)), "{err:?}");
    let near = nearest_pole(&f, t + 0.01).unwrap();
    assert_eq!((near.p, near.z), (3, 1));
    assert!(f_euler(&f, Complex64::new(0.0, t + 0.01), &EvalSettings::default()).is_ok());
}

#[test]
fn euler_route_matches_dirichlet_series() {
    // for σ = 3 the series converges fast: tail ≤ N^{−2}/2
    let f = modified(5, 1, "2:1/3,3:0.2");
    let n_max = 100_000u64;
    for t in [0.0, 4.5, -17.0] {
        let s = Complex64::new(3.0, t);
        let direct: Complex64 = (1..=n_max).map(|n| f.eval(n).unwrap() * (-s * (n as f64).ln()).exp()).sum();
        let got = f_euler(&f, s, &EvalSettings::default()).unwrap();
        let budget = got.abs_error + 0.5 / (n_max as f64).powi(2) + 1e-13;
        assert!((got.value - direct).norm() <= budget, "t = {t}: {} vs {direct}", got.value);
    }
}

#[test]
fn integral_route_agrees_with_euler_route() {
    let f = modified(4, 1, "3:0");
    let trace = partial_sums(&f, 200_000, 1).unwrap();
    let settings = IntegralSettings::default();
    for (sigma, t) in [(0.8, 1.0), (1.0, 0.0), (1.5, -3.0), (2.0, 10.0)] {
        let s = Complex64::new(sigma, t);
        let a = f_integral(&f, s, &trace, &settings).unwrap();
        let b = f_euler(&f, s, &EvalSettings::default()).unwrap();
        assert!(a.overlaps(&b), "s = {s}: integral {} ± {:e}, euler {} ± {:e}", a.value, a.abs_error, b.value, b.abs_error);
    }
}

#[test]
fn integral_route_is_stable_under_longer_traces() {
    let f = modified(7, 2, "2:0,3:0,5:1/2");
    let short = partial_sums(&f, 50_000, 1).unwrap();
    let long = partial_sums(&f, 200_000, 1).unwrap();
    let settings = IntegralSettings::default();
    for s in [Complex64::new(0.7, 2.0), Complex64::new(1.2, -5.0)] {
        let a = f_integral(&f, s, &short, &settings).unwrap();
        let b = f_integral(&f, s, &long, &settings).unwrap();
        assert!(a.overlaps(&b), "s = {s}");
        assert!(b.abs_error <= a.abs_error, "s = {s}: error grew from {:e} to {:e}", a.abs_error, b.abs_error);
    }
    assert!(f_integral(&f, Complex64::new(0.0, 1.0), &short, &settings).is_err());
    let strided = partial_sums(&f, 10_000, 10).unwrap();
    assert!(f_integral(&f, Complex64::new(1.0, 1.0), &strided, &settings).is_err());
    let strict = IntegralSettings { target_abs_error: Some(1e-30), ..settings };
    assert!(f_integral(&f, Complex64::new(0.7, 2.0), &short, &strict).unwrap_err().is_resource());
}
