use std::f64::consts::PI;

use modchar_core::fixed::{series_log_fraction, table_log_fraction, Frac128, TABLE_LIMIT};
use modchar_core::arith::primes_up_to;
use modchar_core::torus::{
    baker_profile, box_hits, count_q, discrepancy_decay_fit, et_bound, exact_star_discrepancy_columns, exp_sum,
    orbit_columns, orbit_point, TorusConfig, MAX_ORBIT_INDEX,
};
use num_bigint::BigUint;
use num_complex::Complex64;
use proptest::prelude::*;

fn frac(x: f64) -> f64 {
    x - x.floor()
}

// sup over grid corners of |#closed/N − vol| and |#open/N − vol| in f64.
fn brute_dstar(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut grids: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut g: Vec<f64> = points.iter().map(|p| p[k]).collect();
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();
    for g in &mut grids {
        g.retain(|v| *v <= 1.0);
    }
    let mut best = 0.0f64;
    let mut idx = vec![0usize; d];
    loop {
        let corner: Vec<f64> = (0..d).map(|k| grids[k][idx[k]]).collect();
        let vol = corner.iter().fold(1.0, |a, c| a * c);
        let open = points.iter().filter(|p| p.iter().zip(&corner).all(|(x, c)| x < c)).count();
        let closed = points.iter().filter(|p| p.iter().zip(&corner).all(|(x, c)| x <= c)).count();
        best = best.max(closed as f64 / n as f64 - vol).max(vol - open as f64 / n as f64);
        let mut k = 0;
        loop {
            if k == d {
                return best;
            }
            idx[k] += 1;
            if idx[k] < grids[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn log_table_matches_series() {
    for p in primes_up_to(TABLE_LIMIT) {
        let t = table_log_fraction(p).unwrap();
        let s = series_log_fraction(p);
        assert_eq!(t.int_part, s.int_part, "p = {p}");
        let diff = if t.frac256 > s.frac256 { &t.frac256 - &s.frac256 } else { &s.frac256 - &t.frac256 };
        assert!(diff < BigUint::from(1u32 << 12), "p = {p}: differs by {diff}");
        assert!((t.to_frac128().to_f64() - frac((p as f64).ln())).abs() < 1e-14);
    }
}

#[test]
fn orbit_agrees_with_float_for_small_n() {
    let cfg = TorusConfig::new(&[2, 3, 5], &[0.1, 0.2, 0.3]).unwrap();
    for n in [1u64, 2, 17, 1000, 65_536] {
        let pt = orbit_point(&cfg, n).unwrap();
        for (k, p) in [2f64, 3.0, 5.0].iter().enumerate() {
            let want = frac(n as f64 * p.ln() - [0.1, 0.2, 0.3][k]);
            let got = pt.coords[k].to_f64();
            let d = (got - want).abs();
            assert!(d.min(1.0 - d) < 1e-9, "n = {n}, k = {k}");
        }
    }
    assert!(orbit_point(&cfg, MAX_ORBIT_INDEX).is_ok());
    assert!(orbit_point(&cfg, MAX_ORBIT_INDEX + 1).unwrap_err().is_resource());
}

#[test]
fn exp_sum_closed_form_matches_loop() {
    let cfg = TorusConfig::new(&[2, 3], &[0.25, 0.6]).unwrap();
    for m in [[1i64, 0], [0, 1], [3, -2], [-5, 7], [12, 1]] {
        for x in [1u64, 10, 999, 10_000] {
            let cols = orbit_columns(&cfg, 1, x).unwrap();
            let mut direct = Complex64::new(0.0, 0.0);
            for i in 0..x as usize {
                let phase = cols[0][i].mul_int(m[0] as i128).add(cols[1][i].mul_int(m[1] as i128));
                direct += Complex64::from_polar(1.0, 2.0 * PI * phase.to_f64());
            }
            let e = exp_sum(&cfg, &m, x).unwrap();
            assert!((e.value - direct).norm() < 1e-10 * (1.0 + x as f64 * 1e-3), "m = {m:?}, x = {x}");
            assert!(e.value.norm() <= e.bound * (1.0 + 1e-12));
            assert!(e.bound <= e.coarse_bound * (1.0 + 1e-12));
        }
    }
    assert!(exp_sum(&cfg, &[0, 0], 10).is_err());
    assert!(exp_sum(&cfg, &[1], 10).is_err());
}

#[test]
fn box_hits_and_count_agree() {
    let cfg = TorusConfig::new(&[2, 3], &[0.0, 0.0]).unwrap();
    let eps = 0.05;
    let hits = box_hits(&cfg, 1, 200_000, eps).unwrap();
    let count = count_q(&cfg, 200_000, eps).unwrap();
    assert_eq!(hits.len() as u64, count.count);
    let first = count_q(&cfg, 50_000, eps).unwrap().count;
    let mid = box_hits(&cfg, 50_001, 200_000, eps).unwrap();
    assert_eq!(first + mid.len() as u64, count.count);
    for &n in hits.iter().take(200) {
        let pt = orbit_point(&cfg, n).unwrap();
        assert!(pt.to_f64().iter().all(|c| *c < eps), "n = {n}");
    }
    // roughly x·ε^d points, by equidistribution
    assert!((count.count as f64 / count.expected - 1.0).abs() < 0.1);
}

#[test]
fn et_bound_dominates_exact_discrepancy() {
    for (primes, theta) in [(vec![2u64], vec![0.3]), (vec![2, 3], vec![0.0, 0.5]), (vec![3, 5, 7], vec![0.1, 0.2, 0.3])] {
        let cfg = TorusConfig::new(&primes, &theta).unwrap();
        for x in [50u64, 200, 800] {
            let cols = orbit_columns(&cfg, 1, x).unwrap();
            let exact = exact_star_discrepancy_columns(&cols).unwrap().exact_dstar.unwrap();
            let et = et_bound(&cfg, x, 8, None, false).unwrap().et_bound.unwrap();
            assert!(et >= exact, "{primes:?} x = {x}: ET {et} < D* {exact}");
        }
    }
}

#[test]
fn decay_fit_sees_decay_only_when_present() {
    let cfg = TorusConfig::new(&[2], &[0.0]).unwrap();
    let fit = discrepancy_decay_fit(&cfg, &[100, 1000, 10_000, 100_000], 16).unwrap();
    assert!(fit.fit.exponent > 0.3, "δ̂ = {}", fit.fit.exponent);
    assert!(!fit.fit.flags.iter().any(|f| f == "no decay"));
    let constant = TorusConfig::with_alpha(&[0.0], &[0.0]).unwrap();
    let fit = discrepancy_decay_fit(&constant, &[100, 1000, 10_000, 100_000], 16).unwrap();
    assert!(fit.fit.flags.iter().any(|f| f == "no decay"), "{:?}", fit.fit.flags);
}

#[test]
fn baker_staircase_matches_brute_force() {
    let cfg = TorusConfig::new(&[2, 3], &[0.0, 0.0]).unwrap();
    let prof = baker_profile(&cfg, 60).unwrap();
    assert!(prof.exhaustive);
    let (l2, l3) = (2f64.ln(), 3f64.ln());
    let mut running = f64::MAX;
    let mut records = Vec::new();
    for norm in 1..=60i64 {
        for a in -norm..=norm {
            for b in -norm..=norm {
                if a.abs().max(b.abs()) != norm {
                    continue;
                }
                let v = a as f64 * l2 + b as f64 * l3;
                let dist = (v - v.round()).abs();
                if dist < running - 1e-12 {
                    running = dist;
                    records.push((norm as u64, dist));
                }
            }
        }
    }
    let mut got: Vec<(u64, f64)> = prof.staircase.iter().map(|s| (s.norm, s.min_distance)).collect();
    got.dedup_by_key(|s| s.0);
    let mut want = records.clone();
    want.reverse();
    want.dedup_by_key(|s| s.0);
    want.reverse();
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g.0, w.0);
        assert!((g.1 - w.1).abs() < 1e-12);
    }
}

#[test]
fn baker_exponent_positive_for_two_primes() {
    let cfg = TorusConfig::new(&[2, 3], &[0.0, 0.0]).unwrap();
    let prof = baker_profile(&cfg, 10_000).unwrap();
    assert!(prof.fit.exponent > 0.0, "κ̂ = {}", prof.fit.exponent);
    assert!(prof.fit.flags.iter().any(|f| f == "EMPIRICAL"));
    assert!(prof.staircase.windows(2).all(|w| w[1].min_distance < w[0].min_distance));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_discrepancy_matches_brute_force(
        pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..40),
    ) {
        let cols: Vec<Vec<Frac128>> = (0..2).map(|k| pts.iter().map(|p| Frac128::from_f64(p[k])).collect()).collect();
        let got = exact_star_discrepancy_columns(&cols).unwrap().exact_dstar.unwrap();
        let want = brute_dstar(&pts);
        prop_assert!((got - want).abs() < 1e-12, "got {} want {}", got, want);
    }

    #[test]
    fn orbit_columns_match_orbit_points(lo in 1u64..1_000_000_000, len in 1u64..50) {
        let cfg = TorusConfig::new(&[5, 7], &[0.125, 0.75]).unwrap();
        let cols = orbit_columns(&cfg, lo, lo + len - 1).unwrap();
        for i in 0..len as usize {
            let pt = orbit_point(&cfg, lo + i as u64).unwrap();
            prop_assert_eq!(pt.coords[0], cols[0][i]);
            prop_assert_eq!(pt.coords[1], cols[1][i]);
        }
    }
}
