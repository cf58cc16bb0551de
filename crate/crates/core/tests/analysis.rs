use modchar_core::analysis::{
    gamma_moment, moment_accumulate, omega_fit, plancherel_lhs, spike_scan, BoxPolicy, MomentWindow, SpikeSettings,
};
use modchar_core::characters::CharacterGroup;
use modchar_core::modchar::{make_modified, parse_mods, partial_sums, ModifiedCharacter};
use modchar_core::torus::{box_hits, TorusConfig};
use modchar_core::Error;
use proptest::prelude::*;

fn example() -> ModifiedCharacter {
    let chi = CharacterGroup::new(4).unwrap().character(1).unwrap();
    make_modified(&chi, parse_mods("3:0").unwrap()).unwrap()
}

#[test]
fn lhs_head_matches_direct_sum_and_longer_trace() {
    let f = example();
    let sigma = 0.4;
    let short = partial_sums(&f, 100_000, 1).unwrap();
    let long = partial_sums(&f, 400_000, 1).unwrap();
    let a = plancherel_lhs(&f, sigma, &short).unwrap();
    let b = plancherel_lhs(&f, sigma, &long).unwrap();
    // the head is a finite sum; recompute it with plain powf
    let direct: f64 = (1..100_000u64)
        .map(|n| {
            let nf = n as f64;
            short.m(n).norm_sqr() * (nf.powf(-2.0 * sigma) - (nf + 1.0).powf(-2.0 * sigma)) / (2.0 * sigma)
        })
        .sum();
    assert!((a.head - direct).abs() < 1e-9 * direct, "{} vs {direct}", a.head);
    assert!(b.head > a.head);
    assert!(a.value.overlaps(&b.value), "{:?} vs {:?}", a.value, b.value);
    assert!(b.value.abs_error < a.value.abs_error);
    assert!(plancherel_lhs(&f, 0.0, &short).is_err());
}

#[test]
fn gamma_moment_matches_closed_form() {
    for n in [0.0, 1.0, 2.5, 4.0] {
        for sigma in [0.05, 0.3, 1.0] {
            let g = gamma_moment(n, sigma).unwrap();
            assert!((g.numeric - g.closed_form).abs() <= g.abs_error + 1e-12 * g.closed_form, "N = {n}, σ = {sigma}");
        }
    }
}

#[test]
fn moment_sums_grow_with_the_window() {
    let f = example();
    let narrow = moment_accumulate(&f, 0.4, MomentWindow::Truncated { kappa: 2.0 }, 1_000_000_000).unwrap();
    let wide = moment_accumulate(&f, 0.4, MomentWindow::Truncated { kappa: 3.0 }, 1_000_000_000).unwrap();
    assert_eq!(narrow.n_range.0, wide.n_range.0);
    assert!(narrow.n_range.1 < wide.n_range.1);
    assert!(narrow.hit_count <= wide.hit_count);
    assert!(narrow.sum <= wide.sum);
    // recompute the narrow sum from the raw hits
    let cfg = TorusConfig::from_modified(&f).unwrap();
    let hits = box_hits(&cfg, narrow.n_range.0, narrow.n_range.1, 0.4).unwrap();
    let direct: f64 = hits.iter().map(|&n| (n as f64).powf(-1.8) / (n as f64).ln().powi(2)).sum();
    assert_eq!(hits.len() as u64, narrow.hit_count);
    assert!((direct - narrow.sum).abs() < 1e-12 * direct.max(1e-300));
    assert!(narrow.n_range.0 >= 2);
}

#[test]
fn moment_budget_is_enforced() {
    let err = moment_accumulate(&example(), 0.1, MomentWindow::Full, 1_000_000_000).unwrap_err();
    assert!(err.is_resource());
    assert!(err.to_string().contains("feasible for σ"), "{err}");
    assert!(moment_accumulate(&example(), 0.4, MomentWindow::Truncated { kappa: 6.0 }, 10).is_err());
}

#[test]
fn omega_fit_recovers_exact_power() {
    let sigmas = [0.05, 0.1, 0.2, 0.4];
    let values: Vec<f64> = sigmas.iter().map(|s: &f64| 3.0 * s.powf(-4.0)).collect();
    let fit = omega_fit(&sigmas, &values).unwrap();
    assert!((fit.exponent - 4.0).abs() < 1e-12);
    assert!(fit.r2 > 1.0 - 1e-12);
    assert!(matches!(omega_fit(&sigmas[..2], &values[..2]), Err(Error::Fit(_))));
    assert!(matches!(omega_fit(&[0.1, 0.12, 0.15], &values[..3]), Err(Error::Fit(_))));
    assert!(matches!(omega_fit(&sigmas, &[1.0, -1.0, 1.0, 1.0]), Err(Error::Fit(_))));
}

#[test]
fn spike_scan_small_window() {
    let f = example();
    let report = spike_scan(&f, 0.3, (2, 3000), &SpikeSettings::default()).unwrap();
    let cfg = TorusConfig::from_modified(&f).unwrap();
    let hits = box_hits(&cfg, 2, 3000, 0.3).unwrap();
    assert_eq!(report.hits.len(), hits.len());
    assert!(report.hits.iter().zip(&hits).all(|(h, n)| h.n == *n));
    assert!(report.hits.iter().all(|h| h.normalized_ratio.is_finite() && h.e_chi.is_finite()));
    assert!(report.flags.iter().any(|f| f.contains("vacuous")));

    let wide = SpikeSettings { policy: BoxPolicy::WideBox, ..Default::default() };
    assert!(matches!(spike_scan(&f, 0.3, (2, 100), &wide), Err(Error::Precondition(_))));
    assert!(spike_scan(&f, 0.05, (2, 100), &wide).is_ok());
    assert!(matches!(spike_scan(&f, 0.5, (2, 100), &SpikeSettings::default()), Err(Error::Precondition(_))));
    assert!(spike_scan(&f, 0.3, (1, 100), &SpikeSettings::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_moment_closed_form_everywhere(n in 0.0f64..8.0, sigma in 0.02f64..2.0) {
        let g = gamma_moment(n, sigma).unwrap();
        prop_assert!((g.numeric - g.closed_form).abs() <= g.abs_error + 1e-11 * g.closed_form);
    }
}
