//! One function per subcommand.

use modchar_core::analysis::{
    omega_fit, plancherel_check, plancherel_lhs, spike_scan, BoxPolicy, RhsSettings, SpikeSettings,
};
use modchar_core::arith::lcm;
use modchar_core::characters::{CharacterGroup, DirichletCharacter};
use modchar_core::lfunction::{functional_equation_residual, l_function, EvalSettings};
use modchar_core::modchar::{make_modified, parse_mods, partial_sums, ModifiedCharacter};
use modchar_core::phase::CharValue;
use modchar_core::series::{f_euler, f_integral, poles_of_inverse_ef, IntegralSettings};
use modchar_core::torus::{
    baker_profile, box_hits, et_bound, exact_limit, exact_star_discrepancy_columns, orbit_columns, orbit_point,
    TorusConfig,
};
use serde_json::{json, Value};

use crate::output::{self, Csv};
use crate::parse::fmt_f;
use crate::*;

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::CharTable(a) => char_table(a),
        Command::PartialSums(a) => partial_sums_cmd(a),
        Command::SeriesEval(a) => series_eval(a),
        Command::Poles(a) => poles(a),
        Command::Orbit(a) => orbit(a),
        Command::Discrepancy(a) => discrepancy(a),
        Command::Baker(a) => baker(a),
        Command::LEval(a) => l_eval(a),
        Command::FeCheck(a) => fe_check(a),
        Command::PlancherelCheck(a) => plancherel(a),
        Command::SpikeScan(a) => spike(a),
        Command::OmegaFit(a) => omega(a),
        Command::Sweep(a) => sweep::run_sweep(&a.config, a.resume),
    }
}

fn character(a: &CharArgs) -> CliResult<DirichletCharacter> {
    Ok(CharacterGroup::new(a.modulus)?.character(a.char_index)?)
}

fn modified(a: &ModArgs) -> CliResult<ModifiedCharacter> {
    Ok(make_modified(&character(&a.character)?, parse_mods(&a.mods)?)?)
}

fn eval_settings(err: Option<f64>, default: EvalSettings) -> EvalSettings {
    err.map(EvalSettings::with_target).unwrap_or(default)
}

fn torus(a: &TorusArgs) -> CliResult<TorusConfig> {
    let theta = a.theta.clone().unwrap_or_else(|| vec![0.0; a.primes.len()]);
    if theta.len() != a.primes.len() {
        return Err(CliError::Usage(format!("{} primes but {} shifts θ", a.primes.len(), theta.len())));
    }
    Ok(TorusConfig::new(&a.primes, &theta)?)
}

fn char_table(a: &CharTableArgs) -> CliResult<()> {
    let group = CharacterGroup::new(a.modulus)?;
    let exps = |k: u64| -> CliResult<String> {
        Ok(group.exponents_of(k)?.iter().map(u64::to_string).collect::<Vec<_>>().join(";"))
    };
    let text = match a.index {
        Some(k) => {
            let chi = group.character(k)?;
            let mut csv = Csv::with_meta(
                &[
                    ("modulus", a.modulus.to_string()),
                    ("index", k.to_string()),
                    ("exponents", exps(k)?),
                    ("conductor", chi.conductor().to_string()),
                    ("parity", chi.parity().to_string()),
                    ("primitive", chi.is_primitive().to_string()),
                ],
                &["n", "phase_num", "phase_den", "is_zero"],
            );
            for (n, v) in chi.values().iter().enumerate() {
                let (num, den, zero) = match v {
                    CharValue::Zero => (0, 1, true),
                    CharValue::Phase(p) => (p.numerator(), p.denominator(), false),
                };
                csv.row(&[n.to_string(), num.to_string(), den.to_string(), zero.to_string()]);
            }
            csv.finish()
        }
        None => {
            let chars = group.characters();
            let mut csv = Csv::with_meta(
                &[
                    ("modulus", a.modulus.to_string()),
                    ("characters", chars.len().to_string()),
                    ("ordering", "lexicographic in the generator exponent tuple".into()),
                ],
                &["index", "exponents", "order", "conductor", "parity", "primitive"],
            );
            for (k, chi) in chars.iter().enumerate() {
                let order = chi.values().iter().filter_map(CharValue::phase).fold(1, |o, p| lcm(o, p.denominator()));
                csv.row(&[
                    k.to_string(),
                    exps(k as u64)?,
                    order.to_string(),
                    chi.conductor().to_string(),
                    chi.parity().to_string(),
                    chi.is_primitive().to_string(),
                ]);
            }
            csv.finish()
        }
    };
    output::write(&a.out.out, &text)
}

fn partial_sums_cmd(a: &PartialSumsArgs) -> CliResult<()> {
    let f = modified(&a.f)?;
    let trace = partial_sums(&f, a.xmax, a.stride)?;
    let mut csv = Csv::new(&["x", "re_M", "im_M", "abs_M", "running_sup"]);
    for ((x, m), sup) in trace.xs.iter().zip(&trace.values).zip(&trace.running_sup) {
        csv.row(&[x.to_string(), fmt_f(m.re), fmt_f(m.im), fmt_f(m.norm()), fmt_f(*sup)]);
    }
    output::write(&a.out.out, &csv.finish())
}

fn series_eval(a: &SeriesEvalArgs) -> CliResult<()> {
    let f = modified(&a.f)?;
    let settings = eval_settings(a.err, EvalSettings::default());
    let euler = match a.route {
        Route::Euler | Route::Both => Some(f_euler(&f, a.s, &settings)?),
        Route::Integral => None,
    };
    let mut heuristics = Vec::new();
    let integral = match a.route {
        Route::Integral | Route::Both => {
            let trace = partial_sums(&f, a.xmax, 1)?;
            heuristics.push(format!(
                "integral tail from the empirical envelope of M on [sqrt(X), X], inflated x{}",
                IntegralSettings::default().safety
            ));
            Some(f_integral(&f, a.s, &trace, &IntegralSettings::default())?)
        }
        Route::Euler => None,
    };
    let (gap, overlap) = match (&euler, &integral) {
        (Some(e), Some(i)) => (Some((e.value - i.value).norm()), Some(e.overlaps(i))),
        _ => (None, None),
    };
    let body = json!({
        "s": output::complex(a.s),
        "route": format!("{:?}", a.route).to_lowercase(),
        "x_max": integral.as_ref().map(|_| a.xmax),
        "euler": euler.as_ref().map(output::bounded),
        "integral": integral.as_ref().map(output::bounded),
        "gap": gap,
        "overlap": overlap,
    });
    let report = output::report("series-eval", Some(f.descriptor()), Value::Null, heuristics, body);
    output::write_json(&a.out.out, &report)
}

fn poles(a: &PolesArgs) -> CliResult<()> {
    let f = modified(&a.f)?;
    let mut csv = Csv::new(&["p", "z", "t"]);
    for pl in poles_of_inverse_ef(&f, a.t_lo, a.t_hi)? {
        csv.row(&[pl.p.to_string(), pl.z.to_string(), fmt_f(pl.t)]);
    }
    output::write(&a.out.out, &csv.finish())
}

fn orbit(a: &OrbitArgs) -> CliResult<()> {
    let cfg = torus(&a.torus)?;
    let mut header = vec!["n".to_string()];
    header.extend((1..=cfg.dim()).map(|k| format!("coord_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    for n in box_hits(&cfg, a.n_lo, a.n_hi, a.eps)? {
        let pt = orbit_point(&cfg, n)?;
        let mut row = vec![n.to_string()];
        row.extend(pt.to_f64().into_iter().map(fmt_f));
        csv.row(&row);
    }
    output::write(&a.out.out, &csv.finish())
}

fn discrepancy(a: &DiscrepancyArgs) -> CliResult<()> {
    let cfg = torus(&a.torus)?;
    let limit = exact_limit(cfg.dim());
    let mut csv = Csv::new(&["x", "exact_dstar", "et_bound", "y_cutoff", "c_d", "worst_box"]);
    for &x in &a.x_grid {
        let exact = match a.mode {
            DiscrepancyMode::Et => None,
            _ => {
                let feasible = limit.is_some_and(|l| x as usize <= l);
                if !feasible && a.mode == DiscrepancyMode::Exact {
                    let why = match limit {
                        Some(l) => format!("{x} points exceed the limit of {l} in dimension {}", cfg.dim()),
                        None => format!("dimension {} is above 3", cfg.dim()),
                    };
                    return Err(modchar_core::Error::Capability(format!("exact discrepancy refused: {why}")).into());
                }
                if feasible {
                    Some(exact_star_discrepancy_columns(&orbit_columns(&cfg, 1, x)?)?)
                } else {
                    None
                }
            }
        };
        let et = match a.mode {
            DiscrepancyMode::Exact => None,
            _ => Some(et_bound(&cfg, x, a.y, a.c_d, false)?),
        };
        let opt = |v: Option<f64>| v.map(fmt_f).unwrap_or_default();
        let worst = exact
            .as_ref()
            .and_then(|r| r.worst_box.as_ref())
            .map(|b| b.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        csv.row(&[
            x.to_string(),
            opt(exact.as_ref().and_then(|r| r.exact_dstar)),
            opt(et.as_ref().and_then(|r| r.et_bound)),
            et.as_ref().and_then(|r| r.y_cutoff).map(|y| y.to_string()).unwrap_or_default(),
            opt(et.as_ref().and_then(|r| r.c_d)),
            worst,
        ]);
    }
    output::write(&a.out.out, &csv.finish())
}

fn baker(a: &BakerArgs) -> CliResult<()> {
    let cfg = torus(&a.torus)?;
    let prof = baker_profile(&cfg, a.max_norm)?;
    let mut csv = Csv::new(&["norm", "min_distance", "m"]);
    for step in &prof.staircase {
        let m: Vec<String> = step.m.iter().map(i64::to_string).collect();
        csv.row(&[step.norm.to_string(), fmt_f(step.min_distance), m.join(";")]);
    }
    output::write(&a.out.out, &csv.finish())?;
    if let Some(path) = output::summary_path(&a.out.out, &a.summary) {
        let body = json!({
            "primes": cfg.primes(),
            "max_norm": prof.max_norm,
            "exhaustive": prof.exhaustive,
            "kappa_hat": prof.fit.exponent,
            "c_hat": prof.c_hat,
            "records": prof.staircase.len(),
            "fit": prof.fit,
        });
        let policy = json!(if prof.exhaustive { "exhaustive" } else { "lattice shortlist" });
        let report = output::report("baker", None, policy, prof.fit.flags.clone(), body);
        output::write_json(&path, &report)?;
    }
    Ok(())
}

fn chi_descriptor(chi: &DirichletCharacter, a: &CharArgs) -> String {
    format!("chi[q={},k={}]", chi.modulus(), a.char_index)
}

fn l_eval(a: &LEvalArgs) -> CliResult<()> {
    let chi = character(&a.character)?;
    let v = l_function(a.s, &chi, &eval_settings(a.err, EvalSettings::default()))?;
    let body = json!({ "s": output::complex(a.s), "re": v.value.re, "im": v.value.im, "abs_error": v.abs_error });
    let report = output::report("l-eval", Some(chi_descriptor(&chi, &a.character)), Value::Null, vec![], body);
    output::write_json(&a.out.out, &report)
}

fn fe_check(a: &FeCheckArgs) -> CliResult<()> {
    let chi = character(&a.character)?;
    let c = functional_equation_residual(a.s, &chi, &eval_settings(a.err, EvalSettings::default()))?;
    let body = json!({
        "s": output::complex(a.s),
        "residual": c.residual,
        "budget": c.budget,
        "within_budget": c.residual <= c.budget,
        "root_number": output::complex(c.root_number),
        "lhs": output::bounded(&c.lhs),
        "rhs": output::bounded(&c.rhs),
    });
    let report = output::report("fe-check", Some(chi_descriptor(&chi, &a.character)), Value::Null, vec![], body);
    output::write_json(&a.out.out, &report)
}

fn plancherel(a: &PlancherelArgs) -> CliResult<()> {
    let f = modified(&a.f)?;
    let trace = partial_sums(&f, a.xmax, 1)?;
    let mut settings = RhsSettings::default();
    if let Some(e) = a.err {
        settings.eval = EvalSettings::with_target(e);
    }
    if let Some(t) = a.quad_abs_tol {
        settings.quad.abs_tol = t;
    }
    if let Some(t) = a.quad_rel_tol {
        settings.quad.rel_tol = t;
    }
    let r = plancherel_check(&f, a.sigma, &trace, a.tcut, &settings)?;
    let body = json!({
        "sigma": r.sigma,
        "lhs": { "value": r.lhs.value.re, "abs_error": r.lhs.abs_error },
        "rhs": { "value": r.rhs.value.re, "abs_error": r.rhs.abs_error },
        "relative_gap": r.relative_gap,
        "relative_budget": r.relative_budget,
        "agrees": r.agrees(0.0),
        "x_used": r.x_used,
        "t_used": r.t_used,
        "settings": settings,
    });
    let policy = json!({ "x_max": a.xmax, "t_cut": a.tcut, "tails": "extrapolated" });
    let report = output::report("plancherel-check", Some(f.descriptor()), policy, r.heuristics.clone(), body);
    output::write_json(&a.out.out, &report)
}

fn spike(a: &SpikeScanArgs) -> CliResult<()> {
    let f = modified(&a.f)?;
    let settings = SpikeSettings {
        policy: match a.policy {
            PolicyArg::QtCube => BoxPolicy::QtCube,
            PolicyArg::WideBox => BoxPolicy::WideBox,
        },
        r_average: a.r_average,
        eval: eval_settings(a.err, SpikeSettings::default().eval),
    };
    let r = spike_scan(&f, a.sigma, (a.n_lo, a.n_hi), &settings)?;
    let mut csv = Csv::new(&["n", "inv_ef_scaled", "e_chi", "normalized_ratio", "reflected_l"]);
    for h in &r.hits {
        csv.row(&[
            h.n.to_string(),
            fmt_f(h.inv_ef_scaled),
            fmt_f(h.e_chi),
            fmt_f(h.normalized_ratio),
            fmt_f(h.reflected_l),
        ]);
    }
    output::write(&a.out.out, &csv.finish())?;
    if let Some(path) = output::summary_path(&a.out.out, &a.summary) {
        let body = json!({
            "sigma": r.sigma,
            "t_param": r.t_param,
            "hit_count": r.hits.len(),
            "min_inv_ef_scaled": r.min_inv_ef_scaled,
            "min_e_chi": r.min_e_chi,
            "min_normalized_ratio": r.min_normalized_ratio,
            "median_normalized_ratio": r.median_normalized_ratio,
            "min_reflected_l": r.min_reflected_l,
        });
        let policy = json!({
            "policy": r.policy,
            "box_side": r.box_side,
            "window": [r.window.0, r.window.1],
            "r_averaged": r.r_averaged,
        });
        let report = output::report("spike-scan", Some(f.descriptor()), policy, r.flags.clone(), body);
        output::write_json(&path, &report)?;
    }
    Ok(())
}

fn omega(a: &OmegaFitArgs) -> CliResult<()> {
    let f = modified(&a.f)?;
    let trace = partial_sums(&f, a.xmax, 1)?;
    let mut values = Vec::with_capacity(a.sigmas.len());
    let mut rows = Vec::new();
    let mut heuristics = Vec::new();
    for &sigma in &a.sigmas {
        let lhs = plancherel_lhs(&f, sigma, &trace)?;
        values.push(lhs.value.value.re);
        rows.push(json!({ "sigma": sigma, "moment": lhs.value.value.re, "abs_error": lhs.value.abs_error }));
        for h in lhs.heuristics {
            if !heuristics.contains(&h) {
                heuristics.push(h);
            }
        }
    }
    let fit = omega_fit(&a.sigmas, &values)?;
    heuristics.extend(fit.flags.iter().cloned());
    let e = f.exponents();
    let body = json!({
        "x_used": a.xmax,
        "moments": rows,
        "fit": fit,
        "exponents": { "t": e.t, "n": e.n, "d": e.d_f64() },
    });
    let report = output::report("omega-fit", Some(f.descriptor()), json!({ "x_max": a.xmax }), heuristics, body);
    output::write_json(&a.out.out, &report)
}
