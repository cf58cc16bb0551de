use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modchar-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// The JSON Schema subset used by the shipped schemas: type, enum,
/// required, properties, items and minimum.
fn validate(v: &Value, s: &Value, at: &str) -> Result<(), String> {
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{at}: bad type keyword")),
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_i64() || v.is_u64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{at}: {v} is not of type {t}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in {options:?}"));
        }
    }
    if let (Some(min), Some(x)) = (s.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            return Err(format!("{at}: {x} below minimum {min}"));
        }
    }
    if let Value::Object(map) = v {
        if let Some(Value::Array(req)) = s.get("required") {
            for r in req.iter().filter_map(Value::as_str) {
                if !map.contains_key(r) {
                    return Err(format!("{at}: missing `{r}`"));
                }
            }
        }
        if let Some(Value::Object(props)) = s.get("properties") {
            for (k, sub) in props {
                if let Some(child) = map.get(k) {
                    validate(child, sub, &format!("{at}.{k}"))?;
                }
            }
        }
    }
    if let (Value::Array(items), Some(sub)) = (v, s.get("items")) {
        for (i, item) in items.iter().enumerate() {
            validate(item, sub, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

fn assert_valid(v: &Value, name: &str) {
    if let Err(e) = validate(v, &schema(name), "$") {
        panic!("{name} output fails its schema: {e}\n{v:#}");
    }
}

#[test]
fn validator_rejects_bad_documents() {
    let s = schema("l-eval");
    let good: Value = serde_json::from_str(&stdout(&run(&["l-eval", "--s", "2"]))).unwrap();
    assert!(validate(&good, &s, "$").is_ok());
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("abs_error");
    assert!(validate(&missing, &s, "$").is_err());
    let mut wrong = good.clone();
    wrong["re"] = Value::String("1".into());
    assert!(validate(&wrong, &s, "$").is_err());
    let mut negative = good;
    negative["abs_error"] = serde_json::json!(-1.0);
    assert!(validate(&negative, &s, "$").is_err());
}

#[test]
fn char_table_listing_and_values() {
    let o = run(&["char-table", "--modulus", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "index,exponents,order,conductor,parity,primitive");
    assert_eq!(rows.len(), 3);
    assert!(text.contains("# characters=2"));

    let text = stdout(&run(&["char-table", "--modulus", "5", "--index", "1"]));
    assert!(text.contains("# conductor=5"));
    assert!(text.contains("# parity=-1"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows, ["0,0,1,true", "1,0,1,false", "2,1,4,false", "3,3,4,false", "4,1,2,false"]);
}

// χ_4 with f(3) = 1: f(2) = 0, f(p) = χ_4(p) for odd p ≠ 3.
fn brute_m(x: u64) -> i64 {
    (1..=x)
        .map(|mut n| {
            let mut v = 1i64;
            let mut p = 2;
            while n > 1 {
                if p * p > n {
                    p = n;
                }
                while n % p == 0 {
                    n /= p;
                    v *= match p {
                        2 => 0,
                        3 => 1,
                        _ if p % 4 == 1 => 1,
                        _ => -1,
                    };
                }
                p += 1;
            }
            v
        })
        .sum()
}

#[test]
fn partial_sums_match_brute_force() {
    let o = run(&["partial-sums", "--modulus", "4", "--char-index", "1", "--mods", "3:0", "--xmax", "100", "--stride", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,re_M,im_M,abs_M,running_sup"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        let x: u64 = r[0].parse().unwrap();
        let re: f64 = r[1].parse().unwrap();
        assert_eq!(re, brute_m(x) as f64, "x = {x}");
        for cell in &r[1..] {
            let (mantissa, _) = cell.split_once('e').expect("scientific notation");
            assert_eq!(mantissa.trim_start_matches('-').len(), 18, "17 significant digits in {cell}");
        }
    }
    assert_eq!(rows.last().unwrap()[0], "100");
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let o = bin()
            .env("MODCHAR_THREADS", threads)
            .args(["partial-sums", "--mods", "2:1/3,3:0.2", "--modulus", "5", "--xmax", "3e5", "--stride", "997"])
            .arg(format!("--out={}", path.display()))
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let o = run(&["partial-sums", "--mods", "2:1/3,3:0.2", "--modulus", "5", "--xmax", "3e5", "--stride", "997", "--out", "-"]);
    assert_eq!(o.stdout, outputs[0]);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["l-eval", "--s", "2", "--bogus"]).status.code(), Some(2));
    // modification that reproduces χ_4(5) = 1
    let o = run(&["partial-sums", "--mods", "5:0", "--xmax", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("θ_5"), "{}", stderr(&o));
    assert_eq!(run(&["l-eval", "--modulus", "4", "--char-index", "7", "--s", "2"]).status.code(), Some(2));
    // a trace that cannot fit in memory
    assert_eq!(run(&["partial-sums", "--mods", "3:0", "--xmax", "1e13"]).status.code(), Some(3));
    // orbit index beyond the fixed-point budget
    let o = run(&["orbit", "--primes", "2", "--n-lo", "1152921504606846975", "--n-hi", "1152921504606846977", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(run(&["discrepancy", "--primes", "2,3,5,7", "--x-grid", "10", "--mode", "exact"]).status.code(), Some(2));
    let o = run(&["series-eval", "--mods", "3:0", "--s", "0+5.719201734760253i", "--route", "euler"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("pole"), "{}", stderr(&o));
}

#[test]
fn json_reports_match_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let json = |args: &[&str]| -> Value {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        serde_json::from_slice(&o.stdout).unwrap()
    };
    let v = json(&["l-eval", "--modulus", "4", "--char-index", "1", "--s", "1"]);
    assert_valid(&v, "l-eval");
    assert!((v["re"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-13);

    let v = json(&["fe-check", "--modulus", "7", "--char-index", "2", "--s", "0.3-12i"]);
    assert_valid(&v, "fe-check");
    assert_eq!(v["within_budget"], Value::Bool(true));

    let v = json(&["series-eval", "--mods", "3:0", "--s", "1.2+3i", "--xmax", "2e4"]);
    assert_valid(&v, "series-eval");
    assert_eq!(v["overlap"], Value::Bool(true));
    let v = json(&["series-eval", "--mods", "3:0", "--s", "1.2+3i", "--route", "euler"]);
    assert_valid(&v, "series-eval");
    assert!(v["integral"].is_null());

    let v = json(&["plancherel-check", "--mods", "3:0", "--sigma", "0.5", "--xmax", "2e4", "--tcut", "100"]);
    assert_valid(&v, "plancherel-check");

    let v = json(&["omega-fit", "--mods", "3:0", "--sigmas", "0.5,0.35,0.25", "--xmax", "2e4"]);
    assert_valid(&v, "omega-fit");

    let csv = dir.path().join("baker.csv");
    let o = run(&["baker", "--primes", "2,3", "--M", "200", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("baker.json")).unwrap()).unwrap();
    assert_valid(&v, "baker");
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("norm,min_distance,m\n"));

    let csv = dir.path().join("spikes.csv");
    let summary = dir.path().join("spikes-summary.json");
    let o = run(&[
        "spike-scan", "--mods", "3:0", "--sigma", "0.3", "--n-lo", "2", "--n-hi", "500",
        "--out", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_valid(&v, "spike-scan");
    let rows = std::fs::read_to_string(csv).unwrap().lines().count() - 1;
    assert_eq!(v["hit_count"].as_u64().unwrap() as usize, rows);
}

#[test]
fn csv_commands_have_documented_columns() {
    let text = stdout(&run(&["poles", "--mods", "3:0,7:1/3", "--t-lo", "0", "--t-hi", "20"]));
    assert!(text.starts_with("p,z,t\n"));
    assert!(text.lines().count() > 3);
    let text = stdout(&run(&["orbit", "--primes", "2,3", "--theta", "0,0", "--n-lo", "1", "--n-hi", "1e5", "--eps", "0.05"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,coord_1,coord_2"));
    for l in lines {
        let cols: Vec<f64> = l.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert!(cols.iter().all(|c| (0.0..0.05).contains(c)), "{l}");
    }
    let text = stdout(&run(&["discrepancy", "--primes", "2", "--x-grid", "1e2,1e3", "--mode", "both", "--y", "32"]));
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let exact: f64 = r[1].parse().unwrap();
        let et: f64 = r[2].parse().unwrap();
        assert!(exact <= et);
    }
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn plancherel_config(out: &Path, grid: &str) -> String {
    format!(
        r#"
[run]
operation = "plancherel-check"
out_dir = "{}"
threads = 2

[character]
modulus = 4
index = 1
mods = "3:0"

[params]
xmax = 20000
tcut = 100.0

[grid]
{grid}
"#,
        out.display()
    )
}

#[test]
fn sweep_writes_cells_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let cfg = write_config(dir.path(), &plancherel_config(&out, "sigma = [0.5, 0.25]"));
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_valid(&manifest, "sweep-manifest");
    let cells = manifest["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    for (cell, sigma) in cells.iter().zip([0.5, 0.25]) {
        assert_eq!(cell["status"], "ok");
        let report: Value = serde_json::from_str(&std::fs::read_to_string(cell["output"].as_str().unwrap()).unwrap()).unwrap();
        assert_valid(&report, "plancherel-check");
        assert_eq!(report["sigma"].as_f64(), Some(sigma));
    }

    // resume re-runs only the cells not marked ok
    let first = PathBuf::from(cells[0]["output"].as_str().unwrap());
    let second = PathBuf::from(cells[1]["output"].as_str().unwrap());
    let mut edited = manifest.clone();
    edited["cells"][1]["status"] = Value::String("failed".into());
    std::fs::write(out.join("manifest.json"), serde_json::to_string(&edited).unwrap()).unwrap();
    std::fs::remove_file(&first).unwrap();
    std::fs::remove_file(&second).unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--resume"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!first.exists());
    assert!(second.exists());
}

#[test]
fn sweep_failures_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");

    let cfg = write_config(dir.path(), &plancherel_config(&out, "sigma = []"));
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));

    let bad = plancherel_config(&out, "sigma = [0.5]").replace("threads = 2", "threadz = 2");
    let cfg = write_config(dir.path(), &bad);
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("threadz"), "{}", stderr(&o));

    // a flag the subcommand does not have is caught before any cell runs
    let cfg = write_config(dir.path(), &plancherel_config(&out, "sigmaa = [0.5]"));
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigmaa"), "{}", stderr(&o));
    assert!(!out.join("manifest.json").exists());

    // one failing cell: nonzero exit and the manifest says which
    let body = format!(
        r#"
[run]
operation = "l-eval"
out_dir = "{}"

[params]
s = "2"
modulus = 4

[grid]
char_index = [1, 5]
"#,
        out.display()
    );
    let cfg = write_config(dir.path(), &body);
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_valid(&manifest, "sweep-manifest");
    assert_eq!(manifest["cells"][0]["status"], "ok");
    assert_eq!(manifest["cells"][1]["status"], "failed");
    assert_eq!(manifest["cells"][1]["exit_code"], 2);
}
