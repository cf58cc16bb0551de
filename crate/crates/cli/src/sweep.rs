//! Config-driven parameter sweeps.
//!
//! A sweep file is TOML with these sections; unknown keys are rejected:
//!
//! ```toml
//! [run]
//! operation = "plancherel-check"   # any subcommand except `sweep`
//! out_dir = "runs/plancherel"
//! threads = 2                      # optional, MODCHAR_THREADS overrides
//!
//! [character]                      # optional
//! modulus = 4
//! index = 1
//! mods = "3:0"
//!
//! [precision]                      # optional
//! err = 1e-13
//!
//! [params]                         # fixed flags of the subcommand
//! xmax = 100000
//! tcut = 1000.0
//!
//! [grid]                           # one list per swept flag
//! sigma = [0.5, 0.25]
//! ```
//!
//! Keys of `[params]` and `[grid]` are subcommand flags with `_` for `-`.
//! Cells are the Cartesian product of the grid lists, keys in sorted
//! order with the last key varying fastest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::Parser;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{execute, Cli, CliError, CliResult, EXIT_VALIDATION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub character: Option<CharacterSection>,
    #[serde(default, skip_serializing_if = "PrecisionSection::is_empty")]
    pub precision: PrecisionSection,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub operation: String,
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterSection {
    pub modulus: u64,
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mods: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_rel_tol: Option<f64>,
}

impl PrecisionSection {
    fn is_empty(&self) -> bool {
        self == &PrecisionSection::default()
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid sweep config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// All grid cells, each the full flag table of one run.
    pub fn cells(&self) -> CliResult<Vec<toml::Table>> {
        if self.grid.is_empty() || self.grid.values().any(Vec::is_empty) {
            return Err(CliError::Usage("the sweep grid is empty".into()));
        }
        if let Some(k) = self.grid.keys().find(|k| self.params.contains_key(*k)) {
            return Err(CliError::Usage(format!("key `{k}` appears in both [params] and [grid]")));
        }
        let mut cells = vec![self.params.clone()];
        for (key, values) in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut cell = base.clone();
                        cell.insert(key.clone(), v.clone());
                        cell
                    })
                })
                .collect();
        }
        Ok(cells)
    }
}

fn flag_value(key: &str, v: &toml::Value) -> CliResult<Option<String>> {
    Ok(Some(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(x) => x.to_string(),
        toml::Value::Boolean(true) => return Ok(None),
        toml::Value::Array(items) => items
            .iter()
            .map(|i| flag_value(key, i)?.ok_or_else(|| CliError::Usage(format!("key `{key}`: nested booleans"))))
            .collect::<CliResult<Vec<_>>>()?
            .join(","),
        other => return Err(CliError::Usage(format!("key `{key}`: unsupported value {other}"))),
    }))
}

fn csv_primary(op: &str) -> bool {
    matches!(op, "char-table" | "partial-sums" | "poles" | "orbit" | "discrepancy" | "baker" | "spike-scan")
}

struct CellPlan {
    argv: Vec<String>,
    output: PathBuf,
    summary: Option<PathBuf>,
    params: toml::Table,
}

fn plan(cfg: &ExperimentConfig) -> CliResult<Vec<CellPlan>> {
    let op = cfg.run.operation.as_str();
    if op == "sweep" {
        return Err(CliError::Usage("a sweep cannot run `sweep`".into()));
    }
    let ext = if csv_primary(op) { "csv" } else { "json" };
    let mut out = Vec::new();
    for (i, cell) in cfg.cells()?.into_iter().enumerate() {
        let output = cfg.run.out_dir.join(format!("cell-{i:04}.{ext}"));
        let summary = matches!(op, "baker" | "spike-scan").then(|| cfg.run.out_dir.join(format!("cell-{i:04}.json")));
        let mut argv = vec!["modchar-lab".to_string(), op.to_string()];
        if let Some(c) = &cfg.character {
            argv.push("--modulus".into());
            argv.push(c.modulus.to_string());
            argv.push(if op == "char-table" { "--index" } else { "--char-index" }.into());
            argv.push(c.index.to_string());
            if let Some(m) = &c.mods {
                argv.push("--mods".into());
                argv.push(m.clone());
            }
        }
        let p = &cfg.precision;
        for (flag, v) in [("err", p.err), ("quad_abs_tol", p.quad_abs_tol), ("quad_rel_tol", p.quad_rel_tol)] {
            if let Some(v) = v {
                argv.push(format!("--{}", flag.replace('_', "-")));
                argv.push(v.to_string());
            }
        }
        for (key, v) in &cell {
            if matches!(v, toml::Value::Boolean(false)) {
                continue;
            }
            let flag = format!("--{}", key.replace('_', "-"));
            match flag_value(key, v)? {
                Some(val) => argv.push(format!("{flag}={val}")),
                None => argv.push(flag),
            }
        }
        argv.push(format!("--out={}", output.display()));
        if let Some(s) = &summary {
            argv.push(format!("--summary={}", s.display()));
        }
        // every cell must parse before anything runs
        Cli::try_parse_from(&argv).map_err(|e| {
            CliError::Usage(format!("cell {i} ({}): {}", describe(&cell), e.render().to_string().trim()))
        })?;
        out.push(CellPlan { argv, output, summary, params: cell });
    }
    Ok(out)
}

fn describe(cell: &toml::Table) -> String {
    cell.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

fn to_json(v: &toml::Value) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub index: usize,
    pub params: BTreeMap<String, Value>,
    pub output: String,
    #[serde(default)]
    pub summary: Option<String>,
    /// `ok`, `failed` or `pending`
    pub status: String,
    pub exit_code: Option<i32>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub operation: String,
    pub config: Value,
    pub cells: Vec<ManifestCell>,
}

fn write_manifest(path: &Path, m: &Manifest) -> CliResult<()> {
    crate::output::write_json(&path.display().to_string(), &serde_json::to_value(m).expect("manifest serializes"))
}

pub fn run_sweep(config_path: &Path, resume: bool) -> CliResult<()> {
    let cfg = ExperimentConfig::load(config_path)?;
    let plans = plan(&cfg)?;
    let dir = &cfg.run.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    let manifest_path = dir.join("manifest.json");

    let fresh: Vec<ManifestCell> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| ManifestCell {
            index: i,
            params: p.params.iter().map(|(k, v)| (k.clone(), to_json(v))).collect(),
            output: p.output.display().to_string(),
            summary: p.summary.as_ref().map(|s| s.display().to_string()),
            status: "pending".into(),
            exit_code: None,
            error: None,
        })
        .collect();
    let mut cells = fresh.clone();
    if resume && manifest_path.exists() {
        let text = std::fs::read_to_string(&manifest_path)
            .map_err(|source| CliError::Io { path: manifest_path.display().to_string(), source })?;
        let old: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: unreadable manifest: {e}", manifest_path.display())))?;
        let matches = old.cells.len() == fresh.len()
            && old.cells.iter().zip(&fresh).all(|(o, n)| o.params == n.params && o.output == n.output);
        if !matches {
            return Err(CliError::Usage(format!(
                "{} does not describe this config's grid; rerun without --resume",
                manifest_path.display()
            )));
        }
        cells = old.cells;
    }
    let config_json = serde_json::to_value(&cfg).unwrap_or(Value::Null);
    let manifest = Mutex::new(Manifest {
        tool_version: modchar_core::TOOL_VERSION.into(),
        operation: cfg.run.operation.clone(),
        config: config_json,
        cells,
    });
    write_manifest(&manifest_path, &manifest.lock().unwrap())?;

    let todo: Vec<usize> =
        manifest.lock().unwrap().cells.iter().filter(|c| c.status != "ok").map(|c| c.index).collect();
    let threads = crate::env_threads().or(cfg.run.threads).unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} workers: {e}")))?;
    let write_error = Mutex::new(None);
    pool.install(|| {
        todo.par_iter().for_each(|&i| {
            let result = Cli::try_parse_from(&plans[i].argv)
                .map_err(|e| CliError::Usage(e.to_string()))
                .and_then(|cli| execute(&cli));
            let mut m = manifest.lock().unwrap();
            let cell = &mut m.cells[i];
            match result {
                Ok(()) => {
                    cell.status = "ok".into();
                    cell.exit_code = Some(0);
                    cell.error = None;
                }
                Err(e) => {
                    cell.status = "failed".into();
                    cell.exit_code = Some(e.exit_code());
                    cell.error = Some(e.to_string());
                }
            }
            if let Err(e) = write_manifest(&manifest_path, &m) {
                *write_error.lock().unwrap() = Some(e);
            }
        })
    });
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(e);
    }
    let m = manifest.into_inner().unwrap();
    let failed: Vec<&ManifestCell> = m.cells.iter().filter(|c| c.status != "ok").collect();
    if failed.is_empty() {
        eprintln!("sweep: {} cells ok, manifest at {}", m.cells.len(), manifest_path.display());
        return Ok(());
    }
    let code = failed.iter().filter_map(|c| c.exit_code).max().unwrap_or(EXIT_VALIDATION);
    Err(CliError::Sweep {
        message: format!(
            "{} of {} sweep cells failed (first: cell {}: {}); see {}",
            failed.len(),
            m.cells.len(),
            failed[0].index,
            failed[0].error.as_deref().unwrap_or("unknown"),
            manifest_path.display()
        ),
        code,
    })
}

/// Reads the manifest a sweep wrote into `dir`.
pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    let path = dir.join("manifest.json");
    let text =
        std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[run]
operation = "l-eval"
out_dir = "out"
threads = 2

[character]
modulus = 5
index = 1

[precision]
err = 1e-12

[params]
s = "2+1i"

[grid]
err_unused = []
"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::parse(EXAMPLE).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_named() {
        let bad = EXAMPLE.replace("threads = 2", "thread = 2");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("thread"), "{err}");
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = ExperimentConfig::parse(EXAMPLE).unwrap();
        assert!(cfg.cells().is_err());
        let cfg = ExperimentConfig::parse(&EXAMPLE.replace("err_unused = []", "")).unwrap();
        assert!(cfg.cells().is_err());
    }

    #[test]
    fn cartesian_product_order() {
        let text = EXAMPLE.replace("err_unused = []", "a = [1, 2]\nb = [\"x\", \"y\", \"z\"]");
        let cells = ExperimentConfig::parse(&text).unwrap().cells().unwrap();
        assert_eq!(cells.len(), 6);
        let tags: Vec<String> = cells.iter().map(|c| format!("{}{}", c["a"], c["b"].as_str().unwrap())).collect();
        assert_eq!(tags, ["1x", "1y", "1z", "2x", "2y", "2z"]);
    }
}
