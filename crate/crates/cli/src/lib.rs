//! Command-line front end for the modified-character laboratory.
//!
//! Every subcommand writes CSV or JSON to `--out` (`-` is standard output).
//! Exit codes: 0 on success, 2 on a validation error, 3 when a resource or
//! precision limit was hit.

mod commands;
pub mod output;
pub mod parse;
pub mod sweep;

use std::ffi::OsString;
use std::sync::Once;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::execute;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] modchar_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// A sweep finished with failed cells; carries the worst cell exit code.
    #[error("{message}")]
    Sweep { message: String, code: i32 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_resource() => EXIT_RESOURCE,
            CliError::Sweep { code, .. } => *code,
            _ => EXIT_VALIDATION,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug, Clone)]
#[command(name = "modchar-lab", version, about = "Numerical laboratory for modified Dirichlet characters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// List the characters mod q, or the value table of one of them.
    ///
    /// Characters are indexed by their exponent tuple (e_1, ..., e_r) on the
    /// generators of the cyclic factors of (Z/qZ)*, in lexicographic order
    /// with the last exponent varying fastest. Index 0 is the principal
    /// character.
    CharTable(CharTableArgs),
    /// Partial sums M(x) = Σ_{n≤x} f(n) as CSV.
    PartialSums(PartialSumsArgs),
    /// F(s) = Σ f(n) n^{-s} through the Euler product, the partial-sum integral, or both.
    SeriesEval(SeriesEvalArgs),
    /// Poles of 1/E_f on the imaginary axis as CSV.
    Poles(PolesArgs),
    /// Orbit indices n whose point frac(n log p − θ_p) falls in [0, eps)^d.
    Orbit(OrbitArgs),
    /// Star discrepancy of the orbit, exactly and/or through the Erdős–Turán–Koksma bound.
    Discrepancy(DiscrepancyArgs),
    /// Record minima of ‖m·log p‖ over |m|∞ ≤ M and their power-law fit.
    Baker(BakerArgs),
    /// L(s, χ) with a rigorous error bound.
    LEval(LEvalArgs),
    /// Functional-equation residual of L(s, χ) for primitive χ.
    FeCheck(FeCheckArgs),
    /// Both sides of the Plancherel identity for M(x).
    PlancherelCheck(PlancherelArgs),
    /// Euler-factor and L-value diagnostics at box hits.
    SpikeScan(SpikeScanArgs),
    /// Fit of the Plancherel moment against 1/σ.
    OmegaFit(OmegaFitArgs),
    /// Run one subcommand over a parameter grid described by a TOML file.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CharArgs {
    /// Modulus q of the base character.
    #[arg(long, default_value_t = 4)]
    pub modulus: u64,
    /// Index of the base character (ordering as in `char-table`).
    #[arg(long = "char-index", alias = "index", default_value_t = 1)]
    pub char_index: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ModArgs {
    #[command(flatten)]
    pub character: CharArgs,
    /// Modification map: comma-separated `p:num/den` or `p:float`, e.g. "3:0,7:1/3".
    #[arg(long)]
    pub mods: String,
}

#[derive(Args, Debug, Clone)]
pub struct OutArg {
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Args, Debug, Clone)]
pub struct CharTableArgs {
    #[arg(long)]
    pub modulus: u64,
    /// Print the value table of this character instead of the listing.
    #[arg(long, alias = "char-index")]
    pub index: Option<u64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug, Clone)]
pub struct PartialSumsArgs {
    #[command(flatten)]
    pub f: ModArgs,
    #[arg(long, value_parser = parse::count)]
    pub xmax: u64,
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub stride: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Euler,
    Integral,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct SeriesEvalArgs {
    #[command(flatten)]
    pub f: ModArgs,
    /// The point s, e.g. "0.5+14.1i".
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub s: num_complex::Complex64,
    #[arg(long, value_enum, default_value_t = Route::Both)]
    pub route: Route,
    /// Length of the partial-sum trace for the integral route.
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub xmax: u64,
    /// Target absolute error of the L-value.
    #[arg(long)]
    pub err: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug, Clone)]
pub struct PolesArgs {
    #[command(flatten)]
    pub f: ModArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t_lo: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t_hi: f64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug, Clone)]
pub struct TorusArgs {
    /// Increasing primes, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse::count)]
    pub primes: Vec<u64>,
    /// Shifts θ in turns, one per prime; zeros when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub torus: TorusArgs,
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub n_lo: u64,
    #[arg(long, value_parser = parse::count)]
    pub n_hi: u64,
    #[arg(long)]
    pub eps: f64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscrepancyMode {
    Exact,
    Et,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct DiscrepancyArgs {
    #[command(flatten)]
    pub torus: TorusArgs,
    /// Orbit lengths x, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse::count)]
    pub x_grid: Vec<u64>,
    #[arg(long, value_enum, default_value_t = DiscrepancyMode::Both)]
    pub mode: DiscrepancyMode,
    /// Frequency cutoff y of the Erdős–Turán–Koksma bound.
    #[arg(long, value_parser = parse::count, default_value = "16")]
    pub y: u64,
    /// Override of the constant C_d (default 2·(3/2)^d).
    #[arg(long)]
    pub c_d: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug, Clone)]
pub struct BakerArgs {
    #[command(flatten)]
    pub torus: TorusArgs,
    /// Largest max-norm |m|∞ searched.
    #[arg(long = "M", alias = "max-norm", value_parser = parse::count)]
    pub max_norm: u64,
    #[command(flatten)]
    pub out: OutArg,
    /// JSON fit summary; defaults to the CSV path with a .json extension,
    /// and is skipped when the CSV goes to standard output.
    #[arg(long)]
    pub summary: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct LEvalArgs {
    #[command(flatten)]
    pub character: CharArgs,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub s: num_complex::Complex64,
    #[arg(long)]
    pub err: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug, Clone)]
pub struct FeCheckArgs {
    #[command(flatten)]
    pub character: CharArgs,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub s: num_complex::Complex64,
    #[arg(long)]
    pub err: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug, Clone)]
pub struct PlancherelArgs {
    #[command(flatten)]
    pub f: ModArgs,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub xmax: u64,
    /// Cutoff |t| ≤ T_cut of the quadrature; beyond it the tail is extrapolated.
    #[arg(long, default_value_t = 1000.0)]
    pub tcut: f64,
    /// Target absolute error of the L-values inside the integrand.
    #[arg(long)]
    pub err: Option<f64>,
    #[arg(long)]
    pub quad_abs_tol: Option<f64>,
    #[arg(long)]
    pub quad_rel_tol: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyArg {
    /// Cube of side σ.
    QtCube,
    /// Cube of side 10σ.
    WideBox,
}

#[derive(Args, Debug, Clone)]
pub struct SpikeScanArgs {
    #[command(flatten)]
    pub f: ModArgs,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, value_parser = parse::count, default_value = "2")]
    pub n_lo: u64,
    #[arg(long, value_parser = parse::count)]
    pub n_hi: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::QtCube)]
    pub policy: PolicyArg,
    /// Average the diagnostics over r ∈ {0, σ/2, σ}.
    #[arg(long)]
    pub r_average: bool,
    #[arg(long)]
    pub err: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
    /// JSON summary; same default as for `baker`.
    #[arg(long)]
    pub summary: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OmegaFitArgs {
    #[command(flatten)]
    pub f: ModArgs,
    /// σ grid, comma separated; must span at least a factor 2.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigmas: Vec<f64>,
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub xmax: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// TOML experiment description.
    #[arg(long)]
    pub config: std::path::PathBuf,
    /// Re-run only the cells the existing manifest does not mark as done.
    #[arg(long)]
    pub resume: bool,
}

fn init_threads() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Some(n) = env_threads() {
            // fails only if a pool already exists, which is fine
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    });
}

/// Worker count from MODCHAR_THREADS, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("MODCHAR_THREADS").ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Parses argv, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
