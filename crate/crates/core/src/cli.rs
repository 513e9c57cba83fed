//! Command-line front end. Exit codes: 0 success, 1 usage or configuration error,
//! 2 numerical non-success (unconverged solve, stalled optimizer, failed check).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::balance::{b1_oracle_value, b1_value, b7_oracle_value, b7_terms, balance_report, RESIDUAL_TOL};
use crate::error::Error;
use crate::fock::{random_state, PhaseSpaceOps, Space};
use crate::model::{ModelParams, RabiOperators};
use crate::solver::{solve_rabi_ground, ConvergenceStep, GroundSolution, SolveOptions};
use crate::sweep::{format_float, rows_to_csv, run_points, Axis, Grid, PointSettings, SweepRow};
use crate::variational::{minimize_energy_against, OptimizerOptions, VariationalResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rabi-balance",
    version,
    about = "Quantum Rabi ground states and balance-equation checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact ground state at one point.
    Solve(RunArgs),
    /// Residual and inequality report on the exact ground state (JSON).
    Balance(RunArgs),
    /// Squeezed-displaced variational minimum at one point.
    Variational(RunArgs),
    /// One row per grid point over up to two swept axes.
    Sweep(RunArgs),
    /// Ground energy against Fock dimension.
    Converge(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Clone, clap::Args)]
pub struct RunArgs {
    /// Oscillator frequency: value or min:max:count [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
    /// Coupling: value or min:max:count
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Two-level splitting: value or min:max:count
    #[arg(long, allow_hyphen_values = true)]
    pub omega0: Option<String>,
    /// Oscillator mass [default: 1]
    #[arg(long)]
    pub mass: Option<f64>,
    /// Fock dimension N, or `auto` for doubling until converged [default: auto]
    #[arg(long)]
    pub dim: Option<String>,
    /// Ground-energy convergence tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest Fock dimension tried in auto mode [default: 256]
    #[arg(long)]
    pub max_dim: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat JSON object with any of the flag names as keys; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps [default: available parallelism]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Include the printed-coefficient variants in balance reports
    #[arg(long)]
    pub paper_literal: bool,
    /// Seed for the random states of the balance oracle check [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::AmplitudeTooLarge { .. }
            | Error::SqueezeTooLarge { .. }
            | Error::DisplacementTooLarge { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimChoice {
    Auto,
    Fixed(usize),
}

impl DimChoice {
    fn parse(s: &str) -> Result<Self, CliError> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(DimChoice::Auto);
        }
        s.parse().map(DimChoice::Fixed).map_err(|_| {
            CliError::Usage(format!(
                "invalid value for `dim`: expected an integer or `auto`, got `{s}`"
            ))
        })
    }
}

/// Values from `--config`; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    omega: Option<AxisValue>,
    lambda: Option<AxisValue>,
    omega0: Option<AxisValue>,
    mass: Option<f64>,
    dim: Option<DimValue>,
    tol: Option<f64>,
    max_dim: Option<usize>,
    format: Option<Format>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    paper_literal: Option<bool>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AxisValue {
    Number(f64),
    Text(String),
    Range(Axis),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DimValue {
    Number(usize),
    Text(String),
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub dim: DimChoice,
    pub tol: f64,
    pub max_dim: usize,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub paper_literal: bool,
    pub seed: u64,
}

fn axis_from(field: &'static str, v: AxisValue) -> Result<Axis, CliError> {
    let axis = match v {
        AxisValue::Number(x) => Axis::scalar(x),
        AxisValue::Text(s) => parse_axis(field, &s)?,
        AxisValue::Range(a) => a,
    };
    axis.validate(field).map_err(CliError::from)?;
    Ok(axis)
}

fn parse_axis(field: &'static str, s: &str) -> Result<Axis, CliError> {
    s.parse::<Axis>().map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => CliError::Usage(format!("invalid value for `{field}`: {reason}")),
        other => other.into(),
    })
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| CliError::Usage(format!("invalid config file {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let axis = |field: &'static str,
                    flag: &Option<String>,
                    from_file: Option<AxisValue>|
         -> Result<Option<Axis>, CliError> {
            match (flag, from_file) {
                (Some(s), _) => Ok(Some(parse_axis(field, s)?)),
                (None, Some(v)) => Ok(Some(axis_from(field, v)?)),
                (None, None) => Ok(None),
            }
        };
        let omega = axis("omega", &args.omega, file.omega)?.unwrap_or(Axis::scalar(1.0));
        let lambda = axis("lambda", &args.lambda, file.lambda)?
            .ok_or_else(|| CliError::Usage("missing value for `lambda`".into()))?;
        let omega0 = axis("omega0", &args.omega0, file.omega0)?
            .ok_or_else(|| CliError::Usage("missing value for `omega0`".into()))?;

        let dim = match (&args.dim, file.dim) {
            (Some(s), _) => DimChoice::parse(s)?,
            (None, Some(DimValue::Number(n))) => DimChoice::Fixed(n),
            (None, Some(DimValue::Text(s))) => DimChoice::parse(&s)?,
            (None, None) => DimChoice::Auto,
        };
        let cfg = RunConfig {
            grid: Grid {
                omega,
                lambda,
                omega0,
                mass: args.mass.or(file.mass).unwrap_or(1.0),
            },
            dim,
            tol: args.tol.or(file.tol).unwrap_or(1e-10),
            max_dim: args.max_dim.or(file.max_dim).unwrap_or(256),
            format: args.format.or(file.format),
            out: args.out.clone().or(file.out),
            jobs: args.jobs.or(file.jobs),
            paper_literal: args.paper_literal || file.paper_literal.unwrap_or(false),
            seed: args.seed.or(file.seed).unwrap_or(0),
        };
        cfg.grid.validate()?;
        if cfg.jobs == Some(0) {
            return Err(CliError::Usage("invalid value for `jobs`: must be at least 1".into()));
        }
        check_solve_options(&cfg.solve_options())?;
        Ok(cfg)
    }

    pub fn solve_options(&self) -> SolveOptions {
        match self.dim {
            DimChoice::Auto => SolveOptions::with_tol(self.tol, self.max_dim),
            DimChoice::Fixed(n) => SolveOptions::fixed(n, self.tol),
        }
    }

    pub fn point_settings(&self) -> PointSettings {
        PointSettings {
            solve: self.solve_options(),
            optimizer: OptimizerOptions {
                solve: self.solve_options(),
                ..OptimizerOptions::default()
            },
            residual_tol: RESIDUAL_TOL,
        }
    }

    /// The single parameter point; errors naming the first swept axis otherwise.
    pub fn single_point(&self) -> Result<ModelParams, CliError> {
        for (name, a) in [
            ("omega", self.grid.omega),
            ("lambda", self.grid.lambda),
            ("omega0", self.grid.omega0),
        ] {
            if a.is_swept() {
                return Err(CliError::Usage(format!(
                    "invalid value for `{name}`: this command takes a single value, got range {a}"
                )));
            }
        }
        Ok(ModelParams::with_mass(
            self.grid.omega.min,
            self.grid.lambda.min,
            self.grid.omega0.min,
            self.grid.mass,
        )?)
    }
}

fn check_solve_options(opts: &SolveOptions) -> Result<(), CliError> {
    let check = |field: &'static str, ok: bool, msg: String| {
        if ok {
            Ok(())
        } else {
            Err(CliError::Usage(format!("invalid value for `{field}`: {msg}")))
        }
    };
    check("tol", opts.tol > 0.0, format!("must be positive, got {}", opts.tol))?;
    match opts.fixed_dim {
        Some(d) => check("dim", d >= 4, format!("must be at least 4, got {d}")),
        None => check(
            "max_dim",
            opts.max_dim >= 8,
            format!("must be at least 8, got {}", opts.max_dim),
        ),
    }
}

/// Text to emit and the exit code to finish with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub text: String,
    pub exit: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub omega: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub mass: f64,
    pub e_exact: f64,
    pub parity_label: String,
    pub sector_gap: f64,
    pub dim_used: usize,
    pub converged: bool,
    pub energy_delta: f64,
    pub eigen_residual: f64,
    pub history: Vec<ConvergenceStep>,
}

impl SolveReport {
    fn new(g: &GroundSolution) -> Self {
        Self {
            omega: g.params.omega(),
            lambda: g.params.lambda(),
            omega0: g.params.omega0(),
            mass: g.params.mass(),
            e_exact: g.energy,
            parity_label: g.parity.to_string(),
            sector_gap: g.sector_gap,
            dim_used: g.dim_used,
            converged: g.converged,
            energy_delta: g.energy_delta,
            eigen_residual: g.eigen_residual,
            history: g.history.clone(),
        }
    }
}

fn solve_any(params: &ModelParams, opts: &SolveOptions) -> Result<GroundSolution, CliError> {
    match solve_rabi_ground(params, opts) {
        Ok(g) => Ok(g),
        Err(Error::NotConverged(g)) => Ok(*g),
        Err(e) => Err(e.into()),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn bit(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn exit_if(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.single_point()?;
    let g = solve_any(&params, &cfg.solve_options())?;
    let report = SolveReport::new(&g);
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => csv_table(
            &[
                "omega",
                "lambda",
                "omega0",
                "dim_used",
                "e_exact",
                "parity_label",
                "sector_gap",
                "converged",
                "energy_delta",
                "eigen_residual",
            ],
            &[vec![
                format_float(report.omega),
                format_float(report.lambda),
                format_float(report.omega0),
                report.dim_used.to_string(),
                format_float(report.e_exact),
                report.parity_label.clone(),
                format_float(report.sector_gap),
                bit(report.converged),
                format_float(report.energy_delta),
                format_float(report.eigen_residual),
            ]],
        )?,
    };
    Ok(Outcome {
        text,
        exit: exit_if(g.converged),
    })
}

/// Largest deviation of the virial and covariance forms from their double-commutator
/// expressions over `count` random states on the lower half of the Fock levels.
fn oracle_deviation(ops: &RabiOperators, seed: u64, count: usize) -> Result<(f64, f64), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut d1, mut d7) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let psi = random_state(&mut rng, Space::SpinBoson(ops.dim), (ops.dim / 2).max(1))?;
        d1 = d1.max((b1_value(&psi, ops)? - b1_oracle_value(&psi, ops)?).abs());
        d7 = d7.max((b7_terms(&psi, ops)?.value - b7_oracle_value(&psi, ops)?).abs());
    }
    Ok((d1, d7))
}

fn strip_printed(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| k != "paper_literal" && k != "printed" && !k.ends_with("_printed"));
            map.values_mut().for_each(strip_printed);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_printed),
        _ => {}
    }
}

pub fn cmd_balance(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.format == Some(Format::Csv) {
        return Err(CliError::Usage(
            "invalid value for `format`: balance reports are JSON only".into(),
        ));
    }
    let params = cfg.single_point()?;
    let g = solve_any(&params, &cfg.solve_options())?;
    let rep = g.rep()?;
    let ops = RabiOperators::new(&rep, &params)?;
    let phase = PhaseSpaceOps::new(&rep);
    let report = balance_report(&g.state, &ops, &phase, g.state_sector(), RESIDUAL_TOL)?;
    let (dev_b1, dev_b7) = oracle_deviation(&ops, cfg.seed, 8)?;

    let mut failures = report.failures();
    if !g.converged {
        failures.insert(0, "ground.not_converged".into());
    }
    let passes = failures.is_empty();
    let mut out = json!({
        "ground": SolveReport::new(&g),
        "passes": passes,
        "failures": failures,
        "report": report,
        "oracle_check": { "seed": cfg.seed, "states": 8, "b1_max_deviation": dev_b1, "b7_max_deviation": dev_b7 },
    });
    if !cfg.paper_literal {
        strip_printed(&mut out);
    }
    Ok(Outcome {
        text: to_json(&out),
        exit: exit_if(passes),
    })
}

#[derive(Debug, Serialize)]
struct VariationalReport<'a> {
    omega: f64,
    lambda: f64,
    omega0: f64,
    mass: f64,
    exact_converged: bool,
    #[serde(flatten)]
    result: &'a VariationalResult,
}

pub fn cmd_variational(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.single_point()?;
    let g = solve_any(&params, &cfg.solve_options())?;
    let opts = cfg.point_settings().optimizer;
    let (result, stationary) = match minimize_energy_against(&params, &opts, g.energy) {
        Ok(r) => (r, true),
        Err(Error::OptimizerStalled(r)) => (*r, false),
        Err(e) => return Err(e.into()),
    };
    let report = VariationalReport {
        omega: params.omega(),
        lambda: params.lambda(),
        omega0: params.omega0(),
        mass: params.mass(),
        exact_converged: g.converged,
        result: &result,
    };
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => csv_table(
            &[
                "omega",
                "lambda",
                "omega0",
                "beta_star",
                "gamma_star",
                "e_var",
                "e_exact",
                "gap",
                "grad_norm",
                "res_b1",
                "res_b7",
                "iterations",
                "evaluations",
            ],
            &[vec![
                format_float(params.omega()),
                format_float(params.lambda()),
                format_float(params.omega0()),
                format_float(result.trial.beta),
                format_float(result.trial.gamma),
                format_float(result.energy),
                format_float(result.exact_energy),
                format_float(result.gap),
                format_float(result.grad_norm),
                format_float(result.b1_residual),
                format_float(result.b7_residual),
                result.iterations.to_string(),
                result.evaluations.to_string(),
            ]],
        )?,
    };
    Ok(Outcome {
        text,
        exit: exit_if(stationary && g.converged),
    })
}

pub fn sweep_rows(cfg: &RunConfig) -> Result<(Vec<SweepRow>, bool), CliError> {
    let points = cfg.grid.points()?;
    let outcomes = run_points(&points, &cfg.point_settings(), cfg.jobs)?;
    let ok = outcomes.iter().all(|o| o.numerically_ok);
    Ok((outcomes.into_iter().map(|o| o.row).collect(), ok))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (rows, ok) = sweep_rows(cfg)?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => rows_to_csv(&rows)?,
        Format::Json => to_json(&rows),
    };
    Ok(Outcome {
        text,
        exit: exit_if(ok),
    })
}

pub fn cmd_converge(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.single_point()?;
    let g = solve_any(&params, &cfg.solve_options())?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&json!({ "converged": g.converged, "dim_used": g.dim_used, "rows": g.history })),
        Format::Csv => {
            let rows: Vec<Vec<String>> = g
                .history
                .iter()
                .map(|s| {
                    vec![
                        s.dim.to_string(),
                        format_float(s.energy),
                        s.delta.map(format_float).unwrap_or_default(),
                    ]
                })
                .collect();
            csv_table(&["dim", "e_exact", "delta"], &rows)?
        }
    };
    Ok(Outcome {
        text,
        exit: exit_if(g.converged),
    })
}

pub fn execute(cli: &Cli) -> Result<(Outcome, Option<PathBuf>), CliError> {
    let (args, f): (&RunArgs, fn(&RunConfig) -> Result<Outcome, CliError>) = match &cli.command {
        Command::Solve(a) => (a, cmd_solve),
        Command::Balance(a) => (a, cmd_balance),
        Command::Variational(a) => (a, cmd_variational),
        Command::Sweep(a) => (a, cmd_sweep),
        Command::Converge(a) => (a, cmd_converge),
    };
    let cfg = RunConfig::resolve(args)?;
    Ok((f(&cfg)?, cfg.out))
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| {
        let _ = fs::remove_file(path);
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok((outcome, out)) => {
            match out {
                Some(path) => {
                    if let Err(e) = write_output(&path, &outcome.text) {
                        eprintln!("error: {e}");
                        return e.exit_code();
                    }
                }
                None => print!("{}", outcome.text),
            }
            outcome.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
