//! Command-line front end for the radial k-Hessian blow-up laboratory.
//!
//! Exit codes: 0 success, 1 domain/precondition error, 2 numerical
//! failure, 3 file i/o failure. Results are written atomically (temp file
//! plus rename); identical invocations produce byte-identical artifacts.

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use khessian::dirichlet::{
    large_solution_sequence, solve_monotone, solve_shooting, MonotoneOptions, SolveMethod,
};
use khessian::estimates::{
    check_growth_bound, check_lower_bound, check_remaining_radius_bound, reports_to_csv,
    EstimateReport,
};
use khessian::ivp::{
    blowup_radius, energy_identity_residual, integrate_ivp, BlowupOptions, RadialTrajectory,
};
use khessian::{BlowupVerdict, Nonlinearity, ProblemSpec, StepControls};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "khessian", version, about = "Radial k-Hessian boundary blow-up laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Deserialize, Debug)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Evaluate the Keller-Osserman integral K(beta).
    Ko(KoArgs),
    /// Evaluate K along an increasing sequence of betas.
    Scan(ScanArgs),
    /// Integrate the radial initial-value problem and emit the trajectory.
    Ivp(IvpArgs),
    /// Bracket the blow-up radius, or certify no blow-up up to --rmax.
    Blowup(BlowupArgs),
    /// Solve the ball Dirichlet problem by shooting or monotone iteration.
    Dirichlet(DirichletArgs),
    /// Drive the boundary datum to infinity along a sequence.
    Large(LargeArgs),
    /// Run the estimate suite over a trajectory (file or fresh).
    Verify(VerifyArgs),
    /// Cartesian sweep over (beta, p, k, N) writing one CSV row per cell.
    Sweep(SweepArgs),
    /// Regenerate the derived oracle fixtures with tightened tolerances.
    SeedFixtures(SeedArgs),
    /// Execute a command described by a JSON config file.
    #[serde(skip)]
    Run(RunArgs),
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Args, Deserialize, Debug)]
struct KoArgs {
    /// Nonlinearity JSON, e.g. '{"kind":"power","p":2.0}'.
    #[arg(long)]
    nl: String,
    /// Hessian order k (overrides a "k" field inside --nl).
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1e-8)]
    #[serde(default = "default_tol")]
    tol: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
}

#[derive(Args, Deserialize, Debug)]
struct ScanArgs {
    #[arg(long)]
    nl: String,
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    /// Strictly increasing beta sequence.
    #[arg(long, value_delimiter = ',', required = true)]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    #[serde(default = "default_tol")]
    tol: f64,
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
}

#[derive(Args, Deserialize, Debug)]
struct IvpArgs {
    #[arg(long)]
    nl: String,
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    /// Space dimension.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    rmax: f64,
    #[arg(long, default_value_t = 1e-10)]
    #[serde(default = "StepControls::default_abs_tol")]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    #[serde(default = "StepControls::default_rel_tol")]
    rel_tol: f64,
    /// Trajectory JSON (with metadata).
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
    /// Trajectory CSV (columns r,xi,xip).
    #[arg(long)]
    #[serde(default)]
    csv: Option<PathBuf>,
}

#[derive(Args, Deserialize, Debug)]
struct BlowupArgs {
    #[arg(long)]
    nl: String,
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1e3)]
    #[serde(default = "BlowupArgs::default_rmax")]
    rmax: f64,
    #[arg(long, default_value_t = 1e-4)]
    #[serde(default = "BlowupArgs::default_bracket_tol")]
    bracket_tol: f64,
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
}

impl BlowupArgs {
    fn default_rmax() -> f64 {
        1e3
    }
    fn default_bracket_tol() -> f64 {
        1e-4
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Method {
    Shooting,
    Monotone,
}

#[derive(Args, Deserialize, Debug)]
struct DirichletArgs {
    #[arg(long)]
    nl: String,
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    /// Ball radius.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    radius: f64,
    /// Boundary datum.
    #[arg(long = "c")]
    c: f64,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 1024)]
    #[serde(default = "DirichletArgs::default_grid")]
    grid: usize,
    /// Include the per-iteration trace in the JSON output (monotone only).
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    trace: bool,
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
    /// Solution CSV (columns r,u).
    #[arg(long)]
    #[serde(default)]
    csv: Option<PathBuf>,
}

impl DirichletArgs {
    fn default_grid() -> usize {
        1024
    }
}

#[derive(Args, Deserialize, Debug)]
struct LargeArgs {
    #[arg(long)]
    nl: String,
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    radius: f64,
    /// Increasing boundary data, e.g. 2,4,8,16,32.
    #[arg(long, value_delimiter = ',', required = true)]
    n_values: Vec<f64>,
    /// Interior fraction of the radius for the reporting grid.
    #[arg(long, default_value_t = 0.9)]
    #[serde(default = "LargeArgs::default_interior")]
    interior: f64,
    #[arg(long, default_value_t = 65)]
    #[serde(default = "LargeArgs::default_points")]
    points: usize,
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
}

impl LargeArgs {
    fn default_interior() -> f64 {
        0.9
    }
    fn default_points() -> usize {
        65
    }
}

#[derive(Args, Deserialize, Debug)]
struct VerifyArgs {
    /// Trajectory JSON produced by `ivp --out`.
    #[arg(long, conflicts_with = "nl")]
    #[serde(default)]
    traj: Option<PathBuf>,
    /// Integrate freshly instead of reading a file.
    #[arg(long)]
    #[serde(default)]
    nl: Option<String>,
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    #[arg(long = "N")]
    #[serde(rename = "N", default)]
    n: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    rmax: Option<f64>,
    /// Radii for the interior lower bound (defaults: 0.25 and 0.5 of the
    /// trajectory end).
    #[arg(long)]
    #[serde(default)]
    rho1: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    rho2: Option<f64>,
    /// Radius for the remaining-radius bound (default 0.9 of the end).
    #[arg(long)]
    #[serde(default)]
    rho: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
    /// Flat CSV: inequality,lhs,rhs,slack,pass.
    #[arg(long)]
    #[serde(default)]
    out_csv: Option<PathBuf>,
}

#[derive(Args, Deserialize, Debug)]
struct SweepArgs {
    /// Power-law exponents.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long = "N", value_delimiter = ',', required = true)]
    #[serde(rename = "N")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 1e3)]
    #[serde(default = "BlowupArgs::default_rmax")]
    rmax: f64,
    #[arg(long, default_value_t = 1e-4)]
    #[serde(default = "BlowupArgs::default_bracket_tol")]
    bracket_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    #[serde(default = "default_tol")]
    tol: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to the rayon global pool).
    #[arg(long)]
    #[serde(default)]
    jobs: Option<usize>,
}

#[derive(Args, Deserialize, Debug)]
struct SeedArgs {
    /// Directory the fixture JSON files are written into.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON file holding a {"command": ..., ...} object.
    #[arg(long)]
    config: PathBuf,
}

trait StepControlsDefaults {
    fn default_abs_tol() -> f64 {
        1e-10
    }
    fn default_rel_tol() -> f64 {
        1e-10
    }
}
impl StepControlsDefaults for StepControls {}

// ---------------------------------------------------------------------------

enum CliError {
    Domain(String),
    Numerical(String),
    Io(String),
}

impl From<khessian::Error> for CliError {
    fn from(e: khessian::Error) -> Self {
        match &e {
            khessian::Error::Io(_) => CliError::Io(e.to_string()),
            _ if e.is_domain_error() => CliError::Domain(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(msg)) => {
            eprintln!("{}", error_json("domain", &msg));
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("{}", error_json("numerical", &msg));
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("{}", error_json("io", &msg));
            ExitCode::from(3)
        }
    }
}

fn error_json(kind: &str, msg: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": msg } }).to_string()
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Ko(a) => cmd_ko(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Ivp(a) => cmd_ivp(a),
        Command::Blowup(a) => cmd_blowup(a),
        Command::Dirichlet(a) => cmd_dirichlet(a),
        Command::Large(a) => cmd_large(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::SeedFixtures(a) => cmd_seed(a),
        Command::Run(a) => {
            let text = std::fs::read_to_string(&a.config)
                .with_context(|| format!("reading {}", a.config.display()))
                .map_err(|e| CliError::Io(e.to_string()))?;
            let inner: Command = serde_json::from_str(&text)
                .map_err(|e| CliError::Domain(format!("config schema: {e}")))?;
            dispatch(inner)
        }
    }
}

/// Resolve an output path against KHESSIAN_OUT_DIR when relative.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("KHESSIAN_OUT_DIR") {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

/// Atomic write: temp sibling plus rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let path = resolve_out(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.clone().into_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, payload: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, payload),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

fn parse_nl(text: &str, k: Option<usize>) -> Result<Nonlinearity, CliError> {
    Ok(Nonlinearity::from_json(text, k)?)
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serialization cannot fail")
}

fn cmd_ko(a: KoArgs) -> Result<(), CliError> {
    let nl = parse_nl(&a.nl, a.k)?;
    let report = nl.ko_integral(a.beta, a.tol)?;
    emit(&a.out, &pretty(&report))
}

fn cmd_scan(a: ScanArgs) -> Result<(), CliError> {
    let nl = parse_nl(&a.nl, a.k)?;
    let scan = nl.ko_scan(&a.betas, a.tol)?;
    let rows: Vec<serde_json::Value> = scan
        .into_iter()
        .zip(&a.betas)
        .map(|(r, beta)| match r {
            Ok(rep) => serde_json::to_value(&rep).unwrap(),
            Err(e) => serde_json::json!({ "beta": beta, "error": e.to_string() }),
        })
        .collect();
    emit(&a.out, &pretty(&rows))
}

fn cmd_ivp(a: IvpArgs) -> Result<(), CliError> {
    let nl = parse_nl(&a.nl, a.k)?;
    let spec = ProblemSpec::new(a.n, nl.k())?;
    let controls = StepControls {
        abs_tol: a.abs_tol,
        rel_tol: a.rel_tol,
        ..StepControls::default()
    };
    let traj = integrate_ivp(&spec, &nl, a.beta, a.rmax, &controls)?;
    if let Some(csv) = &a.csv {
        write_atomic(csv, &traj.to_csv())?;
    }
    match &a.out {
        Some(path) => write_atomic(path, &traj.to_json())?,
        None => {
            // Summarize on stdout rather than dumping the full grid.
            let summary = serde_json::json!({
                "points": traj.len(),
                "end_radius": traj.end_radius(),
                "xi_end": traj.xi.last(),
                "termination": traj.termination,
            });
            println!("{}", pretty(&summary));
        }
    }
    Ok(())
}

fn cmd_blowup(a: BlowupArgs) -> Result<(), CliError> {
    let nl = parse_nl(&a.nl, a.k)?;
    let spec = ProblemSpec::new(a.n, nl.k())?;
    let opts = BlowupOptions {
        r_max: a.rmax,
        bracket_tol: a.bracket_tol,
        ..BlowupOptions::default()
    };
    let est = blowup_radius(&spec, &nl, a.beta, &opts)?;
    emit(&a.out, &pretty(&est))
}

fn cmd_dirichlet(a: DirichletArgs) -> Result<(), CliError> {
    let nl = parse_nl(&a.nl, a.k)?;
    let spec = ProblemSpec::new(a.n, nl.k())?.with_ball(a.radius, a.c)?;
    let (solution, trace) = match a.method {
        Method::Shooting => (solve_shooting(&spec, &nl, a.grid)?, None),
        Method::Monotone => {
            let (sol, trace) = solve_monotone(
                &spec,
                &nl,
                &MonotoneOptions {
                    grid_size: a.grid,
                    ..MonotoneOptions::default()
                },
            )?;
            (sol, Some(trace))
        }
    };
    if let Some(csv) = &a.csv {
        write_atomic(csv, &solution.profile.to_csv())?;
    }
    let mut doc = serde_json::json!({
        "spec": solution.spec,
        "residual": solution.residual,
        "u0": solution.profile.u.first(),
        "u_boundary": solution.profile.u.last(),
    });
    match &solution.method {
        SolveMethod::Shooting { beta_star, .. } => {
            doc["method"] = serde_json::json!("shooting");
            doc["beta_star"] = serde_json::json!(beta_star);
        }
        SolveMethod::MonotoneIteration {
            iterations,
            final_update_norm,
            shifted,
        } => {
            doc["method"] = serde_json::json!("monotone");
            doc["iterations"] = serde_json::json!(iterations);
            doc["final_update_norm"] = serde_json::json!(final_update_norm);
            doc["shifted"] = serde_json::json!(shifted);
        }
    }
    if a.trace {
        if let Some(trace) = &trace {
            doc["trace"] = serde_json::to_value(trace).unwrap();
        }
    }
    emit(&a.out, &pretty(&doc))
}

fn cmd_large(a: LargeArgs) -> Result<(), CliError> {
    let nl = parse_nl(&a.nl, a.k)?;
    let spec = ProblemSpec::new(a.n, nl.k())?.with_ball(a.radius, 1.0)?;
    let seq = large_solution_sequence(&spec, &nl, &a.n_values, a.interior, a.points)?;
    let doc = serde_json::json!({
        "n_values": seq.n_values,
        "interior_r": seq.interior_r,
        "interior_values": seq.interior_values,
        "cauchy_differences": seq.cauchy_differences,
        "bound_values": seq.bound_values,
        "monotone_violations": seq.monotone_violations,
        "bound_violations": seq.bound_violations,
        "limit_profile": seq.limit_profile,
    });
    emit(&a.out, &pretty(&doc))
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let traj: RadialTrajectory = match (&a.traj, &a.nl) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(resolve_out(path))?;
            RadialTrajectory::from_json(&text)?
        }
        (None, Some(nl_text)) => {
            let nl = parse_nl(nl_text, a.k)?;
            let n = a.n.ok_or_else(|| {
                CliError::Domain("verify without --traj needs --N".into())
            })?;
            let beta = a.beta.ok_or_else(|| {
                CliError::Domain("verify without --traj needs --beta".into())
            })?;
            let rmax = a.rmax.unwrap_or(50.0);
            let spec = ProblemSpec::new(n, nl.k())?;
            integrate_ivp(&spec, &nl, beta, rmax, &StepControls::default())?
        }
        (None, None) => {
            return Err(CliError::Domain(
                "verify needs either --traj or --nl/--N/--beta".into(),
            ))
        }
    };
    let re = traj.end_radius();
    let rho1 = a.rho1.unwrap_or(0.25 * re);
    let rho2 = a.rho2.unwrap_or(0.5 * re);
    let rho = a.rho.unwrap_or(0.9 * re);
    let reports: Vec<EstimateReport> = vec![
        check_lower_bound(&traj, rho1, rho2)?,
        check_growth_bound(&traj)?,
        check_remaining_radius_bound(&traj, rho)?,
    ];
    let energy = energy_identity_residual(&traj)?;
    if let Some(csv) = &a.out_csv {
        write_atomic(csv, &reports_to_csv(&reports))?;
    }
    let doc = serde_json::json!({
        "reports": reports,
        "energy_identity_residual": energy,
        "trajectory_points": traj.len(),
        "end_radius": re,
    });
    emit(&a.out, &pretty(&doc))
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    use rayon::prelude::*;
    let mut cells = Vec::new();
    for &beta in &a.beta {
        for &p in &a.p {
            for &k in &a.k {
                for &n in &a.n {
                    if k <= n {
                        cells.push((beta, p, k, n));
                    }
                }
            }
        }
    }
    let opts = BlowupOptions {
        r_max: a.rmax,
        bracket_tol: a.bracket_tol,
        ..BlowupOptions::default()
    };
    let worker = |(beta, p, k, n): &(f64, f64, usize, usize)| -> String {
        let row = (|| -> Result<String, khessian::Error> {
            let nl = Nonlinearity::power_law(*p, *k)?;
            let spec = ProblemSpec::new(*n, *k)?;
            let est = blowup_radius(&spec, &nl, *beta, &opts)?;
            let k_beta = match nl.ko_integral(*beta, a.tol) {
                Ok(rep) => rep
                    .value()
                    .map(|v| format!("{v}"))
                    .unwrap_or_else(|| "inf".into()),
                Err(_) => "nan".into(),
            };
            let verdict = match est.verdict {
                BlowupVerdict::Blowup => "blowup",
                BlowupVerdict::NoBlowupUpTo { .. } => "no_blowup",
            };
            Ok(format!(
                "{},{},{},{},{},{},{},{}",
                beta, p, k, n, est.rho_low, est.rho_high, k_beta, verdict
            ))
        })();
        row.unwrap_or_else(|e| format!("{},{},{},{},nan,nan,nan,error:{}", beta, p, k, n, e))
    };
    let rows: Vec<String> = if let Some(jobs) = a.jobs {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        pool.install(|| cells.par_iter().map(worker).collect())
    } else {
        cells.par_iter().map(worker).collect()
    };
    let mut csv = String::from("beta,p,k,N,rho_low,rho_high,K_beta,verdict\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    write_atomic(&a.out, &csv)
}

fn cmd_seed(a: SeedArgs) -> Result<(), CliError> {
    // Derived-oracle fixtures, recomputed at 10x tightened tolerances.
    let mut ko_rows = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        for k in [1usize, 2, 3] {
            let nl = Nonlinearity::power_law(p, k)?;
            let rep = nl.ko_integral(1.0, 1e-9)?;
            ko_rows.push(serde_json::json!({
                "kind": "power", "p": p, "k": k, "beta": 1.0,
                "report": rep,
            }));
        }
    }
    let exp = Nonlinearity::exp_minus_one(1.0, 1)?;
    ko_rows.push(serde_json::json!({
        "kind": "expm1", "a": 1.0, "k": 1, "beta": 1.0,
        "report": exp.ko_integral(1.0, 1e-9)?,
    }));
    write_atomic(&a.out_dir.join("ko_values.json"), &pretty(&ko_rows))?;

    let mut brackets = Vec::new();
    let opts = BlowupOptions {
        bracket_tol: 1e-5,
        ..BlowupOptions::default()
    };
    for p in [1.5, 2.0, 3.0] {
        for (k, n) in [(1usize, 3usize), (2, 4), (3, 6)] {
            let nl = Nonlinearity::power_law(p, k)?;
            let spec = ProblemSpec::new(n, k)?;
            for beta in [1.0, 4.0] {
                let est = blowup_radius(&spec, &nl, beta, &opts)?;
                brackets.push(serde_json::json!({
                    "p": p, "k": k, "N": n, "beta": beta, "estimate": est,
                }));
            }
        }
    }
    write_atomic(&a.out_dir.join("blowup_brackets.json"), &pretty(&brackets))?;

    let mut betas = Vec::new();
    for (p, k, n, radius, c) in [
        (2.0, 1usize, 3usize, 1.0, 2.0),
        (1.5, 1, 4, 1.0, 3.0),
        (3.0, 2, 4, 0.6, 3.0),
        (2.5, 2, 6, 1.0, 2.0),
        (4.0, 3, 6, 0.6, 2.0),
        (3.5, 3, 3, 0.5, 2.0),
        (2.0, 2, 4, 1.0, 3.0),
    ] {
        let nl = Nonlinearity::power_law(p, k)?;
        let spec = ProblemSpec::new(n, k)?.with_ball(radius, c)?;
        let sol = solve_shooting(&spec, &nl, 257)?;
        if let SolveMethod::Shooting { beta_star, .. } = &sol.method {
            betas.push(serde_json::json!({
                "p": p, "k": k, "N": n, "R": radius, "c": c, "beta_star": beta_star,
            }));
        }
    }
    write_atomic(&a.out_dir.join("shooting_betas.json"), &pretty(&betas))?;
    Ok(())
}
