//! Config-driven experiment runner for `dnevo-core`.
//!
//! Exit codes: `0` success, `1` a diagnostic check failed, `2` invalid
//! configuration or input, `3` the solver failed.

pub mod config;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dnevo_core::diagnostics::{diagnose, refinement_study, DiagnosticsReport};
use dnevo_core::io::{read_trajectory, write_refinement, write_trajectory};
use dnevo_core::models;
use dnevo_core::scheme::{self, DiscreteTrajectory};
use dnevo_core::TimeGrid;
use serde::Serialize;

pub use config::{ConfigError, RunConfig, OUTPUT_ROOT_ENV};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Unknown model name or similar command-line input.
    Usage(String),
    Io {
        path: PathBuf,
        message: String,
    },
    Solver {
        step: usize,
        message: String,
    },
    Checks(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Checks(_) => 1,
            Self::Config(_) | Self::Usage(_) | Self::Io { .. } => 2,
            Self::Solver { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => e.fmt(f),
            Self::Usage(m) => f.write_str(m),
            Self::Io { path, message } => write!(f, "{}: {message}", path.display()),
            Self::Solver { message, .. } => write!(f, "solver failed: {message}"),
            Self::Checks(names) => write!(f, "failing checks: {}", names.join(", ")),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn core_io(path: &Path) -> impl Fn(dnevo_core::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// `diagnostics.json`: the report plus the run it belongs to.
#[derive(Serialize)]
struct DiagnosticsFile<'a> {
    model: &'a str,
    parameters: &'a std::collections::BTreeMap<String, f64>,
    subdiff_mode: models::SubdiffMode,
    dim: usize,
    seed: u64,
    horizon: f64,
    #[serde(flatten)]
    report: &'a DiagnosticsReport,
}

/// Files written by [run].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub trajectory: PathBuf,
    pub diagnostics: Option<PathBuf>,
    pub refinement: Option<PathBuf>,
    pub report: Option<DiagnosticsReport>,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_diagnostics(path: &Path, file: &DiagnosticsFile<'_>) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, file)
        .map_err(|e| CliError::Io { path: path.into(), message: e.to_string() })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(path))
}

fn resolve_root(root: Option<&Path>) -> Option<PathBuf> {
    root.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

/// Solves the configured problem and writes `trajectory.csv`,
/// `diagnostics.json` and, with a ladder, `refinement.csv`.
///
/// `root` overrides the output root; `None` falls back to `$DNEVO_OUTPUT_ROOT`.
pub fn run(config_path: &Path, root: Option<&Path>) -> Result<RunOutput, CliError> {
    let cfg = config::load(config_path)?;
    let problem = cfg.build()?;
    let root = resolve_root(root);
    let dir = config::output_dir(&cfg, config_path, root.as_deref());
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let spec = &problem.spec;
    let (energy, psi) = (spec.energy.as_ref(), &spec.dissipation);
    let solver = cfg.solver_options();
    let trajectory_path = dir.join("trajectory.csv");

    let traj = match scheme::solve(energy, psi, &problem.u0, &problem.grid, &solver) {
        Ok(t) => t,
        Err(failure) => {
            if !failure.partial.is_empty() {
                let w = create(&trajectory_path)?;
                write_trajectory(&failure.partial, w).map_err(core_io(&trajectory_path))?;
            }
            return Err(CliError::Solver { step: failure.step, message: failure.error.to_string() });
        }
    };
    write_trajectory(&traj, create(&trajectory_path)?).map_err(core_io(&trajectory_path))?;

    let mut out =
        RunOutput { dir: dir.clone(), trajectory: trajectory_path, diagnostics: None, refinement: None, report: None };

    let table = match &cfg.run.tau_ladder {
        Some(ladder) => {
            let table = refinement_study(
                energy,
                psi,
                &problem.u0,
                cfg.run.horizon,
                ladder,
                &solver,
                problem.exact.as_ref(),
                cfg.diagnostics.reference,
            )
            .map_err(|e| CliError::Config(ConfigError { path: "run.tau_ladder".into(), message: e.to_string() }))?;
            let path = dir.join("refinement.csv");
            write_refinement(&table, create(&path)?).map_err(core_io(&path))?;
            out.refinement = Some(path);
            Some(table)
        }
        None => None,
    };

    if cfg.diagnostics.enabled {
        let mut report = diagnose(energy, psi, &traj, &cfg.diagnostics_options())
            .map_err(|e| CliError::Solver { step: traj.steps(), message: format!("diagnostics: {e}") })?;
        report.refinement = table;
        let path = dir.join("diagnostics.json");
        write_diagnostics(
            &path,
            &DiagnosticsFile {
                model: &spec.name,
                parameters: &spec.parameters,
                subdiff_mode: spec.mode,
                dim: spec.dim,
                seed: solver.seed,
                horizon: cfg.run.horizon,
                report: &report,
            },
        )?;
        out.diagnostics = Some(path);
        let failing: Vec<String> = report.failing().into_iter().map(String::from).collect();
        out.report = Some(report);
        if !failing.is_empty() {
            return Err(CliError::Checks(failing));
        }
    }
    Ok(out)
}

/// Rebuilds a trajectory from a CSV file for the configured model.
pub fn load_trajectory(cfg: &RunConfig, path: &Path) -> Result<DiscreteTrajectory, CliError> {
    let problem = cfg.build()?;
    let file = File::open(path).map_err(io_err(path))?;
    let record = read_trajectory(std::io::BufReader::new(file)).map_err(core_io(path))?;
    let bad = |message: String| CliError::Io { path: path.to_path_buf(), message };
    let tau = record.tau().ok_or_else(|| bad("need at least two rows".into()))?;
    if record.states[0].dim() != problem.spec.dim {
        return Err(bad(format!(
            "dimension {} does not match model dimension {}",
            record.states[0].dim(),
            problem.spec.dim
        )));
    }
    let grid =
        TimeGrid::new(cfg.run.horizon, tau, problem.spec.energy.constants().tau_o).map_err(|e| bad(e.to_string()))?;
    for (n, &t) in record.times.iter().enumerate() {
        if (t - grid.node(n)).abs() > 1e-9 * tau {
            return Err(bad(format!("row {n} has t = {t}, expected {}", grid.node(n))));
        }
    }
    DiscreteTrajectory::rebuild(
        problem.spec.energy.as_ref(),
        &problem.spec.dissipation,
        grid,
        record.states,
        record.multipliers,
    )
    .map_err(|e| bad(e.to_string()))
}

/// Runs the configured diagnostics on an existing trajectory file; the
/// default file is `trajectory.csv` in the configured output directory.
pub fn check(
    config_path: &Path,
    trajectory: Option<&Path>,
    root: Option<&Path>,
) -> Result<DiagnosticsReport, CliError> {
    let cfg = config::load(config_path)?;
    let path = match trajectory {
        Some(p) => p.to_path_buf(),
        None => config::output_dir(&cfg, config_path, resolve_root(root).as_deref()).join("trajectory.csv"),
    };
    let traj = load_trajectory(&cfg, &path)?;
    let problem = cfg.build()?;
    // a supplied trajectory that diagnostics cannot evaluate is bad input
    let report = diagnose(problem.spec.energy.as_ref(), &problem.spec.dissipation, &traj, &cfg.diagnostics_options())
        .map_err(|e| CliError::Io { path: path.clone(), message: format!("diagnostics: {e}") })?;
    let failing: Vec<String> = report.failing().into_iter().map(String::from).collect();
    if failing.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Checks(failing))
    }
}

pub fn list_models() -> String {
    let mut out = String::new();
    for m in models::list_models() {
        out.push_str(m.name);
        out.push('\n');
        out.push_str("  ");
        out.push_str(m.summary);
        out.push('\n');
        let params: Vec<String> = m.parameters.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
        out.push_str(&format!("  parameters: {}\n", params.join(", ")));
    }
    out
}

pub fn describe(name: &str) -> Result<String, CliError> {
    models::describe(name).map_err(|e| CliError::Usage(e.to_string()))
}

/// One line per check, for terminal output.
pub fn summarize(report: &DiagnosticsReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        out.push_str(&format!("{status}  {:<26} {:>12.4e}  (threshold {:.4e})\n", c.name, c.value, c.threshold));
    }
    out.push_str(&format!(
        "energy identity defect on [0, {}]: {:.6e}\n",
        report.global.energy_identity.t, report.global.energy_identity.defect
    ));
    out
}
