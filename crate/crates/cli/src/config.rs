//! Run configuration, read from TOML.
//!
//! ```toml
//! [model]
//! name = "AbsoluteMarginal"
//! params = { alpha = 0.5, beta = 0.25 }
//!
//! [dissipation]            # optional, replaces the model's potential
//! kind = "one_hom_plus_quad"
//! rho = 1.0
//! epsilon = 1.0
//!
//! [run]
//! T = 1.0
//! tau = 0.0078125          # and/or tau_ladder = [0.03125, 0.015625]
//! u0 = [0.0]               # optional; a scalar is broadcast
//! subdiff_mode = "marginal"
//! seed = 24301
//! output_dir = "absolute"
//!
//! [diagnostics]
//! chain_rule = true
//!
//! [solver]                 # optional, inner solver settings
//! eps_inner = 1e-10
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dnevo_core::diagnostics::DiagnosticsOptions;
use dnevo_core::models::{self, ModelSpec, SubdiffMode};
use dnevo_core::potentials::{DissipationPotential, StateWeight};
use dnevo_core::{SolverOptions, StateVector, TimeGrid};
use serde::{Deserialize, Serialize};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "DNEVO_OUTPUT_ROOT";

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub dissipation: Option<DissipationConfig>,
    pub run: RunSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DissipationConfig {
    /// `(c/2)‖v‖²`
    Quadratic {
        c: f64,
    },
    /// `(c/p) Σ|v_i|^p`
    PNorm {
        c: f64,
        p: f64,
    },
    /// `ρ‖v‖₁ + (ε/2)‖v‖²`
    OneHomPlusQuad {
        rho: f64,
        epsilon: f64,
    },
    WeightedSum {
        terms: Vec<WeightedTerm>,
    },
    /// `(1 + amplitude·tanh(u_1)) Ψ₀(v)`
    StateWeighted {
        amplitude: f64,
        base: Box<DissipationConfig>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTerm {
    pub weight: f64,
    pub potential: DissipationConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum InitialState {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub tau_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub u0: Option<InitialState>,
    #[serde(default)]
    pub subdiff_mode: Option<SubdiffMode>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub enabled: bool,
    pub node_interval: bool,
    pub chain_rule: bool,
    pub gap_tolerance: f64,
    pub minimality_tolerance: f64,
    pub c_chain: Option<f64>,
    pub chain_pass_fraction: f64,
    pub windows: Vec<(f64, f64)>,
    /// Reference run at `min(ladder)/16` when there is no exact solution.
    pub reference: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        let d = DiagnosticsOptions::default();
        Self {
            enabled: true,
            node_interval: d.node_interval,
            chain_rule: d.chain_rule,
            gap_tolerance: d.gap_tolerance,
            minimality_tolerance: d.minimality_tolerance,
            c_chain: d.c_chain,
            chain_pass_fraction: d.chain_pass_fraction,
            windows: Vec::new(),
            reference: false,
        }
    }
}

/// A configuration problem, located by its field path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "invalid config: {}", self.message)
        } else {
            write!(f, "invalid config at `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and schema-checks a configuration without building anything.
pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::new(path, inner.message().trim())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        positive("run.T", self.run.horizon)?;
        if self.run.tau.is_none() && self.run.tau_ladder.is_none() {
            return Err(ConfigError::new("run", "one of `tau` or `tau_ladder` is required"));
        }
        if let Some(tau) = self.run.tau {
            positive("run.tau", tau)?;
        }
        if let Some(ladder) = &self.run.tau_ladder {
            if ladder.is_empty() {
                return Err(ConfigError::new("run.tau_ladder", "must not be empty"));
            }
            for (i, &tau) in ladder.iter().enumerate() {
                positive(&format!("run.tau_ladder[{i}]"), tau)?;
                if i > 0 && tau >= ladder[i - 1] {
                    return Err(ConfigError::new(format!("run.tau_ladder[{i}]"), "ladder must be strictly decreasing"));
                }
            }
        }
        let d = &self.diagnostics;
        for (i, &(s, t)) in d.windows.iter().enumerate() {
            if !(0.0 <= s && s <= t && t <= self.run.horizon) {
                return Err(ConfigError::new(
                    format!("diagnostics.windows[{i}]"),
                    format!("need 0 <= s <= t <= T, got [{s}, {t}]"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&d.chain_pass_fraction) {
            return Err(ConfigError::new("diagnostics.chain_pass_fraction", "must lie in [0, 1]"));
        }
        if let Some(c) = d.c_chain {
            positive("diagnostics.c_chain", c)?;
        }
        let s = &self.solver;
        positive("solver.eps_inner", s.eps_inner)?;
        positive("solver.gap_tolerance", s.gap_tolerance)?;
        if s.scan_points < 3 {
            return Err(ConfigError::new("solver.scan_points", "needs at least 3 points"));
        }
        if s.starts == 0 || s.max_iterations == 0 || s.quadrature_points == 0 {
            return Err(ConfigError::new("solver", "starts, max_iterations and quadrature_points must be positive"));
        }
        if let Some(d) = &self.dissipation {
            d.build("dissipation")?;
        }
        Ok(())
    }

    /// Solver options with the run seed applied.
    pub fn solver_options(&self) -> SolverOptions {
        let mut s = self.solver.clone();
        if let Some(seed) = self.run.seed {
            s.seed = seed;
        }
        s
    }

    pub fn diagnostics_options(&self) -> DiagnosticsOptions {
        let d = &self.diagnostics;
        DiagnosticsOptions {
            solver: self.solver_options(),
            gap_tolerance: d.gap_tolerance,
            minimality_tolerance: d.minimality_tolerance,
            node_interval: d.node_interval,
            chain_rule: d.chain_rule,
            c_chain: d.c_chain,
            chain_pass_fraction: d.chain_pass_fraction,
            windows: d.windows.clone(),
        }
    }

    /// Builds the model, applies the dissipation override and resolves `u0`.
    pub fn build(&self) -> Result<Problem, ConfigError> {
        let mut spec = models::build(&self.model.name, &self.model.params, self.run.subdiff_mode).map_err(|e| {
            let path = match &e {
                dnevo_core::Error::UnknownModel(_) => "model.name".to_string(),
                dnevo_core::Error::UnknownParameter { name, .. } | dnevo_core::Error::InvalidParameter { name, .. }
                    if self.model.params.contains_key(name) =>
                {
                    format!("model.params.{name}")
                }
                dnevo_core::Error::UnsupportedMode { .. } => "run.subdiff_mode".into(),
                _ => "model.params".into(),
            };
            ConfigError::new(path, e)
        })?;
        if let Some(d) = &self.dissipation {
            spec.dissipation = d.build("dissipation")?;
        }
        let u0 = match &self.run.u0 {
            None => spec.default_u0.clone(),
            Some(InitialState::Scalar(x)) => {
                StateVector::new(vec![*x; spec.dim]).map_err(|e| ConfigError::new("run.u0", e))?
            }
            Some(InitialState::Vector(v)) => {
                if v.len() != spec.dim {
                    return Err(ConfigError::new(
                        "run.u0",
                        format!("model `{}` has dimension {}, got {} values", spec.name, spec.dim, v.len()),
                    ));
                }
                StateVector::new(v.clone()).map_err(|e| ConfigError::new("run.u0", e))?
            }
        };
        let tau_o = spec.energy.constants().tau_o;
        let main_tau = self.run.tau.or_else(|| self.run.tau_ladder.as_ref().and_then(|l| l.last().copied()));
        let grid = TimeGrid::new(self.run.horizon, main_tau.expect("validated"), tau_o)
            .map_err(|e| ConfigError::new(if self.run.tau.is_some() { "run.tau" } else { "run.tau_ladder" }, e))?;
        if let (Some(limit), Some(ladder)) = (tau_o, &self.run.tau_ladder) {
            if ladder[0] >= limit {
                return Err(ConfigError::new(
                    "run.tau_ladder[0]",
                    format!("must be below the admissible step {limit}"),
                ));
            }
        }
        let exact = spec.exact_from(&u0);
        Ok(Problem { spec, u0, grid, exact })
    }
}

impl DissipationConfig {
    pub fn build(&self, path: &str) -> Result<DissipationPotential, ConfigError> {
        let wrap = |e: dnevo_core::Error| ConfigError::new(path, e);
        match self {
            Self::Quadratic { c } => DissipationPotential::quadratic(*c).map_err(wrap),
            Self::PNorm { c, p } => DissipationPotential::p_norm(*c, *p).map_err(wrap),
            Self::OneHomPlusQuad { rho, epsilon } => {
                DissipationPotential::one_hom_plus_quad(*rho, *epsilon).map_err(wrap)
            }
            Self::WeightedSum { terms } => {
                let built = terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| Ok((t.weight, t.potential.build(&format!("{path}.terms[{i}].potential"))?)))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                DissipationPotential::weighted_sum(built).map_err(wrap)
            }
            Self::StateWeighted { amplitude, base } => {
                let weight =
                    StateWeight::tanh(*amplitude).map_err(|e| ConfigError::new(format!("{path}.amplitude"), e))?;
                Ok(DissipationPotential::state_weighted(base.build(&format!("{path}.base"))?, weight))
            }
        }
    }
}

/// A configuration turned into solver inputs.
pub struct Problem {
    pub spec: ModelSpec,
    pub u0: StateVector,
    pub grid: TimeGrid,
    pub exact: Option<models::ExactSolution>,
}

/// Output directory: absolute paths are kept; relative ones are resolved
/// against `$DNEVO_OUTPUT_ROOT`, or else the config file's directory.
/// The default name is the config file stem.
pub fn output_dir(cfg: &RunConfig, config_path: &Path, root: Option<&Path>) -> PathBuf {
    let rel = cfg.run.output_dir.clone().unwrap_or_else(|| {
        PathBuf::from(config_path.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into()))
    });
    if rel.is_absolute() {
        return rel;
    }
    match root {
        Some(r) => r.join(rel),
        None => config_path.parent().map(|p| p.join(&rel)).unwrap_or(rel),
    }
}
