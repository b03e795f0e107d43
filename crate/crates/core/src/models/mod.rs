//! Registry of the shipped example problems.
//!
//! | name                 | d        | energy                                   | dissipation                 |
//! |----------------------|----------|------------------------------------------|-----------------------------|
//! | `QuadraticBenchmark` | `dim`    | `½‖u − a‖² + offset`                     | `½‖v‖²`                     |
//! | `AbsoluteMarginal`   | 1        | `−α|u − βt| + offset`                    | `½v²`                       |
//! | `PhaseField1D`       | 1        | `½u² + min_η ½η² − uη + W(η) − ℓ(t)u`     | `½v²`                       |
//! | `AllenCahn1D`        | `N − 1`  | discrete Allen–Cahn functional           | `ρ‖v‖₁Δx + (1/p)‖v‖_p^p Δx`  |
//! | `StateWeightedToy`   | `dim`    | as `QuadraticBenchmark`                  | `ω(u) ½‖v‖²`                |

mod absolute;
mod allen_cahn;
mod phase_field;
mod quadratic;

pub use absolute::{AbsoluteInner, AbsoluteMarginal};
pub use allen_cahn::AllenCahn;
pub use phase_field::{PhaseFieldInner, PHASE_FIELD_ETA_MARGIN};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::potentials::DissipationPotential;
use crate::state::StateVector;

/// Which subdifferential a model exposes as `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubdiffMode {
    /// Gradient of a smooth energy.
    Analytic,
    /// Clarke subdifferential of a piecewise-C¹ energy in 1D.
    Clarke,
    /// Marginal subdifferential of a reduced energy.
    Marginal,
}

impl fmt::Display for SubdiffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Analytic => "analytic",
            Self::Clarke => "clarke",
            Self::Marginal => "marginal",
        })
    }
}

impl std::str::FromStr for SubdiffMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "clarke" => Ok(Self::Clarke),
            "marginal" => Ok(Self::Marginal),
            other => Err(format!("unknown subdifferential mode `{other}`")),
        }
    }
}

pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A fully wired problem: energy, dissipation, defaults and optional exact solution.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub dim: usize,
    pub energy: Arc<dyn EnergyModel>,
    pub dissipation: DissipationPotential,
    /// Exact solution from `default_u0`, when known.
    pub exact_solution: Option<ExactSolution>,
    /// Resolved parameter values, defaults included.
    pub parameters: BTreeMap<String, f64>,
    pub default_u0: StateVector,
    pub mode: SubdiffMode,
    /// `E` does not depend on time.
    pub frozen_time: bool,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("dissipation", &self.dissipation)
            .field("parameters", &self.parameters)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    /// Exact solution started from `u0`, for the models where it has a closed form.
    pub fn exact_from(&self, u0: &[f64]) -> Option<ExactSolution> {
        match self.name.as_str() {
            "QuadraticBenchmark" => {
                let a = self.parameters["a"];
                let u0 = u0.to_vec();
                Some(Arc::new(move |t| u0.iter().map(|x| a + (x - a) * (-t).exp()).collect()))
            }
            "AbsoluteMarginal" => {
                // away from the kink the branch is kept for all times since α > β
                let alpha = self.parameters["alpha"];
                let x0 = u0[0];
                let slope = if x0 <= 0.0 { -alpha } else { alpha };
                Some(Arc::new(move |t| vec![x0 + slope * t]))
            }
            _ => None,
        }
    }
}

/// Declared parameter with its default and admissible range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    pub default: f64,
    pub min: f64,
    pub max: f64,
    pub strict_min: bool,
    pub integer: bool,
    pub help: &'static str,
}

impl ParamSchema {
    const fn real(name: &'static str, default: f64, min: f64, max: f64, strict_min: bool, help: &'static str) -> Self {
        Self { name, default, min, max, strict_min, integer: false, help }
    }

    const fn int(name: &'static str, default: f64, min: f64, max: f64, help: &'static str) -> Self {
        Self { name, default, min, max, strict_min: false, integer: true, help }
    }

    fn bound_text(&self) -> String {
        let lo = if self.strict_min { "(" } else { "[" };
        let kind = if self.integer { "integer in " } else { "" };
        format!("{kind}{lo}{}, {}]", self.min, self.max)
    }

    fn check(&self, value: f64) -> Result<()> {
        let low_ok = if self.strict_min { value > self.min } else { value >= self.min };
        let ok = value.is_finite() && low_ok && value <= self.max && (!self.integer || value.fract() == 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter { name: self.name.into(), value, bound: self.bound_text() })
        }
    }
}

/// Registry entry: parameters, constraints and supported modes.
#[derive(Clone, Debug, Serialize)]
pub struct ModelInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub parameters: Vec<ParamSchema>,
    pub constraints: Vec<&'static str>,
    pub modes: Vec<SubdiffMode>,
    pub default_mode: SubdiffMode,
}

const INF: f64 = f64::INFINITY;

fn registry() -> Vec<ModelInfo> {
    vec![
        ModelInfo {
            name: "QuadraticBenchmark",
            summary: "E(t,u) = ½‖u − a‖² + offset with Ψ(v) = ½‖v‖²; exact solution a + (u0 − a)e^{−t}",
            parameters: vec![
                ParamSchema::int("dim", 1.0, 1.0, 64.0, "state dimension"),
                ParamSchema::real("a", 1.0, -1e6, 1e6, false, "attractor, the same in every coordinate"),
                ParamSchema::real("offset", 1.0, 0.0, 1e12, true, "energy offset, also the lower bound C0"),
                ParamSchema::real("u0", 0.0, -1e6, 1e6, false, "default initial value, every coordinate"),
            ],
            constraints: vec!["offset > 0"],
            modes: vec![SubdiffMode::Analytic],
            default_mode: SubdiffMode::Analytic,
        },
        ModelInfo {
            name: "AbsoluteMarginal",
            summary: "E(t,u) = −α|u − βt| + offset = min over η ∈ {0, 1} of two affine branches, Ψ(v) = ½v²",
            parameters: vec![
                ParamSchema::real("alpha", 0.5, 0.0, INF, true, "slope α"),
                ParamSchema::real("beta", 0.25, 0.0, 1.0, true, "kink speed β"),
                ParamSchema::real("offset", 2.0, 1.0, 1e12, true, "energy offset"),
                ParamSchema::real("u0", 0.0, -1e6, 1e6, false, "default initial value"),
            ],
            constraints: vec!["alpha > beta > 0", "beta < 1", "offset > 1"],
            modes: vec![SubdiffMode::Marginal, SubdiffMode::Clarke],
            default_mode: SubdiffMode::Marginal,
        },
        ModelInfo {
            name: "PhaseField1D",
            summary: "E(t,u) = ½u² + min_η [½η² − uη + W(η)] − ℓ(t)u + offset with the piecewise-quadratic double well W, ℓ(t) = amplitude·sin(frequency·t), Ψ(v) = ½v²",
            parameters: vec![
                ParamSchema::real("amplitude", 0.3, -1.0, 1.0, false, "loading amplitude"),
                ParamSchema::real("frequency", 1.0, 0.0, 100.0, false, "loading frequency"),
                ParamSchema::real("offset", 2.0, 0.0, 1e12, true, "energy offset"),
                ParamSchema::real("u0", 0.25, -10.0, 10.0, false, "default initial value"),
            ],
            constraints: vec!["|amplitude| <= 1", "offset >= 0.5 + |amplitude| + 0.75·amplitude²"],
            modes: vec![SubdiffMode::Marginal],
            default_mode: SubdiffMode::Marginal,
        },
        ModelInfo {
            name: "AllenCahn1D",
            summary: "N cells on [0,1], zero Dirichlet ends, E = Σ (1/q)|D⁺u|^q Δx + Σ W(u_i)Δx − ℓ(t)Σu_iΔx + offset with W(u) = (u² − 1)²/4 and ℓ(t) = load·sin(t); Ψ(v) = ρΣ|v_i|Δx + (1/p)Σ|v_i|^pΔx",
            parameters: vec![
                ParamSchema::int("N", 32.0, 2.0, 4096.0, "number of cells; the state has N − 1 interior values"),
                ParamSchema::real("rho", 0.0, 0.0, 1e6, false, "rate-independent dissipation weight ρ"),
                ParamSchema::real("p", 2.0, 1.0, 16.0, true, "viscous exponent p"),
                ParamSchema::real("q", 2.0, 1.0, 16.0, true, "gradient exponent q"),
                ParamSchema::real("offset", 1.0, 0.0, 1e12, true, "energy offset"),
                ParamSchema::real("load", 0.0, -0.99, 0.99, false, "loading amplitude"),
                ParamSchema::real("u0_amplitude", 0.2, -10.0, 10.0, false, "default initial profile A·sin(πx)"),
            ],
            constraints: vec!["N >= 2", "p > 1", "q > 1", "|load| < 1", "lower bound C0 > 0"],
            modes: vec![SubdiffMode::Analytic],
            default_mode: SubdiffMode::Analytic,
        },
        ModelInfo {
            name: "StateWeightedToy",
            summary: "QuadraticBenchmark energy with the state-dependent dissipation Ψ_u(v) = ω(u)·½‖v‖², ω(u) = 1 + amplitude·tanh(u_1)",
            parameters: vec![
                ParamSchema::int("dim", 2.0, 1.0, 64.0, "state dimension"),
                ParamSchema::real("a", 1.0, -1e6, 1e6, false, "attractor"),
                ParamSchema::real("offset", 1.0, 0.0, 1e12, true, "energy offset"),
                ParamSchema::real("amplitude", 0.5, 0.0, 1.0, false, "weight amplitude, below 1"),
                ParamSchema::real("u0", 0.0, -1e6, 1e6, false, "default initial value, every coordinate"),
            ],
            constraints: vec!["0 <= amplitude < 1"],
            modes: vec![SubdiffMode::Analytic],
            default_mode: SubdiffMode::Analytic,
        },
    ]
}

pub fn list_models() -> Vec<ModelInfo> {
    registry()
}

pub fn model_info(name: &str) -> Result<ModelInfo> {
    registry().into_iter().find(|m| m.name == name).ok_or_else(|| Error::UnknownModel(name.into()))
}

/// Human-readable description with parameter schema and constraints.
pub fn describe(name: &str) -> Result<String> {
    use std::fmt::Write;
    let info = model_info(name)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}", info.name);
    let _ = writeln!(out, "  {}", info.summary);
    let _ = writeln!(out, "  parameters:");
    for p in &info.parameters {
        let _ = writeln!(out, "    {:<13} default {:<8} {:<28} {}", p.name, p.default, p.bound_text(), p.help);
    }
    let _ = writeln!(out, "  constraints: {}", info.constraints.join(", "));
    let modes: Vec<String> = info.modes.iter().map(|m| m.to_string()).collect();
    let _ = writeln!(out, "  subdifferential modes: {} (default {})", modes.join(", "), info.default_mode);
    Ok(out)
}

fn resolve(info: &ModelInfo, params: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    for key in params.keys() {
        if !info.parameters.iter().any(|p| p.name == key) {
            return Err(Error::UnknownParameter { model: info.name.into(), name: key.clone() });
        }
    }
    let mut out = BTreeMap::new();
    for p in &info.parameters {
        let value = params.get(p.name).copied().unwrap_or(p.default);
        p.check(value)?;
        out.insert(p.name.to_string(), value);
    }
    Ok(out)
}

/// Builds a registered model; `mode = None` selects its default.
pub fn build(name: &str, params: &BTreeMap<String, f64>, mode: Option<SubdiffMode>) -> Result<ModelSpec> {
    let info = model_info(name)?;
    let values = resolve(&info, params)?;
    let mode = mode.unwrap_or(info.default_mode);
    if !info.modes.contains(&mode) {
        return Err(Error::UnsupportedMode { model: name.into(), mode: mode.to_string() });
    }
    let mut spec = match name {
        "QuadraticBenchmark" => quadratic::benchmark(&values)?,
        "AbsoluteMarginal" => absolute::build(&values, mode)?,
        "PhaseField1D" => phase_field::build(&values)?,
        "AllenCahn1D" => allen_cahn::build(&values)?,
        "StateWeightedToy" => quadratic::state_weighted(&values)?,
        _ => unreachable!("registry and builders list the same models"),
    };
    spec.name = name.into();
    spec.parameters = values;
    spec.mode = mode;
    spec.exact_solution = spec.exact_from(&spec.default_u0.clone());
    Ok(spec)
}

/// Builds with default parameters.
pub fn build_default(name: &str) -> Result<ModelSpec> {
    build(name, &BTreeMap::new(), None)
}

/// The piecewise-quadratic double well
///
/// ```text
///        ⎧ (η + 1)²     η < −½
/// W(η) = ⎨ −η² + ½     |η| ≤ ½
///        ⎩ (η − 1)²     η > ½
/// ```
pub fn double_well(eta: f64) -> f64 {
    if eta < -0.5 {
        (eta + 1.0) * (eta + 1.0)
    } else if eta <= 0.5 {
        0.5 - eta * eta
    } else {
        (eta - 1.0) * (eta - 1.0)
    }
}

pub fn double_well_prime(eta: f64) -> f64 {
    if eta < -0.5 {
        2.0 * (eta + 1.0)
    } else if eta <= 0.5 {
        -2.0 * eta
    } else {
        2.0 * (eta - 1.0)
    }
}

#[cfg(test)]
mod tests;
