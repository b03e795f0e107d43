//! Shared fixtures for the benchmarks.

use std::collections::BTreeMap;

use dnevo_core::models::{self, ModelSpec};
use dnevo_core::scheme::{self, DiscreteTrajectory};
use dnevo_core::{SolverOptions, TimeGrid};

/// A registered model with its default parameters and a grid on `[0, horizon]`.
pub struct Fixture {
    pub spec: ModelSpec,
    pub grid: TimeGrid,
    pub opts: SolverOptions,
}

impl Fixture {
    pub fn new(name: &str, params: &[(&str, f64)], horizon: f64, tau: f64) -> Self {
        let params: BTreeMap<String, f64> = params.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        let spec = models::build(name, &params, None).expect("registered model");
        let grid = TimeGrid::new(horizon, tau, spec.energy.constants().tau_o).expect("valid grid");
        Self { spec, grid, opts: SolverOptions::default() }
    }

    pub fn solve(&self) -> DiscreteTrajectory {
        scheme::solve(self.spec.energy.as_ref(), &self.spec.dissipation, &self.spec.default_u0, &self.grid, &self.opts)
            .expect("solve")
    }
}

/// The fixtures used by the benches, smallest first.
pub fn standard() -> Vec<(&'static str, Fixture)> {
    vec![
        ("quadratic", Fixture::new("QuadraticBenchmark", &[], 1.0, 1.0 / 128.0)),
        ("absolute", Fixture::new("AbsoluteMarginal", &[], 1.0, 1.0 / 128.0)),
        ("phase_field", Fixture::new("PhaseField1D", &[], 1.0, 1.0 / 128.0)),
        ("state_weighted", Fixture::new("StateWeightedToy", &[], 1.0, 1.0 / 128.0)),
        ("allen_cahn_16", Fixture::new("AllenCahn1D", &[("N", 16.0), ("rho", 1.0)], 0.25, 1.0 / 64.0)),
    ]
}
