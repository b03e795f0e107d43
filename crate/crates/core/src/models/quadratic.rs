use std::collections::BTreeMap;
use std::sync::Arc;

use crate::energy::{EnergyConstants, SmoothEnergy};
use crate::error::Result;
use crate::potentials::{DissipationPotential, StateWeight};
use crate::state::StateVector;

use super::{ModelSpec, SubdiffMode};

fn energy(dim: usize, a: f64, offset: f64) -> SmoothEnergy {
    let constants = EnergyConstants { c0: offset, c1: 0.0, c2: 0.0, tau_o: None };
    SmoothEnergy::new(
        dim,
        constants,
        move |_, u| 0.5 * u.iter().map(|x| (x - a) * (x - a)).sum::<f64>(),
        move |_, u| u.iter().map(|x| x - a).collect(),
    )
    .with_offset(offset)
}

fn spec(values: &BTreeMap<String, f64>, dissipation: DissipationPotential) -> Result<ModelSpec> {
    let dim = values["dim"] as usize;
    Ok(ModelSpec {
        name: String::new(),
        dim,
        energy: Arc::new(energy(dim, values["a"], values["offset"])),
        dissipation,
        exact_solution: None,
        parameters: BTreeMap::new(),
        default_u0: StateVector::new(vec![values["u0"]; dim])?,
        mode: SubdiffMode::Analytic,
        frozen_time: true,
    })
}

pub(super) fn benchmark(values: &BTreeMap<String, f64>) -> Result<ModelSpec> {
    spec(values, DissipationPotential::quadratic(1.0)?)
}

pub(super) fn state_weighted(values: &BTreeMap<String, f64>) -> Result<ModelSpec> {
    let weight = StateWeight::tanh(values["amplitude"])?;
    spec(values, DissipationPotential::state_weighted(DissipationPotential::quadratic(1.0)?, weight))
}
