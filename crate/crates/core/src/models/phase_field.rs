use std::collections::BTreeMap;
use std::sync::Arc;

use crate::energy::{EnergyConstants, EtaSet, InnerFunctional, MarginalEnergy};
use crate::error::{Error, Result};
use crate::potentials::DissipationPotential;
use crate::state::StateVector;

use super::{double_well, double_well_prime, ModelSpec, SubdiffMode};

/// Extra half-width of the η interval beyond the a priori location of minimizers.
pub const PHASE_FIELD_ETA_MARGIN: f64 = 0.5;

/// `I(t, u, η) = ½u² + ½η² − uη + W(η) − ℓ(t)u` with `ℓ(t) = amplitude·sin(frequency·t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseFieldInner {
    pub amplitude: f64,
    pub frequency: f64,
}

impl PhaseFieldInner {
    pub fn load(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t).sin()
    }

    pub fn load_rate(&self, t: f64) -> f64 {
        self.amplitude * self.frequency * (self.frequency * t).cos()
    }
}

impl InnerFunctional for PhaseFieldInner {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, t: f64, u: &[f64], eta: f64) -> f64 {
        let u = u[0];
        0.5 * u * u + 0.5 * eta * eta - u * eta + double_well(eta) - self.load(t) * u
    }

    fn grad_u(&self, t: f64, u: &[f64], eta: f64) -> Vec<f64> {
        vec![u[0] - eta - self.load(t)]
    }

    fn d_t(&self, t: f64, u: &[f64], _eta: f64) -> f64 {
        -self.load_rate(t) * u[0]
    }

    fn d_eta(&self, _t: f64, u: &[f64], eta: f64) -> Option<f64> {
        Some(eta - u[0] + double_well_prime(eta))
    }

    /// Stationary points satisfy `η − u + W'(η) = 0`, so `|η| ≤ (|u| + 2)/3`.
    fn eta_set(&self, _t: f64, u: &[f64]) -> EtaSet {
        let r = (u[0].abs() + 2.0) / 3.0 + PHASE_FIELD_ETA_MARGIN;
        EtaSet::Interval { lo: -r, hi: r }
    }
}

pub(super) fn build(values: &BTreeMap<String, f64>) -> Result<ModelSpec> {
    let inner = PhaseFieldInner { amplitude: values["amplitude"], frequency: values["frequency"] };
    // min over (u, η) of I is −|ℓ| − ¾ℓ², attained at η = 1 + ℓ/2, u = η + ℓ
    let a = inner.amplitude.abs();
    let c0 = values["offset"] - a - 0.75 * a * a;
    if !(c0 >= 0.5) {
        return Err(Error::InvalidParameter {
            name: "offset".into(),
            value: values["offset"],
            bound: format!(">= 0.5 + |amplitude| + 0.75·amplitude² = {}", 0.5 + a + 0.75 * a * a),
        });
    }
    let c = 2.0 * (inner.amplitude * inner.frequency).abs();
    let constants = EnergyConstants { c0, c1: c, c2: c, tau_o: None };
    let energy = MarginalEnergy::new(inner, constants, values["offset"]);
    Ok(ModelSpec {
        name: String::new(),
        dim: 1,
        energy: Arc::new(energy),
        dissipation: DissipationPotential::quadratic(1.0)?,
        exact_solution: None,
        parameters: BTreeMap::new(),
        default_u0: StateVector::scalar(values["u0"])?,
        mode: SubdiffMode::Marginal,
        frozen_time: inner.amplitude == 0.0 || inner.frequency == 0.0,
    })
}
