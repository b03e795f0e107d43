use std::collections::BTreeMap;
use std::sync::Arc;

use crate::energy::{
    clarke_subdifferential_1d, EnergyConstants, EnergyModel, EtaSet, InnerFunctional, MarginalEnergy, SubdiffSet,
    CLARKE_STEP,
};
use crate::error::{Error, Result};
use crate::potentials::DissipationPotential;
use crate::state::{check_dim, StateVector};

use super::{ModelSpec, SubdiffMode};

/// Branches `I(t, u, 0) = −α(u − βt)` and `I(t, u, 1) = α(u − βt)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsoluteInner {
    pub alpha: f64,
    pub beta: f64,
}

impl InnerFunctional for AbsoluteInner {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, t: f64, u: &[f64], eta: f64) -> f64 {
        let d = u[0] - self.beta * t;
        if eta == 0.0 {
            -self.alpha * d
        } else {
            self.alpha * d
        }
    }

    fn grad_u(&self, _t: f64, _u: &[f64], eta: f64) -> Vec<f64> {
        vec![if eta == 0.0 { -self.alpha } else { self.alpha }]
    }

    fn d_t(&self, _t: f64, _u: &[f64], eta: f64) -> f64 {
        if eta == 0.0 {
            self.alpha * self.beta
        } else {
            -self.alpha * self.beta
        }
    }

    fn eta_set(&self, _t: f64, _u: &[f64]) -> EtaSet {
        EtaSet::Finite(vec![0.0, 1.0])
    }
}

/// `E(t, u) = −α|u − βt| + offset` with either the marginal or the Clarke subdifferential.
///
/// In Clarke mode `P(t, u, ξ) = −ξβ`; in marginal mode `P` is conditioned on the branch.
pub struct AbsoluteMarginal {
    marginal: MarginalEnergy<AbsoluteInner>,
    mode: SubdiffMode,
}

impl AbsoluteMarginal {
    pub fn new(alpha: f64, beta: f64, offset: f64, mode: SubdiffMode) -> Result<Self> {
        if !(alpha > beta && beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha".into(),
                value: alpha,
                bound: format!("alpha > beta > 0 and beta < 1 (beta = {beta})"),
            });
        }
        if !(offset > 1.0) {
            return Err(Error::InvalidParameter { name: "offset".into(), value: offset, bound: "> 1".into() });
        }
        if mode == SubdiffMode::Analytic {
            return Err(Error::UnsupportedMode { model: "AbsoluteMarginal".into(), mode: mode.to_string() });
        }
        let c0 = 1.0;
        let c = alpha * beta / c0;
        let constants = EnergyConstants { c0, c1: c, c2: c, tau_o: None };
        Ok(Self { marginal: MarginalEnergy::new(AbsoluteInner { alpha, beta }, constants, offset), mode })
    }

    pub fn marginal(&self) -> &MarginalEnergy<AbsoluteInner> {
        &self.marginal
    }

    pub fn mode(&self) -> SubdiffMode {
        self.mode
    }

    fn params(&self) -> AbsoluteInner {
        *self.marginal.inner()
    }
}

impl EnergyModel for AbsoluteMarginal {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, t: f64, u: &[f64]) -> Result<f64> {
        self.marginal.value(t, u)
    }

    fn subdifferential(&self, t: f64, u: &[f64]) -> Result<SubdiffSet> {
        match self.mode {
            SubdiffMode::Clarke => {
                check_dim(1, u.len())?;
                let (lo, hi) = clarke_subdifferential_1d(self, t, u[0], CLARKE_STEP)?;
                Ok(SubdiffSet::Interval { lo, hi })
            }
            _ => self.marginal.subdifferential(t, u),
        }
    }

    fn time_derivative(&self, t: f64, u: &[f64], xi: &[f64]) -> Result<f64> {
        match self.mode {
            SubdiffMode::Clarke => {
                check_dim(1, xi.len())?;
                Ok(-xi[0] * self.params().beta)
            }
            _ => self.marginal.time_derivative(t, u, xi),
        }
    }

    fn gradient(&self, t: f64, u: &[f64]) -> Result<Option<Vec<f64>>> {
        self.marginal.gradient(t, u)
    }

    fn constants(&self) -> EnergyConstants {
        self.marginal.constants()
    }

    fn offset(&self) -> f64 {
        self.marginal.offset()
    }

    fn kinks(&self, t: f64) -> Vec<f64> {
        vec![self.params().beta * t]
    }
}

pub(super) fn build(values: &BTreeMap<String, f64>, mode: SubdiffMode) -> Result<ModelSpec> {
    let energy = AbsoluteMarginal::new(values["alpha"], values["beta"], values["offset"], mode)?;
    Ok(ModelSpec {
        name: String::new(),
        dim: 1,
        energy: Arc::new(energy),
        dissipation: DissipationPotential::quadratic(1.0)?,
        exact_solution: None,
        parameters: BTreeMap::new(),
        default_u0: StateVector::scalar(values["u0"])?,
        mode,
        frozen_time: false,
    })
}
