//! Time-dependent energies, their subdifferentials and the conditioned
//! time-derivative `P`.

mod audit;
mod marginal;
mod smooth;

pub use audit::{audit_assumptions, AssumptionReport, AssumptionRow, CoercivityProbe, ProbePlan};
pub use marginal::{EtaSet, InnerFunctional, MarginalEnergy, Minimizer};
pub use smooth::SmoothEnergy;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{central_derivative, one_sided_derivative};
use crate::state::{check_dim, check_finite, distance, lex_cmp, norm, StateVector};

/// Multipliers compatible with the state: a finite list, or a closed interval in 1D.
#[derive(Clone, Debug, PartialEq)]
pub enum SubdiffSet {
    Points(Vec<StateVector>),
    Interval { lo: f64, hi: f64 },
}

impl SubdiffSet {
    pub fn is_empty(&self) -> bool {
        match self {
            Self::Points(p) => p.is_empty(),
            Self::Interval { lo, hi } => lo > hi,
        }
    }

    /// Distance from `xi` to the set.
    pub fn distance_to(&self, xi: &[f64]) -> f64 {
        match self {
            Self::Points(p) => p.iter().map(|q| distance(q, xi)).fold(f64::INFINITY, f64::min),
            Self::Interval { lo, hi } => {
                let x = xi[0];
                if x < *lo {
                    lo - x
                } else if x > *hi {
                    x - hi
                } else {
                    0.0
                }
            }
        }
    }

    pub fn min_norm_element(&self) -> Option<StateVector> {
        match self {
            Self::Points(p) => p.iter().min_by(|a, b| norm(a).total_cmp(&norm(b)).then_with(|| lex_cmp(a, b))).cloned(),
            Self::Interval { lo, hi } if lo <= hi => Some(StateVector::from_raw(vec![0.0f64.clamp(*lo, *hi)])),
            Self::Interval { .. } => None,
        }
    }
}

/// Structural constants of an energy.
///
/// `c0` is the positive lower bound, `c1` the time-Lipschitz modulus
/// relative to the energy, `c2` the bound of `|P|` relative to `sup_t E`,
/// and `tau_o` the largest admissible time step (`None` = unbounded).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub tau_o: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn check(&self, u: &[f64]) -> Result<()> {
        for (index, ((&x, &lo), &hi)) in u.iter().zip(&self.lo).zip(&self.hi).enumerate() {
            if x < lo || x > hi {
                return Err(Error::Domain { index, value: x, lo, hi });
            }
        }
        Ok(())
    }
}

/// A time-dependent energy `E(t, u)` with a subdifferential selector `F`
/// and a conditioned time-derivative `P`.
///
/// Implementations are immutable; every query must be pure.
pub trait EnergyModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `E(t, u)` including the declared offset.
    fn value(&self, t: f64, u: &[f64]) -> Result<f64>;

    /// `F(t, u)`.
    fn subdifferential(&self, t: f64, u: &[f64]) -> Result<SubdiffSet>;

    /// `P(t, u, ξ)` for `ξ ∈ F(t, u)`.
    fn time_derivative(&self, t: f64, u: &[f64], xi: &[f64]) -> Result<f64>;

    /// Gradient of `E(t, ·)` where it is single-valued; drives the proximal
    /// gradient inner solver. `None` where no unique gradient exists.
    fn gradient(&self, _t: f64, _u: &[f64]) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }

    fn constants(&self) -> EnergyConstants;

    /// Constant added so the working minimum is at least one.
    fn offset(&self) -> f64 {
        0.0
    }

    fn domain_box(&self) -> Option<&DomainBox> {
        None
    }

    /// Kink locations of `E(t, ·)` for piecewise-C¹ models in 1D.
    fn kinks(&self, _t: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// `E(t, u)` with dimension, finiteness and domain checks.
pub fn energy_value(model: &dyn EnergyModel, t: f64, u: &[f64]) -> Result<f64> {
    check_dim(model.dim(), u.len())?;
    check_finite(u)?;
    if let Some(domain) = model.domain_box() {
        domain.check(u)?;
    }
    model.value(t, u)
}

/// `P(t, u, ξ)`; the model signals a foreign `ξ` with a conditioning error.
pub fn generalized_time_derivative(model: &dyn EnergyModel, t: f64, u: &[f64], xi: &[f64]) -> Result<f64> {
    check_dim(model.dim(), u.len())?;
    check_dim(model.dim(), xi.len())?;
    model.time_derivative(t, u, xi)
}

/// Default finite-difference step for [clarke_subdifferential_1d]; dyadic, so `u ± h` is exact for dyadic `u`.
pub const CLARKE_STEP: f64 = 1.0 / 8192.0;

/// Clarke subdifferential of a piecewise-C¹ energy in 1D.
///
/// At smooth points this is the singleton derivative (central differences,
/// Richardson-refined); at a declared kink it is the hull of the one-sided
/// derivatives.
pub fn clarke_subdifferential_1d(model: &dyn EnergyModel, t: f64, u: f64, h: f64) -> Result<(f64, f64)> {
    if model.dim() != 1 {
        return Err(Error::NotOneDimensional(model.dim()));
    }
    let e = |x: f64| model.value(t, &[x]).unwrap_or(f64::NAN);
    let near: Vec<f64> = model.kinks(t).into_iter().filter(|k| (k - u).abs() < h).collect();
    if near.len() > 1 {
        return Err(Error::KinkResolution { u, h, count: near.len() });
    }
    let (lo, hi) = match near.first() {
        Some(&k) if (k - u).abs() <= 1e-12 * (1.0 + k.abs()) => {
            let right = one_sided_derivative(e, k, h, 1.0);
            let left = one_sided_derivative(e, k, h, -1.0);
            (left.min(right), left.max(right))
        }
        Some(&k) => {
            let d = central_derivative(e, u, 0.5 * (k - u).abs());
            (d, d)
        }
        None => {
            let d = central_derivative(e, u, h);
            (d, d)
        }
    };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NonFinite { index: 0 });
    }
    Ok((lo, hi))
}

/// `𝒢(u) = sup_t E(t, u)` over the provided sample times.
pub fn sup_energy(model: &dyn EnergyModel, u: &[f64], times: &[f64]) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for &t in times {
        sup = sup.max(model.value(t, u)?);
    }
    Ok(sup)
}
