use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::energy::{EnergyConstants, EnergyModel, SubdiffSet};
use crate::error::{Error, Result};
use crate::numerics::golden_min;
use crate::potentials::DissipationPotential;
use crate::state::{check_dim, StateVector};

use super::{ModelSpec, SubdiffMode};

/// Discrete Allen–Cahn energy on `N` cells of `[0, 1]` with zero Dirichlet ends:
///
/// ```text
/// E(t, u) = Σ_{i=0}^{N-1} (1/q)|D⁺u_i|^q Δx + Σ_{i=1}^{N-1} W(u_i) Δx − ℓ(t) Σ u_i Δx + offset
/// ```
///
/// with `u_0 = u_N = 0`, `W(u) = (u² − 1)²/4` and `ℓ(t) = load·sin(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AllenCahn {
    cells: usize,
    q: f64,
    load: f64,
    offset: f64,
    constants: EnergyConstants,
}

fn well(u: f64) -> f64 {
    let s = u * u - 1.0;
    0.25 * s * s
}

fn well_prime(u: f64) -> f64 {
    u * (u * u - 1.0)
}

impl AllenCahn {
    pub fn new(cells: usize, q: f64, load: f64, offset: f64) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidParameter { name: "N".into(), value: cells as f64, bound: ">= 2".into() });
        }
        if !(load.abs() < 1.0) {
            return Err(Error::InvalidParameter { name: "load".into(), value: load, bound: "|load| < 1".into() });
        }
        let a = load.abs();
        let interior = (cells - 1) as f64 / cells as f64;
        // E ≥ offset + Σ (W(u) − |ℓ||u|) Δx
        let (_, m) = golden_min(|u| well(u) - a * u, 0.0, 3.0, 1e-12, 400);
        let c0 = offset + interior * m.min(0.0);
        if !(c0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "offset".into(),
                value: offset,
                bound: format!("> {} so that the energy stays positive", -interior * m.min(0.0)),
            });
        }
        // |u| ≤ W(u) + c  gives  Σ|u|Δx ≤ (E + c)/(1 − |load|)
        let (_, neg_c) = golden_min(|u| well(u) - u, 0.0, 3.0, 1e-12, 400);
        let c = -neg_c;
        let c1 = a * (1.0 + c / c0) / (1.0 - a);
        let constants = EnergyConstants { c0, c1, c2: c1, tau_o: Some(1.0) };
        Ok(Self { cells, q, load, offset, constants })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// Interior nodes `x_i = iΔx`, `i = 1..N-1`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..self.cells).map(|i| i as f64 * self.dx()).collect()
    }

    fn load_at(&self, t: f64) -> f64 {
        self.load * t.sin()
    }

    fn padded(u: &[f64]) -> Vec<f64> {
        let mut full = Vec::with_capacity(u.len() + 2);
        full.push(0.0);
        full.extend_from_slice(u);
        full.push(0.0);
        full
    }

    fn flux(&self, d: f64) -> f64 {
        if self.q == 2.0 {
            d
        } else {
            d.abs().powf(self.q - 1.0) * d.signum()
        }
    }

    fn gradient_energy(&self, d: f64) -> f64 {
        if self.q == 2.0 {
            0.5 * d * d
        } else {
            d.abs().powf(self.q) / self.q
        }
    }
}

impl EnergyModel for AllenCahn {
    fn dim(&self) -> usize {
        self.cells - 1
    }

    fn value(&self, t: f64, u: &[f64]) -> Result<f64> {
        check_dim(self.dim(), u.len())?;
        let dx = self.dx();
        let full = Self::padded(u);
        let mut e = 0.0;
        for w in full.windows(2) {
            e += self.gradient_energy((w[1] - w[0]) / dx) * dx;
        }
        let ell = self.load_at(t);
        for &x in u {
            e += (well(x) - ell * x) * dx;
        }
        Ok(e + self.offset)
    }

    fn subdifferential(&self, t: f64, u: &[f64]) -> Result<SubdiffSet> {
        let g = self.gradient(t, u)?.expect("smooth energy");
        Ok(SubdiffSet::Points(vec![StateVector::new(g)?]))
    }

    fn time_derivative(&self, t: f64, u: &[f64], _xi: &[f64]) -> Result<f64> {
        check_dim(self.dim(), u.len())?;
        let rate = self.load * t.cos();
        Ok(-rate * u.iter().sum::<f64>() * self.dx())
    }

    fn gradient(&self, t: f64, u: &[f64]) -> Result<Option<Vec<f64>>> {
        check_dim(self.dim(), u.len())?;
        let dx = self.dx();
        let full = Self::padded(u);
        let fluxes: Vec<f64> = full.windows(2).map(|w| self.flux((w[1] - w[0]) / dx)).collect();
        let ell = self.load_at(t);
        Ok(Some(u.iter().enumerate().map(|(i, &x)| fluxes[i] - fluxes[i + 1] + (well_prime(x) - ell) * dx).collect()))
    }

    fn constants(&self) -> EnergyConstants {
        self.constants
    }

    fn offset(&self) -> f64 {
        self.offset
    }
}

/// `ρ Σ|v_i| Δx + (1/p) Σ|v_i|^p Δx`.
pub(super) fn dissipation(dx: f64, rho: f64, p: f64) -> Result<DissipationPotential> {
    if p == 2.0 {
        DissipationPotential::one_hom_plus_quad(rho * dx, dx)
    } else {
        DissipationPotential::weighted_sum(vec![
            (1.0, DissipationPotential::one_hom_plus_quad(rho * dx, 0.0)?),
            (1.0, DissipationPotential::p_norm(dx, p)?),
        ])
    }
}

pub(super) fn build(values: &BTreeMap<String, f64>) -> Result<ModelSpec> {
    let cells = values["N"] as usize;
    let energy = AllenCahn::new(cells, values["q"], values["load"], values["offset"])?;
    let amplitude = values["u0_amplitude"];
    let u0: Vec<f64> = energy.nodes().iter().map(|x| amplitude * (PI * x).sin()).collect();
    Ok(ModelSpec {
        name: String::new(),
        dim: cells - 1,
        dissipation: dissipation(energy.dx(), values["rho"], values["p"])?,
        energy: Arc::new(energy),
        exact_solution: None,
        parameters: BTreeMap::new(),
        default_u0: StateVector::new(u0)?,
        mode: SubdiffMode::Analytic,
        frozen_time: values["load"] == 0.0,
    })
}
