use std::sync::Arc;

use crate::error::Result;
use crate::state::{check_dim, StateVector};

use super::{DomainBox, EnergyConstants, EnergyModel, SubdiffSet};

type ValueFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Energy assembled from closures: `E`, `D_u E`, and `∂_t E` (which is also `P`).
#[derive(Clone)]
pub struct SmoothEnergy {
    dim: usize,
    value: ValueFn,
    gradient: GradFn,
    time_derivative: ValueFn,
    constants: EnergyConstants,
    offset: f64,
    domain: Option<DomainBox>,
}

impl SmoothEnergy {
    pub fn new<V, G>(dim: usize, constants: EnergyConstants, value: V, gradient: G) -> Self
    where
        V: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            time_derivative: Arc::new(|_, _| 0.0),
            constants,
            offset: 0.0,
            domain: None,
        }
    }

    pub fn with_time_derivative<P>(mut self, dt: P) -> Self
    where
        P: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.time_derivative = Arc::new(dt);
        self
    }

    /// Adds `offset` to the energy and records it.
    pub fn with_offset(mut self, offset: f64) -> Self {
        let value = self.value.clone();
        let previous = self.offset;
        self.value = Arc::new(move |t, u| value(t, u) + offset);
        self.offset = previous + offset;
        self
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }
}

impl EnergyModel for SmoothEnergy {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, t: f64, u: &[f64]) -> Result<f64> {
        check_dim(self.dim, u.len())?;
        Ok((self.value)(t, u))
    }

    fn subdifferential(&self, t: f64, u: &[f64]) -> Result<SubdiffSet> {
        check_dim(self.dim, u.len())?;
        Ok(SubdiffSet::Points(vec![StateVector::new((self.gradient)(t, u))?]))
    }

    fn time_derivative(&self, t: f64, u: &[f64], _xi: &[f64]) -> Result<f64> {
        check_dim(self.dim, u.len())?;
        Ok((self.time_derivative)(t, u))
    }

    fn gradient(&self, t: f64, u: &[f64]) -> Result<Option<Vec<f64>>> {
        check_dim(self.dim, u.len())?;
        Ok(Some((self.gradient)(t, u)))
    }

    fn constants(&self) -> EnergyConstants {
        self.constants
    }

    fn offset(&self) -> f64 {
        self.offset
    }

    fn domain_box(&self) -> Option<&DomainBox> {
        self.domain.as_ref()
    }
}
