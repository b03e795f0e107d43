use crate::error::{Error, Result};
use crate::state::{difference_quotient, StateVector};

use super::DiscreteTrajectory;

/// Piecewise interpolants of a trajectory on `[0, T]`.
pub struct Interpolants<'a> {
    traj: &'a DiscreteTrajectory,
}

impl<'a> Interpolants<'a> {
    pub(crate) fn new(traj: &'a DiscreteTrajectory) -> Self {
        Self { traj }
    }

    fn check(&self, t: f64) -> Result<usize> {
        let grid = &self.traj.grid;
        let hi = if self.traj.steps() < grid.steps() { grid.node(self.traj.steps()) } else { grid.horizon() };
        if !(t >= 0.0 && t <= hi + 1e-12 * grid.tau()) || self.traj.steps() == 0 {
            return Err(Error::OutOfRange { t, lo: 0.0, hi });
        }
        grid.interval_of(t.min(grid.node(self.traj.steps())))
    }

    /// `Ū(t) = U_n` on `(t_{n-1}, t_n]`, `Ū(0) = U_0`.
    pub fn left_continuous(&self, t: f64) -> Result<StateVector> {
        let n = self.check(t)?;
        if t == 0.0 {
            return Ok(self.traj.states[0].clone());
        }
        Ok(self.traj.states[n].clone())
    }

    /// `U̲(t) = U_{n-1}` on `[t_{n-1}, t_n)`, `U̲(t_N) = U_N`.
    pub fn right_continuous(&self, t: f64) -> Result<StateVector> {
        let n = self.check(t)?;
        match self.traj.grid.node_index(t) {
            Some(k) => Ok(self.traj.states[k.min(self.traj.steps())].clone()),
            None => Ok(self.traj.states[n - 1].clone()),
        }
    }

    /// `Û(t)`, affine between nodes.
    pub fn linear(&self, t: f64) -> Result<StateVector> {
        let n = self.check(t)?;
        if let Some(k) = self.traj.grid.node_index(t) {
            return Ok(self.traj.states[k.min(self.traj.steps())].clone());
        }
        let t0 = self.traj.grid.node(n - 1);
        let lambda = (t - t0) / self.traj.grid.tau();
        let (a, b) = (&self.traj.states[n - 1], &self.traj.states[n]);
        Ok(StateVector::from_raw(a.iter().zip(b.iter()).map(|(x, y)| x + lambda * (y - x)).collect()))
    }

    /// `Û'(t) = (U_n - U_{n-1})/τ` on `(t_{n-1}, t_n]`.
    pub fn derivative(&self, t: f64) -> Result<StateVector> {
        let n = self.check(t)?;
        let (a, b) = (&self.traj.states[n - 1], &self.traj.states[n]);
        Ok(StateVector::from_raw(difference_quotient(b, a, self.traj.grid.tau())))
    }

    /// `sup_t ‖Ū(t) - U̲(t)‖ = max_n ‖U_n - U_{n-1}‖`.
    pub fn max_jump(&self) -> f64 {
        self.traj.states.windows(2).map(|w| crate::state::distance(&w[0], &w[1])).fold(0.0, f64::max)
    }
}
