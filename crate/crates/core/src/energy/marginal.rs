use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, golden_min};
use crate::state::{check_dim, distance, lex_cmp, StateVector};

use super::{EnergyConstants, EnergyModel, SubdiffSet};

/// Admissible set of the inner variable.
#[derive(Clone, Debug, PartialEq)]
pub enum EtaSet {
    Finite(Vec<f64>),
    /// Compact interval, discretized by a uniform grid and golden-section refinement.
    Interval {
        lo: f64,
        hi: f64,
    },
}

/// Inner functional `I(t, u, η)` of a marginal energy `E(t, u) = min_η I(t, u, η)`.
pub trait InnerFunctional: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: f64, u: &[f64], eta: f64) -> f64;
    /// `D_u I(t, u, η)`.
    fn grad_u(&self, t: f64, u: &[f64], eta: f64) -> Vec<f64>;
    /// `∂_t I(t, u, η)`.
    fn d_t(&self, t: f64, u: &[f64], eta: f64) -> f64;
    /// `∂_η I`, if available; used to polish interval minimizers.
    fn d_eta(&self, _t: f64, _u: &[f64], _eta: f64) -> Option<f64> {
        None
    }
    fn eta_set(&self, t: f64, u: &[f64]) -> EtaSet;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimizer {
    pub eta: f64,
    /// `I(t, u, η)`, without the energy offset.
    pub value: f64,
}

/// `E(t, u) = offset + min_η I(t, u, η)` with `F` the marginal
/// subdifferential `{D_u I(t, u, η) : η ∈ M(t, u)}`.
pub struct MarginalEnergy<I> {
    inner: I,
    constants: EnergyConstants,
    offset: f64,
    /// δ_M = slack_rel · (1 + |min I|)
    slack_rel: f64,
    grid_points: usize,
    /// δ_ξ
    match_tol: f64,
}

const CLUSTER_TOL: f64 = 1e-7;

impl<I: InnerFunctional> MarginalEnergy<I> {
    pub fn new(inner: I, constants: EnergyConstants, offset: f64) -> Self {
        Self { inner, constants, offset, slack_rel: 1e-9, grid_points: 129, match_tol: 1e-8 }
    }

    pub fn with_slack(mut self, slack_rel: f64) -> Self {
        self.slack_rel = slack_rel;
        self
    }

    pub fn inner(&self) -> &I {
        &self.inner
    }

    fn candidates(&self, t: f64, u: &[f64]) -> Result<Vec<Minimizer>> {
        let f = |eta: f64| self.inner.value(t, u, eta);
        let mut out = Vec::new();
        match self.inner.eta_set(t, u) {
            EtaSet::Finite(etas) => {
                for eta in etas {
                    out.push(Minimizer { eta, value: f(eta) });
                }
            }
            EtaSet::Interval { lo, hi } => {
                let n = self.grid_points;
                let h = (hi - lo) / (n - 1) as f64;
                let grid: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
                let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
                for i in 0..n {
                    let left = if i > 0 { values[i - 1] } else { f64::INFINITY };
                    let right = if i + 1 < n { values[i + 1] } else { f64::INFINITY };
                    if !(values[i] <= left && values[i] <= right) {
                        continue;
                    }
                    let a = grid[i.saturating_sub(1)];
                    let b = grid[(i + 1).min(n - 1)];
                    let (mut eta, mut value) = golden_min(f, a, b, 1e-10 * (1.0 + a.abs().max(b.abs())), 300);
                    if let Some(polished) = self.polish(t, u, eta, a, b) {
                        let pv = f(polished);
                        if pv <= value {
                            eta = polished;
                            value = pv;
                        }
                    }
                    if values[i] < value {
                        eta = grid[i];
                        value = values[i];
                    }
                    if !value.is_finite() {
                        return Err(Error::Refinement { lo: a, hi: b, reason: "non-finite inner value".into() });
                    }
                    out.push(Minimizer { eta, value });
                }
            }
        }
        if out.iter().any(|m| !m.value.is_finite()) {
            return Err(Error::Refinement { lo: f64::NAN, hi: f64::NAN, reason: "non-finite inner value".into() });
        }
        Ok(out)
    }

    /// Bisection on `∂_η I` inside the golden bracket, when the derivative changes sign there.
    fn polish(&self, t: f64, u: &[f64], eta: f64, a: f64, b: f64) -> Option<f64> {
        let d = |x: f64| self.inner.d_eta(t, u, x);
        let width = 1e-6 * (1.0 + eta.abs());
        let lo = (eta - width).max(a);
        let hi = (eta + width).min(b);
        let (dl, dh) = (d(lo)?, d(hi)?);
        if dl <= 0.0 && dh >= 0.0 {
            Some(bisect_increasing(|x| d(x).unwrap_or(0.0), lo, hi))
        } else {
            None
        }
    }

    /// `M(t, u)`: all minimizers within slack `δ_M = slack_rel·(1 + |min I|)`.
    pub fn argmin_set(&self, t: f64, u: &[f64]) -> Result<Vec<Minimizer>> {
        self.argmin_set_with_slack(t, u, None)
    }

    pub fn argmin_set_with_slack(&self, t: f64, u: &[f64], slack: Option<f64>) -> Result<Vec<Minimizer>> {
        check_dim(self.inner.dim(), u.len())?;
        let mut cands = self.candidates(t, u)?;
        let min = cands.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return Err(Error::Refinement { lo: f64::NAN, hi: f64::NAN, reason: "empty argmin".into() });
        }
        let delta = slack.unwrap_or(self.slack_rel * (1.0 + min.abs()));
        cands.retain(|m| m.value <= min + delta);
        cands.sort_by(|a, b| a.eta.total_cmp(&b.eta));
        let mut clustered: Vec<Minimizer> = Vec::with_capacity(cands.len());
        for m in cands {
            match clustered.last_mut() {
                Some(last) if (m.eta - last.eta).abs() <= CLUSTER_TOL => {
                    if m.value < last.value {
                        *last = m;
                    }
                }
                _ => clustered.push(m),
            }
        }
        Ok(clustered)
    }

    /// `{D_u I(t, u, η) : η ∈ M(t, u)}`, deduplicated and sorted.
    pub fn marginal_subdifferential(&self, t: f64, u: &[f64]) -> Result<Vec<StateVector>> {
        let mut out: Vec<StateVector> = Vec::new();
        for m in self.argmin_set(t, u)? {
            let g = StateVector::new(self.inner.grad_u(t, u, m.eta))?;
            if !out.iter().any(|x| distance(x, &g) <= 1e-12) {
                out.push(g);
            }
        }
        out.sort_by(|a, b| lex_cmp(a, b));
        Ok(out)
    }

    /// `sup {∂_t I(t, u, η) : η ∈ M(t, u), ‖ξ − D_u I(t, u, η)‖ ≤ δ_ξ}`.
    pub fn conditioned_time_derivative(&self, t: f64, u: &[f64], xi: &[f64]) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        let mut closest = f64::INFINITY;
        for m in self.argmin_set(t, u)? {
            let dist = distance(&self.inner.grad_u(t, u, m.eta), xi);
            closest = closest.min(dist);
            if dist <= self.match_tol {
                best = best.max(self.inner.d_t(t, u, m.eta));
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::Conditioning { distance: closest })
        }
    }
}

impl<I: InnerFunctional> EnergyModel for MarginalEnergy<I> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, t: f64, u: &[f64]) -> Result<f64> {
        check_dim(self.inner.dim(), u.len())?;
        let min = self.candidates(t, u)?.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        Ok(min + self.offset)
    }

    fn subdifferential(&self, t: f64, u: &[f64]) -> Result<SubdiffSet> {
        Ok(SubdiffSet::Points(self.marginal_subdifferential(t, u)?))
    }

    fn time_derivative(&self, t: f64, u: &[f64], xi: &[f64]) -> Result<f64> {
        self.conditioned_time_derivative(t, u, xi)
    }

    fn gradient(&self, t: f64, u: &[f64]) -> Result<Option<Vec<f64>>> {
        let set = self.marginal_subdifferential(t, u)?;
        Ok(match set.as_slice() {
            [only] => Some(only.to_vec()),
            _ => None,
        })
    }

    fn constants(&self) -> EnergyConstants {
        self.constants
    }

    fn offset(&self) -> f64 {
        self.offset
    }
}
