//! Incremental minimization, multiplier extraction and interpolants.

mod inner;
mod interpolants;

pub use inner::{InnerMethod, InnerStatus, StepOutcome};
pub use interpolants::Interpolants;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::potentials::{profile_gap, DissipationPotential};
use crate::state::{check_dim, check_finite, difference_quotient, StateVector};

use inner::StepProblem;

/// Uniform partition `t_n = n τ`, `n = 0..=N`, `N = ⌈T / τ⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    tau: f64,
    steps: usize,
}

impl TimeGrid {
    /// Rejects `τ ≤ 0`, `T ≤ 0` and `τ ≥ τ_o`.
    pub fn new(horizon: f64, tau: f64, tau_o: Option<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {tau}")));
        }
        if let Some(limit) = tau_o {
            if tau >= limit {
                return Err(Error::InvalidGrid(format!("step {tau} is not below the admissible bound {limit}")));
            }
        }
        let ratio = horizon / tau;
        let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) { ratio.round() } else { ratio.ceil() };
        if steps > 1e8 {
            return Err(Error::InvalidGrid(format!("{steps} steps is too many")));
        }
        Ok(Self { horizon, tau, steps: steps.max(1.0) as usize })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `N`
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.node(n)).collect()
    }

    /// Index of `t` if it is a node, up to `1e-9 τ`.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let k = t / self.tau;
        let n = k.round();
        if (k - n).abs() <= 1e-9 && n >= 0.0 && n <= self.steps as f64 {
            Some(n as usize)
        } else {
            None
        }
    }

    /// The `n ≥ 1` with `t ∈ (t_{n-1}, t_n]`; `t = 0` maps to `1`.
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        let end = self.node(self.steps);
        if !(0.0..=end).contains(&t) && self.node_index(t).is_none() {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: end });
        }
        if let Some(n) = self.node_index(t) {
            return Ok(n.max(1));
        }
        Ok(((t / self.tau).ceil() as usize).clamp(1, self.steps))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative proximal-gradient residual tolerance, scaled by `1 + |J|`.
    pub eps_inner: f64,
    /// Largest accepted Fenchel–Young gap per step.
    pub gap_tolerance: f64,
    /// Grid size of the one-dimensional scan.
    pub scan_points: usize,
    /// Number of starts of the multi-start solver (d ≥ 2).
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Sub-samples per step for the node-interval inequality.
    pub quadrature_points: usize,
    /// Tolerance of the node-interval inequality; `None` = `1e-6 (1 + E(0, u0))`.
    pub quadrature_budget: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps_inner: 1e-10,
            gap_tolerance: 1e-8,
            scan_points: 513,
            starts: 8,
            seed: 0x5eed,
            max_iterations: 20_000,
            quadrature_points: 8,
            quadrature_budget: None,
        }
    }
}

/// Nodes, states, multipliers and per-step records of one run of the scheme.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteTrajectory {
    pub grid: TimeGrid,
    /// `U_0 ..= U_N`
    pub states: Vec<StateVector>,
    /// `ξ_0 ..= ξ_N`; `ξ_0` is the least-norm element of `F(0, U_0)`.
    pub multipliers: Vec<StateVector>,
    /// Fenchel–Young gap of `-ξ_n` against `v_n`; `gaps[0] = 0`.
    pub gaps: Vec<f64>,
    /// `E(t_n, U_n)`
    pub energies: Vec<f64>,
    /// `E(t_n, U_{n-1}) - τΨ(v_n) - E(t_n, U_n)`; `decrements[0] = 0`.
    pub decrements: Vec<f64>,
    pub statuses: Vec<InnerStatus>,
}

impl DiscreteTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn time(&self, n: usize) -> f64 {
        self.grid.node(n)
    }

    /// `v_n = (U_n - U_{n-1}) / τ` for `n ≥ 1`.
    pub fn rate(&self, n: usize) -> Vec<f64> {
        difference_quotient(&self.states[n], &self.states[n - 1], self.grid.tau())
    }

    pub fn interpolants(&self) -> Interpolants<'_> {
        Interpolants::new(self)
    }

    /// Rebuilds a trajectory from stored states and multipliers, recomputing
    /// gaps, energies and decrements.
    pub fn rebuild(
        model: &dyn EnergyModel,
        psi: &DissipationPotential,
        grid: TimeGrid,
        states: Vec<StateVector>,
        multipliers: Vec<StateVector>,
    ) -> Result<Self> {
        if states.is_empty() || states.len() != multipliers.len() || states.len() > grid.steps() + 1 {
            return Err(Error::Format(format!(
                "{} states and {} multipliers for a grid of {} steps",
                states.len(),
                multipliers.len(),
                grid.steps()
            )));
        }
        let dim = model.dim();
        for (s, m) in states.iter().zip(&multipliers) {
            check_dim(dim, s.dim())?;
            check_dim(dim, m.dim())?;
        }
        let tau = grid.tau();
        let mut traj = DiscreteTrajectory {
            grid,
            gaps: vec![0.0],
            energies: vec![model.value(0.0, &states[0])?],
            decrements: vec![0.0],
            statuses: vec![InnerStatus::imported()],
            states: Vec::new(),
            multipliers: Vec::new(),
        };
        for n in 1..states.len() {
            let t = grid.node(n);
            let prev = &states[n - 1];
            let profile = psi.profile(Some(prev))?;
            let v = difference_quotient(&states[n], prev, tau);
            let neg: Vec<f64> = multipliers[n].iter().map(|x| -x).collect();
            traj.gaps.push(profile_gap(&profile, &v, &neg)?);
            let e = model.value(t, &states[n])?;
            let diss: f64 = v.iter().map(|&s| tau * profile.value(s)).sum();
            traj.decrements.push(model.value(t, prev)? - diss - e);
            traj.energies.push(e);
            traj.statuses.push(InnerStatus::imported());
        }
        traj.states = states;
        traj.multipliers = multipliers;
        Ok(traj)
    }
}

/// A run that stopped at `step`; `partial` holds the steps completed before it.
#[derive(Clone, Debug)]
pub struct SolveFailure {
    pub step: usize,
    pub error: Error,
    pub partial: Box<DiscreteTrajectory>,
}

impl fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "solve failed at step {}: {}", self.step, self.error)
    }
}

impl std::error::Error for SolveFailure {}

fn problem<'a>(
    model: &'a dyn EnergyModel,
    psi: &DissipationPotential,
    prev: &'a [f64],
    t: f64,
    tau: f64,
) -> Result<StepProblem<'a>> {
    check_dim(model.dim(), prev.len())?;
    check_finite(prev)?;
    Ok(StepProblem { model, profile: psi.profile(Some(prev))?, prev, t, tau })
}

/// One step of the scheme: a global minimizer of
/// `U ↦ τΨ_{u_prev}((U - u_prev)/τ) + E(t_n, U)` and its gap-minimal multiplier.
pub fn incremental_step(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    u_prev: &[f64],
    t_n: f64,
    tau: f64,
    opts: &SolverOptions,
) -> Result<StepOutcome> {
    if !(tau > 0.0) {
        return Err(Error::InvalidGrid(format!("step must be positive, got {tau}")));
    }
    if let Some(limit) = model.constants().tau_o {
        if tau >= limit {
            return Err(Error::InvalidGrid(format!("step {tau} is not below the admissible bound {limit}")));
        }
    }
    problem(model, psi, u_prev, t_n, tau)?.solve(opts, 0)
}

/// Runs the scheme over `grid` from `u0`.
pub fn solve(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    u0: &StateVector,
    grid: &TimeGrid,
    opts: &SolverOptions,
) -> std::result::Result<DiscreteTrajectory, SolveFailure> {
    let empty = |error: Error| SolveFailure {
        step: 0,
        error,
        partial: Box::new(DiscreteTrajectory {
            grid: *grid,
            states: Vec::new(),
            multipliers: Vec::new(),
            gaps: Vec::new(),
            energies: Vec::new(),
            decrements: Vec::new(),
            statuses: Vec::new(),
        }),
    };
    if let Err(e) = check_dim(model.dim(), u0.dim()) {
        return Err(empty(e));
    }
    if let Some(limit) = model.constants().tau_o {
        if grid.tau() >= limit {
            return Err(empty(Error::InvalidGrid(format!(
                "step {} is not below the admissible bound {limit}",
                grid.tau()
            ))));
        }
    }
    let e0 = match crate::energy::energy_value(model, 0.0, u0) {
        Ok(e) => e,
        Err(e) => return Err(empty(e)),
    };
    let xi0 = match model.subdifferential(0.0, u0).map(|s| s.min_norm_element()) {
        Ok(Some(xi)) => xi,
        Ok(None) => return Err(empty(Error::SubdifferentialUnavailable { t: 0.0 })),
        Err(e) => return Err(empty(e)),
    };
    let n_steps = grid.steps();
    let mut traj = DiscreteTrajectory {
        grid: *grid,
        states: Vec::with_capacity(n_steps + 1),
        multipliers: Vec::with_capacity(n_steps + 1),
        gaps: Vec::with_capacity(n_steps + 1),
        energies: Vec::with_capacity(n_steps + 1),
        decrements: Vec::with_capacity(n_steps + 1),
        statuses: Vec::with_capacity(n_steps + 1),
    };
    traj.states.push(u0.clone());
    traj.multipliers.push(xi0);
    traj.gaps.push(0.0);
    traj.energies.push(e0);
    traj.decrements.push(0.0);
    traj.statuses.push(InnerStatus {
        method: InnerMethod::Scan,
        iterations: 0,
        residual: None,
        starts: 0,
        radius: 0.0,
    });
    if model.dim() > 1 {
        traj.statuses[0].method = InnerMethod::MultiStart;
    }
    for n in 1..=n_steps {
        let outcome = {
            let prev = &traj.states[n - 1];
            problem(model, psi, prev, grid.node(n), grid.tau()).and_then(|p| p.solve(opts, n))
        };
        match outcome {
            Ok(out) => {
                traj.states.push(out.state);
                traj.multipliers.push(out.multiplier);
                traj.gaps.push(out.gap);
                traj.energies.push(out.energy);
                traj.decrements.push(out.decrement);
                traj.statuses.push(out.status);
            }
            Err(error) => return Err(SolveFailure { step: n, error, partial: Box::new(traj) }),
        }
    }
    Ok(traj)
}

/// A De Giorgi interpolant sample at `t = t_{n-1} + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeGiorgiSample {
    pub n: usize,
    pub r: f64,
    pub state: StateVector,
    pub multiplier: StateVector,
    pub gap: f64,
}

/// Minimizer of `U ↦ rΨ_{U_{n-1}}((U - U_{n-1})/r) + E(t, U)` for
/// `t = t_{n-1} + r ∈ (t_{n-1}, t_n]`; at nodes this is `(U_n, ξ_n)`.
pub fn de_giorgi_interpolant(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    traj: &DiscreteTrajectory,
    t: f64,
    opts: &SolverOptions,
) -> Result<DeGiorgiSample> {
    let grid = &traj.grid;
    let end = grid.node(traj.steps());
    if !(t > 0.0) || t > end + 1e-9 * grid.tau() {
        return Err(Error::OutOfRange { t, lo: 0.0, hi: end });
    }
    let n = grid.interval_of(t)?;
    if n > traj.steps() {
        return Err(Error::OutOfRange { t, lo: 0.0, hi: end });
    }
    let t0 = grid.node(n - 1);
    if grid.node_index(t) == Some(n) {
        return Ok(DeGiorgiSample {
            n,
            r: grid.tau(),
            state: traj.states[n].clone(),
            multiplier: traj.multipliers[n].clone(),
            gap: traj.gaps[n],
        });
    }
    let r = t - t0;
    let out = problem(model, psi, &traj.states[n - 1], t, r)?.solve(opts, n)?;
    Ok(DeGiorgiSample { n, r, state: out.state, multiplier: out.multiplier, gap: out.gap })
}

/// Residual of the node-interval inequality on one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalDefect {
    pub n: usize,
    /// Largest `LHS - RHS` over the sub-samples; at most the budget when the inequality holds.
    pub worst: f64,
    /// `LHS - RHS` at `r = τ`.
    pub at_node: f64,
}

/// For each step and sub-samples `r_k = kτ/m`, `k = 1..=m`,
///
/// ```text
/// r_k Ψ((Ũ_k - U_{n-1})/r_k) + Σ_{j≤k} (τ/m) Ψ*(-ξ̃_j) + E(t_{n-1} + r_k, Ũ_k)
///     - E(t_{n-1}, U_{n-1}) - Σ_{j≤k} (τ/m) P(t_{n-1} + r_j, Ũ_j, ξ̃_j)
/// ```
///
/// with `(Ũ, ξ̃)` the De Giorgi interpolant. Steps are evaluated in parallel.
pub fn node_interval_inequality(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    traj: &DiscreteTrajectory,
    opts: &SolverOptions,
) -> Result<Vec<IntervalDefect>> {
    let m = opts.quadrature_points.max(1);
    let tau = traj.grid.tau();
    let h = tau / m as f64;
    (1..=traj.steps())
        .into_par_iter()
        .map(|n| {
            let prev = &traj.states[n - 1];
            let t0 = traj.grid.node(n - 1);
            let e0 = model.value(t0, prev)?;
            let profile = psi.profile(Some(prev))?;
            let mut q = 0.0;
            let mut p_sum = 0.0;
            let mut worst = f64::NEG_INFINITY;
            let mut at_node = 0.0;
            for k in 1..=m {
                let (r, t) = if k == m { (tau, traj.grid.node(n)) } else { (k as f64 * h, t0 + k as f64 * h) };
                let (state, xi) = if k == m {
                    (traj.states[n].clone(), traj.multipliers[n].clone())
                } else {
                    let out = problem(model, psi, prev, t, r)?.solve(opts, n)?;
                    (out.state, out.multiplier)
                };
                let v = difference_quotient(&state, prev, r);
                let diss: f64 = v.iter().map(|&s| r * profile.value(s)).sum();
                let conj: f64 = xi.iter().map(|&x| profile.conjugate(-x)).sum::<Result<f64>>()?;
                q += h * conj;
                p_sum += h * model.time_derivative(t, &state, &xi)?;
                let defect = diss + q + model.value(t, &state)? - e0 - p_sum;
                worst = worst.max(defect);
                if k == m {
                    at_node = defect;
                }
            }
            Ok(IntervalDefect { n, worst, at_node })
        })
        .collect()
}

/// `max_{j<k} Σ_{j<n≤k} (at_node_n − budget)`: the worst excess of the summed
/// inequality between two nodes over the summed per-step budget.
pub fn global_estimate_defect(defects: &[IntervalDefect], budget: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut run = 0.0f64;
    for d in defects {
        run = d.at_node - budget + run.max(0.0);
        best = best.max(run);
    }
    best
}

#[cfg(test)]
mod tests;
