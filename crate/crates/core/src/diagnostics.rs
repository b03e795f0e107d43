//! Residuals of a discrete trajectory: Fenchel–Young gaps, energy-identity
//! and chain-rule defects, the De Giorgi node-interval inequality, and
//! τ-refinement studies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{sup_energy, EnergyModel};
use crate::error::{Error, Result};
use crate::models::ExactSolution;
use crate::potentials::DissipationPotential;
use crate::scheme::{self, DiscreteTrajectory, SolverOptions, TimeGrid};
use crate::state::{distance, dot, StateVector};

/// Integrals entering the energy identity over `[s, t]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityTerms {
    pub s: f64,
    pub t: f64,
    /// `E(s) + ∫P − ∫[Ψ + Ψ*] − E(t)`; positive values are slack in the upper estimate.
    pub defect: f64,
    /// `Σ τ Ψ_{U_{n-1}}(v_n)`
    pub dissipation_integral: f64,
    /// `Σ τ Ψ*_{U_{n-1}}(−ξ_n)`
    pub conjugate_dissipation_integral: f64,
    /// `Σ τ P(t_n, U_n, ξ_n)`
    pub p_integral: f64,
    pub energy_start: f64,
    pub energy_end: f64,
}

fn node_of(traj: &DiscreteTrajectory, t: f64) -> Result<usize> {
    match traj.grid.node_index(t) {
        Some(n) if n <= traj.steps() => Ok(n),
        _ => Err(Error::OutOfRange { t, lo: 0.0, hi: traj.time(traj.steps()) }),
    }
}

struct StepTerms {
    dissipation: f64,
    conjugate: f64,
    p: f64,
}

fn step_terms(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    traj: &DiscreteTrajectory,
    n: usize,
) -> Result<StepTerms> {
    let tau = traj.grid.tau();
    let profile = psi.profile(Some(&traj.states[n - 1]))?;
    let v = traj.rate(n);
    let dissipation = tau * v.iter().map(|&s| profile.value(s)).sum::<f64>();
    let conjugate = tau * traj.multipliers[n].iter().map(|&x| profile.conjugate(-x)).sum::<Result<f64>>()?;
    let p = tau * model.time_derivative(traj.time(n), &traj.states[n], &traj.multipliers[n])?;
    Ok(StepTerms { dissipation, conjugate, p })
}

/// Signed energy-identity defect between the grid nodes `s ≤ t`, with
/// right-endpoint Riemann sums of the dissipation, its conjugate and `P`.
pub fn energy_identity_defect(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    traj: &DiscreteTrajectory,
    s: f64,
    t: f64,
) -> Result<IdentityTerms> {
    let (a, b) = (node_of(traj, s)?, node_of(traj, t)?);
    if a > b {
        return Err(Error::OutOfRange { t: s, lo: 0.0, hi: t });
    }
    let mut out = IdentityTerms {
        s,
        t,
        defect: 0.0,
        dissipation_integral: 0.0,
        conjugate_dissipation_integral: 0.0,
        p_integral: 0.0,
        energy_start: traj.energies[a],
        energy_end: traj.energies[b],
    };
    for n in a + 1..=b {
        let terms = step_terms(model, psi, traj, n)?;
        out.dissipation_integral += terms.dissipation;
        out.conjugate_dissipation_integral += terms.conjugate;
        out.p_integral += terms.p;
    }
    out.defect = out.energy_start + out.p_integral
        - out.dissipation_integral
        - out.conjugate_dissipation_integral
        - out.energy_end;
    Ok(out)
}

/// `Ψ(v_n) + Ψ*(−ξ_n) + ⟨ξ_n, v_n⟩` for `n = 1..=N`, recomputed from states and multipliers.
pub fn fenchel_young_profile(psi: &DissipationPotential, traj: &DiscreteTrajectory) -> Result<Vec<f64>> {
    (1..=traj.steps())
        .map(|n| {
            let profile = psi.profile(Some(&traj.states[n - 1]))?;
            let v = traj.rate(n);
            let xi = &traj.multipliers[n];
            let mut g = dot(xi, &v);
            for (&s, &x) in v.iter().zip(xi.iter()) {
                g += profile.value(s) + profile.conjugate(-x)?;
            }
            Ok(g)
        })
        .collect()
}

/// `[E(t_n, U_n) − E(t_{n-1}, U_{n-1})]/τ − ⟨ξ_n, v_n⟩ − P(t_n, U_n, ξ_n)` for `n = 1..=N`.
pub fn chain_rule_defect(model: &dyn EnergyModel, traj: &DiscreteTrajectory) -> Result<Vec<f64>> {
    let tau = traj.grid.tau();
    (1..=traj.steps())
        .map(|n| {
            let v = traj.rate(n);
            let p = model.time_derivative(traj.time(n), &traj.states[n], &traj.multipliers[n])?;
            Ok((traj.energies[n] - traj.energies[n - 1]) / tau - dot(&traj.multipliers[n], &v) - p)
        })
        .collect()
}

/// Default chain-rule constant `10 (1 + C1·sup_t E(t, u0))`.
pub fn default_chain_constant(model: &dyn EnergyModel, traj: &DiscreteTrajectory) -> Result<f64> {
    let times = traj.grid.nodes();
    let g = sup_energy(model, &traj.states[0], &times)?;
    Ok(10.0 * (1.0 + model.constants().c1 * g))
}

/// Default quadrature budget `1e-6 (1 + E(0, u0))`.
pub fn default_quadrature_budget(traj: &DiscreteTrajectory) -> f64 {
    1e-6 * (1.0 + traj.energies[0].abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions {
    /// Solver settings for the De Giorgi sub-samples and the quadrature budget.
    pub solver: SolverOptions,
    pub gap_tolerance: f64,
    /// Tolerance of the per-step minimality witness.
    pub minimality_tolerance: f64,
    pub node_interval: bool,
    pub chain_rule: bool,
    /// `None` selects [default_chain_constant].
    pub c_chain: Option<f64>,
    /// Fraction of steps that must meet the chain-rule threshold.
    pub chain_pass_fraction: f64,
    /// Extra `[s, t]` windows for the energy identity.
    pub windows: Vec<(f64, f64)>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            gap_tolerance: 1e-8,
            minimality_tolerance: 1e-12,
            node_interval: true,
            chain_rule: true,
            c_chain: None,
            chain_pass_fraction: 0.99,
            windows: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub n: usize,
    pub t: f64,
    pub fenchel_young_gap: f64,
    /// `E(t_n, U_{n-1}) − τΨ(v_n) − E(t_n, U_n)`
    pub minimality_slack: f64,
    /// Worst node-interval inequality defect over the sub-samples.
    pub step_inequality_defect: Option<f64>,
    pub chain_rule_defect: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalDiagnostics {
    pub energy_identity: IdentityTerms,
    pub windows: Vec<IdentityTerms>,
    pub max_gap: f64,
    pub min_minimality_slack: f64,
    pub max_step_inequality_defect: Option<f64>,
    /// Worst excess of the summed inequality between two nodes over the
    /// summed per-step budget; at most zero when it holds.
    pub global_estimate_defect: Option<f64>,
    pub quadrature_budget: f64,
    pub c_chain: Option<f64>,
    pub chain_rule_pass_fraction: Option<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub tau: f64,
    pub steps: usize,
    pub per_step: Vec<StepDiagnostics>,
    pub global: GlobalDiagnostics,
    pub refinement: Option<RefinementTable>,
    pub checks: Vec<CheckResult>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every enabled diagnostic on a trajectory.
pub fn diagnose(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    traj: &DiscreteTrajectory,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    if traj.is_empty() {
        return Err(Error::Format("empty trajectory".into()));
    }
    let steps = traj.steps();
    let gaps = fenchel_young_profile(psi, traj)?;
    let budget = opts.solver.quadrature_budget.unwrap_or_else(|| default_quadrature_budget(traj));
    let intervals = if opts.node_interval && steps > 0 {
        Some(scheme::node_interval_inequality(model, psi, traj, &opts.solver)?)
    } else {
        None
    };
    let (chain, c_chain) = if opts.chain_rule && steps > 0 {
        let c = match opts.c_chain {
            Some(c) => c,
            None => default_chain_constant(model, traj)?,
        };
        (Some(chain_rule_defect(model, traj)?), Some(c))
    } else {
        (None, None)
    };

    let per_step: Vec<StepDiagnostics> = (1..=steps)
        .map(|n| StepDiagnostics {
            n,
            t: traj.time(n),
            fenchel_young_gap: gaps[n - 1],
            minimality_slack: traj.decrements[n],
            step_inequality_defect: intervals.as_ref().map(|d| d[n - 1].worst),
            chain_rule_defect: chain.as_ref().map(|c| c[n - 1]),
        })
        .collect();

    let end = traj.time(steps);
    let energy_identity = energy_identity_defect(model, psi, traj, 0.0, end)?;
    let windows = opts
        .windows
        .iter()
        .map(|&(s, t)| energy_identity_defect(model, psi, traj, s, t))
        .collect::<Result<Vec<_>>>()?;

    let nan_max = |it: &mut dyn Iterator<Item = f64>| {
        it.fold(f64::NEG_INFINITY, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
    };
    let max_gap = if steps == 0 { 0.0 } else { nan_max(&mut gaps.iter().copied()) };
    let min_slack = if steps == 0 { 0.0 } else { -nan_max(&mut traj.decrements[1..].iter().map(|d| -d)) };
    let max_interval = intervals.as_ref().map(|d| nan_max(&mut d.iter().map(|x| x.worst)));
    let global_estimate = intervals.as_ref().map(|d| scheme::global_estimate_defect(d, budget));
    let tau = traj.grid.tau();
    let chain_fraction = match (&chain, c_chain) {
        (Some(c), Some(k)) => Some(c.iter().filter(|&&d| d >= -k * tau).count() as f64 / c.len().max(1) as f64),
        _ => None,
    };

    let mut checks = vec![
        CheckResult::at_most("fenchel_young_gap", max_gap, opts.gap_tolerance),
        CheckResult::at_least("minimality", min_slack, -opts.minimality_tolerance),
    ];
    if let Some(v) = max_interval {
        checks.push(CheckResult::at_most("node_interval_inequality", v, budget));
    }
    if let Some(v) = global_estimate {
        checks.push(CheckResult::at_most("discrete_energy_estimate", v, 0.0));
    }
    if let Some(f) = chain_fraction {
        checks.push(CheckResult::at_least("chain_rule", f, opts.chain_pass_fraction));
    }

    Ok(DiagnosticsReport {
        tau,
        steps,
        per_step,
        global: GlobalDiagnostics {
            energy_identity,
            windows,
            max_gap,
            min_minimality_slack: min_slack,
            max_step_inequality_defect: max_interval,
            global_estimate_defect: global_estimate,
            quadrature_budget: budget,
            c_chain,
            chain_rule_pass_fraction: chain_fraction,
            offset: model.offset(),
        },
        refinement: None,
        checks,
    })
}

/// One step size of a refinement study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementRow {
    pub tau: f64,
    pub steps: usize,
    /// Sup-distance of the linear interpolants of this row and the next finer row.
    pub sup_distance_next: Option<f64>,
    /// Sup-distance to the reference run.
    pub sup_distance_reference: Option<f64>,
    /// `max_n ‖U_n − u(t_n)‖` against the exact solution.
    pub exact_error: Option<f64>,
    pub energy_identity_defect: Option<f64>,
    /// `Σ τ [Ψ(v_n) + Ψ*(−ξ_n)]`
    pub dissipation_integral: Option<f64>,
    /// Difference of the dissipation integral to the next finer row.
    pub dissipation_difference: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    pub reference_tau: Option<f64>,
}

/// Samples used for sup-distances of linear interpolants.
pub const SUP_GRID_POINTS: usize = 1024;

fn linear_samples(traj: &DiscreteTrajectory, horizon: f64) -> Result<Vec<StateVector>> {
    let interp = traj.interpolants();
    (0..SUP_GRID_POINTS).map(|k| interp.linear(horizon * k as f64 / (SUP_GRID_POINTS - 1) as f64)).collect()
}

fn sup_distance(a: &[StateVector], b: &[StateVector]) -> f64 {
    a.iter().zip(b).map(|(x, y)| distance(x, y)).fold(0.0, f64::max)
}

fn check_ladder(ladder: &[f64], tau_o: Option<f64>) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::InvalidGrid("empty step ladder".into()));
    }
    for w in ladder.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidGrid(format!(
                "ladder must be strictly decreasing, found {} then {}",
                w[0], w[1]
            )));
        }
    }
    if let (Some(limit), Some(&first)) = (tau_o, ladder.first()) {
        if first >= limit {
            return Err(Error::InvalidGrid(format!("step {first} is not below the admissible bound {limit}")));
        }
    }
    Ok(())
}

/// Solves on each step of `ladder` (in parallel) and compares consecutive rows,
/// the exact solution when given, and otherwise an optional reference run at
/// `min(ladder)/16`. A failed solve annotates its row.
#[allow(clippy::too_many_arguments)]
pub fn refinement_study(
    model: &dyn EnergyModel,
    psi: &DissipationPotential,
    u0: &StateVector,
    horizon: f64,
    ladder: &[f64],
    opts: &SolverOptions,
    exact: Option<&ExactSolution>,
    reference: bool,
) -> Result<RefinementTable> {
    check_ladder(ladder, model.constants().tau_o)?;
    let reference_tau = if exact.is_none() && reference { ladder.last().map(|t| t / 16.0) } else { None };
    let mut taus = ladder.to_vec();
    if let Some(r) = reference_tau {
        taus.push(r);
    }
    let runs: Vec<std::result::Result<DiscreteTrajectory, String>> = taus
        .par_iter()
        .map(|&tau| {
            let grid = TimeGrid::new(horizon, tau, model.constants().tau_o).map_err(|e| e.to_string())?;
            scheme::solve(model, psi, u0, &grid, opts).map_err(|e| e.to_string())
        })
        .collect();
    let samples: Vec<Option<Vec<StateVector>>> =
        runs.par_iter().map(|r| r.as_ref().ok().and_then(|t| linear_samples(t, horizon).ok())).collect();
    let reference_samples = reference_tau.and_then(|_| samples.last().cloned().flatten());

    let mut rows = Vec::with_capacity(ladder.len());
    for (i, &tau) in ladder.iter().enumerate() {
        let mut row = RefinementRow {
            tau,
            steps: 0,
            sup_distance_next: None,
            sup_distance_reference: None,
            exact_error: None,
            energy_identity_defect: None,
            dissipation_integral: None,
            dissipation_difference: None,
            error: None,
        };
        match &runs[i] {
            Err(e) => row.error = Some(e.clone()),
            Ok(traj) => {
                row.steps = traj.steps();
                match energy_identity_defect(model, psi, traj, 0.0, traj.time(traj.steps())) {
                    Ok(terms) => {
                        row.energy_identity_defect = Some(terms.defect);
                        row.dissipation_integral =
                            Some(terms.dissipation_integral + terms.conjugate_dissipation_integral);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                if let Some(exact) = exact {
                    row.exact_error = Some(
                        (0..=traj.steps()).map(|n| distance(&traj.states[n], &exact(traj.time(n)))).fold(0.0, f64::max),
                    );
                }
                if let (Some(a), Some(r)) = (&samples[i], &reference_samples) {
                    row.sup_distance_reference = Some(sup_distance(a, r));
                }
                if i + 1 < ladder.len() {
                    if let (Some(a), Some(b)) = (&samples[i], &samples[i + 1]) {
                        row.sup_distance_next = Some(sup_distance(a, b));
                    }
                }
            }
        }
        rows.push(row);
    }
    for i in 0..rows.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (rows[i].dissipation_integral, rows[i + 1].dissipation_integral) {
            rows[i].dissipation_difference = Some((a - b).abs());
        }
    }
    Ok(RefinementTable { rows, reference_tau })
}
