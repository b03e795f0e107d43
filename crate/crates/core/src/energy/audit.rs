use serde::Serialize;

use crate::potentials::DissipationPotential;
use crate::state::StateVector;

use super::{sup_energy, EnergyModel, SubdiffSet};

/// Probe points `(t, s, u)` plus the times used to approximate `sup_t E(t, u)`.
#[derive(Clone, Debug)]
pub struct ProbePlan {
    pub probes: Vec<(f64, f64, StateVector)>,
    pub sup_times: Vec<f64>,
    pub coercivity: Option<CoercivityProbe>,
}

/// Rays along which `u ↦ E(t, u) + τΨ(u/τ)` must leave every sublevel.
#[derive(Clone, Debug)]
pub struct CoercivityProbe {
    pub psi: DissipationPotential,
    pub tau: f64,
    pub times: Vec<f64>,
    pub directions: Vec<StateVector>,
    pub radius: f64,
    pub levels: Vec<f64>,
}

impl ProbePlan {
    /// Tensor grid of probes for a 1D model on `[0, horizon] × [u_lo, u_hi]`.
    pub fn grid_1d(horizon: f64, u_lo: f64, u_hi: f64, n: usize) -> Self {
        let times: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        let mut probes = Vec::new();
        for i in 0..=n {
            let u = u_lo + (u_hi - u_lo) * i as f64 / n as f64;
            for (j, &t) in times.iter().enumerate() {
                let s = times[(j + 1) % times.len()];
                probes.push((t, s, StateVector::from_raw(vec![u])));
            }
        }
        Self { probes, sup_times: times, coercivity: None }
    }

    pub fn with_coercivity(mut self, probe: CoercivityProbe) -> Self {
        self.coercivity = Some(probe);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionRow {
    pub name: &'static str,
    pub passed: bool,
    /// Worst signed margin; negative values are violations.
    pub worst_margin: f64,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub rows: Vec<AssumptionRow>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, name: &str) -> Option<&AssumptionRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

const SLACK: f64 = 1e-12;

fn row(name: &'static str, worst_margin: f64, note: String) -> AssumptionRow {
    AssumptionRow { name, passed: worst_margin >= -SLACK, worst_margin, note }
}

fn subdiff_samples(set: &SubdiffSet) -> Vec<Vec<f64>> {
    match set {
        SubdiffSet::Points(p) => p.iter().map(|x| x.to_vec()).collect(),
        SubdiffSet::Interval { lo, hi } => vec![vec![*lo], vec![*hi]],
    }
}

/// Runtime audit of positivity, time-Lipschitz continuity, the exponential
/// energy bound, the bound on `P`, and (optionally) coercivity.
///
/// Failures are report rows, never errors; a query error counts as a failure.
pub fn audit_assumptions(model: &dyn EnergyModel, plan: &ProbePlan) -> AssumptionReport {
    let k = model.constants();
    let mut positivity = f64::INFINITY;
    let mut lipschitz = f64::INFINITY;
    let mut exponential = f64::INFINITY;
    let mut p_bound = f64::INFINITY;
    let mut notes = [String::new(), String::new(), String::new(), String::new()];

    for (t, s, u) in &plan.probes {
        let (et, es) = match (model.value(*t, u), model.value(*s, u)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                positivity = f64::NEG_INFINITY;
                notes[0] = e.to_string();
                continue;
            }
        };
        let margin = et.min(es) - k.c0;
        if margin < positivity {
            positivity = margin;
            notes[0] = format!("E = {:e} at t = {t}, u = {:?}", et.min(es), u.as_slice());
        }
        let dt = (t - s).abs();
        let margin = k.c1 * et * dt - (et - es).abs();
        if margin < lipschitz {
            lipschitz = margin;
            notes[1] = format!("t = {t}, s = {s}, u = {:?}", u.as_slice());
        }
        let margin = (k.c1 * dt).exp() * es - et;
        if margin < exponential {
            exponential = margin;
            notes[2] = format!("t = {t}, s = {s}, u = {:?}", u.as_slice());
        }
        let sup = match sup_energy(model, u, &plan.sup_times) {
            Ok(v) => v,
            Err(_) => continue,
        };
        match model.subdifferential(*t, u) {
            Ok(set) => {
                for xi in subdiff_samples(&set) {
                    match model.time_derivative(*t, u, &xi) {
                        Ok(p) => {
                            let margin = k.c2 * sup - p.abs();
                            if margin < p_bound {
                                p_bound = margin;
                                notes[3] = format!("P = {p} at t = {t}, u = {:?}", u.as_slice());
                            }
                        }
                        Err(e) => {
                            p_bound = f64::NEG_INFINITY;
                            notes[3] = e.to_string();
                        }
                    }
                }
            }
            Err(e) => {
                p_bound = f64::NEG_INFINITY;
                notes[3] = e.to_string();
            }
        }
    }

    let [n0, n1, n2, n3] = notes;
    let mut rows = vec![
        row("positivity", positivity, n0),
        row("time_lipschitz", lipschitz, n1),
        row("exponential_bound", exponential, n2),
        row("p_bound", p_bound, n3),
    ];

    if let Some(probe) = &plan.coercivity {
        let mut margin = f64::INFINITY;
        let mut note = String::new();
        for &t in &probe.times {
            for dir in &probe.directions {
                let u: Vec<f64> = dir.iter().map(|x| probe.radius * x).collect();
                let scaled: Vec<f64> = u.iter().map(|x| x / probe.tau).collect();
                let value = model.value(t, &u).and_then(|e| Ok(e + probe.tau * probe.psi.eval(Some(&u), &scaled)?));
                let value = value.unwrap_or(f64::NEG_INFINITY);
                for &level in &probe.levels {
                    if value - level < margin {
                        margin = value - level;
                        note = format!("value {value:e} on radius {} along {:?}", probe.radius, dir.as_slice());
                    }
                }
            }
        }
        rows.push(row("coercivity", margin, note));
    }

    AssumptionReport { rows }
}
