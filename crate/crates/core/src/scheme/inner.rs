//! Global minimization of one incremental step
//!
//! ```text
//! J(U) = τ Ψ_p((U - p) / τ) + E(t, U)
//! ```
//!
//! with `p` the previous state. The dissipation part is separable, so its
//! proximal map is exact and coordinatewise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{EnergyModel, SubdiffSet};
use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, golden_min};
use crate::potentials::{profile_gap, Profile};
use crate::state::{lex_cmp, max_abs, StateVector};

use super::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Grid scan of the coercivity interval plus golden section (d = 1).
    Scan,
    /// Multi-start proximal gradient (d ≥ 2).
    MultiStart,
    /// Read back from a file; no solver metadata.
    Imported,
}

/// Per-step solver metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerStatus {
    pub method: InnerMethod,
    pub iterations: usize,
    /// Proximal-gradient residual at the accepted iterate, when a gradient exists.
    pub residual: Option<f64>,
    pub starts: usize,
    /// Half-width of the coercivity box.
    pub radius: f64,
}

impl InnerStatus {
    pub fn imported() -> Self {
        Self { method: InnerMethod::Imported, iterations: 0, residual: None, starts: 0, radius: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: StateVector,
    pub multiplier: StateVector,
    pub gap: f64,
    /// `J(U_n)`
    pub objective: f64,
    /// `E(t, p) - J(U_n)`, nonnegative by construction.
    pub decrement: f64,
    pub energy: f64,
    pub status: InnerStatus,
}

pub(crate) struct StepProblem<'a> {
    pub model: &'a dyn EnergyModel,
    pub profile: Profile,
    pub prev: &'a [f64],
    pub t: f64,
    pub tau: f64,
}

struct PgOutcome {
    u: Vec<f64>,
    value: f64,
    residual: Option<f64>,
    iterations: usize,
}

const MAX_BASINS: usize = 16;

/// Objective differences below this are rounding noise; proximal-gradient
/// steps within it are still accepted so the iterate can settle.
fn rounding(f: f64) -> f64 {
    4.0 * f64::EPSILON * (1.0 + f.abs())
}

impl StepProblem<'_> {
    fn dissipation(&self, u: &[f64]) -> f64 {
        let tau = self.tau;
        u.iter().zip(self.prev).map(|(x, p)| tau * self.profile.value((x - p) / tau)).sum()
    }

    fn energy(&self, u: &[f64]) -> f64 {
        match self.model.domain_box() {
            Some(b) if b.check(u).is_err() => f64::INFINITY,
            _ => self.model.value(self.t, u).unwrap_or(f64::INFINITY),
        }
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        self.dissipation(u) + self.energy(u)
    }

    fn prox_step(&self, y: &[f64], grad: &[f64], s: f64) -> Vec<f64> {
        let tau = self.tau;
        y.iter()
            .zip(grad)
            .zip(self.prev)
            .map(|((&yi, &gi), &pi)| pi + tau * self.profile.prox((yi - s * gi - pi) / tau, s / tau))
            .collect()
    }

    fn gradient(&self, u: &[f64]) -> Result<Option<Vec<f64>>> {
        self.model.gradient(self.t, u)
    }

    /// Per-coordinate bound on `|U_i - p_i|` over the sublevel `J ≤ E(t, p)`.
    ///
    /// `τ φ(|U_i - p_i| / τ) ≤ E(t, p) - C0` by positivity of `E` and of the
    /// profile, then widened until the objective exceeds the level on the
    /// coordinate rays.
    fn coercivity_radius(&self, level: f64) -> f64 {
        let c0 = self.model.constants().c0;
        let budget = ((level - c0) / self.tau).max(0.0);
        let phi = |s: f64| self.profile.value(s);
        let mut hi = 1.0;
        let mut guard = 0;
        while phi(hi) < budget && guard < 2000 {
            hi *= 2.0;
            guard += 1;
        }
        let s = bisect_increasing(|s| phi(s) - budget, 0.0, hi);
        let scale = 1.0 + max_abs(self.prev);
        let mut radius = (self.tau * s * (1.0 + 1e-9)).max(1e-9 * self.tau * scale);
        let dim = self.prev.len();
        for _ in 0..64 {
            let mut inside = false;
            for i in 0..dim {
                for dir in [-1.0, 1.0] {
                    let mut u = self.prev.to_vec();
                    u[i] += dir * radius;
                    if self.objective(&u) <= level {
                        inside = true;
                    }
                }
            }
            if !inside {
                break;
            }
            radius *= 2.0;
        }
        radius
    }

    /// Accelerated proximal gradient with backtracking and function-value restart.
    fn proximal_gradient(&self, start: &[f64], tol_rel: f64, max_iter: usize) -> Result<PgOutcome> {
        let dim = start.len();
        let mut x = start.to_vec();
        let mut fx = self.objective(&x);
        if !fx.is_finite() {
            return Ok(PgOutcome { u: x, value: fx, residual: None, iterations: 0 });
        }
        let mut y = x.clone();
        let mut theta = 1.0f64;
        let mut s = 1.0f64;
        let mut iterations = 0;
        let mut residual;
        while iterations < max_iter {
            iterations += 1;
            let gy = match self.gradient(&y)? {
                Some(g) => g,
                None => {
                    if y == x {
                        return Ok(PgOutcome { u: x, value: fx, residual: None, iterations });
                    }
                    y.clone_from(&x);
                    theta = 1.0;
                    continue;
                }
            };
            let ey = self.energy(&y);
            let mut z;
            let mut halvings = 0;
            loop {
                z = self.prox_step(&y, &gy, s);
                let ez = self.energy(&z);
                let model: f64 = ey
                    + gy.iter().zip(&z).zip(&y).map(|((g, a), b)| g * (a - b)).sum::<f64>()
                    + z.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * s);
                if ez <= model + 1e-15 * (1.0 + ey.abs()) || halvings > 80 {
                    break;
                }
                s *= 0.5;
                halvings += 1;
            }
            let step: f64 = z.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            residual = step / s;
            let fz = self.objective(&z);
            if fz > fx + rounding(fx) {
                if y == x {
                    break;
                }
                // momentum overshoot: restart from the best point
                y.clone_from(&x);
                theta = 1.0;
                continue;
            }
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;
            let mut y_next = z.clone();
            for i in 0..dim {
                y_next[i] += beta * (z[i] - x[i]);
            }
            x = z;
            fx = fz;
            y = y_next;
            theta = theta_next;
            if residual <= tol_rel * (1.0 + fx.abs()) && s > 0.0 {
                break;
            }
            // let the step grow again after a run of accepted iterations
            if halvings == 0 && iterations % 16 == 0 {
                s *= 2.0;
            }
        }
        // residual at the returned point itself
        if let Some(g) = self.gradient(&x)? {
            let e = self.energy(&x);
            loop {
                let z = self.prox_step(&x, &g, s);
                let ez = self.energy(&z);
                let model: f64 = e
                    + g.iter().zip(&z).zip(&x).map(|((g, a), b)| g * (a - b)).sum::<f64>()
                    + z.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * s);
                if ez <= model + 1e-15 * (1.0 + e.abs()) || s < 1e-30 {
                    let step: f64 = z.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    residual = step / s;
                    let fz = self.objective(&z);
                    if fz <= fx + rounding(fx) {
                        x = z;
                        fx = fz;
                    }
                    break;
                }
                s *= 0.5;
            }
            Ok(PgOutcome { u: x, value: fx, residual: Some(residual), iterations })
        } else {
            Ok(PgOutcome { u: x, value: fx, residual: None, iterations })
        }
    }

    fn scan_1d(&self, radius: f64, opts: &SolverOptions) -> Vec<(f64, f64)> {
        let p = self.prev[0];
        let n = opts.scan_points.max(3);
        let (lo, hi) = (p - radius, p + radius);
        let h = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect();
        let f = |x: f64| self.objective(&[x]);
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let mut basins: Vec<usize> = (0..n)
            .filter(|&i| {
                let left = if i > 0 { values[i - 1] } else { f64::INFINITY };
                let right = if i + 1 < n { values[i + 1] } else { f64::INFINITY };
                values[i].is_finite() && values[i] <= left && values[i] <= right
            })
            .collect();
        basins.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        basins.truncate(MAX_BASINS);
        let mut out = Vec::with_capacity(basins.len() + 1);
        for i in basins {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(n - 1)];
            let (x, fx) = golden_min(f, a, b, 1e-13 * (1.0 + a.abs().max(b.abs())), 400);
            if fx <= values[i] {
                out.push((x, fx));
            } else {
                out.push((grid[i], values[i]));
            }
        }
        out
    }

    /// Multiplier selection: minimal Fenchel–Young gap of `-ξ` against the
    /// rate, ties broken by the lexicographically smallest `ξ`.
    pub fn select_multiplier(&self, u: &[f64]) -> Result<(StateVector, f64)> {
        let v: Vec<f64> = u.iter().zip(self.prev).map(|(x, p)| (x - p) / self.tau).collect();
        let gap_of = |xi: &[f64]| -> Result<f64> {
            let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
            profile_gap(&self.profile, &v, &neg)
        };
        match self.model.subdifferential(self.t, u)? {
            SubdiffSet::Points(points) => {
                let mut best: Option<(StateVector, f64)> = None;
                for xi in points {
                    let g = gap_of(&xi)?;
                    let better = match &best {
                        None => true,
                        Some((b, bg)) => g < *bg || (g == *bg && lex_cmp(&xi, b).is_lt()),
                    };
                    if better {
                        best = Some((xi, g));
                    }
                }
                best.ok_or(Error::SubdifferentialUnavailable { t: self.t })
            }
            SubdiffSet::Interval { lo, hi } => {
                if lo > hi {
                    return Err(Error::SubdifferentialUnavailable { t: self.t });
                }
                let f = |x: f64| gap_of(&[x]).unwrap_or(f64::INFINITY);
                let mut best = (lo, f(lo));
                let fh = f(hi);
                if fh < best.1 {
                    best = (hi, fh);
                }
                if hi > lo {
                    let (x, fx) = golden_min(f, lo, hi, 1e-14 * (1.0 + lo.abs().max(hi.abs())), 400);
                    if fx < best.1 {
                        best = (x, fx);
                    }
                }
                Ok((StateVector::from_raw(vec![best.0]), best.1))
            }
        }
    }

    pub fn solve(&self, opts: &SolverOptions, step: usize) -> Result<StepOutcome> {
        let dim = self.prev.len();
        let level = self.energy(self.prev);
        if !level.is_finite() {
            return Err(Error::StepFailure {
                step,
                reason: "energy is not finite at the previous state".into(),
                best: self.prev.to_vec(),
                gap: f64::INFINITY,
            });
        }
        let radius = self.coercivity_radius(level);
        let mut candidates: Vec<PgOutcome> = Vec::new();
        let method;
        if dim == 1 {
            method = InnerMethod::Scan;
            for (x, fx) in self.scan_1d(radius, opts) {
                candidates.push(PgOutcome { u: vec![x], value: fx, residual: None, iterations: 0 });
            }
            candidates.sort_by(|a, b| a.value.total_cmp(&b.value));
            for cand in candidates.iter_mut().take(2) {
                let pg = self.proximal_gradient(&cand.u, opts.eps_inner, opts.max_iterations)?;
                if pg.value <= cand.value + rounding(cand.value) {
                    *cand = pg;
                }
            }
        } else {
            method = InnerMethod::MultiStart;
            if self.gradient(self.prev)?.is_none() {
                return Err(Error::GradientUnavailable { dim });
            }
            for start in self.starts(radius, opts) {
                candidates.push(self.proximal_gradient(&start, opts.eps_inner, opts.max_iterations)?);
            }
        }
        let starts = candidates.len();
        let mut best = PgOutcome { u: self.prev.to_vec(), value: level, residual: None, iterations: 0 };
        let mut iterations = 0;
        for c in candidates {
            iterations += c.iterations;
            if c.value < best.value {
                best = c;
            }
        }
        let (mut multiplier, mut gap) = self.select_multiplier(&best.u)?;
        if gap > opts.gap_tolerance {
            // a longer proximal-gradient run from the incumbent before giving up
            let pg = self.proximal_gradient(&best.u, opts.eps_inner * 1e-2, opts.max_iterations * 4)?;
            iterations += pg.iterations;
            if pg.value <= best.value + rounding(best.value) && pg.value <= level {
                let (m, g) = self.select_multiplier(&pg.u)?;
                if g < gap {
                    best = pg;
                    multiplier = m;
                    gap = g;
                }
            }
        }
        if gap > opts.gap_tolerance || !gap.is_finite() {
            return Err(Error::StepFailure {
                step,
                reason: format!("Fenchel–Young gap {gap:e} above tolerance {:e}", opts.gap_tolerance),
                best: best.u,
                gap,
            });
        }
        let energy = self.energy(&best.u);
        Ok(StepOutcome {
            decrement: level - best.value,
            objective: best.value,
            energy,
            gap,
            multiplier,
            state: StateVector::new(best.u)?,
            status: InnerStatus { method, iterations, residual: best.residual, starts, radius },
        })
    }

    /// Previous state, `±s·𝟙`, an alternating perturbation, and seeded
    /// random points of the coercivity box.
    fn starts(&self, radius: f64, opts: &SolverOptions) -> Vec<Vec<f64>> {
        let dim = self.prev.len();
        let g = self.gradient(self.prev).ok().flatten().unwrap_or_else(|| vec![0.0; dim]);
        let s = (self.tau * (1.0 + max_abs(&g))).min(radius);
        let shifted = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..dim).map(|i| self.prev[i] + f(i)).collect() };
        let mut out =
            vec![self.prev.to_vec(), shifted(&|_| s), shifted(&|_| -s), shifted(&|i| if i % 2 == 0 { s } else { -s })];
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let random = opts.starts.saturating_sub(out.len());
        for _ in 0..random {
            out.push((0..dim).map(|i| self.prev[i] + rng.gen_range(-radius..=radius)).collect());
        }
        out.truncate(opts.starts.max(1));
        out
    }
}
