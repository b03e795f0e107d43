//! Dissipation potentials and the convex-analysis layer.
//!
//! Every shipped potential is coordinate-separable: for a fixed base state
//! `u` it is a sum `Ψ_u(v) = Σ_i φ(v_i)` of one-dimensional profiles
//!
//! ```text
//! φ(s) = ρ|s| + Σ_k (c_k / p_k) |s|^{p_k},     ρ ≥ 0, c_k ≥ 0, p_k > 1.
//! ```
//!
//! Values, conjugates and proximal maps all reduce to this [Profile]. A
//! profile with at most one power term has a closed-form conjugate; sums with
//! several exponents fall back to a bracketed golden-section supremum.
//!
//! The pairing between rates and multipliers is the Euclidean dot product.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, concave_sup_halfline, one_sided_derivative};
use crate::state::{check_dim, check_finite, dot, norm, StateVector};

/// Relative tolerance of the numeric conjugate supremum.
pub const CONJUGATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

/// One-dimensional separable profile `φ(s) = ρ|s| + Σ (c/p)|s|^p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub rho: f64,
    pub powers: Vec<PowerTerm>,
}

impl Profile {
    fn zero() -> Self {
        Self { rho: 0.0, powers: Vec::new() }
    }

    fn add_power(&mut self, coeff: f64, exponent: f64) {
        if coeff == 0.0 {
            return;
        }
        match self.powers.iter_mut().find(|t| t.exponent == exponent) {
            Some(term) => term.coeff += coeff,
            None => self.powers.push(PowerTerm { coeff, exponent }),
        }
    }

    fn add_scaled(&mut self, other: &Profile, weight: f64) {
        self.rho += weight * other.rho;
        for t in &other.powers {
            self.add_power(weight * t.coeff, t.exponent);
        }
    }

    fn scaled(&self, weight: f64) -> Profile {
        let mut p = Profile::zero();
        p.add_scaled(self, weight);
        p
    }

    pub fn has_closed_form_conjugate(&self) -> bool {
        self.powers.len() <= 1
    }

    pub fn value(&self, s: f64) -> f64 {
        let a = s.abs();
        let mut v = self.rho * a;
        for t in &self.powers {
            v += t.coeff / t.exponent * power(a, t.exponent);
        }
        v
    }

    /// Derivative for `s ≠ 0`; at `0` the smooth part only (the right
    /// derivative of the 1-homogeneous part is `ρ`).
    pub fn derivative(&self, s: f64) -> f64 {
        let a = s.abs();
        let mut d = if a > 0.0 { self.rho } else { 0.0 };
        for t in &self.powers {
            d += t.coeff * power(a, t.exponent - 1.0);
        }
        d * s.signum()
    }

    /// `φ*(σ)`, closed form when available.
    pub fn conjugate(&self, sigma: f64) -> Result<f64> {
        let excess = sigma.abs() - self.rho;
        if excess <= 0.0 {
            return Ok(0.0);
        }
        match self.powers.as_slice() {
            [] => Ok(f64::INFINITY),
            [term] => {
                if term.coeff == 0.0 {
                    return Ok(f64::INFINITY);
                }
                let p = term.exponent;
                let q = p / (p - 1.0);
                Ok(power(excess, q) / (q * term.coeff.powf(1.0 / (p - 1.0))))
            }
            _ => self.conjugate_numeric(sigma),
        }
    }

    /// `φ*(σ)` by bracketed golden section, regardless of closed forms.
    pub fn conjugate_numeric(&self, sigma: f64) -> Result<f64> {
        let excess = sigma.abs() - self.rho;
        if excess <= 0.0 {
            return Ok(0.0);
        }
        if self.powers.iter().all(|t| t.coeff == 0.0) {
            return Ok(f64::INFINITY);
        }
        let smooth = |s: f64| -> f64 { self.powers.iter().map(|t| t.coeff / t.exponent * power(s, t.exponent)).sum() };
        let (_, value) = concave_sup_halfline(|s| excess * s - smooth(s), CONJUGATE_TOL)?;
        Ok(value)
    }

    /// `argmin_s φ(s) + (s - w)² / (2μ)`.
    pub fn prox(&self, w: f64, mu: f64) -> f64 {
        let b = w.abs() - mu * self.rho;
        if b <= 0.0 {
            return 0.0;
        }
        let y = match self.powers.as_slice() {
            [] => b,
            [t] if t.exponent == 2.0 => b / (1.0 + mu * t.coeff),
            _ => {
                // y + μ Σ c y^{p-1} = b is increasing in y, root in (0, b]
                let g =
                    |y: f64| y + mu * self.powers.iter().map(|t| t.coeff * power(y, t.exponent - 1.0)).sum::<f64>() - b;
                bisect_increasing(g, 0.0, b)
            }
        };
        y * w.signum()
    }
}

fn power(a: f64, p: f64) -> f64 {
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Positive weight `ω(u)` of a state-dependent potential `ω(u) Ψ₀(v)`.
///
/// The declared bounds are checked on every evaluation.
#[derive(Clone)]
pub struct StateWeight {
    name: String,
    func: WeightFn,
    min: f64,
    max: f64,
}

impl StateWeight {
    pub fn new<F>(name: impl Into<String>, min: f64, max: f64, func: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(min > 0.0 && min <= max && max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "weight bounds".into(),
                value: min,
                bound: "0 < min <= max < inf".into(),
            });
        }
        Ok(Self { name: name.into(), func: Arc::new(func), min, max })
    }

    pub fn constant(w: f64) -> Result<Self> {
        Self::new(format!("{w}"), w, w, move |_| w)
    }

    /// `ω(u) = 1 + a·tanh(u_0)`, bounded in `[1 - a, 1 + a]`.
    pub fn tanh(amplitude: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::InvalidParameter {
                name: "weight_amplitude".into(),
                value: amplitude,
                bound: "0 <= amplitude < 1".into(),
            });
        }
        Self::new(format!("1 + {amplitude}·tanh(u0)"), 1.0 - amplitude, 1.0 + amplitude, move |u| {
            1.0 + amplitude * u[0].tanh()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        let w = (self.func)(u);
        if !(w.is_finite() && w >= self.min && w <= self.max) {
            return Err(Error::InvalidParameter {
                name: format!("weight {}", self.name),
                value: w,
                bound: format!("[{}, {}]", self.min, self.max),
            });
        }
        Ok(w)
    }
}

impl fmt::Debug for StateWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateWeight").field("name", &self.name).field("min", &self.min).field("max", &self.max).finish()
    }
}

/// An admissible dissipation potential, or a state-dependent family of them.
#[derive(Clone, Debug)]
pub enum DissipationPotential {
    /// `½ c ‖v‖²`
    Quadratic { c: f64 },
    /// `(c / p) Σ |v_i|^p`, `p > 1`
    PNorm { c: f64, p: f64 },
    /// `ρ ‖v‖₁ + (ε / 2) ‖v‖²`
    OneHomPlusQuad { rho: f64, epsilon: f64 },
    /// `Σ w_k Ψ_k(v)`
    WeightedSum(Vec<(f64, DissipationPotential)>),
    /// `ω(u) Ψ₀(v)`
    StateWeighted { base: Box<DissipationPotential>, weight: StateWeight },
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: name.into(), value, bound: "> 0".into() })
    }
}

fn nonnegative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: name.into(), value, bound: ">= 0".into() })
    }
}

impl DissipationPotential {
    pub fn quadratic(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(Self::Quadratic { c })
    }

    pub fn p_norm(c: f64, p: f64) -> Result<Self> {
        positive("c", c)?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter { name: "p".into(), value: p, bound: "> 1".into() });
        }
        Ok(Self::PNorm { c, p })
    }

    /// `ε = 0` is accepted so the term can appear inside a sum; on its own
    /// it fails the superlinearity audit.
    pub fn one_hom_plus_quad(rho: f64, epsilon: f64) -> Result<Self> {
        nonnegative("rho", rho)?;
        nonnegative("epsilon", epsilon)?;
        Ok(Self::OneHomPlusQuad { rho, epsilon })
    }

    pub fn weighted_sum(terms: Vec<(f64, DissipationPotential)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter {
                name: "terms".into(),
                value: 0.0,
                bound: "at least one term".into(),
            });
        }
        for (w, _) in &terms {
            nonnegative("weight", *w)?;
        }
        Ok(Self::WeightedSum(terms))
    }

    pub fn state_weighted(base: DissipationPotential, weight: StateWeight) -> Self {
        Self::StateWeighted { base: Box::new(base), weight }
    }

    pub fn is_state_dependent(&self) -> bool {
        match self {
            Self::StateWeighted { .. } => true,
            Self::WeightedSum(terms) => terms.iter().any(|(_, p)| p.is_state_dependent()),
            _ => false,
        }
    }

    pub fn has_closed_form_conjugate(&self) -> bool {
        match self {
            Self::Quadratic { .. } | Self::PNorm { .. } | Self::OneHomPlusQuad { .. } => true,
            Self::StateWeighted { base, .. } => base.has_closed_form_conjugate(),
            Self::WeightedSum(_) => false,
        }
    }

    /// The coordinate profile of `Ψ_u`.
    pub fn profile(&self, u: Option<&[f64]>) -> Result<Profile> {
        let mut out = Profile::zero();
        match self {
            Self::Quadratic { c } => out.add_power(*c, 2.0),
            Self::PNorm { c, p } => out.add_power(*c, *p),
            Self::OneHomPlusQuad { rho, epsilon } => {
                out.rho = *rho;
                out.add_power(*epsilon, 2.0);
            }
            Self::WeightedSum(terms) => {
                for (w, term) in terms {
                    out.add_scaled(&term.profile(u)?, *w);
                }
            }
            Self::StateWeighted { base, weight } => {
                let u = u.ok_or(Error::MissingState)?;
                check_finite(u)?;
                out = base.profile(Some(u))?.scaled(weight.value(u)?);
            }
        }
        Ok(out)
    }

    fn checked_profile(&self, u: Option<&[f64]>, x: &[f64]) -> Result<Profile> {
        if x.is_empty() {
            return Err(Error::EmptyState);
        }
        check_finite(x)?;
        if let Some(u) = u {
            check_dim(x.len(), u.len())?;
        }
        self.profile(u)
    }

    /// `Ψ_u(v)`. The base state is required for state-dependent potentials
    /// and ignored otherwise.
    pub fn eval(&self, u: Option<&[f64]>, v: &[f64]) -> Result<f64> {
        let profile = self.checked_profile(u, v)?;
        Ok(v.iter().map(|&s| profile.value(s)).sum())
    }

    /// `Ψ*_u(ξ) = sup_v ⟨ξ, v⟩ - Ψ_u(v)`.
    pub fn conjugate(&self, u: Option<&[f64]>, xi: &[f64]) -> Result<f64> {
        let profile = self.checked_profile(u, xi)?;
        xi.iter().map(|&s| profile.conjugate(s)).sum()
    }

    /// Numeric supremum route for `Ψ*_u(ξ)`, kept independent of the closed forms.
    pub fn conjugate_numeric(&self, u: Option<&[f64]>, xi: &[f64]) -> Result<f64> {
        let profile = self.checked_profile(u, xi)?;
        xi.iter().map(|&s| profile.conjugate_numeric(s)).sum()
    }
}

/// `Ψ_u(v) + Ψ*_u(ξ) - ⟨ξ, v⟩`, nonnegative up to rounding; zero iff `ξ ∈ ∂Ψ_u(v)`.
pub fn fenchel_young_gap(psi: &DissipationPotential, u: Option<&[f64]>, v: &[f64], xi: &[f64]) -> Result<f64> {
    check_dim(v.len(), xi.len())?;
    let profile = psi.checked_profile(u, v)?;
    check_finite(xi)?;
    profile_gap(&profile, v, xi)
}

pub(crate) fn profile_gap(profile: &Profile, v: &[f64], xi: &[f64]) -> Result<f64> {
    let mut gap = 0.0;
    for (&s, &sigma) in v.iter().zip(xi) {
        gap += profile.value(s) + profile.conjugate(sigma)? - sigma * s;
    }
    Ok(gap)
}

pub fn subdiff_contains(
    psi: &DissipationPotential,
    u: Option<&[f64]>,
    v: &[f64],
    xi: &[f64],
    tol: f64,
) -> Result<bool> {
    Ok(fenchel_young_gap(psi, u, v, xi)? <= tol)
}

/// Scalar function of `v` audited by [check_admissible].
pub trait PotentialFunction {
    fn value(&self, v: &[f64]) -> f64;
}

/// A potential frozen at a base state.
pub struct AtState<'a> {
    pub psi: &'a DissipationPotential,
    pub state: Option<&'a [f64]>,
}

impl PotentialFunction for AtState<'_> {
    fn value(&self, v: &[f64]) -> f64 {
        self.psi.eval(self.state, v).unwrap_or(f64::NAN)
    }
}

impl PotentialFunction for DissipationPotential {
    fn value(&self, v: &[f64]) -> f64 {
        self.eval(None, v).unwrap_or(f64::NAN)
    }
}

impl<F: Fn(&[f64]) -> f64> PotentialFunction for F {
    fn value(&self, v: &[f64]) -> f64 {
        self(v)
    }
}

#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub vectors: Vec<StateVector>,
    /// Increasing radii for the superlinearity witness.
    pub radii: Vec<f64>,
    /// `Ψ(Rv)/‖Rv‖` must exceed this at the largest radius.
    pub growth_bound: f64,
    pub thetas: Vec<f64>,
}

impl SamplePlan {
    pub fn new(vectors: Vec<StateVector>) -> Self {
        Self {
            vectors,
            radii: vec![1.0, 10.0, 100.0, 1e3, 1e4],
            growth_bound: 10.0,
            thetas: vec![0.1, 0.25, 0.5, 0.75, 0.9],
        }
    }

    /// Scalar test points, e.g. `±0.5, ±1, ±3`.
    pub fn scalars(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| StateVector::from_raw(vec![x])).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axiom {
    Nonnegativity,
    ZeroAtOrigin,
    SegmentConvexity,
    Superlinearity,
    /// Equal conjugate values on each subdifferential, tested as
    /// differentiability of `λ ↦ Ψ(λv)` at `λ = 1`.
    ConjugateConsistency,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Largest violation seen (0 when none).
    pub worst: f64,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub checks: Vec<AxiomCheck>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, axiom: Axiom) -> &AxiomCheck {
        self.checks.iter().find(|c| c.axiom == axiom).expect("every axiom is checked")
    }
}

const LAMBDA_STEP: f64 = 1e-6;

pub fn check_admissible(psi: &dyn PotentialFunction, plan: &SamplePlan) -> AdmissibilityReport {
    let mut checks = Vec::with_capacity(5);

    let dim = plan.vectors.first().map_or(1, |v| v.dim());
    let at_zero = psi.value(&vec![0.0; dim]);
    checks.push(AxiomCheck {
        axiom: Axiom::ZeroAtOrigin,
        passed: at_zero == 0.0,
        worst: at_zero.abs(),
        note: format!("Ψ(0) = {at_zero:e}"),
    });

    let mut worst_neg: f64 = 0.0;
    for v in &plan.vectors {
        let value = psi.value(v);
        if !(value >= 0.0) {
            worst_neg = worst_neg.max(if value.is_nan() { f64::INFINITY } else { -value });
        }
    }
    checks.push(AxiomCheck {
        axiom: Axiom::Nonnegativity,
        passed: worst_neg == 0.0,
        worst: worst_neg,
        note: String::new(),
    });

    let mut worst_convex: f64 = 0.0;
    for (i, a) in plan.vectors.iter().enumerate() {
        for b in &plan.vectors[i + 1..] {
            let (fa, fb) = (psi.value(a), psi.value(b));
            for &theta in &plan.thetas {
                let mix: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| theta * x + (1.0 - theta) * y).collect();
                let chord = theta * fa + (1.0 - theta) * fb;
                let excess = psi.value(&mix) - chord - 1e-12 * (1.0 + chord.abs());
                if excess > 0.0 {
                    worst_convex = worst_convex.max(excess);
                }
            }
        }
    }
    checks.push(AxiomCheck {
        axiom: Axiom::SegmentConvexity,
        passed: worst_convex == 0.0,
        worst: worst_convex,
        note: String::new(),
    });

    let mut radii = plan.radii.clone();
    radii.sort_by(f64::total_cmp);
    let mut super_ok = true;
    let mut min_final = f64::INFINITY;
    for v in plan.vectors.iter().filter(|v| norm(v) > 0.0) {
        let ratios: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let scaled: Vec<f64> = v.iter().map(|x| r * x).collect();
                psi.value(&scaled) / (r * norm(v))
            })
            .collect();
        let monotone = ratios.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
        let last = *ratios.last().unwrap_or(&f64::NAN);
        min_final = min_final.min(last);
        super_ok &= monotone && last > plan.growth_bound;
    }
    checks.push(AxiomCheck {
        axiom: Axiom::Superlinearity,
        passed: super_ok,
        worst: if super_ok { 0.0 } else { (plan.growth_bound - min_final).max(0.0) },
        note: format!("smallest ratio at largest radius {min_final:e}, bound {}", plan.growth_bound),
    });

    let mut consistency_ok = true;
    let mut worst_jump: f64 = 0.0;
    let mut note = String::new();
    for v in &plan.vectors {
        let along = |lambda: f64| {
            let scaled: Vec<f64> = v.iter().map(|x| lambda * x).collect();
            psi.value(&scaled)
        };
        let right = one_sided_derivative(along, 1.0, LAMBDA_STEP, 1.0);
        let left = one_sided_derivative(along, 1.0, LAMBDA_STEP, -1.0);
        let jump = (right - left).abs();
        let tol = 1e-4 * (1.0 + psi.value(v));
        if !(jump <= tol) {
            consistency_ok = false;
            worst_jump = worst_jump.max(jump);
            note = format!("λ-derivatives {left} / {right} at v = {:?}", v.as_slice());
        }
    }
    checks.push(AxiomCheck { axiom: Axiom::ConjugateConsistency, passed: consistency_ok, worst: worst_jump, note });

    AdmissibilityReport { checks }
}

/// `⟨ξ, v⟩`, re-exported for callers assembling gaps by hand.
pub fn pairing(xi: &[f64], v: &[f64]) -> f64 {
    dot(xi, v)
}
