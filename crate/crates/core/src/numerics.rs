//! One-dimensional search primitives shared by the conjugate, marginal and
//! time-stepping code.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
///
/// Returns the best interior probe and its value. The caller is responsible
/// for comparing against the endpoints when the minimum may sit there.
pub(crate) fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Supremum of a concave `h` over `[0, ∞)` with `h(0) = 0`.
///
/// The upper end of the bracket is doubled until `h` decreases, then the
/// bracket is refined by golden section to relative tolerance `tol`.
pub(crate) fn concave_sup_halfline<F>(mut h: F, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let mut hi = 2.0;
    let mut h_mid = h(1.0);
    let mut h_hi = h(hi);
    let mut doublings = 0;
    while h_hi >= h_mid {
        if !h_hi.is_finite() || doublings > 1100 {
            return Err(Error::MaximizationFailure { lo: 0.0, hi });
        }
        h_mid = h_hi;
        hi *= 2.0;
        h_hi = h(hi);
        doublings += 1;
    }
    if !h_mid.is_finite() {
        return Err(Error::MaximizationFailure { lo: 0.0, hi });
    }
    let (x, fx) = golden_min(|s| -h(s), 0.0, hi, tol * hi.max(1.0), 400);
    let value = -fx;
    if value >= 0.0 {
        Ok((x, value))
    } else {
        Ok((0.0, 0.0))
    }
}

/// Root of an increasing function on `[lo, hi]` with `g(lo) <= 0 <= g(hi)`,
/// by bisection to machine resolution.
pub(crate) fn bisect_increasing<F>(mut g: F, mut lo: f64, mut hi: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Richardson-refined one-sided difference quotient, `dir = ±1`.
pub(crate) fn one_sided_derivative<F>(mut f: F, x: f64, h: f64, dir: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let fx = f(x);
    let d = |f: &mut F, step: f64| dir * (f(x + dir * step) - fx) / step;
    let coarse = d(&mut f, h);
    let fine = d(&mut f, 0.5 * h);
    2.0 * fine - coarse
}

/// Richardson-refined central difference.
pub(crate) fn central_derivative<F>(mut f: F, x: f64, h: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let d = |f: &mut F, step: f64| (f(x + step) - f(x - step)) / (2.0 * step);
    let coarse = d(&mut f, h);
    let fine = d(&mut f, 0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_min(|x| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 5.0, 1e-12, 500);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn halfline_sup_of_shifted_parabola() {
        // sup_s 3s - s^2/2 at s = 3, value 4.5
        let (s, v) = concave_sup_halfline(|s| 3.0 * s - 0.5 * s * s, 1e-12).unwrap();
        assert!((s - 3.0).abs() < 1e-6);
        assert!((v - 4.5).abs() < 1e-13);
    }

    #[test]
    fn halfline_sup_reports_unbounded() {
        let err = concave_sup_halfline(|s| s, 1e-10).unwrap_err();
        assert!(matches!(err, Error::MaximizationFailure { .. }));
    }

    #[test]
    fn richardson_derivatives() {
        let f = |x: f64| x.powi(3);
        assert!((central_derivative(f, 2.0, 1e-3) - 12.0).abs() < 1e-8);
        assert!((one_sided_derivative(f, 2.0, 1e-4, 1.0) - 12.0).abs() < 1e-6);
        assert!((one_sided_derivative(f, 2.0, 1e-4, -1.0) - 12.0).abs() < 1e-6);
        let kink = |x: f64| x.abs();
        assert!((one_sided_derivative(kink, 0.0, 1e-4, 1.0) - 1.0).abs() < 1e-12);
        assert!((one_sided_derivative(kink, 0.0, 1e-4, -1.0) + 1.0).abs() < 1e-12);
    }
}
