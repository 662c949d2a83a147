//! Adaptive Simpson quadrature.

use crate::error::{FpaError, Result};

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0;
    let value = recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut worst);
    if !value.is_finite() || !(worst <= tol) {
        return Err(FpaError::Quadrature {
            a,
            b,
            estimate: if worst.is_finite() { worst } else { f64::INFINITY },
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            *worst += delta.abs() / 15.0;
        }
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_transcendental() {
        let v = adaptive_simpson(&|x: f64| x.powi(5) - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (64.0 / 6.0 - 2.0)).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_simpson(&|x: f64| x, 1.0, 1.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn singular_integrand_reports_failure() {
        let r = adaptive_simpson(&|x: f64| 1.0 / x, 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(FpaError::Quadrature { .. })));
    }
}
