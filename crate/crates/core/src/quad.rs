//! Adaptive Simpson quadrature.

use crate::scalar::{c, Scalar};

/// Integrates `f` over `[a, b]` (either orientation) to the requested
/// relative tolerance. `b < a` yields the negated integral.
pub fn adaptive_simpson<S: Scalar, F: Fn(S) -> S>(f: F, a: S, b: S, rel_tol: S) -> S {
    if a == b {
        return S::zero();
    }
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * c(0.5);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let tol = rel_tol * whole.abs().max(S::epsilon());
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

fn simpson<S: Scalar>(a: S, b: S, fa: S, fm: S, fb: S) -> S {
    (b - a) / c(6.0) * (fa + c::<S>(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<S: Scalar, F: Fn(S) -> S>(
    f: &F,
    a: S,
    b: S,
    fa: S,
    fm: S,
    fb: S,
    whole: S,
    tol: S,
    depth: u32,
) -> S {
    let m = (a + b) * c(0.5);
    let lm = (a + m) * c(0.5);
    let rm = (m + b) * c(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= c::<S>(15.0) * tol {
        return left + right + delta / c(15.0);
    }
    let half = tol * c(0.5);
    recurse(f, a, m, fa, flm, fm, left, half, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_bounds_negate() {
        let fwd = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        let back = adaptive_simpson(|x: f64| x.exp(), 1.0, 0.0, 1e-12);
        assert!((fwd + back).abs() < 1e-12);
        assert!((fwd - (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn peaked_integrand() {
        // ∫_{0.01}^{0.5} y^-2 dy = 100 - 2
        let v = adaptive_simpson(|y: f64| 1.0 / (y * y), 0.01, 0.5, 1e-11);
        assert!((v - 98.0).abs() / 98.0 < 1e-9);
    }
}
