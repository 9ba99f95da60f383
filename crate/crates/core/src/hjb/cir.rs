//! One-dimensional version of the scheme for the CIR test problem, with
//! linear extrapolation at the truncated right end.

use crate::error::{Error, Result};
use crate::hjb::godunov_gradient_sq;
use crate::oracle::CIRParams;
use crate::scalar::{c, Scalar};

/// All layers of the numerical CIR value, `values[i][j]` at `t_i = iΔt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSolution<S> {
    pub x_max: S,
    pub nx: usize,
    pub nt: usize,
    pub horizon: S,
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> CirSolution<S> {
    pub fn dx(&self) -> S {
        self.x_max / S::of_usize(self.nx)
    }
    pub fn dt(&self) -> S {
        self.horizon / S::of_usize(self.nt)
    }
    pub fn x(&self, j: usize) -> S {
        self.dx() * S::of_usize(j)
    }
    /// Layer nearest to `t`.
    pub fn layer_at(&self, t: S) -> &[S] {
        let i = (t / self.dt()).round().to_f64_lossy().max(0.0) as usize;
        &self.values[i.min(self.nt)]
    }
}

/// `1 / max_j [ |a − r x_j|/Δx + σ² r x_j/Δx² ]`.
pub fn cir_dt_bound<S: Scalar>(cir: &CIRParams<S>, x_max: S, nx: usize) -> S {
    let dx = x_max / S::of_usize(nx);
    let s2r = cir.sigma * cir.sigma * cir.r;
    let rate = (0..=nx)
        .map(|j| {
            let x = dx * S::of_usize(j);
            (cir.a - cir.r * x).abs() / dx + s2r * x / (dx * dx)
        })
        .fold(S::zero(), S::max);
    if rate > S::zero() {
        S::one() / rate
    } else {
        c(1e12)
    }
}

/// Backward sweep on `[0, x_max]` from `e^{px}` with `nx` cells and `nt`
/// steps.
pub fn solve_cir_numeric<S: Scalar>(
    cir: &CIRParams<S>,
    x_max: S,
    nx: usize,
    nt: usize,
) -> Result<CirSolution<S>> {
    cir.validate()?;
    if nx < 2 || nt < 1 || !(x_max > S::zero()) {
        return Err(Error::Contract(format!("bad CIR grid: x_max = {x_max}, nx = {nx}, nt = {nt}")));
    }
    let dx = x_max / S::of_usize(nx);
    let dt = cir.horizon / S::of_usize(nt);
    let bound = cir_dt_bound(cir, x_max, nx);
    if dt > bound {
        return Err(Error::StepTooLarge { dt: dt.to_f64_lossy(), bound: bound.to_f64_lossy() });
    }
    let half = c::<S>(0.5);
    let eps = c::<S>(1e-10);
    let s2r = cir.sigma * cir.sigma * cir.r;

    let mut values = vec![Vec::new(); nt + 1];
    let mut next: Vec<S> = (0..=nx).map(|j| (cir.p * dx * S::of_usize(j)).exp()).collect();
    for i in (0..nt).rev() {
        let mut cur = vec![S::zero(); nx + 1];
        for j in 0..=nx {
            let x = dx * S::of_usize(j);
            let here = next[j];
            let pl = if j > 0 { (here - next[j - 1]) / dx } else { S::zero() };
            let pr = if j < nx { (next[j + 1] - here) / dx } else { pl };
            let drift = cir.a - cir.r * x;
            let mut rhs = drift * if drift >= S::zero() { pr } else { pl };
            if j > 0 {
                rhs = rhs + half * s2r * x * (pr - pl) / dx;
            }
            rhs = rhs + cir.eta_prime * s2r * x * godunov_gradient_sq(pl, pr, j, nx) / (c::<S>(2.0) * (here + eps));
            let v = here + dt * rhs;
            if !v.is_finite() {
                return Err(Error::BlowUp { i, j, k: 0 });
            }
            if v < S::zero() {
                return Err(Error::Positivity { i, j, k: 0, value: v.to_f64_lossy() });
            }
            cur[j] = v;
        }
        values[i + 1] = std::mem::replace(&mut next, cur);
    }
    values[0] = next;
    Ok(CirSolution { x_max, nx, nt, horizon: cir.horizon, values })
}
