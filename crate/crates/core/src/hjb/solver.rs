//! Backward sweep of the explicit scheme.
//!
//! At every vertex the new value is `Ψ_i = Ψ_{i+1} + Δt (I1 + I2 + I3)`:
//! `I1` is the upwinded drift plus the second difference in cloud cover,
//! `I2` the upwinded influx transport plus the exactly minimized discharge
//! term, and `I3 = η' g² p̄² / (2(Ψ_{i+1} + ε))` the nonlinear term.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use super::{Grid, ProblemSpec, Recording, SchemeOptions, SolutionFields};
use crate::error::{Error, Result};
use crate::hjb::GradientScheme;
use crate::meteo::{irradiance, InfluxParams};
use crate::scalar::{c, Scalar};
use crate::system::{control_bounds, minimize_unchecked, PenaltyWeights, StorageLevel};

/// One backward layer.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<S> {
    pub psi: Array2<S>,
    pub u_star: Array2<S>,
    pub phi_star: Array2<S>,
}

/// Quantities fixed over one time layer.
struct Layer<S> {
    nx: usize,
    ny: usize,
    dx: S,
    dy: S,
    dt: S,
    r: S,
    a: S,
    sigma: S,
    cap: S,
    target: S,
    irr: S,
    influx: InfluxParams<S>,
    penalty: PenaltyWeights<S>,
    eta_prime: S,
    /// `Φ'(1) η`.
    phi_scale: S,
    eps: S,
    scheme: GradientScheme,
}

impl<S: Scalar> Layer<S> {
    fn new(spec: &ProblemSpec<S>, grid: &Grid<S>, options: &SchemeOptions<S>, t: S) -> Result<Self> {
        let (phi1, _) = spec.orlicz.derivatives_at_one();
        Ok(Self {
            nx: grid.nx,
            ny: grid.ny,
            dx: grid.dx(),
            dy: grid.dy(),
            dt: grid.dt(),
            r: spec.cloud.r,
            a: spec.cloud.a,
            sigma: spec.cloud.sigma,
            cap: spec.battery.discharge_cap,
            target: spec.target.at(t),
            irr: irradiance(&spec.irradiance, t)?,
            influx: spec.battery.influx,
            penalty: spec.penalty,
            eta_prime: spec.eta_prime()?,
            phi_scale: phi1 * spec.eta,
            eps: options.eps_guard,
            scheme: options.gradient,
        })
    }

    /// New value, minimizing discharge and distortion at `(j, k)`.
    #[inline]
    fn vertex(&self, next: &Array2<S>, j: usize, k: usize) -> (S, S, S) {
        let zero = S::zero();
        let half = c::<S>(0.5);
        let x = self.dx * S::of_usize(j);
        let y = self.dy * S::of_usize(k);
        let here = next[[j, k]];
        let pl = if j > 0 { (here - next[[j - 1, k]]) / self.dx } else { zero };
        let pr = if j < self.nx { (next[[j + 1, k]] - here) / self.dx } else { zero };
        let pd = if k > 0 { (here - next[[j, k - 1]]) / self.dy } else { zero };
        let pu = if k < self.ny { (next[[j, k + 1]] - here) / self.dy } else { zero };

        let g = self.sigma * x * (S::one() - x);
        let g2 = g * g;

        // drift points inward at j = 0 and j = nx since 0 < a < 1
        let drift = self.r * (self.a - x);
        let mut i1 = drift * if self.a >= x { pr } else { pl };
        if j > 0 && j < self.nx {
            i1 = i1 + half * g2 * (pr - pl) / self.dx;
        }

        let f = self.influx.rate(self.irr, x);
        let level = if k == 0 {
            StorageLevel::Empty
        } else if k == self.ny {
            StorageLevel::Full
        } else {
            StorageLevel::Partial
        };
        let (lo, hi) = control_bounds(level, f, self.cap);
        let pprime = if k == 0 { pu } else { pd };
        let (v, running) =
            minimize_unchecked(lo, hi, pprime, self.target, self.cap, y, &self.penalty);
        let transport = f * if k < self.ny { pu } else { pd };
        let i2 = transport + running;

        let denom = here + self.eps;
        let i3 = self.eta_prime * g2 * self.scheme.squared(pl, pr, j, self.nx) / (c::<S>(2.0) * denom);
        let phi = self.phi_scale * g * self.scheme.signed(pl, pr, j, self.nx) / denom;

        (here + self.dt * (i1 + i2 + i3), v, phi)
    }
}

/// Computes layer `i` from layer `i + 1` (`next`).
pub fn assemble_step<S: Scalar>(
    spec: &ProblemSpec<S>,
    grid: &Grid<S>,
    options: &SchemeOptions<S>,
    next: &Array2<S>,
    i: usize,
) -> Result<StepOutput<S>> {
    if next.dim() != grid.shape() {
        return Err(Error::Contract(format!(
            "layer shape {:?} does not match grid {:?}",
            next.dim(),
            grid.shape()
        )));
    }
    let ctx = Layer::new(spec, grid, options, grid.t(i))?;
    let shape = grid.shape();
    let mut psi = Array2::zeros(shape);
    let mut u_star = Array2::zeros(shape);
    let mut phi_star = Array2::zeros(shape);

    let fill_row = |j: usize, prow: &mut [S], urow: &mut [S], frow: &mut [S]| {
        for k in 0..=grid.ny {
            let (p, u, f) = ctx.vertex(next, j, k);
            prow[k] = p;
            urow[k] = u;
            frow[k] = f;
        }
    };
    let rows = psi
        .axis_iter_mut(Axis(0))
        .zip(u_star.axis_iter_mut(Axis(0)))
        .zip(phi_star.axis_iter_mut(Axis(0)))
        .enumerate();
    // parallel only pays off on larger layers; results are identical either way
    if shape.0 * shape.1 >= 20_000 {
        rows.par_bridge().for_each(|(j, ((mut p, mut u), mut f))| {
            fill_row(
                j,
                p.as_slice_mut().expect("contiguous row"),
                u.as_slice_mut().expect("contiguous row"),
                f.as_slice_mut().expect("contiguous row"),
            )
        });
    } else {
        for (j, ((mut p, mut u), mut f)) in rows {
            fill_row(
                j,
                p.as_slice_mut().expect("contiguous row"),
                u.as_slice_mut().expect("contiguous row"),
                f.as_slice_mut().expect("contiguous row"),
            );
        }
    }

    for ((j, k), v) in psi.indexed_iter() {
        if !v.is_finite() || !phi_star[[j, k]].is_finite() {
            return Err(Error::BlowUp { i, j, k });
        }
    }
    Ok(StepOutput { psi, u_star, phi_star })
}

/// Sufficient step for nonnegative stencil weights of the monotone part:
/// `1 / max_j [ r|a − x_j|/Δx + g_j²/Δx² + (f_max + U)/Δy ]`.
pub fn monotone_dt_bound<S: Scalar>(spec: &ProblemSpec<S>, grid: &Grid<S>) -> S {
    let dx = grid.dx();
    let dy = grid.dy();
    let f_max = spec.battery.influx.eps_a * spec.irradiance.max_irradiance();
    let y_rate = (f_max + spec.battery.discharge_cap) / dy;
    let x_rate = (0..=grid.nx)
        .map(|j| {
            let x = grid.x(j);
            let g = spec.cloud.diffusion(x);
            spec.cloud.r * (spec.cloud.a - x).abs() / dx + g * g / (dx * dx)
        })
        .fold(S::zero(), S::max);
    let rate = x_rate + y_rate;
    if rate > S::zero() {
        S::one() / rate
    } else {
        c(1e12)
    }
}

fn keep_layer(record: &Recording, grid_nt: usize, wanted: &[usize], i: usize) -> bool {
    if i == 0 || i == grid_nt {
        return true;
    }
    match record {
        Recording::Endpoints => false,
        Recording::Full => true,
        Recording::Every(n) => *n > 0 && i.is_multiple_of(*n),
        Recording::Times(_) => wanted.binary_search(&i).is_ok(),
    }
}

/// Sweeps from the zero terminal layer back to `t0`.
pub fn solve<S: Scalar>(
    spec: &ProblemSpec<S>,
    grid: &Grid<S>,
    options: &SchemeOptions<S>,
) -> Result<SolutionFields<S>> {
    spec.validate()?;
    if (grid.capacity - spec.battery.capacity).abs() > S::epsilon() * spec.battery.capacity {
        return Err(Error::Contract("grid capacity differs from the battery capacity".into()));
    }
    if !(options.eps_guard > S::zero()) {
        return Err(Error::Contract("eps_guard must be positive".into()));
    }
    if options.enforce_step_bound {
        let bound = monotone_dt_bound(spec, grid);
        if grid.dt() > bound {
            return Err(Error::StepTooLarge {
                dt: grid.dt().to_f64_lossy(),
                bound: bound.to_f64_lossy(),
            });
        }
    }
    let mut wanted: Vec<usize> = match &options.record {
        Recording::Times(ts) => ts.iter().map(|&t| grid.nearest_layer(S::lit(t))).collect(),
        _ => Vec::new(),
    };
    wanted.sort_unstable();
    wanted.dedup();

    let mut layers = Vec::new();
    let mut psi = Vec::new();
    let mut u_star = Vec::new();
    let mut phi_star = Vec::new();

    let mut current = Array2::zeros(grid.shape());
    // policy at the terminal layer, from the zero terminal data
    let terminal = assemble_step(spec, grid, options, &current, grid.nt)?;
    layers.push(grid.nt);
    psi.push(current.clone());
    u_star.push(terminal.u_star);
    phi_star.push(terminal.phi_star);

    for i in (0..grid.nt).rev() {
        let step = assemble_step(spec, grid, options, &current, i)?;
        if let Some(((j, k), &v)) = step.psi.indexed_iter().find(|(_, &v)| v < S::zero()) {
            return Err(Error::Positivity { i, j, k, value: v.to_f64_lossy() });
        }
        if keep_layer(&options.record, grid.nt, &wanted, i) {
            layers.push(i);
            psi.push(step.psi.clone());
            u_star.push(step.u_star);
            phi_star.push(step.phi_star);
        }
        current = step.psi;
    }
    layers.reverse();
    psi.reverse();
    u_star.reverse();
    phi_star.reverse();
    Ok(SolutionFields { grid: *grid, layers, psi, u_star, phi_star })
}
