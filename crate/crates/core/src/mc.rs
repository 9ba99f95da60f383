//! Euler–Maruyama simulation of cloud cover and storage under a tabulated or
//! constant discharge policy, optionally with the worst-case drift
//! distortion, and Monte Carlo estimation of the entropy-discounted cost.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hjb::{ProblemSpec, SolutionFields};
use crate::meteo::irradiance;
use crate::system::{control_bounds, disutility, StorageLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistortionMode {
    #[default]
    None,
    /// Drift shifted by the tabulated `φ*`.
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PolicyMode {
    #[default]
    Tabulated,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Step in days.
    pub dt: f64,
    pub seed: u64,
    /// Start time (days since Jan 1 00:00).
    pub t_start: f64,
    /// Simulated length in days.
    pub horizon: f64,
    /// Keep every n-th step of each path; 0 keeps only the endpoints.
    pub record_stride: usize,
    pub distortion: DistortionMode,
    pub policy: PolicyMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            dt: 1e-3,
            seed: 0,
            t_start: 0.0,
            horizon: 1.0,
            record_stride: 0,
            distortion: DistortionMode::None,
            policy: PolicyMode::Tabulated,
        }
    }
}

impl SimConfig {
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_paths < 1 {
            problems.push("n_paths must be at least 1".to_string());
        }
        if !(self.dt > 0.0) {
            problems.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0) {
            problems.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.t_start >= 0.0) {
            problems.push(format!("t_start must be nonnegative, got {}", self.t_start));
        }
        if problems.is_empty() { Ok(()) } else { Err(Error::Validation(problems)) }
    }
}

/// State of one path at a recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub phi: f64,
    pub discount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    /// Recorded samples per path.
    pub samples: Vec<Vec<PathSample>>,
    /// Accumulated discounted cost per path.
    pub objectives: Vec<f64>,
    /// Number of steps where cloud cover had to be clamped back into `[0, 1]`.
    pub x_clamps: usize,
}

impl PathBundle {
    pub fn final_states(&self) -> impl Iterator<Item = &PathSample> {
        self.samples.iter().filter_map(|p| p.last())
    }
}

struct PathOutcome {
    samples: Vec<PathSample>,
    objective: f64,
    clamps: usize,
}

/// Simulates `sim.n_paths` paths from `(x0, y0)`. `fields` is needed when
/// the policy or the distortion is tabulated.
pub fn simulate_paths(
    spec: &ProblemSpec<f64>,
    fields: Option<&SolutionFields<f64>>,
    sim: &SimConfig,
    x0: f64,
    y0: f64,
) -> Result<PathBundle> {
    spec.validate()?;
    sim.validate()?;
    let cap = spec.battery.capacity;
    if !(0.0..=1.0).contains(&x0) || !(0.0..=cap).contains(&y0) {
        return Err(domain(format!("start ({x0}, {y0}) outside [0, 1] x [0, {cap}]")));
    }
    let needs_fields = sim.distortion == DistortionMode::Tabulated || sim.policy == PolicyMode::Tabulated;
    if needs_fields {
        let f = fields.ok_or_else(|| domain("tabulated policy or distortion needs solved fields"))?;
        let g = &f.grid;
        if (g.capacity - cap).abs() > 1e-12 * cap {
            return Err(Error::Validation(vec![format!(
                "field grid capacity {} differs from the battery capacity {cap}",
                g.capacity
            )]));
        }
        let end = g.t0 + g.horizon;
        let tol = 1e-9 * (1.0 + end.abs());
        if sim.t_start < g.t0 - tol || sim.t_start + sim.horizon > end + tol {
            return Err(Error::Validation(vec![format!(
                "simulation window [{}, {}] not covered by the fields [{}, {end}]",
                sim.t_start,
                sim.t_start + sim.horizon,
                g.t0
            )]));
        }
    }
    let eta_prime = spec.eta_prime()?;
    let n_steps = sim.n_steps();
    let dt = sim.horizon / n_steps as f64;

    let run = |path: usize| -> Result<PathOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
        rng.set_stream(path as u64);
        let sqdt = dt.sqrt();
        let (mut x, mut y) = (x0, y0);
        let mut discount = 1.0;
        let mut objective = 0.0;
        let mut clamps = 0;
        let mut samples = Vec::new();
        for step in 0..=n_steps {
            let t = sim.t_start + step as f64 * dt;
            let f = spec.battery.influx.rate(irradiance(&spec.irradiance, t)?, x);
            let (lo, hi) = control_bounds(StorageLevel::of(y, cap), f, spec.battery.discharge_cap);
            let u = match sim.policy {
                PolicyMode::Constant(v) => v,
                PolicyMode::Tabulated => fields.map_or(0.0, |fl| fl.u_at(t, x, y)),
            }
            .max(lo)
            .min(hi);
            let phi = match sim.distortion {
                DistortionMode::None => 0.0,
                DistortionMode::Tabulated => fields.map_or(0.0, |fl| fl.phi_at(t, x, y)),
            };
            let keep = step == 0
                || step == n_steps
                || (sim.record_stride > 0 && step % sim.record_stride == 0);
            if keep {
                samples.push(PathSample { t, x, y, u, phi, discount });
            }
            if step == n_steps {
                break;
            }
            let d = disutility(u, y, spec.target.at(t), spec.battery.discharge_cap, &spec.penalty);
            objective += discount * d * dt;
            discount *= (-phi * phi * dt / (2.0 * eta_prime)).exp();

            let g = spec.cloud.diffusion(x);
            let z: f64 = StandardNormal.sample(&mut rng);
            let nx = x + (spec.cloud.drift(x) + g * phi) * dt + g * sqdt * z;
            if !(0.0..=1.0).contains(&nx) {
                clamps += 1;
            }
            x = nx.clamp(0.0, 1.0);
            y = (y + (f - u) * dt).clamp(0.0, cap);
        }
        Ok(PathOutcome { samples, objective, clamps })
    };

    let outcomes: Vec<PathOutcome> = (0..sim.n_paths).into_par_iter().map(run).collect::<Result<_>>()?;
    let x_clamps = outcomes.iter().map(|o| o.clamps).sum();
    let objectives = outcomes.iter().map(|o| o.objective).collect();
    let samples = outcomes.into_iter().map(|o| o.samples).collect();
    Ok(PathBundle { samples, objectives, x_clamps })
}

/// Sample mean and standard error of the per-path discounted cost.
pub fn estimate_objective(bundle: &PathBundle) -> (f64, f64) {
    let n = bundle.objectives.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = bundle.objectives.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = bundle.objectives.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Writes `path_id,t,x,y,u,phi,discount` rows for every recorded sample.
pub fn write_paths_csv<W: Write>(bundle: &PathBundle, mut out: W) -> Result<()> {
    writeln!(out, "path_id,t,x,y,u,phi,discount")?;
    for (id, path) in bundle.samples.iter().enumerate() {
        for s in path {
            writeln!(
                out,
                "{id},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
                s.t, s.x, s.y, s.u, s.phi, s.discount
            )?;
        }
    }
    Ok(())
}
