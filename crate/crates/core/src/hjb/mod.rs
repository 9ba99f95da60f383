//! Explicit backward finite-difference solver for the robust Orlicz-risk
//! HJB equation on `[0, 1] × [0, Ȳ]`, plus its one-dimensional CIR variant.

mod cir;
mod export;
mod solver;
mod stencil;

pub use cir::{cir_dt_bound, solve_cir_numeric, CirSolution};
pub use export::{read_field_csv, write_field_csv};
pub use solver::{assemble_step, monotone_dt_bound, solve, StepOutput};
pub use stencil::{central_gradient_sq, godunov_gradient_sq, one_sided_diffs, GradientScheme, OneSided};

use ndarray::Array2;

use crate::error::{domain, Result};
use crate::meteo::{CloudParams, IrradianceConfig};
use crate::orlicz::OrliczSpec;
use crate::scalar::{c, Scalar};
use crate::system::{BatteryConfig, PenaltyWeights, TargetSchedule};

/// Everything that defines the control problem apart from discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<S> {
    pub cloud: CloudParams<S>,
    pub battery: BatteryConfig<S>,
    pub penalty: PenaltyWeights<S>,
    pub target: TargetSchedule<S>,
    pub irradiance: IrradianceConfig<S>,
    pub orlicz: OrliczSpec<S>,
    /// Uncertainty aversion `η > 0`.
    pub eta: S,
}

impl<S: Scalar> ProblemSpec<S> {
    /// Kanazawa with the default battery, penalties, target, `Φ(z) = z^{3/2}`
    /// and `η = 0.1`.
    pub fn kanazawa() -> Self {
        Self {
            cloud: CloudParams::kanazawa(),
            battery: BatteryConfig::default(),
            penalty: PenaltyWeights::default(),
            target: TargetSchedule::default(),
            irradiance: IrradianceConfig::kanazawa(),
            orlicz: OrliczSpec::Power { p: c(1.5) },
            eta: c(0.1),
        }
    }

    /// Same as [`ProblemSpec::kanazawa`] with Kyoto's climate and location.
    pub fn kyoto() -> Self {
        Self {
            cloud: CloudParams::kyoto(),
            irradiance: IrradianceConfig::kyoto(),
            ..Self::kanazawa()
        }
    }

    /// Net uncertainty aversion `η'`.
    pub fn eta_prime(&self) -> Result<S> {
        self.orlicz.net_uncertainty_aversion(self.eta)
    }

    pub fn validate(&self) -> Result<()> {
        self.cloud.validate()?;
        self.battery.validate()?;
        self.penalty.validate()?;
        self.target.validate(self.battery.discharge_cap)?;
        self.irradiance.validate()?;
        self.orlicz.validate()?;
        let ep = self.eta_prime()?;
        if !(ep > S::zero()) {
            return Err(domain(format!("net uncertainty aversion must be positive, got {ep}")));
        }
        Ok(())
    }
}

/// Space-time lattice. Time runs over `[t0, t0 + horizon]` (days since
/// Jan 1 00:00).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<S> {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub t0: S,
    pub horizon: S,
    pub capacity: S,
}

impl<S: Scalar> Grid<S> {
    pub fn new(nt: usize, nx: usize, ny: usize, t0: S, horizon: S, capacity: S) -> Result<Self> {
        if nt < 1 || nx < 2 || ny < 2 {
            return Err(domain(format!(
                "grid needs nt >= 1 and nx, ny >= 2; got ({nt}, {nx}, {ny})"
            )));
        }
        if !(horizon > S::zero()) || !(capacity > S::zero()) || !(t0 >= S::zero()) {
            return Err(domain("grid horizon and capacity must be positive, t0 nonnegative"));
        }
        Ok(Self { nt, nx, ny, t0, horizon, capacity })
    }

    /// Picks the smallest `nt` whose step is at most `fraction` of the
    /// monotone bound.
    pub fn with_bound_fraction(
        spec: &ProblemSpec<S>,
        nx: usize,
        ny: usize,
        t0: S,
        horizon: S,
        fraction: S,
    ) -> Result<Self> {
        let probe = Self::new(1, nx, ny, t0, horizon, spec.battery.capacity)?;
        let bound = monotone_dt_bound(spec, &probe) * fraction;
        let nt = (horizon / bound).ceil().to_f64_lossy().max(1.0) as usize;
        Self::new(nt, nx, ny, t0, horizon, spec.battery.capacity)
    }

    pub fn dt(&self) -> S {
        self.horizon / S::of_usize(self.nt)
    }
    pub fn dx(&self) -> S {
        S::one() / S::of_usize(self.nx)
    }
    pub fn dy(&self) -> S {
        self.capacity / S::of_usize(self.ny)
    }
    pub fn t(&self, i: usize) -> S {
        self.t0 + self.dt() * S::of_usize(i)
    }
    pub fn x(&self, j: usize) -> S {
        self.dx() * S::of_usize(j)
    }
    pub fn y(&self, k: usize) -> S {
        self.dy() * S::of_usize(k)
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.nx + 1, self.ny + 1)
    }
    /// Layer index nearest to time `t`, clamped to the grid.
    pub fn nearest_layer(&self, t: S) -> usize {
        let i = ((t - self.t0) / self.dt()).round().to_f64_lossy();
        (i.max(0.0) as usize).min(self.nt)
    }
}

/// Which time layers the solver keeps. Layers `0` and `nt` are always kept.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Recording {
    #[default]
    Endpoints,
    Full,
    /// Every n-th layer.
    Every(usize),
    /// Layers nearest to the given times.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOptions<S> {
    pub gradient: GradientScheme,
    /// Guard added to Ψ in divisions.
    pub eps_guard: S,
    pub record: Recording,
    /// Refuse steps above [`monotone_dt_bound`].
    pub enforce_step_bound: bool,
}

impl<S: Scalar> Default for SchemeOptions<S> {
    fn default() -> Self {
        Self {
            gradient: GradientScheme::Godunov,
            eps_guard: c(1e-10),
            record: Recording::Endpoints,
            enforce_step_bound: true,
        }
    }
}

/// Recorded layers of the value `Ψ`, the optimal discharge `u*` and the
/// worst-case distortion `φ*`, each indexed `[j, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFields<S> {
    pub grid: Grid<S>,
    /// Ascending layer indices.
    pub layers: Vec<usize>,
    pub psi: Vec<Array2<S>>,
    pub u_star: Vec<Array2<S>>,
    pub phi_star: Vec<Array2<S>>,
}

impl<S: Scalar> SolutionFields<S> {
    pub fn time(&self, pos: usize) -> S {
        self.grid.t(self.layers[pos])
    }

    /// Position of layer `i` among the recorded ones.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.layers.binary_search(&i).ok()
    }

    /// Recorded position whose time is nearest to `t`.
    pub fn nearest_position(&self, t: S) -> usize {
        let target = self.grid.nearest_layer(t);
        match self.layers.binary_search(&target) {
            Ok(p) => p,
            Err(0) => 0,
            Err(p) if p == self.layers.len() => p - 1,
            Err(p) => {
                if target - self.layers[p - 1] <= self.layers[p] - target { p - 1 } else { p }
            }
        }
    }

    pub fn psi_min(&self) -> S {
        self.psi.iter().flat_map(|a| a.iter().copied()).fold(S::infinity(), S::min)
    }

    pub fn psi_max(&self) -> S {
        self.psi.iter().flat_map(|a| a.iter().copied()).fold(S::neg_infinity(), S::max)
    }

    fn bilinear(&self, field: &Array2<S>, x: S, y: S) -> S {
        let g = &self.grid;
        let fx = (x / g.dx()).max(S::zero()).min(S::of_usize(g.nx));
        let fy = (y / g.dy()).max(S::zero()).min(S::of_usize(g.ny));
        let j = (fx.floor().to_f64_lossy() as usize).min(g.nx - 1);
        let k = (fy.floor().to_f64_lossy() as usize).min(g.ny - 1);
        let wx = fx - S::of_usize(j);
        let wy = fy - S::of_usize(k);
        let one = S::one();
        field[[j, k]] * (one - wx) * (one - wy)
            + field[[j + 1, k]] * wx * (one - wy)
            + field[[j, k + 1]] * (one - wx) * wy
            + field[[j + 1, k + 1]] * wx * wy
    }

    fn trilinear(&self, fields: &[Array2<S>], t: S, x: S, y: S) -> S {
        let s = (t - self.grid.t0) / self.grid.dt();
        let p = self.layers.partition_point(|&l| S::of_usize(l) <= s);
        if p == 0 {
            return self.bilinear(&fields[0], x, y);
        }
        if p == self.layers.len() {
            return self.bilinear(&fields[p - 1], x, y);
        }
        let (l0, l1) = (S::of_usize(self.layers[p - 1]), S::of_usize(self.layers[p]));
        let w = (s - l0) / (l1 - l0);
        let a = self.bilinear(&fields[p - 1], x, y);
        let b = self.bilinear(&fields[p], x, y);
        a + (b - a) * w
    }

    pub fn psi_at(&self, t: S, x: S, y: S) -> S {
        self.trilinear(&self.psi, t, x, y)
    }

    pub fn u_at(&self, t: S, x: S, y: S) -> S {
        self.trilinear(&self.u_star, t, x, y)
    }

    pub fn phi_at(&self, t: S, x: S, y: S) -> S {
        self.trilinear(&self.phi_star, t, x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = Grid::new(10, 4, 5, 1.0, 2.0, 0.5).unwrap();
        assert_eq!(g.dt(), 0.2);
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.dy(), 0.1);
        assert_eq!(g.t(10), 3.0);
        assert_eq!(g.nearest_layer(1.49), 2);
        assert_eq!(g.nearest_layer(99.0), 10);
        assert!(Grid::new(0, 4, 4, 0.0, 1.0, 1.0).is_err());
        assert!(Grid::new(1, 1, 4, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn default_problem_is_valid() {
        let p = ProblemSpec::<f64>::kanazawa();
        p.validate().unwrap();
        assert!((p.eta_prime().unwrap() - 0.65).abs() < 1e-15);
        ProblemSpec::<f64>::kyoto().validate().unwrap();
        ProblemSpec::<f32>::kanazawa().validate().unwrap();
    }

    #[test]
    fn interpolation_reproduces_bilinear_data() {
        let grid = Grid::new(4, 4, 4, 0.0, 1.0, 1.0).unwrap();
        let plane = |t: f64| Array2::from_shape_fn((5, 5), |(j, k)| t + 2.0 * j as f64 * 0.25 + 3.0 * k as f64 * 0.25);
        let fields = SolutionFields {
            grid,
            layers: vec![0, 4],
            psi: vec![plane(0.0), plane(1.0)],
            u_star: vec![plane(0.0), plane(1.0)],
            phi_star: vec![plane(0.0), plane(1.0)],
        };
        let v = fields.psi_at(0.25, 0.3, 0.7);
        assert!((v - (0.25 + 0.6 + 2.1)).abs() < 1e-12);
        assert_eq!(fields.nearest_position(0.7), 1);
        assert_eq!(fields.position(4), Some(1));
    }
}
