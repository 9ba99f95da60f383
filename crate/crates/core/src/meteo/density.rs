//! Stationary and transient densities of the cloud-cover diffusion on (0, 1).

use super::CloudParams;
use crate::error::{domain, Error, Result};
use crate::quad::adaptive_simpson;
use crate::scalar::{c, Scalar};

/// Cell-centred density on a uniform partition of (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable<S> {
    pub values: Vec<S>,
}

impl<S: Scalar> DensityTable<S> {
    pub fn new(values: Vec<S>) -> Self {
        Self { values }
    }

    /// Uniform density on `n_cells` cells.
    pub fn uniform(n_cells: usize) -> Self {
        Self { values: vec![S::one(); n_cells] }
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> S {
        S::one() / S::of_usize(self.values.len())
    }

    pub fn center(&self, i: usize) -> S {
        (S::of_usize(i) + c(0.5)) * self.dx()
    }

    /// Total mass `Δx Σ p_i` (exact integral of the cell-wise constant density).
    pub fn mass(&self) -> S {
        self.dx() * self.values.iter().copied().sum::<S>()
    }

    /// Mass on `[lo, hi]`, counting partially covered cells proportionally.
    pub fn mass_between(&self, lo: S, hi: S) -> S {
        let dx = self.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let a = S::of_usize(i) * dx;
                let b = a + dx;
                let overlap = (b.min(hi) - a.max(lo)).max(S::zero());
                p * overlap
            })
            .sum()
    }

    /// `∫|p − q|`; both tables must share a resolution.
    pub fn l1_distance(&self, other: &Self) -> S {
        assert_eq!(self.n_cells(), other.n_cells(), "resolution mismatch");
        self.dx()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| (a - b).abs())
                .sum::<S>()
    }

    /// Probability of each of `n_bins` equal bins; `n_cells` must be a multiple.
    pub fn bin_masses(&self, n_bins: usize) -> Vec<S> {
        assert!(n_bins > 0 && self.n_cells().is_multiple_of(n_bins), "bins must tile the cells");
        let per = self.n_cells() / n_bins;
        let dx = self.dx();
        self.values
            .chunks(per)
            .map(|ch| dx * ch.iter().copied().sum::<S>())
            .collect()
    }

    /// Indices of interior cells that are strict local maxima.
    pub fn interior_maxima(&self) -> Vec<usize> {
        (1..self.n_cells().saturating_sub(1))
            .filter(|&i| self.values[i] > self.values[i - 1] && self.values[i] > self.values[i + 1])
            .collect()
    }
}

/// Stationary Fokker–Planck density at cell centres, normalized to unit mass.
///
/// `p(x) ∝ exp(∫_{1/2}^x 2b/g² dy) / g(x)²` with `b` the drift and `g` the
/// diffusion coefficient.
pub fn stationary_pdf<S: Scalar>(params: &CloudParams<S>, n_cells: usize) -> Result<DensityTable<S>> {
    params.validate()?;
    if n_cells < 16 {
        return Err(domain(format!("stationary density needs at least 16 cells, got {n_cells}")));
    }
    let half = c::<S>(0.5);
    let two = c::<S>(2.0);
    let integrand = |y: S| {
        let g = params.diffusion(y);
        two * params.drift(y) / (g * g)
    };
    let dx = S::one() / S::of_usize(n_cells);
    let log_density: Vec<S> = (0..n_cells)
        .map(|i| {
            let x = (S::of_usize(i) + half) * dx;
            let g = params.diffusion(x);
            adaptive_simpson(integrand, half, x, c(1e-12)) - (g * g).ln()
        })
        .collect();
    let peak = log_density.iter().copied().fold(S::neg_infinity(), S::max);
    if !peak.is_finite() {
        return Err(domain("stationary log-density is not finite"));
    }
    let mut values: Vec<S> = log_density.iter().map(|&l| (l - peak).exp()).collect();
    let total = dx * values.iter().copied().sum::<S>();
    for v in &mut values {
        *v = *v / total;
    }
    let table = DensityTable { values };
    let threshold = c::<S>(0.99);
    if table.values[0] * dx > threshold {
        return Err(Error::BoundaryCollapse("left (x = 0)"));
    }
    if table.values[n_cells - 1] * dx > threshold {
        return Err(Error::BoundaryCollapse("right (x = 1)"));
    }
    Ok(table)
}

/// Explicit conservative finite-volume step for the forward Kolmogorov
/// equation with zero-flux boundaries.
///
/// Drift fluxes are centered where that keeps the weights nonnegative and
/// upwinded elsewhere; the diffusive flux is the difference of
/// `g²p/2` across each face, so the update is a tridiagonal matrix with
/// nonnegative entries and unit column sums under the stability bound.
#[derive(Debug, Clone)]
pub struct FokkerPlanckStepper<S> {
    lower: Vec<S>,
    diag: Vec<S>,
    upper: Vec<S>,
}

/// Largest admissible rate `max_i (outflow coefficient of cell i) / Δt`.
fn max_outflow_rate<S: Scalar>(params: &CloudParams<S>, n_cells: usize) -> S {
    let (_, _, out) = face_coefficients(params, n_cells);
    out.into_iter().fold(S::zero(), S::max)
}

/// Per-cell inflow-from-left, inflow-from-right, and outflow rates.
fn face_coefficients<S: Scalar>(params: &CloudParams<S>, n: usize) -> (Vec<S>, Vec<S>, Vec<S>) {
    let dx = S::one() / S::of_usize(n);
    let half = c::<S>(0.5);
    let diff: Vec<S> = (0..n)
        .map(|i| {
            let g = params.diffusion((S::of_usize(i) + half) * dx);
            half * g * g / dx
        })
        .collect();
    // from_left[i]: rate at which mass in cell i−1 enters cell i
    let mut from_left = vec![S::zero(); n];
    let mut from_right = vec![S::zero(); n];
    let mut out = vec![S::zero(); n];
    for f in 0..n.saturating_sub(1) {
        let b = params.drift(S::of_usize(f + 1) * dx);
        // flux across face f+1/2 from cell f to cell f+1; centered drift
        // where both weights stay nonnegative, upwind otherwise
        let (mut right_ward, mut left_ward) = (half * b + diff[f], diff[f + 1] - half * b);
        if right_ward < S::zero() || left_ward < S::zero() {
            right_ward = b.max(S::zero()) + diff[f];
            left_ward = (-b).max(S::zero()) + diff[f + 1];
        }
        from_left[f + 1] = right_ward / dx;
        from_right[f] = left_ward / dx;
        out[f] = out[f] + right_ward / dx;
        out[f + 1] = out[f + 1] + left_ward / dx;
    }
    (from_left, from_right, out)
}

/// Minimum number of explicit substeps over `dt_total` days.
pub fn fk_min_substeps<S: Scalar>(params: &CloudParams<S>, n_cells: usize, dt_total: S) -> usize {
    let rate = max_outflow_rate(params, n_cells);
    let n = (dt_total * rate).ceil().to_f64_lossy();
    (n.max(1.0)) as usize
}

impl<S: Scalar> FokkerPlanckStepper<S> {
    /// Builds the step operator; fails if `dt` breaks the stability bound.
    pub fn new(params: &CloudParams<S>, n_cells: usize, dt: S) -> Result<Self> {
        let (from_left, from_right, out) = face_coefficients(params, n_cells);
        let rate = out.iter().copied().fold(S::zero(), S::max);
        if dt * rate > S::one() {
            let required = (dt * rate).ceil().to_f64_lossy() as usize;
            return Err(Error::Unstable { required });
        }
        Ok(Self {
            lower: from_left.iter().map(|&v| v * dt).collect(),
            diag: out.iter().map(|&v| S::one() - v * dt).collect(),
            upper: from_right.iter().map(|&v| v * dt).collect(),
        })
    }

    pub fn n_cells(&self) -> usize {
        self.diag.len()
    }

    /// One step: `next = A · current`.
    pub fn apply(&self, current: &[S], next: &mut [S]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut v = self.diag[i] * current[i];
            if i > 0 {
                v = v + self.lower[i] * current[i - 1];
            }
            if i + 1 < n {
                v = v + self.upper[i] * current[i + 1];
            }
            next[i] = v;
        }
    }

    /// Applies `steps` steps in place.
    pub fn evolve(&self, density: &mut Vec<S>, steps: usize) {
        let mut scratch = vec![S::zero(); density.len()];
        for _ in 0..steps {
            self.apply(density, &mut scratch);
            std::mem::swap(density, &mut scratch);
        }
    }
}

/// Evolves `p0` for `dt_total` days in `n_substeps` explicit steps.
pub fn fk_transition<S: Scalar>(
    params: &CloudParams<S>,
    p0: &DensityTable<S>,
    dt_total: S,
    n_substeps: usize,
) -> Result<DensityTable<S>> {
    params.validate()?;
    let mut problems = Vec::new();
    if p0.values.iter().any(|&v| !(v >= S::zero())) {
        problems.push("initial density has negative or non-finite entries".to_string());
    }
    let mass = p0.mass();
    if (mass - S::one()).abs() > c(1e-8) {
        problems.push(format!("initial density has mass {mass}, not 1"));
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    if !(dt_total >= S::zero()) {
        return Err(domain(format!("evolution time must be nonnegative, got {dt_total}")));
    }
    if dt_total == S::zero() {
        return Ok(p0.clone());
    }
    if n_substeps == 0 {
        return Err(Error::Unstable { required: fk_min_substeps(params, p0.n_cells(), dt_total) });
    }
    let dt = dt_total / S::of_usize(n_substeps);
    let stepper = FokkerPlanckStepper::new(params, p0.n_cells(), dt).map_err(|_| Error::Unstable {
        required: fk_min_substeps(params, p0.n_cells(), dt_total),
    })?;
    let mut values = p0.values.clone();
    stepper.evolve(&mut values, n_substeps);
    Ok(DensityTable { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form antiderivative of (a − y) / (y²(1 − y)²).
    fn antiderivative(a: f64, y: f64) -> f64 {
        -a / y + (a - 1.0) / (1.0 - y) + (2.0 * a - 1.0) * (y.ln() - (1.0 - y).ln())
    }

    fn closed_form_density(p: &CloudParams<f64>, n: usize) -> Vec<f64> {
        let dx = 1.0 / n as f64;
        let logs: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                let k = 2.0 * p.r / (p.sigma * p.sigma);
                k * (antiderivative(p.a, x) - antiderivative(p.a, 0.5))
                    - (p.sigma * x * (1.0 - x)).powi(2).ln()
            })
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = v.iter().sum::<f64>() * dx;
        v.iter().map(|x| x / s).collect()
    }

    #[test]
    fn stationary_matches_closed_form() {
        for p in [CloudParams::kyoto(), CloudParams::kanazawa(), CloudParams { r: 0.6, a: 0.7, sigma: 2.0 }] {
            let table = stationary_pdf(&p, 200).unwrap();
            let oracle = closed_form_density(&p, 200);
            for (a, b) in table.values.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-8 * b.max(1.0), "{a} vs {b}");
            }
            assert!((table.mass() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn stationary_rejects_coarse_grid() {
        assert!(stationary_pdf(&CloudParams::<f64>::kyoto(), 15).is_err());
    }

    #[test]
    fn stationary_reports_collapse() {
        // mean far from 1/2 with tiny noise concentrates mass at the edge cell
        let p = CloudParams { r: 50.0, a: 0.001, sigma: 0.05 };
        assert_eq!(stationary_pdf(&p, 16), Err(Error::BoundaryCollapse("left (x = 0)")));
        let p = CloudParams { r: 50.0, a: 0.999, sigma: 0.05 };
        assert_eq!(stationary_pdf(&p, 16), Err(Error::BoundaryCollapse("right (x = 1)")));
    }

    #[test]
    fn transition_identity_and_conservation() {
        let p = CloudParams::<f64>::kanazawa();
        let mut p0 = DensityTable::uniform(50);
        p0.values[10] = 5.0;
        let m = p0.mass();
        for v in &mut p0.values {
            *v /= m;
        }
        assert_eq!(fk_transition(&p, &p0, 0.0, 1).unwrap(), p0);
        let n = fk_min_substeps(&p, 50, 3.0);
        let out = fk_transition(&p, &p0, 3.0, n).unwrap();
        assert!((out.mass() - 1.0).abs() < 1e-8);
        assert!(out.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn transition_reports_required_substeps() {
        let p = CloudParams::<f64>::kanazawa();
        let p0 = DensityTable::uniform(100);
        let need = fk_min_substeps(&p, 100, 1.0);
        match fk_transition(&p, &p0, 1.0, need / 2) {
            Err(Error::Unstable { required }) => assert_eq!(required, need),
            other => panic!("expected instability, got {other:?}"),
        }
        assert!(fk_transition(&p, &p0, 1.0, need).is_ok());
    }

    #[test]
    fn transition_rejects_bad_initial_density() {
        let p = CloudParams::<f64>::kanazawa();
        let mut p0 = DensityTable::uniform(20);
        p0.values[0] = -1.0;
        assert!(matches!(fk_transition(&p, &p0, 1.0, 10_000), Err(Error::Validation(_))));
        let p0 = DensityTable::new(vec![2.0; 20]);
        assert!(matches!(fk_transition(&p, &p0, 1.0, 10_000), Err(Error::Validation(_))));
    }

    #[test]
    fn stationary_is_nearly_fixed() {
        let p = CloudParams::<f64>::kanazawa();
        let n = 200;
        let ps = stationary_pdf(&p, n).unwrap();
        let steps = fk_min_substeps(&p, n, 5.0);
        let out = fk_transition(&p, &ps, 5.0, steps).unwrap();
        let d = out.l1_distance(&ps);
        assert!(d < 0.02, "L1 drift {d}");
    }

    #[test]
    fn long_evolution_reaches_stationary() {
        let p = CloudParams::<f64>::kyoto();
        let n = 200;
        let ps = stationary_pdf(&p, n).unwrap();
        let mut p0 = DensityTable::uniform(n);
        for (i, v) in p0.values.iter_mut().enumerate() {
            *v = 1.0 + (i as f64 / n as f64);
        }
        let m = p0.mass();
        for v in &mut p0.values {
            *v /= m;
        }
        let steps = fk_min_substeps(&p, n, 200.0);
        let out = fk_transition(&p, &p0, 200.0, steps).unwrap();
        let d = out.l1_distance(&ps);
        assert!(d < 0.05, "L1 distance {d}");
        assert!((out.mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bin_masses_tile() {
        let t = DensityTable::<f64>::uniform(40);
        let bins = t.bin_masses(20);
        assert_eq!(bins.len(), 20);
        assert!(bins.iter().all(|&b| (b - 0.05).abs() < 1e-15));
        assert!((t.mass_between(0.5, 1.0) - 0.5).abs() < 1e-12);
    }
}
