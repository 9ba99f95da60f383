//! Least-squares identification of `(r, a, σ)` from one-day transitions.
//!
//! The stationary density depends on `a` and `r/σ²` only, so the objective
//! compares one-day transition histograms instead: for each start bin, the
//! empirical next-day histogram against the forward Kolmogorov evolution of
//! the empirical start distribution inside that bin.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::density::{fk_min_substeps, FokkerPlanckStepper};
use super::{CloudParams, CloudSeries};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, SimplexOptions};

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Start/end bins of the transition histogram.
    pub n_bins: usize,
    /// Finite-volume cells; a multiple of `n_bins`.
    pub n_cells: usize,
    pub max_iter: usize,
    /// Relative simplex diameter at termination.
    pub rel_tol: f64,
    /// Lower search bounds for `(r, a, σ)`.
    pub lower: [f64; 3],
    /// Upper search bounds for `(r, a, σ)`.
    pub upper: [f64; 3],
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_bins: 20,
            n_cells: 100,
            max_iter: 500,
            rel_tol: 1e-4,
            lower: [1e-3, 1e-3, 1e-2],
            upper: [20.0, 0.999, 8.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: CloudParams<f64>,
    pub init: CloudParams<f64>,
    /// Objective at the returned parameters.
    pub residual: f64,
    /// Objective at the initial parameters.
    pub init_residual: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit, a parameter sits on a search
    /// bound, or the series carries no transition information.
    pub converged: bool,
    /// Names of parameters pinned at a search bound.
    pub at_bound: Vec<&'static str>,
    pub note: Option<String>,
}

/// Transition counts gathered from a series.
struct Transitions {
    n_bins: usize,
    n_cells: usize,
    /// Start densities per bin, at cell resolution (empty rows for unused bins).
    starts: Vec<Vec<f64>>,
    /// Empirical next-day bin probabilities per start bin.
    empirical: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

fn index_of(x: f64, n: usize) -> usize {
    ((x * n as f64).floor() as usize).min(n - 1)
}

impl Transitions {
    fn gather(values: &[f64], n_bins: usize, n_cells: usize) -> Self {
        let per = n_cells / n_bins;
        let dx = 1.0 / n_cells as f64;
        let mut starts = vec![vec![0.0; n_cells]; n_bins];
        let mut empirical = vec![vec![0.0; n_bins]; n_bins];
        let mut counts = vec![0usize; n_bins];
        for w in values.windows(2) {
            let cell = index_of(w[0], n_cells);
            let b = cell / per;
            starts[b][cell] += 1.0;
            empirical[b][index_of(w[1], n_bins)] += 1.0;
            counts[b] += 1;
        }
        for b in 0..n_bins {
            if counts[b] > 0 {
                let n = counts[b] as f64;
                starts[b].iter_mut().for_each(|v| *v /= n * dx);
                empirical[b].iter_mut().for_each(|v| *v /= n);
            }
        }
        Self { n_bins, n_cells, starts, empirical, counts }
    }

    fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&n| n > 0).count()
    }

    /// Count-weighted squared histogram mismatch.
    fn objective(&self, params: &CloudParams<f64>) -> f64 {
        if params.validate().is_err() {
            return f64::INFINITY;
        }
        let steps = fk_min_substeps(params, self.n_cells, 1.0);
        let Ok(stepper) = FokkerPlanckStepper::new(params, self.n_cells, 1.0 / steps as f64) else {
            return f64::INFINITY;
        };
        let per = self.n_cells / self.n_bins;
        let dx = 1.0 / self.n_cells as f64;
        (0..self.n_bins)
            .into_par_iter()
            .filter(|&b| self.counts[b] > 0)
            .map(|b| {
                let mut p = self.starts[b].clone();
                stepper.evolve(&mut p, steps);
                let sq: f64 = p
                    .chunks(per)
                    .zip(&self.empirical[b])
                    .map(|(ch, &e)| {
                        let pred = dx * ch.iter().sum::<f64>();
                        (e - pred) * (e - pred)
                    })
                    .sum();
                self.counts[b] as f64 * sq
            })
            .sum()
    }
}

/// Fits with [`FitOptions::default`].
pub fn fit_transition_lsq(series: &CloudSeries, init: CloudParams<f64>) -> Result<FitReport> {
    fit_transition_lsq_with(series, init, &FitOptions::default())
}

pub fn fit_transition_lsq_with(
    series: &CloudSeries,
    init: CloudParams<f64>,
    opts: &FitOptions,
) -> Result<FitReport> {
    if series.len() < 365 {
        return Err(Error::Validation(vec![format!(
            "series has {} days; at least 365 are required",
            series.len()
        )]));
    }
    series.validate()?;
    init.validate()?;
    if opts.n_bins == 0 || !opts.n_cells.is_multiple_of(opts.n_bins) {
        return Err(Error::Validation(vec!["n_cells must be a positive multiple of n_bins".into()]));
    }

    let data = Transitions::gather(&series.values, opts.n_bins, opts.n_cells);
    let init_residual = data.objective(&init);
    if data.occupied_bins() < 2 {
        return Ok(FitReport {
            params: init,
            init,
            residual: init_residual,
            init_residual,
            iterations: 0,
            converged: false,
            at_bound: Vec::new(),
            note: Some("all observations fall in a single bin; no diffusion information".into()),
        });
    }

    let simplex = SimplexOptions {
        max_iter: opts.max_iter,
        rel_tol: opts.rel_tol,
        initial_step: 0.1,
        lower: opts.lower.to_vec(),
        upper: opts.upper.to_vec(),
    };
    let outcome = nelder_mead(
        |v| data.objective(&CloudParams { r: v[0], a: v[1], sigma: v[2] }),
        &[init.r, init.a, init.sigma],
        &simplex,
    );
    let params = CloudParams { r: outcome.best[0], a: outcome.best[1], sigma: outcome.best[2] };
    let names = ["r", "a", "sigma"];
    let at_bound: Vec<&'static str> = (0..3)
        .filter(|&i| {
            let v = outcome.best[i];
            (v - opts.lower[i]).abs() <= 1e-9 * opts.lower[i].abs().max(1.0)
                || (v - opts.upper[i]).abs() <= 1e-9 * opts.upper[i].abs().max(1.0)
        })
        .map(|i| names[i])
        .collect();
    Ok(FitReport {
        params,
        init,
        residual: outcome.value,
        init_residual,
        iterations: outcome.iterations,
        converged: outcome.converged && at_bound.is_empty(),
        at_bound,
        note: None,
    })
}

/// Euler–Maruyama simulation recorded once per day, clamped to [0, 1].
pub fn simulate_daily_series(
    params: &CloudParams<f64>,
    n_days: usize,
    x0: f64,
    seed: u64,
    substeps_per_day: usize,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / substeps_per_day as f64;
    let sqdt = dt.sqrt();
    let mut x = x0.clamp(0.0, 1.0);
    let mut out = Vec::with_capacity(n_days);
    out.push(x);
    for _ in 1..n_days {
        for _ in 0..substeps_per_day {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = (x + params.drift(x) * dt + params.diffusion(x) * sqdt * z).clamp(0.0, 1.0);
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn series(values: Vec<f64>) -> CloudSeries {
        CloudSeries::from_values(NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(), values).unwrap()
    }

    #[test]
    fn short_series_rejected() {
        let s = series(vec![0.5; 100]);
        assert!(matches!(
            fit_transition_lsq(&s, CloudParams::kanazawa()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn constant_series_is_flagged() {
        let s = series(vec![0.5; 400]);
        let rep = fit_transition_lsq(&s, CloudParams::kanazawa()).unwrap();
        assert!(!rep.converged);
    }

    #[test]
    fn simulated_series_stays_in_unit_interval() {
        let p = CloudParams { r: 0.6, a: 0.7, sigma: 2.0 };
        let xs = simulate_daily_series(&p, 500, 0.5, 3, 200);
        assert_eq!(xs.len(), 500);
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(xs, simulate_daily_series(&p, 500, 0.5, 3, 200));
    }

    #[test]
    fn objective_is_small_at_truth() {
        let truth = CloudParams { r: 0.6, a: 0.7, sigma: 2.0 };
        let xs = simulate_daily_series(&truth, 3650, 0.6, 11, 1000);
        let data = Transitions::gather(&xs, 20, 100);
        let at_truth = data.objective(&truth);
        let off = data.objective(&CloudParams { r: 1.2, a: 0.5, sigma: 1.0 });
        assert!(at_truth < off, "{at_truth} vs {off}");
    }
}
