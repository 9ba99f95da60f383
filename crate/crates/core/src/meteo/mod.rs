//! Cloud-cover diffusion `dX = r(a − X)dt + σX(1 − X)dB`, its densities,
//! parameter identification, and the solar energy influx it drives.

mod density;
mod fit;
mod ingest;
mod irradiance;

pub use density::{fk_min_substeps, fk_transition, stationary_pdf, DensityTable, FokkerPlanckStepper};
pub use fit::{fit_transition_lsq, fit_transition_lsq_with, simulate_daily_series, FitOptions, FitReport};
pub use ingest::{ingest_cloud_csv, ingest_irradiance_csv, parse_cloud_csv, CloudScale, CloudSeries};
pub use irradiance::{energy_influx, irradiance, IrradianceConfig, InfluxParams, SOLAR_CONSTANT, TRANSMITTANCE};

use crate::error::{domain, Result};
use crate::scalar::{c, Scalar};

/// Parameters `(r, a, σ)` of the bounded cloud-cover diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudParams<S> {
    /// Mean-reversion rate (1/day).
    pub r: S,
    /// Long-run mean, in (0, 1).
    pub a: S,
    /// Volatility scale (1/day^{1/2}).
    pub sigma: S,
}

impl<S: Scalar> CloudParams<S> {
    pub fn new(r: S, a: S, sigma: S) -> Result<Self> {
        let p = Self { r, a, sigma };
        p.validate()?;
        Ok(p)
    }

    /// Fitted values for Kyoto.
    pub fn kyoto() -> Self {
        Self { r: c(0.602), a: c(0.709), sigma: c(2.04) }
    }

    /// Fitted values for Kanazawa.
    pub fn kanazawa() -> Self {
        Self { r: c(0.580), a: c(0.766), sigma: c(2.27) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > S::zero()) {
            return Err(domain(format!("r must be positive, got {}", self.r)));
        }
        if !(self.a > S::zero() && self.a < S::one()) {
            return Err(domain(format!("a must lie in (0, 1), got {}", self.a)));
        }
        if !(self.sigma > S::zero()) {
            return Err(domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Drift `r(a − x)`; no domain check.
    #[inline]
    pub fn drift(&self, x: S) -> S {
        self.r * (self.a - x)
    }

    /// Diffusion coefficient `σx(1 − x)`; no domain check.
    #[inline]
    pub fn diffusion(&self, x: S) -> S {
        self.sigma * x * (S::one() - x)
    }

    /// `(drift, diffusion)` at `x ∈ [0, 1]`.
    pub fn drift_diffusion(&self, x: S) -> Result<(S, S)> {
        if !(x >= S::zero() && x <= S::one()) {
            return Err(domain(format!("cloud cover must lie in [0, 1], got {x}")));
        }
        Ok((self.drift(x), self.diffusion(x)))
    }
}
