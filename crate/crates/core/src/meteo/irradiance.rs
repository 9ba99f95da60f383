//! Clear-sky beam irradiance on a tilted panel and the resulting energy influx.
//!
//! Time `t` counts days from January 1 00:00; clock time is taken as solar
//! time.

use crate::error::{domain, Error, Result};
use crate::scalar::{c, Scalar};

/// Solar constant (W/m²).
pub const SOLAR_CONSTANT: f64 = 1367.0;
/// Fixed clear-sky beam transmittance of the builtin model.
pub const TRANSMITTANCE: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub enum IrradianceConfig<S> {
    /// Geometric clear-sky model. Angles in degrees; azimuth 0 = south,
    /// positive towards west.
    Builtin { latitude: S, tilt: S, azimuth: S },
    /// Tabulated `(t_days, irradiance)` pairs, interpolated linearly.
    External { table: Vec<(S, S)> },
}

impl<S: Scalar> IrradianceConfig<S> {
    /// South-facing panel at 45° slope in Kanazawa.
    pub fn kanazawa() -> Self {
        Self::Builtin { latitude: c(36.588), tilt: c(45.0), azimuth: S::zero() }
    }

    /// South-facing panel at 45° slope in Kyoto.
    pub fn kyoto() -> Self {
        Self::Builtin { latitude: c(35.013), tilt: c(45.0), azimuth: S::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        match self {
            Self::Builtin { latitude, tilt, azimuth } => {
                if !(latitude.abs() <= c(90.0)) {
                    problems.push(format!("latitude {latitude} outside [-90, 90]"));
                }
                if !(*tilt >= S::zero() && *tilt <= c(90.0)) {
                    problems.push(format!("tilt {tilt} outside [0, 90]"));
                }
                if !azimuth.is_finite() {
                    problems.push("azimuth is not finite".into());
                }
            }
            Self::External { table } => {
                if table.len() < 2 {
                    problems.push("irradiance table needs at least two rows".into());
                }
                for (i, w) in table.windows(2).enumerate() {
                    if !(w[1].0 > w[0].0) {
                        problems.push(format!("irradiance times not increasing at row {}", i + 2));
                    }
                }
                for (i, &(_, v)) in table.iter().enumerate() {
                    if !(v >= S::zero()) {
                        problems.push(format!("negative irradiance at row {}", i + 1));
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// An upper bound on the irradiance over all times.
    pub fn max_irradiance(&self) -> S {
        match self {
            Self::Builtin { .. } => c(SOLAR_CONSTANT * 1.033 * TRANSMITTANCE),
            Self::External { table } => table.iter().map(|r| r.1).fold(S::zero(), S::max),
        }
    }
}

/// Solar declination (radians) on day-of-year `n` (1-based).
pub(crate) fn declination<S: Scalar>(n: S) -> S {
    let two_pi = c::<S>(std::f64::consts::TAU);
    c::<S>(23.45).to_radians() * (two_pi * (c::<S>(284.0) + n) / c(365.0)).sin()
}

/// Irradiance on the panel at time `t` (days since Jan 1 00:00).
pub fn irradiance<S: Scalar>(config: &IrradianceConfig<S>, t: S) -> Result<S> {
    if !(t >= S::zero()) {
        return Err(domain(format!("time must be nonnegative, got {t}")));
    }
    match config {
        IrradianceConfig::Builtin { latitude, tilt, azimuth } => Ok(clear_sky(
            latitude.to_radians(),
            tilt.to_radians(),
            azimuth.to_radians(),
            t,
        )),
        IrradianceConfig::External { table } => interpolate(table, t),
    }
}

fn interpolate<S: Scalar>(table: &[(S, S)], t: S) -> Result<S> {
    let (lo, hi) = match (table.first(), table.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(Error::Validation(vec!["empty irradiance table".into()])),
    };
    if t < lo || t > hi {
        return Err(Error::OutOfRange {
            t: t.to_f64_lossy(),
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let idx = table.partition_point(|r| r.0 <= t);
    if idx == table.len() {
        return Ok(table[table.len() - 1].1);
    }
    let (t0, v0) = table[idx - 1];
    let (t1, v1) = table[idx];
    Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
}

fn clear_sky<S: Scalar>(lat: S, tilt: S, az: S, t: S) -> S {
    let day = t.floor();
    let n = S::lit(day.to_f64_lossy().rem_euclid(365.0) + 1.0);
    let delta = declination(n);
    let hour = (t - day) * c(24.0);
    let omega = (c::<S>(15.0) * (hour - c(12.0))).to_radians();

    let (sd, cd) = delta.sin_cos();
    let (sp, cp) = lat.sin_cos();
    let (sw, cw) = omega.sin_cos();
    let cos_zenith = sp * sd + cp * cd * cw;
    if cos_zenith <= S::zero() {
        return S::zero();
    }
    let (sb, cb) = tilt.sin_cos();
    let (sg, cg) = az.sin_cos();
    let cos_incidence = sd * sp * cb - sd * cp * sb * cg
        + cd * cp * cb * cw
        + cd * sp * sb * cg * cw
        + cd * sb * sg * sw;
    let extraterrestrial = c::<S>(SOLAR_CONSTANT)
        * (S::one() + c::<S>(0.033) * (c::<S>(std::f64::consts::TAU) * n / c(365.0)).cos());
    (extraterrestrial * c(TRANSMITTANCE) * cos_incidence).max(S::zero())
}

/// Regression constants of the panel influx `εA·I·(1 − f0·x^f1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluxParams<S> {
    /// Efficiency times panel area.
    pub eps_a: S,
    pub f0: S,
    pub f1: S,
}

impl<S: Scalar> Default for InfluxParams<S> {
    fn default() -> Self {
        Self { eps_a: c(0.001), f0: c(0.81), f1: c(1.9) }
    }
}

impl<S: Scalar> InfluxParams<S> {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.eps_a > S::zero()) {
            problems.push(format!("eps_a must be positive, got {}", self.eps_a));
        }
        if !(self.f0 > S::zero() && self.f0 < S::one()) {
            problems.push(format!("f0 must lie in (0, 1), got {}", self.f0));
        }
        if !(self.f1 > S::zero()) {
            problems.push(format!("f1 must be positive, got {}", self.f1));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Unchecked influx rate.
    #[inline]
    pub fn rate(&self, irr: S, x: S) -> S {
        self.eps_a * irr * (S::one() - self.f0 * x.powf(self.f1))
    }
}

/// Energy stored per unit time from irradiance `irr` under cloud cover `x`.
pub fn energy_influx<S: Scalar>(influx: &InfluxParams<S>, irr: S, x: S) -> Result<S> {
    if !(irr >= S::zero()) {
        return Err(domain(format!("irradiance must be nonnegative, got {irr}")));
    }
    if !(x >= S::zero() && x <= S::one()) {
        return Err(domain(format!("cloud cover must lie in [0, 1], got {x}")));
    }
    Ok(influx.rate(irr, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midnight_is_dark() {
        let cfg = IrradianceConfig::<f64>::kanazawa();
        for day in [0.0, 80.0, 171.0, 355.0] {
            assert_eq!(irradiance(&cfg, day).unwrap(), 0.0);
        }
        let south = IrradianceConfig::Builtin { latitude: -33.9, tilt: 30.0, azimuth: 180.0 };
        assert_eq!(irradiance(&south, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn equinox_noon_incidence() {
        // day 81 has zero declination; zenith equals latitude at noon
        assert!(declination(81.0f64).abs() < 1e-12);
        let cfg = IrradianceConfig::Builtin { latitude: 36.59, tilt: 45.0, azimuth: 0.0 };
        let beam = SOLAR_CONSTANT
            * (1.0 + 0.033 * (std::f64::consts::TAU * 81.0 / 365.0).cos())
            * TRANSMITTANCE;
        let got = irradiance(&cfg, 80.5).unwrap() / beam;
        let expected = (45.0f64 - 36.59).to_radians().cos();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.989, epsilon = 5e-4);
    }

    #[test]
    fn summer_and_winter_days_are_lit() {
        let cfg = IrradianceConfig::<f64>::kanazawa();
        let total = |d0: f64| {
            (0..240)
                .map(|h| irradiance(&cfg, d0 + h as f64 / 240.0).unwrap())
                .sum::<f64>()
        };
        assert!(total(171.0) > 0.0 && total(355.0) > 0.0);
        // the tilted panel sees a longer day in June
        let lit = |d0: f64| {
            (0..240)
                .filter(|h| irradiance(&cfg, d0 + *h as f64 / 240.0).unwrap() > 0.0)
                .count()
        };
        assert!(lit(171.0) > lit(355.0));
    }

    #[test]
    fn external_interpolation() {
        let cfg = IrradianceConfig::External { table: vec![(0.0, 100.0), (1.0, 200.0)] };
        cfg.validate().unwrap();
        assert_eq!(irradiance(&cfg, 0.5).unwrap(), 150.0);
        assert_eq!(irradiance(&cfg, 1.0).unwrap(), 200.0);
        assert!(matches!(irradiance(&cfg, 1.5), Err(Error::OutOfRange { .. })));
        assert_eq!(cfg.max_irradiance(), 200.0);
    }

    #[test]
    fn builtin_bound_dominates() {
        let cfg = IrradianceConfig::<f64>::kanazawa();
        let bound = cfg.max_irradiance();
        for i in 0..(365 * 48) {
            assert!(irradiance(&cfg, i as f64 / 48.0).unwrap() <= bound);
        }
    }

    #[test]
    fn validation() {
        let bad_lat = IrradianceConfig::Builtin { latitude: 91.0, tilt: 10.0, azimuth: 0.0 };
        assert!(bad_lat.validate().is_err());
        let bad_tilt = IrradianceConfig::Builtin { latitude: 10.0, tilt: 95.0, azimuth: 0.0 };
        assert!(bad_tilt.validate().is_err());
        let unsorted = IrradianceConfig::External { table: vec![(1.0, 1.0), (0.0, 1.0)] };
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn influx_examples() {
        let p = InfluxParams::<f64>::default();
        assert_eq!(energy_influx(&p, 500.0, 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(energy_influx(&p, 500.0, 1.0).unwrap(), 0.19 * 0.5, epsilon = 1e-15);
        assert_eq!(energy_influx(&p, 0.0, 0.4).unwrap(), 0.0);
        assert!(energy_influx(&p, -1.0, 0.4).is_err());
        assert!(energy_influx(&p, 1.0, 1.4).is_err());
    }

    #[test]
    fn influx_decreases_with_cover() {
        let p = InfluxParams::<f64>::default();
        let vals: Vec<f64> = (0..=100).map(|i| p.rate(800.0, i as f64 / 100.0)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }
}
