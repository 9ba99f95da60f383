//! Closed-form value of the uncontrolled CIR test problem
//! `dX = (a − rX)dt + σ√(rX) dB` with terminal data `e^{px}`.
//!
//! The value is `exp(α_t x + β_t)` where `α` solves the logistic equation
//! `α' = rα − rAα²`, `A = σ²(1 + η')/2`, `α_T = p`, and `β' = −aα`, `β_T = 0`.

use crate::error::{domain, Error, Result};
use crate::quad::adaptive_simpson;
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CIRParams<S> {
    pub a: S,
    pub r: S,
    pub sigma: S,
    /// Terminal exponent.
    pub p: S,
    pub eta_prime: S,
    /// Horizon `T`.
    pub horizon: S,
}

impl<S: Scalar> CIRParams<S> {
    /// `a = r = 1`, `σ = 0.2`, `p = 0.1`, `η' = 0.5`, `T = 1`.
    pub fn reference() -> Self {
        Self { a: S::one(), r: S::one(), sigma: c(0.2), p: c(0.1), eta_prime: c(0.5), horizon: S::one() }
    }

    /// `A = σ²(1 + η')/2`.
    pub fn riccati_coefficient(&self) -> S {
        self.sigma * self.sigma * (S::one() + self.eta_prime) * c(0.5)
    }

    /// `1/α_t`; zero for `p = 0` is handled by the callers.
    fn denominator(&self, t: S) -> S {
        let big_a = self.riccati_coefficient();
        big_a + (S::one() / self.p - big_a) * (self.r * (self.horizon - t)).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, v) in [("a", self.a), ("r", self.r), ("sigma", self.sigma), ("eta_prime", self.eta_prime), ("T", self.horizon)] {
            if !(v > S::zero()) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.p.is_finite() {
            problems.push("p must be finite".into());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        if self.p != S::zero() {
            // the denominator is monotone in t, so the endpoints decide its sign
            let d0 = self.denominator(S::zero());
            let d1 = self.denominator(self.horizon);
            let same_sign = (d0 > S::zero() && d1 > S::zero()) || (d0 < S::zero() && d1 < S::zero());
            if !same_sign {
                return Err(Error::Singular { t: self.singular_time().to_f64_lossy() });
            }
            if self.p > S::zero() && !(d0 > S::zero()) {
                return Err(Error::Singular { t: 0.0 });
            }
        }
        Ok(())
    }

    /// Time in `[0, T]` where the denominator vanishes (NaN if none).
    fn singular_time(&self) -> S {
        let big_a = self.riccati_coefficient();
        let ratio = -big_a / (S::one() / self.p - big_a);
        if ratio > S::zero() {
            self.horizon - ratio.ln() / self.r
        } else {
            S::nan()
        }
    }

    fn check_time(&self, t: S) -> Result<()> {
        if !(t >= S::zero() && t <= self.horizon) {
            return Err(domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }
}

/// `α_t = 1 / (A + (1/p − A) e^{r(T−t)})`.
pub fn alpha<S: Scalar>(cir: &CIRParams<S>, t: S) -> Result<S> {
    cir.check_time(t)?;
    if cir.p == S::zero() {
        return Ok(S::zero());
    }
    let d = cir.denominator(t);
    if d == S::zero() || !d.is_finite() {
        return Err(Error::Singular { t: t.to_f64_lossy() });
    }
    Ok(S::one() / d)
}

/// `dα/dt` from the logistic equation.
pub fn alpha_rate<S: Scalar>(cir: &CIRParams<S>, t: S) -> Result<S> {
    let al = alpha(cir, t)?;
    Ok(cir.r * al - cir.r * cir.riccati_coefficient() * al * al)
}

/// `β_t = a ∫_t^T α_s ds` by adaptive quadrature.
pub fn beta<S: Scalar>(cir: &CIRParams<S>, t: S) -> Result<S> {
    cir.check_time(t)?;
    if cir.p == S::zero() || t == cir.horizon {
        return Ok(S::zero());
    }
    cir.validate()?;
    let integral = adaptive_simpson(|s| S::one() / cir.denominator(s), t, cir.horizon, c(1e-12));
    Ok(cir.a * integral)
}

/// `Ψ(t, x) = exp(α_t x + β_t)`.
pub fn exact_value<S: Scalar>(cir: &CIRParams<S>, t: S, x: S) -> Result<S> {
    if !(x >= S::zero()) {
        return Err(domain(format!("x must be nonnegative, got {x}")));
    }
    Ok((alpha(cir, t)? * x + beta(cir, t)?).exp())
}

/// PDE residual of the closed form at `(t, x)`, using analytic derivatives.
pub fn hjb_residual<S: Scalar>(cir: &CIRParams<S>, t: S, x: S) -> Result<S> {
    let psi = exact_value(cir, t, x)?;
    let al = alpha(cir, t)?;
    let d_t = (alpha_rate(cir, t)? * x - cir.a * al) * psi;
    let d_x = al * psi;
    let d_xx = al * al * psi;
    let s2rx = cir.sigma * cir.sigma * cir.r * x;
    let half = c::<S>(0.5);
    Ok(d_t + (cir.a - cir.r * x) * d_x + half * s2rx * d_xx + cir.eta_prime * half * s2rx * d_x * d_x / psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> CIRParams<f64> {
        CIRParams::reference()
    }

    #[test]
    fn alpha_values() {
        let cir = reference();
        assert_eq!(alpha(&cir, 1.0).unwrap(), 0.1);
        let expected = 1.0 / (0.03 + 9.97 * std::f64::consts::E);
        assert!((alpha(&cir, 0.0).unwrap() - expected).abs() < 1e-15);
        assert!((alpha(&cir, 0.0).unwrap() - 0.036_857_84).abs() < 1e-8);
        let flat = CIRParams { p: 0.0, ..cir };
        assert_eq!(alpha(&flat, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn beta_values() {
        let cir = reference();
        assert_eq!(beta(&cir, 1.0).unwrap(), 0.0);
        assert_eq!(beta(&CIRParams { p: 0.0, ..cir }, 0.0).unwrap(), 0.0);
        // composite trapezoid with 10^6 panels as the independent check
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let f = |s: f64| alpha(&cir, s).unwrap();
        let trap = h * ((1..n).map(|i| f(i as f64 * h)).sum::<f64>() + 0.5 * (f(0.0) + f(1.0)));
        let b = beta(&cir, 0.0).unwrap();
        assert!((b - trap).abs() / trap < 1e-8, "{b} vs {trap}");
    }

    #[test]
    fn exact_value_edges() {
        let cir = reference();
        for x in [0.0, 0.5, 3.0] {
            assert!((exact_value(&cir, 1.0, x).unwrap() - (0.1 * x).exp()).abs() < 1e-15);
            assert_eq!(exact_value(&CIRParams { p: 0.0, ..cir }, 0.2, x).unwrap(), 1.0);
        }
        let v = exact_value(&cir, 0.0, 1.0).unwrap();
        let expected = (alpha(&cir, 0.0).unwrap() + beta(&cir, 0.0).unwrap()).exp();
        assert_eq!(v, expected);
    }

    #[test]
    fn alpha_solves_logistic_equation() {
        let cir = reference();
        let h = 1e-6;
        for i in 1..10 {
            let t = i as f64 / 10.0;
            let fd = (alpha(&cir, t + h).unwrap() - alpha(&cir, t - h).unwrap()) / (2.0 * h);
            let ode = alpha_rate(&cir, t).unwrap();
            assert!((fd - ode).abs() <= 1e-6 * ode.abs(), "t={t}: {fd} vs {ode}");
        }
    }

    #[test]
    fn residual_vanishes_on_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let cir = CIRParams {
                a: rng.random_range(0.2..2.0),
                r: rng.random_range(0.2..2.0),
                sigma: rng.random_range(0.05..0.8),
                p: rng.random_range(-0.5..0.5),
                eta_prime: rng.random_range(0.05..2.0),
                horizon: rng.random_range(0.5..2.0),
            };
            if cir.validate().is_err() {
                continue;
            }
            for ti in 0..20 {
                for xi in 0..20 {
                    let t = cir.horizon * ti as f64 / 20.0;
                    let x = 0.1 + 3.9 * xi as f64 / 19.0;
                    let psi = exact_value(&cir, t, x).unwrap();
                    assert!(psi > 0.0);
                    let res = hjb_residual(&cir, t, x).unwrap();
                    assert!(res.abs() < 1e-9 * psi, "residual {res} at ({t}, {x})");
                }
            }
        }
    }

    #[test]
    fn singular_denominator_rejected() {
        // 1/p < A puts a zero of the denominator inside [0, T]
        let cir = CIRParams { p: 30.0, sigma: 0.5, horizon: 5.0, ..reference() };
        assert!(matches!(cir.validate(), Err(Error::Singular { .. })));
        assert!(beta(&cir, 0.0).is_err());
        assert!(reference().validate().is_ok());
        assert!(CIRParams { r: 0.0, ..reference() }.validate().is_err());
    }
}
