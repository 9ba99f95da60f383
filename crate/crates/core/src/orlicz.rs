//! Orlicz functions and the scalars the control problem derives from them.
//!
//! The value function only sees an Orlicz function through `Φ'(1)` and
//! `Φ''(1)`, which combine with the ambiguity level `η` into the net
//! uncertainty aversion `η' = (Φ'(1)² η + Φ''(1)) / Φ'(1)`.

use crate::error::{domain, Error, Result};
use crate::scalar::{c, Scalar};

/// An increasing convex `Φ` on `[0, ∞)` with `Φ(0) = 0`, `Φ(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrliczSpec<S> {
    /// `Φ(z) = z`.
    Identity,
    /// `Φ(z) = z^p`, `p > 1`.
    Power { p: S },
    /// `Φ(z) = (e^{μz} − 1) / (e^μ − 1)`, `μ > 0`.
    ScaledExponential { mu: S },
    /// Only the local data `(Φ'(1), Φ''(1))`; cannot be evaluated pointwise.
    Custom { phi1: S, phi2: S },
}

impl<S: Scalar> OrliczSpec<S> {
    pub fn power(p: S) -> Result<Self> {
        if !(p > S::one()) {
            return Err(domain(format!("power exponent must exceed 1, got {p}")));
        }
        Ok(Self::Power { p })
    }

    pub fn scaled_exponential(mu: S) -> Result<Self> {
        if !(mu > S::zero()) {
            return Err(domain(format!("exponential rate must be positive, got {mu}")));
        }
        Ok(Self::ScaledExponential { mu })
    }

    pub fn custom(phi1: S, phi2: S) -> Result<Self> {
        if !(phi1 > S::zero()) || !(phi2 >= S::zero()) {
            return Err(domain(format!(
                "custom Orlicz data needs phi1 > 0 and phi2 >= 0, got ({phi1}, {phi2})"
            )));
        }
        Ok(Self::Custom { phi1, phi2 })
    }

    /// Evaluates `Φ(z)`.
    pub fn eval(&self, z: S) -> Result<S> {
        if !(z >= S::zero()) {
            return Err(domain(format!("Orlicz argument must be nonnegative, got {z}")));
        }
        match *self {
            Self::Identity => Ok(z),
            Self::Power { p } => Ok(z.powf(p)),
            Self::ScaledExponential { mu } => Ok((mu * z).exp_m1() / mu.exp_m1()),
            Self::Custom { .. } => Err(Error::UnsupportedEvaluation),
        }
    }

    /// `(Φ'(1), Φ''(1))`.
    pub fn derivatives_at_one(&self) -> (S, S) {
        match *self {
            Self::Identity => (S::one(), S::zero()),
            Self::Power { p } => (p, p * (p - S::one())),
            Self::ScaledExponential { mu } => {
                let scale = mu.exp() / mu.exp_m1();
                (mu * scale, mu * mu * scale)
            }
            Self::Custom { phi1, phi2 } => (phi1, phi2),
        }
    }

    /// Net uncertainty aversion `η'` for ambiguity level `η > 0`.
    pub fn net_uncertainty_aversion(&self, eta: S) -> Result<S> {
        if !(eta > S::zero()) {
            return Err(domain(format!("eta must be positive, got {eta}")));
        }
        let (phi1, phi2) = self.derivatives_at_one();
        Ok((phi1 * phi1 * eta + phi2) / phi1)
    }

    /// Samples `[0, 4]` and checks normalization, monotonicity and convexity.
    ///
    /// Custom kinds only have their derivative data checked.
    pub fn validate(&self) -> Result<()> {
        let (phi1, phi2) = self.derivatives_at_one();
        let mut problems = Vec::new();
        if !(phi1 > S::zero()) {
            problems.push(format!("Phi'(1) = {phi1} is not positive"));
        }
        if !(phi2 >= S::zero()) {
            problems.push(format!("Phi''(1) = {phi2} is negative"));
        }
        if matches!(self, Self::Custom { .. }) {
            return if problems.is_empty() { Ok(()) } else { Err(Error::Validation(problems)) };
        }
        let tol = c::<S>(1e-12);
        if (self.eval(S::zero())?).abs() > tol {
            problems.push("Phi(0) != 0".into());
        }
        if (self.eval(S::one())? - S::one()).abs() > tol {
            problems.push("Phi(1) != 1".into());
        }
        let n = 400;
        let h = c::<S>(4.0) / S::of_usize(n);
        let vals = (0..=n)
            .map(|i| self.eval(S::of_usize(i) * h))
            .collect::<Result<Vec<_>>>()?;
        if vals.windows(2).any(|w| w[1] < w[0]) {
            problems.push("Phi is not nondecreasing on [0, 4]".into());
        }
        // scaled to the magnitude of the values to tolerate rounding
        let conv_tol = c::<S>(-1e-10) * vals[n].abs().max(S::one());
        if vals
            .windows(3)
            .any(|w| w[2] - c::<S>(2.0) * w[1] + w[0] < conv_tol)
        {
            problems.push("Phi is not convex on [0, 4]".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Static Orlicz norm of a discrete positive distribution: the smallest
/// `h > 0` with `E[Φ(Z/h)] ≤ 1`, located by bisection on `[min Z, max Z]`.
///
/// `outcomes` holds `(value, probability)` pairs.
pub fn orlicz_norm_static<S: Scalar>(outcomes: &[(S, S)], spec: &OrliczSpec<S>) -> Result<S> {
    if outcomes.is_empty() {
        return Err(Error::Validation(vec!["empty distribution".into()]));
    }
    let mut problems = Vec::new();
    for (i, &(z, w)) in outcomes.iter().enumerate() {
        if !(z > S::zero()) {
            problems.push(format!("outcome {i} = {z} is not positive"));
        }
        if !(w >= S::zero()) {
            problems.push(format!("probability {i} = {w} is negative"));
        }
    }
    let mass: S = outcomes.iter().map(|&(_, w)| w).sum();
    if (mass - S::one()).abs() > c(1e-12) {
        problems.push(format!("probabilities sum to {mass}, not 1"));
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    if matches!(spec, OrliczSpec::Custom { .. }) {
        return Err(Error::UnsupportedEvaluation);
    }

    let expected = |h: S| -> Result<S> {
        outcomes
            .iter()
            .map(|&(z, w)| spec.eval(z / h).map(|v| v * w))
            .sum::<Result<S>>()
    };
    let mut lo = outcomes.iter().map(|o| o.0).fold(S::infinity(), S::min);
    let mut hi = outcomes.iter().map(|o| o.0).fold(S::zero(), S::max);
    if lo == hi {
        return Ok(lo);
    }
    // invariant: E[Φ(Z/hi)] <= 1, smallest feasible h lies in [lo, hi]
    let tol = c::<S>(1e-13).max(S::epsilon() * c(4.0));
    for _ in 0..200 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = (lo + hi) * c(0.5);
        if expected(mid)? <= S::one() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn central_fd(spec: &OrliczSpec<f64>, h: f64) -> (f64, f64) {
        let f = |z: f64| spec.eval(z).unwrap();
        let d1 = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
        let d2 = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn normalization() {
        let p = OrliczSpec::power(1.5).unwrap();
        assert_eq!(p.eval(1.0).unwrap(), 1.0);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        let e = OrliczSpec::scaled_exponential(1.0).unwrap();
        assert_abs_diff_eq!(e.eval(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(e.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn eval_errors() {
        let p = OrliczSpec::power(1.5).unwrap();
        assert!(matches!(p.eval(-0.1), Err(Error::Domain(_))));
        let cst = OrliczSpec::custom(1.0, 0.0).unwrap();
        assert_eq!(cst.eval(0.5), Err(Error::UnsupportedEvaluation));
        assert!(OrliczSpec::power(1.0).is_err());
        assert!(OrliczSpec::scaled_exponential(0.0).is_err());
        assert!(OrliczSpec::custom(0.0, 1.0).is_err());
        assert!(OrliczSpec::custom(1.0, -1.0).is_err());
    }

    #[test]
    fn derivatives_known_values() {
        assert_eq!(OrliczSpec::<f64>::Identity.derivatives_at_one(), (1.0, 0.0));
        let (d1, d2) = OrliczSpec::power(1.5).unwrap().derivatives_at_one();
        assert_eq!((d1, d2), (1.5, 0.75));
        // e / (e - 1), same for both derivatives at μ = 1
        let (d1, d2) = OrliczSpec::scaled_exponential(1.0).unwrap().derivatives_at_one();
        assert_abs_diff_eq!(d1, 1.581_976_706_869_326_5, epsilon = 1e-13);
        assert_abs_diff_eq!(d2, 1.581_976_706_869_326_5, epsilon = 1e-13);
        assert_eq!(OrliczSpec::custom(2.0, 3.0).unwrap().derivatives_at_one(), (2.0, 3.0));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for spec in [
            OrliczSpec::Identity,
            OrliczSpec::power(1.5).unwrap(),
            OrliczSpec::power(3.0).unwrap(),
            OrliczSpec::scaled_exponential(1.0).unwrap(),
            OrliczSpec::scaled_exponential(2.5).unwrap(),
        ] {
            let (d1, _) = spec.derivatives_at_one();
            let (fd1, _) = central_fd(&spec, 1e-5);
            assert_abs_diff_eq!(d1, fd1, epsilon = 1e-6);
            // second differences need a wider step to stay above rounding noise
            let (_, d2) = spec.derivatives_at_one();
            let (_, fd2) = central_fd(&spec, 1e-4);
            assert_abs_diff_eq!(d2, fd2, epsilon = 1e-6);
        }
    }

    #[test]
    fn net_aversion_examples() {
        let id = OrliczSpec::<f64>::Identity;
        assert_abs_diff_eq!(id.net_uncertainty_aversion(0.1).unwrap(), 0.1);
        let p = OrliczSpec::power(1.5).unwrap();
        assert_abs_diff_eq!(p.net_uncertainty_aversion(0.1).unwrap(), 0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(p.net_uncertainty_aversion(1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert!(p.net_uncertainty_aversion(0.0).is_err());
        assert!(p.net_uncertainty_aversion(-1.0).is_err());
    }

    #[test]
    fn net_aversion_equivalence_is_exact_in_f64() {
        let a: f64 = OrliczSpec::power(1.5).unwrap().net_uncertainty_aversion(0.1).unwrap();
        let b = OrliczSpec::<f64>::Identity.net_uncertainty_aversion(0.65).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn builtin_kinds_validate() {
        OrliczSpec::<f64>::Identity.validate().unwrap();
        OrliczSpec::power(1.5).unwrap().validate().unwrap();
        OrliczSpec::scaled_exponential(3.0).unwrap().validate().unwrap();
        OrliczSpec::custom(1.2, 0.4).unwrap().validate().unwrap();
        assert!(OrliczSpec::Custom { phi1: -1.0, phi2: 0.0 }.validate().is_err());
    }

    #[test]
    fn f32_instantiation() {
        let p = OrliczSpec::<f32>::power(1.5).unwrap();
        assert_eq!(p.derivatives_at_one(), (1.5f32, 0.75f32));
        p.validate().unwrap();
    }

    #[test]
    fn static_norm_examples() {
        let p2 = OrliczSpec::power(2.0).unwrap();
        let id = OrliczSpec::Identity;
        assert_eq!(orlicz_norm_static(&[(2.0, 1.0)], &p2).unwrap(), 2.0);
        let two_point = [(1.0, 0.5), (3.0, 0.5)];
        let n: f64 = orlicz_norm_static(&two_point, &id).unwrap();
        assert!((n - 2.0).abs() / 2.0 < 1e-10);
        // closed form h^2 = E[Z^2] = 5
        let n = orlicz_norm_static(&two_point, &p2).unwrap();
        assert!((n - 5f64.sqrt()).abs() / 5f64.sqrt() < 1e-10);
    }

    #[test]
    fn static_norm_validation() {
        let id = OrliczSpec::<f64>::Identity;
        assert!(matches!(orlicz_norm_static(&[], &id), Err(Error::Validation(_))));
        assert!(matches!(
            orlicz_norm_static(&[(0.0, 1.0)], &id),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            orlicz_norm_static(&[(1.0, 0.5), (2.0, 0.4)], &id),
            Err(Error::Validation(_))
        ));
        assert_eq!(
            orlicz_norm_static(&[(1.0, 0.5), (2.0, 0.5)], &OrliczSpec::custom(1.0, 0.0).unwrap()),
            Err(Error::UnsupportedEvaluation)
        );
    }

    fn spec_strategy() -> impl Strategy<Value = OrliczSpec<f64>> {
        prop_oneof![
            Just(OrliczSpec::Identity),
            (1.05f64..4.0).prop_map(|p| OrliczSpec::Power { p }),
            (0.1f64..4.0).prop_map(|mu| OrliczSpec::ScaledExponential { mu }),
        ]
    }

    proptest! {
        #[test]
        fn norm_is_positively_homogeneous(
            spec in spec_strategy(),
            zs in prop::collection::vec(0.1f64..10.0, 1..6),
            scale in 0.05f64..20.0,
        ) {
            let w = 1.0 / zs.len() as f64;
            let base: Vec<_> = zs.iter().map(|&z| (z, w)).collect();
            let scaled: Vec<_> = zs.iter().map(|&z| (z * scale, w)).collect();
            let n0 = orlicz_norm_static(&base, &spec).unwrap();
            let n1 = orlicz_norm_static(&scaled, &spec).unwrap();
            prop_assert!((n1 - scale * n0).abs() <= 1e-8 * scale * n0);
        }

        #[test]
        fn norm_is_monotone(
            spec in spec_strategy(),
            pairs in prop::collection::vec((0.1f64..10.0, 0.0f64..3.0), 1..6),
        ) {
            let w = 1.0 / pairs.len() as f64;
            let small: Vec<_> = pairs.iter().map(|&(z, _)| (z, w)).collect();
            let large: Vec<_> = pairs.iter().map(|&(z, d)| (z + d, w)).collect();
            let n0 = orlicz_norm_static(&small, &spec).unwrap();
            let n1 = orlicz_norm_static(&large, &spec).unwrap();
            prop_assert!(n0 <= n1 * (1.0 + 1e-12));
        }

        #[test]
        fn net_aversion_increasing(
            phi1 in 0.1f64..5.0, phi2 in 0.0f64..5.0, eta in 0.01f64..5.0, d in 0.01f64..2.0,
        ) {
            let base = OrliczSpec::custom(phi1, phi2).unwrap();
            let more_phi2 = OrliczSpec::custom(phi1, phi2 + d).unwrap();
            let e0 = base.net_uncertainty_aversion(eta).unwrap();
            prop_assert!(e0 > 0.0);
            prop_assert!(base.net_uncertainty_aversion(eta + d).unwrap() > e0);
            prop_assert!(more_phi2.net_uncertainty_aversion(eta).unwrap() > e0);
        }
    }
}
