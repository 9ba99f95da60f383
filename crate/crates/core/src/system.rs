//! Battery dynamics: admissible discharge bounds, the target schedule, and
//! the disutility rate with its exact pointwise minimization.

use crate::error::{domain, Error, Result};
use crate::meteo::InfluxParams;
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryConfig<S> {
    /// Capacity `Ȳ`.
    pub capacity: S,
    /// Discharge cap `U` (energy/day).
    pub discharge_cap: S,
    pub influx: InfluxParams<S>,
}

impl<S: Scalar> Default for BatteryConfig<S> {
    fn default() -> Self {
        Self { capacity: S::one(), discharge_cap: c(0.2), influx: InfluxParams::default() }
    }
}

impl<S: Scalar> BatteryConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > S::zero()) {
            return Err(domain(format!("capacity must be positive, got {}", self.capacity)));
        }
        if !(self.discharge_cap > S::zero()) {
            return Err(domain(format!("discharge cap must be positive, got {}", self.discharge_cap)));
        }
        self.influx.validate()
    }
}

/// Weights of the hydrogen-residual and depletion penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights<S> {
    pub w1: S,
    pub w2: S,
}

impl<S: Scalar> Default for PenaltyWeights<S> {
    fn default() -> Self {
        Self { w1: c(0.1), w2: c(0.5) }
    }
}

impl<S: Scalar> PenaltyWeights<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1 >= S::zero() && self.w2 >= S::zero()) {
            return Err(domain("penalty weights must be nonnegative"));
        }
        Ok(())
    }
}

/// Deterministic target discharge `λ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSchedule<S> {
    Constant(S),
    /// `(start time, value)` pairs sorted by time; the first value also
    /// applies before the first start time.
    Piecewise(Vec<(S, S)>),
}

impl<S: Scalar> Default for TargetSchedule<S> {
    fn default() -> Self {
        Self::Constant(c(0.05))
    }
}

impl<S: Scalar> TargetSchedule<S> {
    pub fn at(&self, t: S) -> S {
        match self {
            Self::Constant(v) => *v,
            Self::Piecewise(steps) => {
                let idx = steps.partition_point(|s| s.0 <= t);
                steps[idx.saturating_sub(1)].1
            }
        }
    }

    pub fn validate(&self, discharge_cap: S) -> Result<()> {
        let values: Vec<S> = match self {
            Self::Constant(v) => vec![*v],
            Self::Piecewise(steps) => {
                if steps.is_empty() {
                    return Err(domain("piecewise target needs at least one step"));
                }
                if steps.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(domain("piecewise target times must increase"));
                }
                steps.iter().map(|s| s.1).collect()
            }
        };
        if values.iter().any(|&v| !(v >= S::zero() && v <= discharge_cap)) {
            return Err(domain(format!("target must lie in [0, {discharge_cap}]")));
        }
        Ok(())
    }
}

/// Storage state relevant to the admissible discharge set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageLevel {
    Empty,
    Partial,
    Full,
}

impl StorageLevel {
    pub fn of<S: Scalar>(y: S, capacity: S) -> Self {
        if y <= S::zero() {
            Self::Empty
        } else if y >= capacity {
            Self::Full
        } else {
            Self::Partial
        }
    }
}

/// Admissible discharge interval `[lo, hi]` given the influx `f` at the
/// current state.
///
/// A full battery must discharge at least the influx; an empty one cannot
/// discharge at all.
#[inline]
pub fn control_bounds<S: Scalar>(level: StorageLevel, influx: S, discharge_cap: S) -> (S, S) {
    match level {
        StorageLevel::Empty => (S::zero(), S::zero()),
        StorageLevel::Partial => (S::zero(), discharge_cap),
        StorageLevel::Full => (influx, discharge_cap.max(influx)),
    }
}

/// Disutility rate `(λ − v)₊²/2 + w1 (U − v)₊²/2 + w2 𝟙(y = 0)`.
#[inline]
pub fn disutility<S: Scalar>(v: S, y: S, target: S, cap: S, w: &PenaltyWeights<S>) -> S {
    let half = c::<S>(0.5);
    let deficit = (target - v).max(S::zero());
    let residual = (cap - v).max(S::zero());
    let depleted = if y == S::zero() { w.w2 } else { S::zero() };
    half * deficit * deficit + w.w1 * half * residual * residual + depleted
}

/// Exact minimizer of `g(v) = −v·p' + D(v)` over `[lo, hi]`.
///
/// `g` is piecewise quadratic with breakpoints at the target and the cap, so
/// the candidates are the interval ends, the clamped breakpoints, and each
/// piece's stationary point clamped to that piece. Ties go to the larger `v`.
pub fn minimize_running_term<S: Scalar>(
    lo: S,
    hi: S,
    pprime: S,
    target: S,
    cap: S,
    y: S,
    w: &PenaltyWeights<S>,
) -> Result<(S, S)> {
    if !(lo <= hi) {
        return Err(Error::Contract(format!("control interval [{lo}, {hi}] is empty")));
    }
    Ok(minimize_unchecked(lo, hi, pprime, target, cap, y, w))
}

#[inline]
pub(crate) fn minimize_unchecked<S: Scalar>(
    lo: S,
    hi: S,
    pprime: S,
    target: S,
    cap: S,
    y: S,
    w: &PenaltyWeights<S>,
) -> (S, S) {
    let g = |v: S| -v * pprime + disutility(v, y, target, cap, w);
    let clamp = |v: S, a: S, b: S| v.max(a).min(b);
    let small = target.min(cap);
    let large = target.max(cap);

    let mut cands = [S::zero(); 7];
    cands[0] = lo;
    cands[1] = hi;
    cands[2] = clamp(target, lo, hi);
    cands[3] = clamp(cap, lo, hi);
    let mut n = 4;
    // below both breakpoints: both penalties active
    let (a, b) = (lo, small.min(hi));
    if a <= b {
        let stat = (pprime + target + w.w1 * cap) / (S::one() + w.w1);
        cands[n] = clamp(stat, a, b);
        n += 1;
    }
    // between the breakpoints: only the penalty of the larger one is active
    let (a, b) = (small.max(lo), large.min(hi));
    if a <= b {
        if target < cap {
            if w.w1 > S::zero() {
                cands[n] = clamp(cap + pprime / w.w1, a, b);
                n += 1;
            }
        } else {
            cands[n] = clamp(target + pprime, a, b);
            n += 1;
        }
    }
    // above both: linear, ends already covered

    let mut best_v = cands[0];
    let mut best_g = g(best_v);
    for &v in &cands[1..n] {
        let gv = g(v);
        if gv < best_g || (gv == best_g && v > best_v) {
            best_g = gv;
            best_v = v;
        }
    }
    (best_v, best_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(w1: f64, w2: f64) -> PenaltyWeights<f64> {
        PenaltyWeights { w1, w2 }
    }

    /// Uniform scan oracle, ties to the larger v.
    #[allow(clippy::too_many_arguments)]
    fn scan(lo: f64, hi: f64, pp: f64, lam: f64, cap: f64, y: f64, wt: &PenaltyWeights<f64>, n: usize) -> (f64, f64) {
        let mut best = (lo, f64::INFINITY);
        for i in 0..=n {
            let v = if n == 0 { lo } else { lo + (hi - lo) * i as f64 / n as f64 };
            let g = -v * pp + disutility(v, y, lam, cap, wt);
            if g <= best.1 {
                best = (v, g);
            }
        }
        best
    }

    #[test]
    fn bounds_rows() {
        assert_eq!(control_bounds(StorageLevel::Empty, 0.3, 0.2), (0.0, 0.0));
        assert_eq!(control_bounds(StorageLevel::Partial, 0.3, 0.2), (0.0, 0.2));
        assert_eq!(control_bounds(StorageLevel::Full, 0.3, 0.2), (0.3, 0.3));
        assert_eq!(control_bounds(StorageLevel::Full, 0.1, 0.2), (0.1, 0.2));
        assert_eq!(StorageLevel::of(0.0, 1.0), StorageLevel::Empty);
        assert_eq!(StorageLevel::of(1.0, 1.0), StorageLevel::Full);
        assert_eq!(StorageLevel::of(0.5, 1.0), StorageLevel::Partial);
    }

    #[test]
    fn disutility_examples() {
        assert_abs_diff_eq!(disutility(0.05, 0.5, 0.05, 0.2, &w(0.1, 0.5)), 0.001125, epsilon = 1e-15);
        assert_eq!(disutility(0.2, 0.5, 0.05, 0.2, &w(0.1, 0.5)), 0.0);
        assert_abs_diff_eq!(disutility(0.0, 0.0, 0.05, 0.2, &w(0.1, 0.5)), 0.50325, epsilon = 1e-15);
    }

    #[test]
    fn minimizer_examples() {
        let wt = w(0.1, 0.5);
        let (v, g) = minimize_running_term(0.0, 0.2, 0.0, 0.05, 0.2, 0.5, &wt).unwrap();
        assert_eq!(v, 0.2);
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-15);
        let (v, g) = minimize_running_term(0.0, 0.2, -1.0, 0.05, 0.2, 0.5, &wt).unwrap();
        assert_eq!(v, 0.0);
        assert_abs_diff_eq!(g, 0.00325, epsilon = 1e-15);
        let (v, g) = minimize_running_term(0.0, 0.2, 1.0, 0.05, 0.2, 0.5, &wt).unwrap();
        assert_eq!(v, 0.2);
        assert_abs_diff_eq!(g, -0.2, epsilon = 1e-15);
        assert!(matches!(
            minimize_running_term(0.3, 0.2, 0.0, 0.05, 0.2, 0.5, &wt),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn minimizer_examples_agree_with_dense_scan() {
        let wt = w(0.1, 0.5);
        for pp in [0.0, -1.0, 1.0] {
            let (v, g) = minimize_running_term(0.0, 0.2, pp, 0.05, 0.2, 0.5, &wt).unwrap();
            let (sv, sg) = scan(0.0, 0.2, pp, 0.05, 0.2, 0.5, &wt, 100_000);
            assert_abs_diff_eq!(g, sg, epsilon = 1e-12);
            assert_abs_diff_eq!(v, sv, epsilon = 1e-5);
        }
    }

    #[test]
    fn randomized_against_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let cap: f64 = rng.random_range(0.05..1.0);
            let lam: f64 = rng.random_range(0.0..=cap);
            let w1: f64 = rng.random_range(0.0..2.0);
            let pp: f64 = rng.random_range(-2.0..2.0);
            let f: f64 = rng.random_range(0.0..1.5);
            let level = [StorageLevel::Empty, StorageLevel::Partial, StorageLevel::Full][rng.random_range(0..3)];
            let y = if level == StorageLevel::Empty { 0.0 } else { 0.5 };
            let (lo, hi) = control_bounds(level, f, cap);
            let wt = w(w1, 0.5);
            let (v, g) = minimize_running_term(lo, hi, pp, lam, cap, y, &wt).unwrap();
            let n = 10_000;
            let (sv, sg) = scan(lo, hi, pp, lam, cap, y, &wt, n);
            assert!(v >= lo && v <= hi);
            // the exact minimum never exceeds any scanned value
            assert!(g <= sg + 1e-15, "g={g} scan={sg}");
            // g is convex, so ternary search around the scan winner pins the minimum
            let h = (hi - lo) / n as f64;
            let obj = |v: f64| -v * pp + disutility(v, y, lam, cap, &wt);
            let (mut a, mut b) = ((sv - h).max(lo), (sv + h).min(hi));
            for _ in 0..200 {
                let (m1, m2) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
                if obj(m1) <= obj(m2) { b = m2 } else { a = m1 }
            }
            let refined = obj(0.5 * (a + b)).min(sg);
            assert!((g - refined).abs() <= 1e-9, "g={g} refined={refined}");
        }
    }

    #[test]
    fn target_schedule() {
        let s = TargetSchedule::Piecewise(vec![(0.0, 0.05), (10.0, 0.1)]);
        assert_eq!(s.at(5.0), 0.05);
        assert_eq!(s.at(10.0), 0.1);
        assert_eq!(s.at(-1.0), 0.05);
        s.validate(0.2).unwrap();
        assert!(TargetSchedule::Constant(0.3).validate(0.2).is_err());
    }

    proptest! {
        #[test]
        fn disutility_nonnegative(v in 0.0f64..2.0, y in 0.0f64..1.0, lam in 0.0f64..1.0, cap in 0.0f64..1.0, w1 in 0.0f64..3.0, w2 in 0.0f64..3.0) {
            prop_assert!(disutility(v, y, lam, cap, &w(w1, w2)) >= 0.0);
        }

        #[test]
        fn bounds_are_ordered(f in 0.0f64..3.0, cap in 0.01f64..2.0, which in 0usize..3) {
            let level = [StorageLevel::Empty, StorageLevel::Partial, StorageLevel::Full][which];
            let (lo, hi) = control_bounds(level, f, cap);
            prop_assert!(0.0 <= lo && lo <= hi && hi <= cap.max(f));
        }

        #[test]
        fn minimizer_monotone_in_price(
            p1 in -2.0f64..2.0, dp in 0.0f64..2.0, cap in 0.05f64..1.0, frac in 0.0f64..1.0, w1 in 0.0f64..2.0,
        ) {
            let lam = frac * cap;
            let wt = w(w1, 0.0);
            let (v1, _) = minimize_running_term(0.0, cap, p1, lam, cap, 0.5, &wt).unwrap();
            let (v2, _) = minimize_running_term(0.0, cap, p1 + dp, lam, cap, 0.5, &wt).unwrap();
            prop_assert!(v2 >= v1 - 1e-12);
        }
    }
}
