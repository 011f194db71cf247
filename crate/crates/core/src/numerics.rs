//! Scalar arithmetic substrate.
//!
//! Every quantity in the inversion pipelines is a [`Scalar`]: either an
//! arbitrary-precision rational (closed under the four operations, no
//! rounding) or an `f64` carrying a running absolute-error bound. The error
//! bound is what lets the negativity detectors distinguish a genuinely
//! negative cell from float cancellation noise, and what makes the
//! joint-inversion breakdown for weakly squeezed states measurable instead
//! of anecdotal.

use std::collections::VecDeque;
use std::fmt;
use std::sync::{LazyLock, Mutex};

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::traits::Pow;
use num::{One, Signed, ToPrimitive, Zero};

/// Arithmetic mode requested for a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    /// Arbitrary-precision rational arithmetic; error-free for +, −, ×, ÷.
    Exact,
    /// `f64` arithmetic with a tracked absolute-error bound.
    Float,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Exact => write!(f, "rational"),
            ScalarMode::Float => write!(f, "float"),
        }
    }
}

impl std::str::FromStr for ScalarMode {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rational" | "exact" => Ok(ScalarMode::Exact),
            "float" | "tracked" => Ok(ScalarMode::Float),
            other => Err(crate::error::Error::Parse(format!(
                "unknown scalar mode {other:?} (expected \"rational\" or \"float\")"
            ))),
        }
    }
}

/// A real number in one of two representations.
///
/// Mixed-mode operations promote the exact operand to a tracked float,
/// charging the conversion rounding to the error bound. The bound is
/// non-negative and grows monotonically under every operation.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(BigRational),
    Tracked { value: f64, err: f64 },
}

/// Half-ulp bound for one correctly rounded f64 operation producing `v`.
fn round_err(v: f64) -> f64 {
    if v.is_finite() {
        v.abs() * (f64::EPSILON / 2.0)
    } else {
        f64::INFINITY
    }
}

/// Convert a big rational to the nearest f64, safe for operands whose
/// numerator or denominator exceed the f64 range while the value does not.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.numer().is_zero() {
        return 0.0;
    }
    let negative = r.numer().sign() == Sign::Minus;
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let ns = (num.bits() as i64 - 96).max(0);
    let ds = (den.bits() as i64 - 96).max(0);
    let nf = (num >> (ns as usize)).to_f64().unwrap_or(f64::INFINITY);
    let df = (den >> (ds as usize)).to_f64().unwrap_or(f64::INFINITY);
    let mut v = nf / df;
    let shift = ns - ds;
    let half = (shift / 2).clamp(-2000, 2000) as i32;
    let rest = (shift - half as i64).clamp(-2000, 2000) as i32;
    v *= 2f64.powi(half);
    v *= 2f64.powi(rest);
    if negative {
        -v
    } else {
        v
    }
}

impl Scalar {
    pub fn exact(r: BigRational) -> Self {
        Scalar::Exact(r)
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// Wrap an f64 taken as exact (error bound zero).
    pub fn tracked(value: f64) -> Self {
        Scalar::Tracked { value, err: 0.0 }
    }

    /// Wrap an f64 that is itself the rounded result of one evaluation
    /// (library transcendentals, conversions): charged one ulp.
    pub fn tracked_rounded(value: f64) -> Self {
        Scalar::Tracked {
            value,
            err: value.abs() * f64::EPSILON,
        }
    }

    pub fn tracked_with_err(value: f64, err: f64) -> Self {
        debug_assert!(err >= 0.0);
        Scalar::Tracked { value, err }
    }

    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Exact(_) => ScalarMode::Exact,
            Scalar::Tracked { .. } => ScalarMode::Float,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Tracked { value, .. } => *value,
        }
    }

    /// Certified absolute error bound: zero for exact values.
    pub fn error_bound(&self) -> f64 {
        match self {
            Scalar::Exact(_) => 0.0,
            Scalar::Tracked { err, .. } => *err,
        }
    }

    /// Upper bound on the magnitude: |value| plus the error bound.
    pub fn abs_upper(&self) -> f64 {
        self.to_f64().abs() + self.error_bound()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Tracked { value, .. } => *value == 0.0,
        }
    }

    /// True when the value is certainly negative (below −error_bound).
    pub fn certified_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Tracked { value, err } => *value < -err,
        }
    }

    /// Force into the requested mode. Exact → float charges one conversion
    /// ulp; float → exact is not possible and is kept as-is.
    pub fn in_mode(&self, mode: ScalarMode) -> Scalar {
        match (self, mode) {
            (Scalar::Exact(_), ScalarMode::Float) => {
                let (v, e) = self.tracked_parts();
                Scalar::Tracked { value: v, err: e }
            }
            _ => self.clone(),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Tracked { .. } => None,
        }
    }

    fn tracked_parts(&self) -> (f64, f64) {
        match self {
            Scalar::Exact(r) => {
                let v = rational_to_f64(r);
                (v, if v.is_finite() { v.abs() * f64::EPSILON } else { f64::INFINITY })
            }
            Scalar::Tracked { value, err } => (*value, *err),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Tracked { value, err } => Scalar::Tracked {
                value: value.abs(),
                err: *err,
            },
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Tracked { value, .. } => write!(f, "{value}"),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl std::ops::Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        &self + &rhs
    }
}

impl std::ops::Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            _ => {
                let (av, ae) = self.tracked_parts();
                let (bv, be) = rhs.tracked_parts();
                let v = av + bv;
                Scalar::Tracked {
                    value: v,
                    err: ae + be + round_err(v),
                }
            }
        }
    }
}

impl std::ops::Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

impl std::ops::Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a - b),
            _ => {
                let (av, ae) = self.tracked_parts();
                let (bv, be) = rhs.tracked_parts();
                let v = av - bv;
                Scalar::Tracked {
                    value: v,
                    err: ae + be + round_err(v),
                }
            }
        }
    }
}

impl std::ops::Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl std::ops::Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            _ => {
                let (av, ae) = self.tracked_parts();
                let (bv, be) = rhs.tracked_parts();
                let v = av * bv;
                Scalar::Tracked {
                    value: v,
                    err: av.abs() * be + bv.abs() * ae + ae * be + round_err(v),
                }
            }
        }
    }
}

impl std::ops::Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl std::ops::Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => {
                let (av, ae) = self.tracked_parts();
                let (bv, be) = rhs.tracked_parts();
                let v = av / bv;
                let err = if be >= bv.abs() {
                    f64::INFINITY
                } else {
                    (ae + v.abs() * be) / (bv.abs() - be) + round_err(v)
                };
                Scalar::Tracked { value: v, err }
            }
        }
    }
}

impl std::ops::Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Tracked { value, err } => Scalar::Tracked { value: -value, err },
        }
    }
}

impl std::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.clone().neg()
    }
}

// Memoized big-integer factorials; first use may race, the mutex settles it.
static FACTORIALS: LazyLock<Mutex<Vec<BigInt>>> =
    LazyLock::new(|| Mutex::new(vec![BigInt::one()]));

/// n! as a big integer, memoized.
pub fn factorial(n: usize) -> BigInt {
    let mut cache = FACTORIALS.lock().unwrap();
    while cache.len() <= n {
        let next = cache.last().unwrap() * BigInt::from(cache.len());
        cache.push(next);
    }
    cache[n].clone()
}

/// C(k, n) as a big integer; zero when n > k.
pub fn binomial_int(k: u64, n: u64) -> BigInt {
    if n > k {
        return BigInt::zero();
    }
    let n = n.min(k - n);
    let mut acc = BigInt::one();
    for i in 0..n {
        acc = acc * BigInt::from(k - i) / BigInt::from(i + 1);
    }
    acc
}

/// Binomial coefficient C(k, n) as an exact scalar; zero when n > k.
pub fn binomial(k: u64, n: u64) -> Scalar {
    Scalar::Exact(BigRational::from_integer(binomial_int(k, n)))
}

/// Multinomial factor (a+b+c)! / (a! b! c!).
pub fn trinomial_int(a: u64, b: u64, c: u64) -> BigInt {
    binomial_int(a + b + c, a) * binomial_int(b + c, b)
}

/// Poisson weight e^(−mean) mean^k / k!, error-tracked.
///
/// Exact (and equal to the k = 0 indicator) when mean is zero; otherwise the
/// exponential makes the value irrational and the result is a tracked float.
pub fn poisson_weight(mean: f64, k: u64) -> Scalar {
    assert!(mean >= 0.0, "poisson_weight: mean must be non-negative");
    if mean == 0.0 {
        return if k == 0 { Scalar::one() } else { Scalar::zero() };
    }
    let mut w = Scalar::tracked_rounded((-mean).exp());
    let m = Scalar::tracked(mean);
    for i in 1..=k {
        w = &(&w * &m) / &Scalar::from_int(i as i64);
    }
    w
}

/// mean^k / k! — the Poisson weight with the e^(−mean) factor left out, so
/// rational means stay rational. The phase-number kernels rely on this to
/// cancel e^(±n̄) algebraically.
pub fn poisson_weight_scaled(mean: &BigRational, k: u64) -> BigRational {
    Pow::pow(mean.clone(), k as i32) / BigRational::from_integer(factorial(k as usize))
}

/// Outcome of a truncated series evaluation.
#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub sum: Scalar,
    pub terms_used: usize,
    /// Bound on the omitted tail (certified when a tail bound was supplied,
    /// heuristic otherwise).
    pub truncation_bound: f64,
    pub converged: bool,
}

/// Stopping policy for [`alternating_sum_with`].
#[derive(Debug, Clone)]
pub struct SeriesOpts {
    pub tolerance: f64,
    pub max_terms: usize,
    /// Multiplier on the last small terms when estimating the tail without
    /// a certified bound.
    pub safety_factor: f64,
    /// Number of consecutive below-tolerance terms required before the
    /// heuristic rule may stop. Guards against sparse term sources (every
    /// other term zero) stopping at an interior zero.
    pub stop_run: usize,
}

impl SeriesOpts {
    pub fn new(tolerance: f64, max_terms: usize) -> Self {
        SeriesOpts {
            tolerance,
            max_terms,
            safety_factor: 10.0,
            stop_run: 4,
        }
    }
}

/// Sum an alternating (or sign-mixed) series with error-tracked arithmetic.
///
/// Stops once both the remaining-tail estimate and the recent term
/// magnitudes fall below the tolerance, or at `max_terms` with
/// `converged = false`. The heuristic tail estimate is the largest of the
/// last few term magnitudes times the safety factor; these series are not
/// guaranteed monotone-alternating, so a single small term is never trusted.
pub fn alternating_sum<F>(term: F, tolerance: f64, max_terms: usize) -> SeriesResult
where
    F: FnMut(usize) -> Scalar,
{
    alternating_sum_with(term, |_| None, &SeriesOpts::new(tolerance, max_terms))
}

/// [`alternating_sum`] with a caller-supplied certified tail bound.
///
/// `tail_bound(k)` returns, when known, a bound on the absolute sum of all
/// terms after index `k`. When it returns `Some`, the certified bound
/// replaces the heuristic stopping rule entirely.
pub fn alternating_sum_with<F, G>(mut term: F, tail_bound: G, opts: &SeriesOpts) -> SeriesResult
where
    F: FnMut(usize) -> Scalar,
    G: Fn(usize) -> Option<f64>,
{
    let mut sum = Scalar::zero();
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(opts.stop_run + 1);
    let mut last_mag = f64::INFINITY;
    let mut terms_used = 0usize;
    for k in 0..opts.max_terms {
        let t = term(k);
        let mag = t.abs_upper();
        sum = &sum + &t;
        terms_used = k + 1;
        last_mag = mag;
        match tail_bound(k) {
            Some(bound) => {
                if bound <= opts.tolerance && mag <= opts.tolerance {
                    return SeriesResult {
                        sum,
                        terms_used,
                        truncation_bound: bound,
                        converged: true,
                    };
                }
            }
            None => {
                recent.push_back(mag);
                if recent.len() > opts.stop_run {
                    recent.pop_front();
                }
                if recent.len() == opts.stop_run {
                    let worst = recent.iter().cloned().fold(0.0, f64::max);
                    let estimate = opts.safety_factor * worst;
                    if worst <= opts.tolerance && estimate <= opts.tolerance {
                        return SeriesResult {
                            sum,
                            terms_used,
                            truncation_bound: estimate,
                            converged: true,
                        };
                    }
                }
            }
        }
    }
    let bound = tail_bound(opts.max_terms.saturating_sub(1))
        .unwrap_or(opts.safety_factor * last_mag);
    SeriesResult {
        sum,
        terms_used,
        truncation_bound: bound,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(0, 0), Scalar::one());
        // direct factorial evaluation 7!/(2!5!)
        let oracle = factorial(7) / (factorial(2) * factorial(5));
        assert_eq!(binomial_int(7, 2), oracle);
        assert_eq!(binomial_int(7, 2), BigInt::from(21));
        assert!(binomial(3, 5).is_zero());
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_weight(0.0, 0), Scalar::one());
        let w = poisson_weight(1.0, 1);
        assert!((w.to_f64() - (-1.0f64).exp()).abs() <= w.error_bound() + 1e-15);
        let w = poisson_weight(2.0, 0);
        assert!((w.to_f64() - (-2.0f64).exp()).abs() <= w.error_bound() + 1e-15);
    }

    #[test]
    fn poisson_partial_sums_approach_one() {
        // residual beyond K is below m^(K+1)/(K+1)!
        for &(m, kmax) in &[(0.5f64, 20usize), (2.0, 40), (5.0, 60)] {
            let mut total = Scalar::zero();
            for k in 0..=kmax {
                total = &total + &poisson_weight(m, k as u64);
            }
            let residual = 1.0 - total.to_f64();
            let bound = m.powi(kmax as i32 + 1)
                / factorial(kmax + 1).to_f64().unwrap();
            assert!(residual.abs() <= bound + 1e-12, "m={m} residual={residual}");
        }
    }

    #[test]
    fn alternating_all_zero_terms() {
        let r = alternating_sum(|_| Scalar::zero(), 1e-12, 100);
        assert!(r.converged);
        assert!(r.sum.is_zero());
    }

    #[test]
    fn alternating_single_spike() {
        // (−1)^k δ_{k,3}: the term source knows its support ends at 3.
        let r = alternating_sum_with(
            |k| {
                if k == 3 {
                    -Scalar::one()
                } else {
                    Scalar::zero()
                }
            },
            |k| Some(if k < 3 { 1.0 } else { 0.0 }),
            &SeriesOpts::new(1e-12, 100),
        );
        assert!(r.converged);
        assert_eq!(r.sum, -Scalar::one());
    }

    #[test]
    fn alternating_spike_heuristic_rule_survives_zeros() {
        // Without a certified tail, the run rule must not stop on the zeros
        // before the spike.
        let r = alternating_sum(
            |k| {
                if k == 3 {
                    -Scalar::one()
                } else {
                    Scalar::zero()
                }
            },
            1e-12,
            100,
        );
        assert!(r.converged);
        assert_eq!(r.sum, -Scalar::one());
    }

    #[test]
    fn alternating_geometric() {
        let r = alternating_sum(
            |k| {
                let mut x = Scalar::from_ratio(if k % 2 == 0 { 1 } else { -1 }, 1);
                for _ in 0..k {
                    x = &x / &Scalar::from_int(2);
                }
                x
            },
            1e-12,
            1000,
        );
        assert!(r.converged);
        assert!((r.sum.to_f64() - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.truncation_bound <= 1e-12);
    }

    #[test]
    fn alternating_nonconvergence_reported() {
        let r = alternating_sum(
            |k| Scalar::from_int(if k % 2 == 0 { 1 } else { -1 }),
            1e-12,
            50,
        );
        assert!(!r.converged);
    }

    #[test]
    fn rational_to_f64_handles_huge_components() {
        // value ~ (99/100)^800: numerator and denominator both overflow f64
        let r = Pow::pow(BigRational::new(BigInt::from(99), BigInt::from(100)), 800i32);
        let v = rational_to_f64(&r);
        let expected = 0.99f64.powi(800);
        assert!((v - expected).abs() <= expected * 1e-12);
        let f = BigRational::from_integer(factorial(250));
        assert!(rational_to_f64(&f).is_infinite());
    }

    #[test]
    fn division_by_uncertain_denominator_is_flagged() {
        let a = Scalar::tracked(1.0);
        let b = Scalar::tracked_with_err(1e-20, 1.0);
        assert!((&a / &b).error_bound().is_infinite());
    }

    proptest! {
        #[test]
        fn binomial_symmetry(k in 0u64..60, n in 0u64..60) {
            prop_assume!(n <= k);
            prop_assert_eq!(binomial_int(k, n), binomial_int(k, k - n));
        }

        #[test]
        fn exact_and_tracked_agree_within_bound(
            a in -200i64..200, b in 1i64..50,
            c in -200i64..200, d in 1i64..50,
        ) {
            let ex = Scalar::from_ratio(a, b);
            let ey = Scalar::from_ratio(c, d);
            let tx = Scalar::tracked(a as f64) / Scalar::tracked(b as f64);
            let ty = Scalar::tracked(c as f64) / Scalar::tracked(d as f64);
            for (e, t) in [
                (&ex + &ey, &tx + &ty),
                (&ex - &ey, &tx - &ty),
                (&ex * &ey, &tx * &ty),
            ] {
                prop_assert!((e.to_f64() - t.to_f64()).abs() <= t.error_bound() + 1e-15);
            }
        }

        #[test]
        fn error_bound_monotone_under_ops(x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let a = Scalar::tracked_with_err(x, 1e-10);
            let b = Scalar::tracked_with_err(y, 2e-10);
            for r in [&a + &b, &a - &b, &a * &b] {
                prop_assert!(r.error_bound() >= 1e-10);
            }
        }
    }
}
