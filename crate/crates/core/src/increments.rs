//! Step distributions of the walk: validation, moments and cumulants.

use alloc::string::ToString;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Tolerance for the sum and mean checks in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// Arithmetic used by the oracle and downstream computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithmeticMode {
    /// Arbitrary-precision rationals.
    Exact,
    /// `f64` with pairwise summation.
    Float,
}

/// A validated finite-support increment law with mean zero and span one.
///
/// Probabilities are stored as exact rationals in both modes. In float mode
/// they are the exact binary values of the `f64` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementDistribution {
    support: Vec<i64>,
    probs: Vec<BigRational>,
    probs_f64: Vec<f64>,
    mode: ArithmeticMode,
}

impl IncrementDistribution {
    /// Validates `(support, probs)`. The pairs may come in any order; they
    /// are stored sorted by support point.
    pub fn validate(support: &[i64], probs: &[BigRational], mode: ArithmeticMode) -> Result<Self> {
        if support.is_empty() || probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if support.len() != probs.len() {
            return Err(Error::LengthMismatch {
                support: support.len(),
                probs: probs.len(),
            });
        }
        let one = BigRational::one();
        for (index, p) in probs.iter().enumerate() {
            if !p.is_positive() || *p > one {
                return Err(Error::ProbabilityOutOfRange { index });
            }
        }
        let mut pairs: Vec<(i64, BigRational)> =
            support.iter().copied().zip(probs.iter().cloned()).collect();
        pairs.sort_by_key(|(x, _)| *x);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateSupport(w[0].0));
            }
        }

        let total: BigRational = pairs.iter().map(|(_, p)| p.clone()).sum();
        let mean: BigRational = pairs
            .iter()
            .map(|(x, p)| p * BigRational::from_integer(BigInt::from(*x)))
            .sum();
        match mode {
            ArithmeticMode::Exact => {
                if total != one {
                    return Err(Error::SumNotOne);
                }
                if !mean.is_zero() {
                    return Err(Error::MeanNotZero);
                }
            }
            ArithmeticMode::Float => {
                if !within(&(total - &one), FLOAT_TOLERANCE) {
                    return Err(Error::SumNotOne);
                }
                if !within(&mean, FLOAT_TOLERANCE) {
                    return Err(Error::MeanNotZero);
                }
            }
        }

        let lo = pairs[0].0;
        let hi = pairs[pairs.len() - 1].0;
        if lo >= 0 || hi <= 0 {
            return Err(Error::EmptySide);
        }
        let span = pairs
            .iter()
            .fold(0u64, |g, (x, _)| g.gcd(&(x - lo).unsigned_abs()));
        if span != 1 {
            return Err(Error::SpanNotOne { span });
        }

        let (support, probs): (Vec<i64>, Vec<BigRational>) = pairs.into_iter().unzip();
        let probs_f64 = probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(Self {
            support,
            probs,
            probs_f64,
            mode,
        })
    }

    /// Float-mode construction. Each `f64` is converted to the rational it
    /// represents exactly in binary.
    pub fn from_f64(support: &[i64], probs: &[f64]) -> Result<Self> {
        let rational = probs
            .iter()
            .map(|&p| BigRational::from_float(p).ok_or(Error::InvalidProbability(p.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::validate(support, &rational, ArithmeticMode::Float)
    }

    /// Parses each probability with [`parse_probability`].
    pub fn from_strs(support: &[i64], probs: &[&str], mode: ArithmeticMode) -> Result<Self> {
        let rational = probs
            .iter()
            .map(|s| parse_probability(s))
            .collect::<Result<Vec<_>>>()?;
        Self::validate(support, &rational, mode)
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn probs_f64(&self) -> &[f64] {
        &self.probs_f64
    }

    pub fn mode(&self) -> ArithmeticMode {
        self.mode
    }

    /// The same law in another arithmetic mode.
    pub fn with_mode(&self, mode: ArithmeticMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn min_step(&self) -> i64 {
        self.support[0]
    }

    pub fn max_step(&self) -> i64 {
        self.support[self.support.len() - 1]
    }

    /// Iterates over `(x, P(X = x))` in increasing `x`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &BigRational)> + '_ {
        self.support.iter().copied().zip(self.probs.iter())
    }

    /// `E[X^k]` by direct summation.
    pub fn raw_moment(&self, k: u32) -> BigRational {
        self.iter()
            .map(|(x, p)| p * BigRational::from_integer(BigInt::from(x).pow(k)))
            .sum()
    }

    /// `P(X < -u)`.
    pub fn prob_below(&self, u: i64) -> BigRational {
        self.iter()
            .filter(|(x, _)| *x < -u)
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// `P(X ≤ -u)`.
    pub fn prob_at_or_below(&self, u: i64) -> BigRational {
        self.prob_below(u - 1)
    }

    /// `σ² = E[X²]`.
    pub fn variance(&self) -> BigRational {
        self.raw_moment(2)
    }

    pub fn sigma(&self) -> f64 {
        libm::sqrt(self.variance().to_f64().unwrap_or(f64::NAN))
    }

    /// All raw moments up to `order`; see [`MomentVector`].
    pub fn moments(&self, order: usize) -> Result<MomentVector> {
        if order < 2 {
            return Err(Error::InvalidOrder { order, min: 2 });
        }
        let raw: Vec<BigRational> = (0..=order as u32).map(|k| self.raw_moment(k)).collect();
        let cumulants = cumulants_from_moments(&raw);
        let sigma = libm::sqrt(raw[2].to_f64().unwrap_or(f64::NAN));
        Ok(MomentVector {
            order,
            central_moments: raw.clone(),
            raw_moments: raw,
            cumulants,
            sigma,
        })
    }

    /// Cumulants `γ₂ … γ_order`, exact.
    pub fn cumulants(&self, order: usize) -> Result<Vec<BigRational>> {
        Ok(self.moments(order)?.cumulants[2..].to_vec())
    }
}

fn within(x: &BigRational, tol: f64) -> bool {
    x.abs().to_f64().is_some_and(|v| v <= tol)
}

/// Raw moments, central moments and cumulants up to `order`.
///
/// All three lists are indexed by the moment order, so `raw_moments[0] = 1`
/// and `cumulants[2] = σ²`. Since the mean is zero, raw and central moments
/// coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub order: usize,
    pub raw_moments: Vec<BigRational>,
    pub central_moments: Vec<BigRational>,
    pub cumulants: Vec<BigRational>,
    pub sigma: f64,
}

impl MomentVector {
    /// `m₃ = E[X³]`.
    pub fn m3(&self) -> &BigRational {
        &self.raw_moments[3]
    }

    pub fn cumulants_f64(&self) -> Vec<f64> {
        self.cumulants
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `κ_n = μ_n − Σ_{m=1}^{n−1} C(n−1, m−1) κ_m μ_{n−m}`, with `μ₀ = 1`.
pub fn cumulants_from_moments(raw: &[BigRational]) -> Vec<BigRational> {
    let mut kappa = alloc::vec![BigRational::zero(); raw.len()];
    for n in 1..raw.len() {
        let mut acc = raw[n].clone();
        for m in 1..n {
            let c = BigRational::from_integer(binomial(n - 1, m - 1));
            acc -= c * &kappa[m] * &raw[n - m];
        }
        kappa[n] = acc;
    }
    kappa
}

/// Inverse of [`cumulants_from_moments`].
pub fn moments_from_cumulants(kappa: &[BigRational]) -> Vec<BigRational> {
    let mut mu = alloc::vec![BigRational::zero(); kappa.len()];
    if !mu.is_empty() {
        mu[0] = BigRational::one();
    }
    for n in 1..kappa.len() {
        let mut acc = BigRational::zero();
        for m in 1..=n {
            let c = BigRational::from_integer(binomial(n - 1, m - 1));
            acc += c * &kappa[m] * &mu[n - m];
        }
        mu[n] = acc;
    }
    mu
}

/// Parses `"p/q"`, an integer, or a decimal such as `"0.25"` or `"1e-3"`
/// into an exact rational.
pub fn parse_probability(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidProbability(s.to_string());
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = alloc::format!("{int_part}{frac_part}");
    let digits = if digits == "-" || digits == "+" || digits.is_empty() {
        return Err(bad());
    } else {
        digits
    };
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(n * ten.pow(scale as u32))
    } else {
        BigRational::new(n, ten.pow(scale.unsigned_abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use proptest::prelude::*;

    fn trinomial() -> IncrementDistribution {
        IncrementDistribution::from_strs(&[-1, 0, 1], &["0.3", "0.4", "0.3"], ArithmeticMode::Exact)
            .unwrap()
    }

    fn asymmetric() -> IncrementDistribution {
        IncrementDistribution::from_strs(&[-1, 0, 2], &["0.4", "0.4", "0.2"], ArithmeticMode::Exact)
            .unwrap()
    }

    #[test]
    fn trinomial_variance() {
        assert_eq!(trinomial().variance(), ratio(3, 5));
    }

    #[test]
    fn two_point_walk_has_span_two() {
        let err = IncrementDistribution::from_strs(&[-1, 1], &["1/2", "1/2"], ArithmeticMode::Exact)
            .unwrap_err();
        assert_eq!(err, Error::SpanNotOne { span: 2 });
    }

    #[test]
    fn asymmetric_moments() {
        let m = asymmetric().moments(4).unwrap();
        assert_eq!(m.raw_moments[1], BigRational::zero());
        assert_eq!(m.raw_moments[2], ratio(6, 5));
        assert_eq!(*m.m3(), ratio(6, 5));
        assert_eq!(m.raw_moments[4], ratio(18, 5));
        assert_eq!(m.cumulants[4], ratio(-18, 25));
    }

    #[test]
    fn trinomial_cumulants() {
        let c = trinomial().cumulants(4).unwrap();
        assert_eq!(c[0], ratio(3, 5));
        assert_eq!(c[1], BigRational::zero());
        assert_eq!(c[2], ratio(-12, 25));
    }

    #[test]
    fn rejects_bad_inputs() {
        let e = ArithmeticMode::Exact;
        assert_eq!(
            IncrementDistribution::from_strs(&[-1, 0, 1], &["0.3", "0.3", "0.3"], e),
            Err(Error::SumNotOne)
        );
        assert_eq!(
            IncrementDistribution::from_strs(&[-1, 0, 1], &["0.2", "0.4", "0.4"], e),
            Err(Error::MeanNotZero)
        );
        assert_eq!(
            IncrementDistribution::from_strs(&[0, 1], &["0.5", "0.5"], e),
            Err(Error::MeanNotZero)
        );
        assert_eq!(
            IncrementDistribution::from_strs(&[0], &["1"], e),
            Err(Error::EmptySide)
        );
        assert_eq!(
            IncrementDistribution::from_strs(&[-2, 0, 2], &["1/4", "1/2", "1/4"], e),
            Err(Error::SpanNotOne { span: 2 })
        );
        assert!(matches!(
            IncrementDistribution::from_strs(&[-1, 1], &["1/2"], e),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            IncrementDistribution::from_strs(&[-1, -1, 2], &["1/3", "1/3", "1/3"], e),
            Err(Error::DuplicateSupport(-1))
        ));
    }

    #[test]
    fn float_mode_accepts_binary_roundoff() {
        let d = IncrementDistribution::from_f64(&[-1, 0, 2], &[0.4, 0.4, 0.2]).unwrap();
        assert_eq!(d.mode(), ArithmeticMode::Float);
        assert!((d.sigma() - 1.2f64.sqrt()).abs() < 1e-15);
        // The same inputs are not exact rationals summing to one.
        let exact: Vec<_> = [0.4, 0.4, 0.2]
            .iter()
            .map(|&p| BigRational::from_float(p).unwrap())
            .collect();
        assert!(IncrementDistribution::validate(&[-1, 0, 2], &exact, ArithmeticMode::Exact).is_err());
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let d = IncrementDistribution::from_strs(&[2, -1, 0], &["0.2", "0.4", "0.4"], ArithmeticMode::Exact)
            .unwrap();
        assert_eq!(d.support(), &[-1, 0, 2]);
        assert_eq!(d.probs()[2], ratio(1, 5));
    }

    #[test]
    fn parses_probability_formats() {
        assert_eq!(parse_probability("3/10").unwrap(), ratio(3, 10));
        assert_eq!(parse_probability("0.3").unwrap(), ratio(3, 10));
        assert_eq!(parse_probability(".25").unwrap(), ratio(1, 4));
        assert_eq!(parse_probability("1").unwrap(), ratio(1, 1));
        assert_eq!(parse_probability("2.5e-1").unwrap(), ratio(1, 4));
        assert!(parse_probability("abc").is_err());
        assert!(parse_probability("1/0").is_err());
        assert!(parse_probability(".").is_err());
    }

    #[test]
    fn order_below_two_rejected() {
        assert!(matches!(
            trinomial().moments(1),
            Err(Error::InvalidOrder { .. })
        ));
    }

    /// Moments from derivatives of the probability generating function at 1.
    ///
    /// With `G(s) = Σ p_x s^{x − a}` (shifted to non-negative powers),
    /// `G^{(k)}(1)` is the k-th falling factorial moment of `X − a`; Stirling
    /// numbers of the second kind turn those into raw moments of `X − a`, and
    /// the binomial theorem shifts back.
    fn moments_via_pgf(d: &IncrementDistribution, order: usize) -> Vec<BigRational> {
        let a = d.min_step();
        let coeffs: Vec<(i64, BigRational)> = d.iter().map(|(x, p)| (x - a, p.clone())).collect();
        let falling: Vec<BigRational> = (0..=order as i64)
            .map(|k| {
                coeffs
                    .iter()
                    .map(|(e, p)| {
                        let f: i64 = (0..k).map(|i| e - i).product();
                        p * BigRational::from_integer(BigInt::from(f))
                    })
                    .sum()
            })
            .collect();
        let mut stirling = alloc::vec![alloc::vec![BigInt::zero(); order + 1]; order + 1];
        stirling[0][0] = BigInt::one();
        for n in 1..=order {
            for k in 1..=n {
                stirling[n][k] = BigInt::from(k) * &stirling[n - 1][k] + &stirling[n - 1][k - 1];
            }
        }
        let shifted: Vec<BigRational> = (0..=order)
            .map(|n| {
                (0..=n)
                    .map(|k| BigRational::from_integer(stirling[n][k].clone()) * &falling[k])
                    .sum()
            })
            .collect();
        let ba = BigRational::from_integer(BigInt::from(a));
        (0..=order)
            .map(|n| {
                (0..=n)
                    .map(|k| {
                        BigRational::from_integer(binomial(n, k))
                            * &shifted[k]
                            * num_traits::pow(ba.clone(), n - k)
                    })
                    .sum()
            })
            .collect()
    }

    fn arb_dist() -> impl Strategy<Value = IncrementDistribution> {
        // Random positive weights on a support that always includes -1, 0
        // (span 1), shifted by a positive mass at the right so the mean is
        // exactly zero.
        (
            proptest::collection::vec(1u32..20, 1..4),
            proptest::collection::vec(1u32..20, 1..4),
            1u32..20,
        )
            .prop_filter_map("mean fix", |(neg, pos, zero)| {
                let mut support = Vec::new();
                let mut weights = Vec::new();
                for (i, w) in neg.iter().enumerate() {
                    support.push(-(i as i64) - 1);
                    weights.push(BigRational::from_integer(BigInt::from(*w)));
                }
                support.push(0);
                weights.push(BigRational::from_integer(BigInt::from(zero)));
                for (i, w) in pos.iter().enumerate() {
                    support.push(i as i64 + 1);
                    weights.push(BigRational::from_integer(BigInt::from(*w)));
                }
                // Tilt the positive side so that the mean vanishes.
                let neg_mom: BigRational = support
                    .iter()
                    .zip(&weights)
                    .filter(|(x, _)| **x < 0)
                    .map(|(x, w)| w * BigRational::from_integer(BigInt::from(-x)))
                    .sum();
                let pos_mom: BigRational = support
                    .iter()
                    .zip(&weights)
                    .filter(|(x, _)| **x > 0)
                    .map(|(x, w)| w * BigRational::from_integer(BigInt::from(*x)))
                    .sum();
                let tilt = neg_mom / pos_mom;
                for (x, w) in support.iter().zip(weights.iter_mut()) {
                    if *x > 0 {
                        *w = &*w * &tilt;
                    }
                }
                let total: BigRational = weights.iter().cloned().sum();
                let probs: Vec<_> = weights.iter().map(|w| w / &total).collect();
                IncrementDistribution::validate(&support, &probs, ArithmeticMode::Exact).ok()
            })
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(d in arb_dist()) {
            let total: BigRational = d.probs().iter().cloned().sum();
            prop_assert_eq!(total, BigRational::one());
        }

        #[test]
        fn direct_moments_match_pgf(d in arb_dist()) {
            let m = d.moments(6).unwrap();
            prop_assert_eq!(m.raw_moments, moments_via_pgf(&d, 6));
        }

        #[test]
        fn cumulant_round_trip(d in arb_dist()) {
            let m = d.moments(8).unwrap();
            prop_assert_eq!(moments_from_cumulants(&m.cumulants), m.raw_moments.clone());
            prop_assert_eq!(&m.cumulants[2], &m.raw_moments[2]);
            prop_assert_eq!(&m.cumulants[3], &m.raw_moments[3]);
        }
    }
}
