//! Arithmetic abstraction shared by the exact and the floating-point paths.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// A field the oracle and the polynomial algebra can run over.
///
/// Implemented for `f64` (performance mode) and [`BigRational`] (reference
/// mode).
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Whether arithmetic is exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Sum in a fixed order. The `f64` implementation uses pairwise
    /// summation.
    fn sum_of(values: &[Self]) -> Self {
        values
            .iter()
            .cloned()
            .fold(Self::zero(), |acc, v| acc + v)
    }

    fn powi(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sum_of(values: &[Self]) -> Self {
        pairwise_sum(values)
    }

    fn powi(&self, exp: u32) -> Self {
        libm::pow(*self, exp as f64)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation: rounding error grows like `O(log n)` ulp.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Exact rational `p/q` from small integers.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// `|x|` of any scalar, measured in `f64`.
pub fn magnitude<T: Scalar>(x: &T) -> f64 {
    libm::fabs(x.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(pairwise_sum(&v), 6.0);
    }

    #[test]
    fn pairwise_beats_naive_on_many_small_terms() {
        let v = std::vec![0.1; 1 << 16];
        let exact = 0.1 * (1u64 << 16) as f64;
        let naive: f64 = v.iter().sum();
        let pw = pairwise_sum(&v);
        assert!((pw - exact).abs() <= (naive - exact).abs());
        assert!((pw - exact).abs() < 1e-9);
    }

    #[test]
    fn rational_powi() {
        assert_eq!(ratio(2, 3).powi(3), ratio(8, 27));
        assert_eq!(ratio(5, 1).powi(0), ratio(1, 1));
    }
}
