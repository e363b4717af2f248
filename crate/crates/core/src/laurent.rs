//! Laurent polynomials with exact coefficients, the `γ_{q,j,ℓ}` numbers and
//! the functions `Q_{j,ℓ,m}`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finite sum `Σ c_e t^e` with integer (possibly negative) exponents.
///
/// Zero coefficients are never stored, so two polynomials are equal exactly
/// when their maps are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly<T> {
    coeffs: BTreeMap<i32, T>,
}

pub type RationalLaurentPoly = LaurentPoly<BigRational>;

impl<T: Scalar> Default for LaurentPoly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> LaurentPoly<T> {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    /// `c · t^e`.
    pub fn monomial(c: T, e: i32) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    /// Builds from `(exponent, coefficient)` pairs, merging repeats.
    pub fn from_terms<I: IntoIterator<Item = (i32, T)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Ascending coefficients `c₀ + c₁t + …`.
    pub fn from_ascending(coeffs: &[T]) -> Self {
        Self::from_terms(coeffs.iter().cloned().enumerate().map(|(e, c)| (e as i32, c)))
    }

    pub fn add_term(&mut self, e: i32, c: T) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&e) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.coeffs.insert(e, sum);
        }
    }

    pub fn coeff(&self, e: i32) -> T {
        self.coeffs.get(&e).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &T)> + '_ {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest exponent with a nonzero coefficient.
    pub fn degree(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn min_exponent(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(e, v)| (*e, v.clone() * c.clone())))
    }

    /// `t^k · self`.
    pub fn shift(&self, k: i32) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(e, v)| (e + k, v.clone())).collect(),
        }
    }

    /// Terms with exponent `≥ 0`.
    pub fn polynomial_part(&self) -> Self {
        Self {
            coeffs: self.coeffs.range(0..).map(|(e, v)| (*e, v.clone())).collect(),
        }
    }

    /// Terms with exponent `< 0`.
    pub fn negative_part(&self) -> Self {
        Self {
            coeffs: self.coeffs.range(..0).map(|(e, v)| (*e, v.clone())).collect(),
        }
    }

    /// Dense ascending coefficients of the polynomial part, up to the degree.
    pub fn to_ascending(&self) -> Vec<T> {
        let deg = match self.degree() {
            Some(d) if d >= 0 => d as usize,
            _ => return Vec::new(),
        };
        (0..=deg as i32).map(|e| self.coeff(e)).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LaurentPoly<U> {
        LaurentPoly::from_terms(self.coeffs.iter().map(|(e, v)| (*e, f(v))))
    }

    pub fn to_f64(&self) -> LaurentPoly<f64> {
        self.map(|v| v.to_f64())
    }

    /// Value at `t`; negative powers require `t ≠ 0`.
    pub fn eval_f64(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, v)| v.to_f64() * libm::pow(t, *e as f64))
            .sum()
    }

    /// Largest `|coefficient|` over the terms selected by `keep`.
    pub fn max_abs_where(&self, keep: impl Fn(i32) -> bool) -> f64 {
        self.coeffs
            .iter()
            .filter(|(e, _)| keep(**e))
            .map(|(_, v)| libm::fabs(v.to_f64()))
            .fold(0.0, f64::max)
    }

    /// Only parity-matching exponents are present.
    pub fn has_parity(&self, odd: bool) -> bool {
        self.coeffs.keys().all(|e| (e.rem_euclid(2) == 1) == odd)
    }
}

impl<T: Scalar> Add for &LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn add(self, rhs: Self) -> LaurentPoly<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for &LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn sub(self, rhs: Self) -> LaurentPoly<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl<T: Scalar> Mul for &LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn mul(self, rhs: Self) -> LaurentPoly<T> {
        let mut out = LaurentPoly::zero();
        for (a, x) in &self.coeffs {
            for (b, y) in &rhs.coeffs {
                out.add_term(a + b, x.clone() * y.clone());
            }
        }
        out
    }
}

impl<T: Scalar> Neg for &LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn neg(self) -> LaurentPoly<T> {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(e, v)| (*e, -v.clone())).collect(),
        }
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for LaurentPoly<T> {
    /// Highest power first, e.g. `-1*t^4 + 2*t^2 + 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.coeffs.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match e {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*t")?,
                _ => write!(f, "{c}*t^{e}")?,
            }
        }
        Ok(())
    }
}

/// `k!! = k(k−2)⋯`, with `(−1)!! = 0!! = 1`.
pub fn double_factorial(k: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut i = k;
    while i > 1 {
        acc *= BigInt::from(i);
        i -= 2;
    }
    acc
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Largest `j` accepted by [`gamma_closed`].
pub const GAMMA_MAX_J: usize = 16;

fn half_integer(twice: i64) -> BigRational {
    BigRational::new(BigInt::from(twice), BigInt::from(2))
}

/// `γ_{q,j,ℓ}` from the subset formula
///
/// ```text
/// γ_{q,j,ℓ} = (−1)^q 2^j / (2^q (2j−1)!!) · Σ_{a₁<…<a_{j−q} ⊆ {1..j}} Π_i (ℓ + 2a_i − i − 1/2)
/// ```
pub fn gamma_closed(q: usize, j: usize, ell: usize) -> Result<BigRational> {
    if q > j || j > GAMMA_MAX_J {
        return Err(Error::IndexOutOfRange { q, j });
    }
    let size = j - q;
    let mut sum = BigRational::zero();
    for mask in 0u32..(1u32 << j) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let mut prod = BigRational::one();
        let mut i = 0i64;
        for a in 1..=j as i64 {
            if mask & (1 << (a - 1)) != 0 {
                i += 1;
                prod *= half_integer(2 * (ell as i64 + 2 * a - i) - 1);
            }
        }
        sum += prod;
    }
    let sign = if q.is_multiple_of(2) { 1 } else { -1 };
    let prefactor = BigRational::new(
        BigInt::from(sign) * BigInt::from(2).pow((j - q) as u32),
        double_factorial(2 * j as i64 - 1),
    );
    Ok(prefactor * sum)
}

/// Memoised `γ_{q,j,ℓ}` from the recursion
///
/// ```text
/// γ_{q,j,ℓ} = (ℓ+1/2)/(j−1/2) · γ_{q,j−1,ℓ+1} − 1/(2(j−1/2)) · γ_{q−1,j−1,ℓ+2}
/// ```
///
/// with `γ_{0,0,ℓ} = 1` and `γ_{q,j,ℓ} = 0` whenever `q > j`.
#[derive(Debug, Default, Clone)]
pub struct GammaTable {
    memo: BTreeMap<(usize, usize, usize), BigRational>,
}

impl GammaTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, q: usize, j: usize, ell: usize) -> BigRational {
        if q > j {
            return BigRational::zero();
        }
        if j == 0 {
            return BigRational::one();
        }
        if let Some(v) = self.memo.get(&(q, j, ell)) {
            return v.clone();
        }
        let denom = half_integer(2 * j as i64 - 1);
        let mut v = half_integer(2 * ell as i64 + 1) / &denom * self.get(q, j - 1, ell + 1);
        if q > 0 {
            v -= self.get(q - 1, j - 1, ell + 2) / (BigRational::from_integer(BigInt::from(2)) * &denom);
        }
        self.memo.insert((q, j, ell), v.clone());
        v
    }
}

/// One-shot [`GammaTable::get`].
pub fn gamma_recursive(q: usize, j: usize, ell: usize) -> BigRational {
    GammaTable::new().get(q, j, ell)
}

/// `Q_{j,ℓ,m}(t) = t^m Σ_{q=0}^{j} γ_{q,j,ℓ} t^{2q} Σ_{k=0}^{ℓ+j+q−1} (2k−1)!! C(ℓ+j+q−1, k) t^{−2k−1}`.
///
/// Requires `ℓ + j ≥ 1`. The highest power is `t^{m+2j−1}`.
pub fn q_jlm(j: usize, ell: usize, m: usize) -> Result<RationalLaurentPoly> {
    let mut gammas = GammaTable::new();
    q_jlm_with(&mut gammas, j, ell, m)
}

/// [`q_jlm`] sharing a γ memo table across calls.
pub fn q_jlm_with(
    gammas: &mut GammaTable,
    j: usize,
    ell: usize,
    m: usize,
) -> Result<RationalLaurentPoly> {
    if j + ell == 0 {
        return Err(Error::InvalidOrder { order: 0, min: 1 });
    }
    if j > GAMMA_MAX_J {
        return Err(Error::IndexOutOfRange { q: 0, j });
    }
    let mut out = RationalLaurentPoly::zero();
    for q in 0..=j {
        let g = gammas.get(q, j, ell);
        let top = (ell + j + q - 1) as u64;
        for k in 0..=top {
            let c = BigRational::from_integer(double_factorial(2 * k as i64 - 1) * binomial(top, k));
            let e = m as i32 + 2 * q as i32 - 2 * k as i32 - 1;
            out.add_term(e, &g * c);
        }
    }
    Ok(out)
}

/// Whether `Q_{j,ℓ,m}` is free of negative powers, for every `(j,ℓ,m)` in
/// the given ranges with `j + ℓ ≥ 1`.
pub fn cancellation_report(
    max_j: usize,
    max_ell: usize,
    max_m: usize,
) -> Vec<((usize, usize, usize), bool)> {
    let mut gammas = GammaTable::new();
    let mut out = Vec::new();
    for j in 0..=max_j {
        for ell in 0..=max_ell {
            if j + ell == 0 {
                continue;
            }
            for m in 0..=max_m {
                if let Ok(q) = q_jlm_with(&mut gammas, j, ell, m) {
                    out.push(((j, ell, m), q.negative_part().is_zero()));
                }
            }
        }
    }
    out
}
