//! Local CLT (Edgeworth) expansion of `P(S_n = x)`.
//!
//! ```text
//! P(S_n = x) ≈ e^{−z²/2n} Σ_{j=0}^{2r+2} P_j^{(0)}(z) / n^{j+1/2},   z = x/σ
//! ```
//!
//! Polynomials here carry an extra factor `√(2π)` so that they stay exact
//! when `σ` and the cumulants are rational.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::laurent::LaurentPoly;
use crate::scalar::Scalar;

/// Ordinary polynomials share the Laurent representation; they simply have
/// no negative exponents.
pub type Poly<T> = LaurentPoly<T>;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Largest `ν` for which `q̂_ν` is built.
pub const MAX_NU: usize = 8;

/// Probabilists' Hermite polynomial, `H_{m+1} = t H_m − m H_{m−1}`.
pub fn hermite<T: Scalar>(m: usize) -> Poly<T> {
    let t = Poly::monomial(T::one(), 1);
    let mut prev = Poly::zero();
    let mut cur = Poly::monomial(T::one(), 0);
    for k in 0..m {
        let next = &(&t * &cur) - &prev.scale(&T::from_i64(k as i64));
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_{2μ}(0) = (−1)^μ (2μ)! / (2^μ μ!)`; odd-index values vanish.
pub fn h_even_at_zero(mu: usize) -> BigRational {
    let mut v = BigInt::one();
    for i in (mu + 1)..=(2 * mu) {
        v *= BigInt::from(i);
    }
    v /= BigInt::from(2).pow(mu as u32);
    if mu % 2 == 1 {
        v = -v;
    }
    BigRational::from_integer(v)
}

/// All `(k₁, …, k_ν)` with `k₁ + 2k₂ + … + νk_ν = ν`.
pub fn partitions(nu: usize) -> Vec<Vec<usize>> {
    fn descend(m: usize, rest: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 0 {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=rest / m {
            cur[m - 1] = k;
            descend(m - 1, rest - k * m, cur, out);
        }
        cur[m - 1] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0; nu];
    descend(nu, nu, &mut cur, &mut out);
    out.sort();
    out
}

fn factorial<T: Scalar>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * T::from_i64(i as i64))
}

/// `σ` and the cumulants, indexed by order (`cumulants[3] = m₃`).
#[derive(Debug, Clone, PartialEq)]
pub struct LcltInput<T> {
    pub sigma: T,
    pub cumulants: Vec<T>,
}

impl LcltInput<f64> {
    pub fn from_dist(dist: &IncrementDistribution, order: usize) -> Result<Self> {
        let m = dist.moments(order)?;
        Ok(Self {
            sigma: m.sigma,
            cumulants: m.cumulants_f64(),
        })
    }
}

impl LcltInput<BigRational> {
    /// Exact input for a walk whose variance is a rational square.
    pub fn exact(sigma: BigRational, dist: &IncrementDistribution, order: usize) -> Result<Self> {
        Ok(Self {
            sigma,
            cumulants: dist.moments(order)?.cumulants,
        })
    }
}

/// `√(2π)·q̂_ν(t)`: the sum over [`partitions`] of
/// `H_{ν+2s} Π_m (γ_{m+2}/((m+2)! σ^{m+2}))^{k_m} / k_m!`, `s = Σ k_m`.
pub fn q_hat_scaled<T: Scalar>(input: &LcltInput<T>, nu: usize) -> Result<Poly<T>> {
    if nu > MAX_NU {
        return Err(Error::InvalidOrder {
            order: nu,
            min: MAX_NU,
        });
    }
    if input.cumulants.len() < nu + 3 {
        return Err(Error::InvalidOrder {
            order: input.cumulants.len(),
            min: nu + 3,
        });
    }
    let mut out = Poly::zero();
    for ks in partitions(nu) {
        let mut weight = T::one();
        let mut s = 0;
        for (idx, &k) in ks.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let m = idx + 1;
            let lambda = input.cumulants[m + 2].clone()
                / (factorial::<T>(m + 2) * input.sigma.powi((m + 2) as u32));
            weight = weight * lambda.powi(k as u32) / factorial::<T>(k);
            s += k;
        }
        if weight.is_zero() {
            continue;
        }
        out = &out + &hermite::<T>(nu + 2 * s).scale(&weight);
    }
    Ok(out)
}

/// The polynomials `P_j^{(0)}`, `j = 0 … 2r+2`, each times `√(2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcltExpansion<T> {
    pub r: usize,
    pub sigma: T,
    p0_scaled: Vec<Poly<T>>,
}

/// `P_j^{(0)}(z) = (1/σ) Σ_{μ} [t^μ]q̂_{2j−μ} z^μ`, with `μ` from
/// `max(0, 2j−r−1)` to `⌊3j/2⌋`.
pub fn lclt_coefficients<T: Scalar>(input: &LcltInput<T>, r: usize) -> Result<LcltExpansion<T>> {
    if r < 1 {
        return Err(Error::InvalidOrder { order: r, min: 1 });
    }
    let q_hats = (0..=r + 1)
        .map(|nu| q_hat_scaled(input, nu))
        .collect::<Result<Vec<_>>>()?;
    let inv_sigma = T::one() / input.sigma.clone();
    let p0_scaled = (0..=2 * r + 2)
        .map(|j| {
            let lo = (2 * j).saturating_sub(r + 1);
            let hi = 3 * j / 2;
            Poly::from_terms(
                (lo..=hi.min(2 * j))
                    .map(|mu| (mu as i32, q_hats[2 * j - mu].coeff(mu as i32) * inv_sigma.clone())),
            )
        })
        .collect();
    Ok(LcltExpansion {
        r,
        sigma: input.sigma.clone(),
        p0_scaled,
    })
}

impl<T: Scalar> LcltExpansion<T> {
    /// `√(2π)·P_j^{(0)}`.
    pub fn p0_scaled(&self, j: usize) -> &Poly<T> {
        &self.p0_scaled[j]
    }

    pub fn max_j(&self) -> usize {
        self.p0_scaled.len() - 1
    }

    /// `√(2π)·a_{q,j}`, the coefficient of `z^q` in `√(2π)·P_j^{(0)}`.
    pub fn a_scaled(&self, q: usize, j: usize) -> T {
        self.p0_scaled
            .get(j)
            .map_or_else(T::zero, |p| p.coeff(q as i32))
    }

    /// `a_{q,j}` in floating point.
    pub fn a(&self, q: usize, j: usize) -> f64 {
        self.a_scaled(q, j).to_f64() / SQRT_2PI
    }

    /// `P_j^{(0)}` in floating point.
    pub fn p0_poly(&self, j: usize) -> Poly<f64> {
        self.p0_scaled[j].map(|c| c.to_f64() / SQRT_2PI)
    }
}

/// Truncated local CLT value at `(n, x)`.
pub fn lclt_evaluate<T: Scalar>(expansion: &LcltExpansion<T>, n: usize, x: i64) -> f64 {
    let sigma = expansion.sigma.to_f64();
    let z = x as f64 / sigma;
    let nf = n as f64;
    let terms: Vec<f64> = (0..=expansion.max_j())
        .map(|j| expansion.p0_scaled[j].eval_f64(z) / libm::pow(nf, j as f64 + 0.5))
        .collect();
    libm::exp(-z * z / (2.0 * nf)) * crate::scalar::pairwise_sum(&terms) / SQRT_2PI
}
