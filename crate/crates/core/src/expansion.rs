//! Assembly of `Q_η`, the polynomials `P_ν = −2Q_ν`, and evaluation of
//!
//! ```text
//! P(S_n = x, τ > n) ≈ e^{−t²/2} Σ_{ν=2}^{r+1} P_ν(t) / n^{ν/2},   t = x/(σ√n)
//! ```

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::constants::{ConstantOptions, ConstantSet};
use crate::edgeworth::{lclt_coefficients, LcltExpansion, LcltInput, Poly};
use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::laurent::{binomial, q_jlm_with, GammaTable, LaurentPoly};
use crate::oracle::BarrierKind;
use crate::scalar::Scalar;

/// Relative size above which a surviving negative power is an error.
pub const CANCELLATION_TOLERANCE: f64 = 1e-9;

/// Orders above this are accepted but flagged.
pub const SUPPORTED_MAX_R: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndexTuple {
    pub j: usize,
    pub q: usize,
    pub s: usize,
    pub nu: usize,
    pub mu: usize,
    pub ell: usize,
}

impl IndexTuple {
    /// The `η` this tuple contributes to, `2 + 2(j+μ+ℓ) + s + ν − q`.
    pub fn eta(&self) -> i64 {
        2 + 2 * (self.j + self.mu + self.ell) as i64 + (self.s + self.nu) as i64 - self.q as i64
    }

    /// Order `h = s + ν + 2μ` of the overshoot coefficient it uses.
    pub fn h(&self) -> usize {
        self.s + self.nu + 2 * self.mu
    }
}

/// Every tuple with `s ≤ q ≤ ⌊3j/2⌋` and `η − 2 = 2(j+μ+ℓ) + s + ν − q`.
pub fn enumerate_tuples(eta: usize) -> Result<Vec<IndexTuple>> {
    if eta < 2 {
        return Err(Error::InvalidOrder { order: eta, min: 2 });
    }
    let e = eta - 2;
    let mut out = Vec::new();
    for j in 0..=2 * e {
        for q in 0..=3 * j / 2 {
            for s in 0..=q.min(e) {
                for nu in 0..=e {
                    for mu in 0..=e / 2 {
                        for ell in 0..=e / 2 {
                            let t = IndexTuple { j, q, s, nu, mu, ell };
                            if t.eta() == eta as i64 {
                                out.push(t);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Q_η` after assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledQ<T> {
    pub eta: usize,
    /// Polynomial part, the value of `Q_η`.
    pub poly: Poly<T>,
    /// Whatever negative powers remained; zero up to rounding.
    pub residual: LaurentPoly<T>,
    /// `max |negative coefficient| / max |polynomial coefficient|`.
    pub residual_ratio: f64,
}

/// The weighted sum over [`enumerate_tuples`] of
/// `√(2π) a_{q,j} C(q,s) (−1)^{ν+μ}/(2^μ ν! μ!) b_ℓ^{(s+ν+2μ)} Q_{ℓ+1, j+ν+μ, q−s+ν}`.
///
/// `b(ℓ, h)` supplies the overshoot coefficients. With exact scalars any
/// leftover negative power is an error; with `f64` the tolerance is
/// [`CANCELLATION_TOLERANCE`] relative to the largest polynomial
/// coefficient.
pub fn assemble_q<T: Scalar>(
    eta: usize,
    lclt: &LcltExpansion<T>,
    b: &dyn Fn(usize, usize) -> Option<T>,
    gammas: &mut GammaTable,
) -> Result<AssembledQ<T>> {
    let mut total = LaurentPoly::<T>::zero();
    for t in enumerate_tuples(eta)? {
        let a = lclt.a_scaled(t.q, t.j);
        if a.is_zero() {
            continue;
        }
        let bv = b(t.ell, t.h()).ok_or(Error::MissingConstant { ell: t.ell, h: t.h() })?;
        let mut w = a
            * T::from_rational(&num_rational::BigRational::from_integer(binomial(
                t.q as u64, t.s as u64,
            )))
            * bv;
        let mut denom = T::one();
        for i in 1..=t.nu {
            denom = denom * T::from_i64(i as i64);
        }
        for i in 1..=t.mu {
            denom = denom * T::from_i64(2 * i as i64);
        }
        w = w / denom;
        if (t.nu + t.mu) % 2 == 1 {
            w = -w;
        }
        let q = q_jlm_with(gammas, t.ell + 1, t.j + t.nu + t.mu, t.q - t.s + t.nu)?;
        total = &total + &q.map(|c| T::from_rational(c)).scale(&w);
    }
    let poly = total.polynomial_part();
    let residual = total.negative_part();
    let largest = poly.max_abs_where(|_| true);
    let worst = residual.terms().map(|(e, c)| (e, crate::scalar::magnitude(c))).fold(
        (0, 0.0),
        |acc, (e, m)| if m > acc.1 { (e, m) } else { acc },
    );
    let residual_ratio = if worst.1 == 0.0 {
        0.0
    } else if largest == 0.0 {
        f64::INFINITY
    } else {
        worst.1 / largest
    };
    let failed = if T::EXACT {
        !residual.is_zero()
    } else {
        residual_ratio > CANCELLATION_TOLERANCE
    };
    if failed {
        return Err(Error::CancellationFailure {
            eta,
            exponent: worst.0,
            magnitude: worst.1,
            largest,
        });
    }
    Ok(AssembledQ {
        eta,
        poly,
        residual,
        residual_ratio,
    })
}

/// `P_ν = −2Q_ν` for `ν = 2 … r+1`.
pub fn polys_from_parts<T: Scalar>(
    r: usize,
    lclt: &LcltExpansion<T>,
    b: &dyn Fn(usize, usize) -> Option<T>,
) -> Result<Vec<(AssembledQ<T>, Poly<T>)>> {
    if r < 1 {
        return Err(Error::InvalidOrder { order: r, min: 1 });
    }
    let mut gammas = GammaTable::new();
    let minus_two = T::from_i64(-2);
    (2..=r + 1)
        .map(|eta| {
            let q = assemble_q(eta, lclt, b, &mut gammas)?;
            let p = q.poly.scale(&minus_two);
            Ok((q, p))
        })
        .collect()
}

/// The polynomials `P₂ … P_{r+1}` for one walk and barrier, with everything
/// they were built from.
#[derive(Debug, Clone)]
pub struct ExpansionSet {
    pub r: usize,
    pub barrier: BarrierKind,
    pub sigma: f64,
    pub p: BTreeMap<usize, Poly<f64>>,
    pub q: BTreeMap<usize, AssembledQ<f64>>,
    pub constants: ConstantSet,
    pub lclt: LcltExpansion<f64>,
    pub warnings: Vec<String>,
}

impl ExpansionSet {
    /// Computes the constants and assembles.
    pub fn build(
        dist: &IncrementDistribution,
        r: usize,
        barrier: BarrierKind,
        opts: &ConstantOptions,
    ) -> Result<Self> {
        let opts = ConstantOptions { r, ..*opts };
        let constants = ConstantSet::compute(dist, barrier, &opts)?;
        Self::from_constants(dist, r, constants)
    }

    pub fn from_constants(
        dist: &IncrementDistribution,
        r: usize,
        constants: ConstantSet,
    ) -> Result<Self> {
        let input = LcltInput::from_dist(dist, r + 4)?;
        let lclt = lclt_coefficients(&input, r)?;
        let b = |ell: usize, h: usize| constants.b.get(&(ell, h)).copied();
        let parts = polys_from_parts(r, &lclt, &b)?;
        let mut warnings = constants.warnings.clone();
        if r > SUPPORTED_MAX_R {
            warnings.push(alloc::format!(
                "r = {r} exceeds the supported range r <= {SUPPORTED_MAX_R}; high-order constants are unreliable"
            ));
        }
        let mut p = BTreeMap::new();
        let mut q = BTreeMap::new();
        for (assembled, poly) in parts {
            p.insert(assembled.eta, poly);
            q.insert(assembled.eta, assembled);
        }
        Ok(Self {
            r,
            barrier: constants.barrier,
            sigma: dist.sigma(),
            p,
            q,
            constants,
            lclt,
            warnings,
        })
    }

    pub fn poly(&self, nu: usize) -> Result<&Poly<f64>> {
        self.p.get(&nu).ok_or(Error::MissingOrder { nu })
    }

    /// The truncated series at `(n, x)`.
    pub fn evaluate(&self, n: usize, x: i64) -> f64 {
        self.evaluate_upto(n, x, self.r + 1)
    }

    /// The series keeping only `P₂ … P_{ν_max}`.
    pub fn evaluate_upto(&self, n: usize, x: i64, nu_max: usize) -> f64 {
        let nf = n as f64;
        let t = x as f64 / (self.sigma * libm::sqrt(nf));
        let terms: Vec<f64> = self
            .p
            .range(2..=nu_max)
            .map(|(nu, p)| p.eval_f64(t) / libm::pow(nf, *nu as f64 / 2.0))
            .collect();
        libm::exp(-t * t / 2.0) * crate::scalar::pairwise_sum(&terms)
    }

    /// Polynomial part of `W_j` in the variable `x`:
    /// `[x^k]W_j = σ^{−k} Σ_{2μ+q=k} (−1)^μ/(2^μ μ!) [t^q]P_{2j+1−k}` for
    /// `k = 0 … 2j−1`.
    ///
    /// `W_j` is the coefficient of `n^{−j−1/2}` in the small-`x` expansion;
    /// it is a linear combination of `U₁ … U_j`, not `U_j` itself.
    pub fn uj_polynomial_part(&self, j: usize) -> Result<Poly<f64>> {
        if j < 1 {
            return Err(Error::InvalidOrder { order: j, min: 1 });
        }
        if self.r + 1 < 2 * j + 1 {
            return Err(Error::MissingOrder { nu: 2 * j + 1 });
        }
        let mut out = Poly::zero();
        for k in 0..2 * j {
            let p = self.poly(2 * j + 1 - k)?;
            let mut acc = 0.0;
            let mut mu = 0;
            while 2 * mu <= k {
                let q = k - 2 * mu;
                let mut w = 1.0;
                for i in 1..=mu {
                    w /= 2.0 * i as f64;
                }
                if mu % 2 == 1 {
                    w = -w;
                }
                acc += w * p.coeff(q as i32);
                mu += 1;
            }
            out.add_term(k as i32, acc / libm::pow(self.sigma, k as f64));
        }
        Ok(out)
    }

    /// Degrees of `P₂ … P_{r+1}`; `None` for a vanishing polynomial.
    pub fn degrees(&self) -> Vec<Option<i32>> {
        self.p.values().map(|p| p.degree()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgeworth::LcltInput;
    use crate::scalar::ratio;
    use alloc::vec;
    use num_rational::BigRational;

    fn r(n: i64) -> BigRational {
        ratio(n, 1)
    }

    #[test]
    fn tuples_for_two_and_three() {
        let two = enumerate_tuples(2).unwrap();
        assert_eq!(
            two,
            vec![IndexTuple { j: 0, q: 0, s: 0, nu: 0, mu: 0, ell: 0 }]
        );
        let mut three: Vec<(usize, usize, usize)> =
            enumerate_tuples(3).unwrap().iter().map(|t| (t.nu, t.j, t.q)).collect();
        three.sort();
        assert_eq!(three, vec![(0, 1, 1), (0, 2, 3), (1, 0, 0)]);
        assert!(enumerate_tuples(3)
            .unwrap()
            .iter()
            .all(|t| t.s == 0 && t.mu == 0 && t.ell == 0));
    }

    #[test]
    fn tuples_satisfy_constraint_and_are_unique() {
        for eta in 2..=7 {
            let ts = enumerate_tuples(eta).unwrap();
            for t in &ts {
                assert_eq!(t.eta(), eta as i64);
                assert!(t.s <= t.q && t.q <= 3 * t.j / 2);
            }
            let mut sorted = ts.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), ts.len());
        }
    }

    struct Placeholders {
        theta0: BigRational,
        theta1: BigRational,
        m3: BigRational,
        sigma: BigRational,
    }

    fn placeholders() -> Placeholders {
        Placeholders {
            theta0: ratio(3, 7),
            theta1: ratio(2, 5),
            m3: ratio(1, 3),
            sigma: r(2),
        }
    }

    fn exact_parts(p: &Placeholders, r_order: usize) -> Vec<(AssembledQ<BigRational>, Poly<BigRational>)> {
        let input = LcltInput {
            sigma: p.sigma.clone(),
            cumulants: vec![r(0), r(0), &p.sigma * &p.sigma, p.m3.clone(), ratio(-1, 5), ratio(1, 7)],
        };
        let lclt = lclt_coefficients(&input, r_order).unwrap();
        let b00 = p.theta0.clone();
        let b01 = &p.theta1 / &p.sigma;
        let b = move |ell: usize, h: usize| match (ell, h) {
            (0, 0) => Some(b00.clone()),
            (0, 1) => Some(b01.clone()),
            _ => None,
        };
        polys_from_parts(r_order, &lclt, &b).unwrap()
    }

    #[test]
    fn q2_and_q3_closed_forms() {
        let p = placeholders();
        let parts = exact_parts(&p, 2);
        let s = &p.sigma;
        let q2 = Poly::from_ascending(&[r(0), -(&p.theta0 / s)]);
        assert_eq!(parts[0].0.poly, q2);
        // (θ₀m₃/(6σ⁴))(−2 + 5t² − t⁴) + (θ₁/σ²)(t² − 1)
        let c = &p.theta0 * &p.m3 / (r(6) * s.powi(4));
        let d = &p.theta1 / (s * s);
        let q3 = &Poly::from_ascending(&[r(-2), r(0), r(5), r(0), r(-1)]).scale(&c)
            + &Poly::from_ascending(&[-d.clone(), r(0), d]);
        assert_eq!(parts[1].0.poly, q3);
        assert!(parts[1].0.residual.is_zero());
    }

    #[test]
    fn p_is_minus_two_q() {
        let parts = exact_parts(&placeholders(), 2);
        for (q, p) in &parts {
            assert_eq!(*p, q.poly.scale(&r(-2)));
        }
        assert!(parts[0].1.has_parity(true));
        assert!(parts[1].1.has_parity(false));
    }

    #[test]
    fn symmetric_q3() {
        let mut p = placeholders();
        p.m3 = r(0);
        let parts = exact_parts(&p, 2);
        let d = &p.theta1 / (&p.sigma * &p.sigma);
        assert_eq!(parts[1].0.poly, Poly::from_ascending(&[-d.clone(), r(0), d]));
    }

    #[test]
    fn missing_constant_reported() {
        let p = placeholders();
        let input = LcltInput {
            sigma: p.sigma.clone(),
            cumulants: vec![r(0), r(0), r(4), p.m3.clone(), r(0), r(0), r(0)],
        };
        let lclt = lclt_coefficients(&input, 3).unwrap();
        let b = |ell: usize, h: usize| (ell == 0 && h <= 1).then(|| r(1));
        assert!(matches!(
            polys_from_parts(3, &lclt, &b),
            Err(Error::MissingConstant { .. })
        ));
    }
}
