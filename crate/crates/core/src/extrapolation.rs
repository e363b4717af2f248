//! Limits of sequences `a_k = c₀ + Σ_e c_e k^{−e}` by least squares over a
//! tail window.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest accepted condition number of the scaled basis.
pub const CONDITION_GUARD: f64 = 1e12;

/// Inclusive range of indices `k` used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub k_min: usize,
    pub k_max: usize,
}

impl Window {
    pub fn new(k_min: usize, k_max: usize) -> Self {
        Self { k_min, k_max }
    }

    fn contains(&self, k: usize) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }

    /// The window moved earlier by 10% of its start (at least one index).
    pub fn shifted(&self) -> Self {
        let d = self.k_min.div_ceil(10).max(1);
        Self {
            k_min: self.k_min.saturating_sub(d).max(1),
            k_max: self.k_max.saturating_sub(d).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationResult {
    pub limit: f64,
    /// `c_e` for each nonzero exponent of `model`, in order.
    pub coefficients: Vec<f64>,
    pub window: Window,
    /// The larger of two deviations of the limit: refitting on
    /// `window.shifted()`, and refitting without the last exponent. Floored
    /// at the rounding level of the solve.
    pub error_estimate: f64,
    /// Exponents `e` of the basis `k^{−e}`; the first is zero.
    pub model: Vec<f64>,
    /// Condition number of the scaled design matrix.
    pub condition: f64,
}

impl ExtrapolationResult {
    /// `[c₀, c₁, …]`, the limit followed by the correction coefficients.
    pub fn all_coefficients(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.coefficients.len() + 1);
        v.push(self.limit);
        v.extend_from_slice(&self.coefficients);
        v
    }
}

struct Solve {
    coefficients: Vec<f64>,
    condition: f64,
    scale: f64,
}

fn check_exponents(exponents: &[f64]) -> Result<()> {
    if exponents.first() != Some(&0.0)
        || exponents.iter().any(|e| !e.is_finite())
        || exponents.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidExponents);
    }
    Ok(())
}

/// Least squares in the basis `(k_ref/k)^e` with `k_ref = window.k_max`,
/// via SVD. The scaling keeps every column of order one.
fn solve(seq: &[(usize, f64)], exponents: &[f64], window: Window) -> Result<Solve> {
    let pts: Vec<(usize, f64)> = seq
        .iter()
        .copied()
        .filter(|(k, _)| *k > 0 && window.contains(*k))
        .collect();
    let needed = exponents.len() + 2;
    if pts.len() < needed {
        return Err(Error::InsufficientPoints {
            needed,
            available: pts.len(),
        });
    }
    let k_ref = window.k_max as f64;
    let a = DMatrix::from_fn(pts.len(), exponents.len(), |i, j| {
        libm::pow(k_ref / pts[i].0 as f64, exponents[j])
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|(_, v)| *v));
    let svd = a.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if condition.is_nan() || condition > CONDITION_GUARD {
        return Err(Error::IllConditioned { condition });
    }
    let beta = svd
        .solve(&b, 0.0)
        .map_err(|_| Error::IllConditioned { condition })?;
    let coefficients = exponents
        .iter()
        .zip(beta.iter())
        .map(|(e, c)| c * libm::pow(k_ref, *e))
        .collect();
    let scale = pts.iter().map(|(_, v)| libm::fabs(*v)).fold(0.0, f64::max);
    Ok(Solve {
        coefficients,
        condition,
        scale,
    })
}

/// Fits `a_k ≈ Σ_e c_e k^{−e}` over `window` and estimates the error of the
/// limit `c₀` by refitting on the shifted window.
pub fn fit_power_tail(
    seq: &[(usize, f64)],
    exponents: &[f64],
    window: Window,
) -> Result<ExtrapolationResult> {
    check_exponents(exponents)?;
    let main = solve(seq, exponents, window)?;
    let limit = main.coefficients[0];
    let rounding = f64::EPSILON * main.condition * main.scale;
    let shift = match solve(seq, exponents, window.shifted()) {
        Ok(s) => libm::fabs(s.coefficients[0] - limit),
        Err(Error::InsufficientPoints { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let reduced = if exponents.len() > 2 {
        let s = solve(seq, &exponents[..exponents.len() - 1], window)?;
        libm::fabs(s.coefficients[0] - limit)
    } else {
        0.0
    };
    Ok(ExtrapolationResult {
        limit,
        coefficients: main.coefficients[1..].to_vec(),
        window,
        error_estimate: shift.max(reduced).max(rounding),
        model: exponents.to_vec(),
        condition: main.condition,
    })
}

/// The last third of the indices present in `seq`.
pub fn default_window(seq: &[(usize, f64)]) -> Window {
    let first = seq.iter().map(|(k, _)| *k).min().unwrap_or(0);
    let last = seq.iter().map(|(k, _)| *k).max().unwrap_or(0);
    Window::new(first + 2 * (last - first) / 3, last)
}

/// [`fit_power_tail`] on the default window with exponents
/// `{0, p, p+1, p+2}`.
pub fn limit_with_rate(seq: &[(usize, f64)], p: f64) -> Result<ExtrapolationResult> {
    fit_power_tail(seq, &[0.0, p, p + 1.0, p + 2.0], default_window(seq))
}

/// `(k, a_k)` pairs for `k ∈ [from, values.len())`, from a slice indexed by
/// `k`.
pub fn indexed(values: &[f64], from: usize) -> Vec<(usize, f64)> {
    values
        .iter()
        .enumerate()
        .skip(from)
        .map(|(k, v)| (k, *v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(n: usize, f: impl Fn(f64) -> f64) -> Vec<(usize, f64)> {
        (1..=n).map(|k| (k, f(k as f64))).collect()
    }

    #[test]
    fn exact_two_term_model() {
        let s = seq(300, |k| 2.0 + 3.0 / k);
        let r = fit_power_tail(&s, &[0.0, 1.0], default_window(&s)).unwrap();
        assert!((r.limit - 2.0).abs() < 1e-12);
        assert!((r.coefficients[0] - 3.0).abs() < 1e-9);
        assert!(r.error_estimate < 1e-10);
    }

    #[test]
    fn exact_three_term_model() {
        let s = seq(600, |k| 1.0 + 1.0 / k + 1.0 / (k * k));
        let r = fit_power_tail(&s, &[0.0, 1.0, 2.0], default_window(&s)).unwrap();
        assert!((r.limit - 1.0).abs() < 1e-10);
        assert!(r.error_estimate >= (r.limit - 1.0).abs());
    }

    #[test]
    fn constant_sequence() {
        let s = seq(100, |_| 5.0);
        let r = fit_power_tail(&s, &[0.0, 1.0], default_window(&s)).unwrap();
        assert!((r.limit - 5.0).abs() < 1e-12);
        assert!(r.coefficients[0].abs() < 1e-9);
        let r = limit_with_rate(&s, 1.0).unwrap();
        assert!((r.limit - 5.0).abs() < 1e-10);
    }

    #[test]
    fn log_contamination_degrades_gracefully() {
        let s = seq(2000, |k| 1.0 + libm::log(k) / (k * k));
        let r = limit_with_rate(&s, 1.0).unwrap();
        assert!((r.limit - 1.0).abs() < 1e-4, "{}", r.limit);
        assert!(r.error_estimate >= (r.limit - 1.0).abs());
    }

    #[test]
    fn rejects_bad_models() {
        let s = seq(100, |k| 1.0 / k);
        let w = default_window(&s);
        assert_eq!(fit_power_tail(&s, &[1.0, 2.0], w), Err(Error::InvalidExponents));
        assert_eq!(fit_power_tail(&s, &[0.0, 2.0, 2.0], w), Err(Error::InvalidExponents));
        assert!(matches!(
            fit_power_tail(&s, &[0.0, 1.0], Window::new(99, 100)),
            Err(Error::InsufficientPoints { needed: 4, available: 2 })
        ));
    }

    #[test]
    fn ill_conditioned_basis_rejected() {
        // Many nearly collinear columns over a short, far-out window.
        let s = seq(20000, |k| 1.0 / k);
        let exps: Vec<f64> = (0..10).map(|e| e as f64).collect();
        assert!(matches!(
            fit_power_tail(&s, &exps, Window::new(19000, 20000)),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn refit_is_deterministic() {
        let s = seq(500, |k| 0.3 + 0.1 / k - 2.0 / (k * k));
        let a = limit_with_rate(&s, 1.0).unwrap();
        let b = limit_with_rate(&s, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_integer_rate() {
        let s = seq(1000, |k| 0.7 - 0.2 / libm::sqrt(k) + 0.05 / k);
        let r = fit_power_tail(&s, &[0.0, 0.5, 1.0], default_window(&s)).unwrap();
        assert!((r.limit - 0.7).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn recovers_exact_models(c in proptest::collection::vec(-5.0f64..5.0, 4)) {
            let s = seq(800, |k| c[0] + c[1] / k + c[2] / (k * k) + c[3] / (k * k * k));
            let r = limit_with_rate(&s, 1.0).unwrap();
            let got = r.all_coefficients();
            prop_assert!((got[0] - c[0]).abs() <= 1e-12 * (1.0 + c[0].abs()) + 1e-11);
            prop_assert!(r.error_estimate >= (r.limit - c[0]).abs());
        }

        #[test]
        fn limit_is_linear(c in 0.1f64..100.0) {
            let s = seq(400, |k| 1.5 + 0.4 / k - 0.3 / (k * k));
            let scaled: Vec<_> = s.iter().map(|(k, v)| (*k, v * c)).collect();
            let a = limit_with_rate(&s, 1.0).unwrap();
            let b = limit_with_rate(&scaled, 1.0).unwrap();
            prop_assert!((b.limit - c * a.limit).abs() <= 1e-10 * c * a.limit.abs());
        }
    }
}
