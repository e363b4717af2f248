//! The Euler-type integral
//!
//! ```text
//! ∫₀¹ (1−u)^{−1/2} u^{−b−3/2} e^{−z²/(2u)} du = sgn(z) √(2π) e^{−z²/2} Σ_{k=0}^{b} (2k−1)!! C(b,k) / z^{2k+1}
//! ```
//!
//! in closed form and by adaptive Gauss–Kronrod quadrature.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use num_traits::ToPrimitive;

use crate::edgeworth::SQRT_2PI;
use crate::error::{Error, Result};
use crate::laurent::{binomial, double_factorial};

/// Right-hand side; `z ≠ 0`.
pub fn closed_form(b: usize, z: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..=b {
        let c = (double_factorial(2 * k as i64 - 1) * binomial(b as u64, k as u64))
            .to_f64()
            .unwrap_or(f64::NAN);
        sum += c / libm::pow(z, (2 * k + 1) as f64);
    }
    libm::copysign(1.0, z) * SQRT_2PI * libm::exp(-z * z / 2.0) * libm::fabs(sum)
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod estimate and the QUADPACK error estimate on `[a, b]`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let fc = f(centr);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = libm::fabs(resk);
    let mut fv = [(0.0, 0.0); 7];
    for (i, slot) in fv.iter_mut().enumerate() {
        let dx = hlgth * XGK[i];
        let (f1, f2) = (f(centr - dx), f(centr + dx));
        *slot = (f1, f2);
        resk += WGK[i] * (f1 + f2);
        resabs += WGK[i] * (libm::fabs(f1) + libm::fabs(f2));
        if i % 2 == 1 {
            resg += WG[i / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * libm::fabs(fc - reskh);
    for (i, (f1, f2)) in fv.iter().enumerate() {
        resasc += WGK[i] * (libm::fabs(f1 - reskh) + libm::fabs(f2 - reskh));
    }
    let result = resk * hlgth;
    let resabs = resabs * libm::fabs(hlgth);
    let resasc = resasc * libm::fabs(hlgth);
    let mut err = libm::fabs((resk - resg) * hlgth);
    if resasc != 0.0 && err != 0.0 {
        err = resasc * f64::min(1.0, libm::pow(200.0 * err / resasc, 1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive GK15: bisect the interval with the largest error until
/// the total error is at most `max(abs_tol, rel_tol·|value|)`.
pub fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<Quadrature> {
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let (mut value, mut error) = (v, e);
    while error > opts.abs_tol.max(opts.rel_tol * libm::fabs(value)) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonconvergence {
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum from the pieces to keep the totals free of drift.
        value = heap.iter().map(|p| p.value).sum();
        error = heap.iter().map(|p| p.error).sum();
    }
    Ok(Quadrature {
        value,
        error,
        intervals: heap.len(),
    })
}

/// The left-hand side by quadrature.
///
/// The range is split at `1/2`. On `[0, 1/2]` the substitution `u = s²`
/// tames the `u^{−b−3/2}` factor; on `[1/2, 1]` the substitution `1−u = s²`
/// removes the `(1−u)^{−1/2}` singularity.
pub fn quadrature(b: usize, z: f64, opts: &QuadratureOptions) -> Result<Quadrature> {
    let z2 = z * z;
    let p = -(b as f64) - 1.5;
    let near_zero = move |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let u = s * s;
        2.0 * s * libm::pow(1.0 - u, -0.5) * libm::pow(u, p) * libm::exp(-z2 / (2.0 * u))
    };
    let near_one = move |s: f64| {
        let u = 1.0 - s * s;
        2.0 * libm::pow(u, p) * libm::exp(-z2 / (2.0 * u))
    };
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let left = adaptive(&near_zero, 0.0, h, opts)?;
    let right = adaptive(&near_one, 0.0, h, opts)?;
    Ok(Quadrature {
        value: left.value + right.value,
        error: left.error + right.error,
        intervals: left.intervals + right.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let v = closed_form(0, 1.0);
        assert!((v - SQRT_2PI * libm::exp(-0.5)).abs() < 1e-15);
        let v = closed_form(1, 2.0);
        assert!((v - SQRT_2PI * libm::exp(-2.0) * (0.5 + 0.125)).abs() < 1e-15);
        assert_eq!(closed_form(2, -1.5), -closed_form(2, 1.5));
    }

    #[test]
    fn gk15_integrates_polynomials_exactly() {
        let (v, _) = gk15(&|x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!(((v - exact) / exact).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_peak() {
        let q = adaptive(&|x: f64| 1.0 / libm::sqrt(x + 1e-8), 0.0, 1.0, &QuadratureOptions::default())
            .unwrap();
        let exact = 2.0 * (libm::sqrt(1.0 + 1e-8) - libm::sqrt(1e-8));
        assert!((q.value - exact).abs() < 1e-9);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let opts = QuadratureOptions {
            abs_tol: 0.0,
            rel_tol: 0.0,
            max_intervals: 8,
        };
        assert!(matches!(
            adaptive(&|x: f64| libm::sin(1.0 / x), 1e-6, 1.0, &opts),
            Err(Error::QuadratureNonconvergence { .. })
        ));
    }

    #[test]
    fn identity_on_grid() {
        for b in 0..=3 {
            for z in [0.5, 1.0, 2.0, 4.0] {
                let q = quadrature(b, z, &QuadratureOptions::default()).unwrap();
                let c = closed_form(b, z);
                assert!(((q.value - c) / c).abs() < 1e-8, "b={b} z={z}: {} vs {c}", q.value);
            }
        }
    }

    #[test]
    fn identity_for_large_z() {
        let opts = QuadratureOptions {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            ..Default::default()
        };
        for z in [6.0, 10.0] {
            let q = quadrature(2, z, &opts).unwrap();
            let c = closed_form(2, z);
            assert!(c < 1e-7);
            assert!(((q.value - c) / c).abs() < 1e-6, "z={z}");
        }
    }
}
