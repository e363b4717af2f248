//! Walk constants `θ₀`, `θ₁`, the overshoot coefficients `b_ℓ^{(h)}` and a
//! tabulation of `U₁`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::extrapolation::{default_window, fit_power_tail, limit_with_rate, ExtrapolationResult};
use crate::increments::IncrementDistribution;
use crate::oracle::{BarrierKind, KillSweep, OracleOptions, TauStatistics};

pub const DEFAULT_KMAX: usize = 4096;
pub const DEFAULT_U_MAX: usize = 30;

/// Smallest `k` fed to the fits; the earliest terms are far from
/// asymptotic and only widen the data range.
const FIRST_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantOptions {
    /// Horizon of the first-passage sweep.
    pub kmax: usize,
    /// Largest `u` in the `U₁` table.
    pub u_max: usize,
    /// Horizon of the sweep behind the `U₁` table.
    pub u1_nmax: usize,
    /// Expansion order the `b_ℓ^{(h)}` must support.
    pub r: usize,
}

impl Default for ConstantOptions {
    fn default() -> Self {
        Self {
            kmax: DEFAULT_KMAX,
            u_max: DEFAULT_U_MAX,
            u1_nmax: DEFAULT_KMAX,
            r: 2,
        }
    }
}

fn scaled(values: &[f64]) -> Vec<(usize, f64)> {
    values
        .iter()
        .enumerate()
        .skip(FIRST_K)
        .map(|(k, v)| (k, v * libm::pow(k as f64, 1.5)))
        .collect()
}

/// Extrapolated `lim k^{3/2} P(τ = k)`.
pub fn theta0_from_stats(stats: &TauStatistics<f64>) -> Result<ExtrapolationResult> {
    let p: Vec<f64> = stats.p_tau.clone();
    let r = limit_with_rate(&scaled(&p), 1.0)?;
    if r.limit.is_nan() || r.limit <= 0.0 {
        return Err(Error::NonPositiveConstant("theta0"));
    }
    Ok(r)
}

/// Extrapolated `lim k^{3/2} E[−S_τ; τ = k]`.
pub fn theta1_from_stats(stats: &TauStatistics<f64>) -> Result<ExtrapolationResult> {
    limit_with_rate(&scaled(stats.overshoot_mean()), 1.0)
}

pub fn theta0_by_limit(
    dist: &IncrementDistribution,
    kmax: usize,
    barrier: BarrierKind,
) -> Result<ExtrapolationResult> {
    let stats = TauStatistics::<f64>::compute(dist, kmax, barrier, 1, &OracleOptions::default())?;
    theta0_from_stats(&stats)
}

pub fn theta1_by_limit(
    dist: &IncrementDistribution,
    kmax: usize,
    barrier: BarrierKind,
) -> Result<ExtrapolationResult> {
    let stats = TauStatistics::<f64>::compute(dist, kmax, barrier, 1, &OracleOptions::default())?;
    theta1_from_stats(&stats)
}

/// Coefficients `b_0^{(h)} … b_{ℓ_max}^{(h)}` from a fit of
/// `k^{3/2} Θ_k^{(h)}` with exponents `{0, 1, …, ℓ_max + 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BFit {
    pub h: usize,
    pub values: Vec<f64>,
    pub fit: ExtrapolationResult,
    /// Set when `ℓ_max ≥ 2`, where the fitted coefficients lose accuracy.
    pub high_order_warning: bool,
}

pub fn b_fit_from_stats(stats: &TauStatistics<f64>, h: usize, ell_max: usize) -> Result<BFit> {
    if h >= stats.raw_overshoot.len() {
        return Err(Error::MissingConstant { ell: 0, h });
    }
    let seq = scaled(&stats.theta(h));
    let exponents: Vec<f64> = (0..=ell_max + 1).map(|e| e as f64).collect();
    let fit = fit_power_tail(&seq, &exponents, default_window(&seq))?;
    let values = fit.all_coefficients()[..=ell_max].to_vec();
    Ok(BFit {
        h,
        values,
        fit,
        high_order_warning: ell_max >= 2,
    })
}

pub fn b_fit(
    dist: &IncrementDistribution,
    h: usize,
    ell_max: usize,
    kmax: usize,
    barrier: BarrierKind,
) -> Result<BFit> {
    let stats = TauStatistics::<f64>::compute(dist, kmax, barrier, h, &OracleOptions::default())?;
    b_fit_from_stats(&stats, h, ell_max)
}

/// `U₁(u) = lim n^{3/2} P(S_n = u, τ > n)` for `u` from the barrier floor up
/// to `u_max`, each with its fit.
pub fn u1_tabulate(
    dist: &IncrementDistribution,
    u_max: usize,
    n_max: usize,
    barrier: BarrierKind,
) -> Result<BTreeMap<i64, ExtrapolationResult>> {
    if u_max < 1 {
        return Err(Error::InvalidOrder { order: u_max, min: 1 });
    }
    let floor = barrier.floor();
    let width = (u_max as i64 - floor + 1) as usize;
    let mut columns = alloc::vec![Vec::with_capacity(n_max); width];
    let mut sweep = KillSweep::<f64>::new(dist, barrier);
    for _ in 0..n_max {
        sweep.step();
        let n = sweep.time();
        let row = sweep.survivors();
        for (i, col) in columns.iter_mut().enumerate() {
            let u = floor + i as i64;
            col.push((n, row.get(u) * libm::pow(n as f64, 1.5)));
        }
    }
    let mut out = BTreeMap::new();
    for (i, col) in columns.iter().enumerate() {
        let u = floor + i as i64;
        let tail: Vec<(usize, f64)> = col.iter().copied().filter(|(n, _)| *n >= FIRST_K).collect();
        out.insert(u, limit_with_rate(&tail, 1.0)?);
    }
    Ok(out)
}

/// `θ₀` as the kill-event sum over the `U₁` table:
/// `Σ_u U₁(u) P(u + X < floor)`, i.e. `P(X ≤ −u)` for the strict barrier and
/// `P(X < −u)` for the weak one.
pub fn theta0_via_u1(
    dist: &IncrementDistribution,
    u1: &BTreeMap<i64, f64>,
    barrier: BarrierKind,
) -> f64 {
    let floor = barrier.floor();
    let terms: Vec<f64> = u1
        .iter()
        .map(|(u, v)| v * dist.prob_below(*u - floor).to_f64().unwrap_or(f64::NAN))
        .collect();
    crate::scalar::pairwise_sum(&terms)
}

/// All constants an expansion of order `r` needs, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSet {
    pub barrier: BarrierKind,
    pub sigma: f64,
    pub theta0: f64,
    /// `lim k^{3/2} E[−S_τ; τ = k]`, without any `σ` normalisation.
    pub theta1: f64,
    /// `b[(ℓ, h)]`.
    pub b: BTreeMap<(usize, usize), f64>,
    pub provenance: BTreeMap<String, ExtrapolationResult>,
    pub u1_table: BTreeMap<i64, f64>,
    /// `Σ_u U₁(u) P(kill from u)`, an independent estimate of `θ₀`.
    pub theta0_via_u1: f64,
    pub warnings: Vec<String>,
}

impl ConstantSet {
    pub fn compute(
        dist: &IncrementDistribution,
        barrier: BarrierKind,
        opts: &ConstantOptions,
    ) -> Result<Self> {
        let h_max = opts.r + 1;
        let stats =
            TauStatistics::<f64>::compute(dist, opts.kmax, barrier, h_max, &OracleOptions::default())?;
        let mut provenance = BTreeMap::new();
        let t0 = theta0_from_stats(&stats)?;
        let t1 = theta1_from_stats(&stats)?;
        let theta0 = t0.limit;
        let theta1 = t1.limit;
        provenance.insert("theta0".to_string(), t0);
        provenance.insert("theta1".to_string(), t1);

        let mut b = BTreeMap::new();
        let mut warnings = Vec::new();
        for h in 0..=opts.r {
            let ell_max = (opts.r - h) / 2;
            let fit = b_fit_from_stats(&stats, h, ell_max)?;
            if fit.high_order_warning {
                warnings.push(alloc::format!(
                    "b_l^({h}) fitted up to l = {ell_max}; coefficients beyond l = 1 are poorly determined"
                ));
            }
            for (ell, v) in fit.values.iter().enumerate() {
                b.insert((ell, h), *v);
            }
            provenance.insert(alloc::format!("b^({h})"), fit.fit);
        }

        let u1_fits = u1_tabulate(dist, opts.u_max, opts.u1_nmax, barrier)?;
        let u1_table: BTreeMap<i64, f64> = u1_fits.iter().map(|(u, r)| (*u, r.limit)).collect();
        for (u, r) in u1_fits {
            provenance.insert(alloc::format!("U1({u})"), r);
        }
        let theta0_via_u1 = theta0_via_u1(dist, &u1_table, barrier);

        Ok(Self {
            barrier,
            sigma: dist.sigma(),
            theta0,
            theta1,
            b,
            provenance,
            u1_table,
            theta0_via_u1,
            warnings,
        })
    }

    /// `b_ℓ^{(h)}`.
    pub fn b(&self, ell: usize, h: usize) -> Result<f64> {
        self.b
            .get(&(ell, h))
            .copied()
            .ok_or(Error::MissingConstant { ell, h })
    }

    /// Relative gap between the two `θ₀` estimates.
    pub fn theta0_agreement(&self) -> f64 {
        libm::fabs(self.theta0 - self.theta0_via_u1) / self.theta0
    }
}
