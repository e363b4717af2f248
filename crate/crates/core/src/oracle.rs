//! Exact dynamic programming for the free and the killed walk.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::scalar::Scalar;

/// Which positions kill the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BarrierKind {
    /// `τ = inf{n ≥ 1 : S_n ≤ 0}`; survivors sit at `y ≥ 1`.
    Strict,
    /// `τ̄ = inf{n ≥ 1 : S_n < 0}`; survivors sit at `y ≥ 0`.
    Weak,
}

impl BarrierKind {
    /// Lowest surviving position.
    pub fn floor(self) -> i64 {
        match self {
            BarrierKind::Strict => 1,
            BarrierKind::Weak => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BarrierKind::Strict => "strict",
            BarrierKind::Weak => "weak",
        }
    }
}

/// Default cap on the horizon in exact arithmetic.
pub const DEFAULT_EXACT_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    /// Largest horizon allowed when the scalar type is exact.
    pub exact_cap: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

impl OracleOptions {
    fn check<T: Scalar>(&self, n: usize) -> Result<()> {
        if T::EXACT && n > self.exact_cap {
            return Err(Error::HorizonTooLarge {
                requested: n,
                cap: self.exact_cap,
            });
        }
        Ok(())
    }
}

/// A probability mass function on a contiguous integer window:
/// `probs[i]` is the mass at `offset + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<T> {
    pub offset: i64,
    pub probs: Vec<T>,
}

impl<T: Scalar> Pmf<T> {
    pub fn delta(x: i64) -> Self {
        Self {
            offset: x,
            probs: vec![T::one()],
        }
    }

    pub fn empty(offset: i64) -> Self {
        Self {
            offset,
            probs: Vec::new(),
        }
    }

    /// Mass at `x`, zero outside the window.
    pub fn get(&self, x: i64) -> T {
        let i = x - self.offset;
        if i < 0 || i as usize >= self.probs.len() {
            return T::zero();
        }
        self.probs[i as usize].clone()
    }

    pub fn total(&self) -> T {
        T::sum_of(&self.probs)
    }

    /// Iterates over `(x, mass)`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.offset + i as i64, p))
    }

    /// Last position of the window (may carry zero mass).
    pub fn last(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    /// One step of the walk: `out(z) = Σ_s p(s)·self(z − s)`, summed in
    /// ascending `s`.
    pub fn convolve(&self, steps: &[(i64, T)]) -> Self {
        if self.probs.is_empty() {
            return Self::empty(self.offset + steps[0].0);
        }
        let lo = steps[0].0;
        let hi = steps[steps.len() - 1].0;
        let len = self.probs.len() + (hi - lo) as usize;
        let offset = self.offset + lo;
        let n = self.probs.len() as i64;
        let mut out = Vec::with_capacity(len);
        for i in 0..len as i64 {
            let mut acc = T::zero();
            for (s, p) in steps {
                let j = i + lo - s;
                if (0..n).contains(&j) {
                    acc = acc + self.probs[j as usize].clone() * p.clone();
                }
            }
            out.push(acc);
        }
        Self { offset, probs: out }
    }

    /// Splits into (`x < at`, `x ≥ at`).
    pub fn split_at(self, at: i64) -> (Self, Self) {
        let cut = (at - self.offset).clamp(0, self.probs.len() as i64) as usize;
        let mut low = self.probs;
        let high = low.split_off(cut);
        (
            Self {
                offset: self.offset,
                probs: low,
            },
            Self {
                offset: self.offset + cut as i64,
                probs: high,
            },
        )
    }

    pub fn to_f64(&self) -> Pmf<f64> {
        Pmf {
            offset: self.offset,
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }
}

pub fn steps_of<T: Scalar>(dist: &IncrementDistribution) -> Vec<(i64, T)> {
    dist.iter().map(|(x, p)| (x, T::from_rational(p))).collect()
}

/// Distribution of `S_n` by `n`-fold convolution.
pub fn free_pmf<T: Scalar>(
    dist: &IncrementDistribution,
    n: usize,
    opts: &OracleOptions,
) -> Result<Pmf<T>> {
    opts.check::<T>(n)?;
    let steps = steps_of::<T>(dist);
    let mut pmf = Pmf::delta(0);
    for _ in 0..n {
        pmf = pmf.convolve(&steps);
    }
    Ok(pmf)
}

/// Step-by-step forward sweep of the killed walk.
///
/// After `k` steps, [`survivors`](Self::survivors) holds `P(S_k = y, τ > k)`
/// for `y ≥ floor` and [`killed`](Self::killed) holds `P(S_k = z, τ = k)`
/// for `z < floor`.
#[derive(Debug, Clone)]
pub struct KillSweep<T> {
    steps: Vec<(i64, T)>,
    barrier: BarrierKind,
    k: usize,
    survivors: Pmf<T>,
    killed: Pmf<T>,
}

impl<T: Scalar> KillSweep<T> {
    pub fn new(dist: &IncrementDistribution, barrier: BarrierKind) -> Self {
        Self {
            steps: steps_of(dist),
            barrier,
            k: 0,
            survivors: Pmf::delta(0),
            killed: Pmf::empty(0),
        }
    }

    pub fn step(&mut self) {
        let moved = self.survivors.convolve(&self.steps);
        let (killed, survivors) = moved.split_at(self.barrier.floor());
        self.killed = killed;
        self.survivors = survivors;
        self.k += 1;
    }

    /// Number of steps taken.
    pub fn time(&self) -> usize {
        self.k
    }

    pub fn survivors(&self) -> &Pmf<T> {
        &self.survivors
    }

    pub fn killed(&self) -> &Pmf<T> {
        &self.killed
    }

    pub fn barrier(&self) -> BarrierKind {
        self.barrier
    }
}

/// `P(S_k = y, τ > k)` for `1 ≤ k ≤ n`, together with the kill-time law.
#[derive(Debug, Clone)]
pub struct KilledWalkTable<T> {
    pub barrier: BarrierKind,
    pub horizon: usize,
    rows: Vec<Option<Pmf<T>>>,
    killed: Vec<Option<Pmf<T>>>,
    survival: Vec<T>,
    p_tau: Vec<T>,
}

impl<T: Scalar> KilledWalkTable<T> {
    /// Every row `k = 1..=n`.
    pub fn build(
        dist: &IncrementDistribution,
        n: usize,
        barrier: BarrierKind,
        opts: &OracleOptions,
    ) -> Result<Self> {
        Self::build_inner(dist, n, barrier, opts, |_| true)
    }

    /// Only the rows listed in `keep`; survival and kill probabilities are
    /// still recorded for every `k`.
    pub fn build_rows(
        dist: &IncrementDistribution,
        n: usize,
        barrier: BarrierKind,
        keep: &[usize],
        opts: &OracleOptions,
    ) -> Result<Self> {
        Self::build_inner(dist, n, barrier, opts, |k| keep.contains(&k))
    }

    fn build_inner(
        dist: &IncrementDistribution,
        n: usize,
        barrier: BarrierKind,
        opts: &OracleOptions,
        keep: impl Fn(usize) -> bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidOrder { order: 0, min: 1 });
        }
        opts.check::<T>(n)?;
        let mut sweep = KillSweep::<T>::new(dist, barrier);
        let mut rows = vec![None];
        let mut killed = vec![None];
        let mut survival = vec![T::one()];
        let mut p_tau = vec![T::zero()];
        for k in 1..=n {
            sweep.step();
            survival.push(sweep.survivors().total());
            p_tau.push(sweep.killed().total());
            if keep(k) {
                rows.push(Some(sweep.survivors().clone()));
                killed.push(Some(sweep.killed().clone()));
            } else {
                rows.push(None);
                killed.push(None);
            }
        }
        Ok(Self {
            barrier,
            horizon: n,
            rows,
            killed,
            survival,
            p_tau,
        })
    }

    /// Reassembles a table from its rows, e.g. when loading a cache.
    /// `rows[k]` and `killed[k]` must be both present or both absent, for
    /// `k = 0..=horizon` (index 0 is ignored).
    pub fn from_rows(
        barrier: BarrierKind,
        rows: Vec<Option<Pmf<T>>>,
        killed: Vec<Option<Pmf<T>>>,
        survival: Vec<T>,
        p_tau: Vec<T>,
    ) -> Self {
        Self {
            barrier,
            horizon: rows.len().saturating_sub(1),
            rows,
            killed,
            survival,
            p_tau,
        }
    }

    /// Row `k` if it was retained.
    pub fn row(&self, k: usize) -> Option<&Pmf<T>> {
        self.rows.get(k).and_then(Option::as_ref)
    }

    /// `P(S_k = z, τ = k)` for `z` below the floor, if retained.
    pub fn killed_row(&self, k: usize) -> Option<&Pmf<T>> {
        self.killed.get(k).and_then(Option::as_ref)
    }

    /// `P(S_k = y, τ > k)`; zero for unretained rows or out-of-range `y`.
    pub fn entry(&self, k: usize, y: i64) -> T {
        self.row(k).map_or_else(T::zero, |r| r.get(y))
    }

    /// `P(τ > k)` for `0 ≤ k ≤ n`.
    pub fn survival(&self) -> &[T] {
        &self.survival
    }

    /// `P(τ = k)` for `0 ≤ k ≤ n` (entry 0 is zero).
    pub fn p_tau(&self) -> &[T] {
        &self.p_tau
    }
}

/// First-passage statistics from a single sweep.
#[derive(Debug, Clone)]
pub struct TauStatistics<T> {
    pub kmax: usize,
    pub barrier: BarrierKind,
    sigma: f64,
    /// `P(τ = k)`, index `k` (entry 0 is zero).
    pub p_tau: Vec<T>,
    /// `raw[h][k] = Σ_y y^h P(S_k = −y, τ = k)`.
    pub raw_overshoot: Vec<Vec<T>>,
}

impl<T: Scalar> TauStatistics<T> {
    pub fn compute(
        dist: &IncrementDistribution,
        kmax: usize,
        barrier: BarrierKind,
        h_max: usize,
        opts: &OracleOptions,
    ) -> Result<Self> {
        if kmax == 0 {
            return Err(Error::InvalidOrder { order: 0, min: 1 });
        }
        opts.check::<T>(kmax)?;
        let mut sweep = KillSweep::<T>::new(dist, barrier);
        let mut p_tau = vec![T::zero()];
        let mut raw = vec![vec![T::zero()]; h_max + 1];
        for _ in 1..=kmax {
            sweep.step();
            let killed = sweep.killed();
            p_tau.push(killed.total());
            for (h, row) in raw.iter_mut().enumerate() {
                let terms: Vec<T> = killed
                    .iter()
                    .map(|(z, p)| T::from_i64(-z).powi(h as u32) * p.clone())
                    .collect();
                row.push(T::sum_of(&terms));
            }
        }
        Ok(Self {
            kmax,
            barrier,
            sigma: dist.sigma(),
            p_tau,
            raw_overshoot: raw,
        })
    }

    /// `E[−S_τ; τ = k]`.
    pub fn overshoot_mean(&self) -> &[T] {
        &self.raw_overshoot[1]
    }

    /// `Θ_k^{(h)} = Σ_y (y/σ)^h P(S_k = −y, τ = k)` for `k = 0..=kmax`.
    pub fn theta(&self, h: usize) -> Vec<f64> {
        let scale = libm::pow(self.sigma, h as f64);
        self.raw_overshoot[h]
            .iter()
            .map(|v| v.to_f64() / scale)
            .collect()
    }
}

/// Whether `x/(σ√n) ∈ [u, v]`, decided in exact arithmetic.
pub fn in_scaled_window(x: i64, n: usize, variance: &BigRational, u: f64, v: f64) -> bool {
    if x < 0 {
        return false;
    }
    let (Some(u), Some(v)) = (BigRational::from_float(u), BigRational::from_float(v)) else {
        return false;
    };
    let x2 = BigRational::from_integer(BigInt::from(x) * BigInt::from(x));
    let scale = variance * BigRational::from_integer(BigInt::from(n));
    x2 >= &u * &u * &scale && x2 <= &v * &v * &scale
}

/// `P(S_n/(σ√n) ∈ [u, v] | τ > n)` from a row of the killed table.
pub fn conditioned_interval_prob<T: Scalar>(
    dist: &IncrementDistribution,
    row: &Pmf<T>,
    n: usize,
    u: f64,
    v: f64,
) -> Result<T> {
    if !(u > 0.0 && u < v) {
        return Err(Error::InvalidInterval);
    }
    let total = row.total();
    if total.is_zero() {
        return Err(Error::DegenerateConditioning);
    }
    let variance = dist.variance();
    let inside: Vec<T> = row
        .iter()
        .filter(|(x, _)| in_scaled_window(*x, n, &variance, u, v))
        .map(|(_, p)| p.clone())
        .collect();
    Ok(T::sum_of(&inside) / total)
}

/// Builds the killed table to horizon `n` and evaluates
/// [`conditioned_interval_prob`] on its last row.
pub fn conditioned_interval_prob_at<T: Scalar>(
    dist: &IncrementDistribution,
    n: usize,
    u: f64,
    v: f64,
    barrier: BarrierKind,
    opts: &OracleOptions,
) -> Result<T> {
    let table = KilledWalkTable::<T>::build_rows(dist, n, barrier, &[n], opts)?;
    let row = table.row(n).ok_or(Error::DegenerateConditioning)?;
    conditioned_interval_prob(dist, row, n, u, v)
}
