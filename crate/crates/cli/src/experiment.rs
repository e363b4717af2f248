//! Verification experiments: error tables, decay exponents and the
//! conditional interval check.

use std::path::PathBuf;

use anyhow::{ensure, Result};
use killed_walk::expansion::ExpansionSet;
use killed_walk::oracle::{conditioned_interval_prob, Pmf};
use killed_walk::{ArithmeticMode, BarrierKind, IncrementDistribution};
use serde::Serialize;

pub const DEFAULT_RATIOS: [f64; 6] = [0.2, 0.5, 1.0, 1.5, 2.0, 3.0];
pub const MAX_RATIO: f64 = 10.0;
pub const DEFAULT_NMAX: usize = 1600;

/// Allowed growth of the per-`n` maximum scaled error over the first `n`.
pub const FLATNESS_FACTOR: f64 = 3.0;
/// Allowed growth of the scaled interval deviation over the first `n`.
pub const INTERVAL_FACTOR: f64 = 2.0;
pub const INTERVAL: (f64, f64) = (0.5, 1.5);

pub fn barrier_name(b: &BarrierKind) -> &'static str {
    b.name()
}

pub fn mode_name(m: &ArithmeticMode) -> &'static str {
    match m {
        ArithmeticMode::Exact => "exact",
        ArithmeticMode::Float => "float",
    }
}

fn ser_barrier<S: serde::Serializer>(b: &BarrierKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(barrier_name(b))
}

fn ser_mode<S: serde::Serializer>(m: &ArithmeticMode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(mode_name(m))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dist_path: PathBuf,
    pub r: usize,
    #[serde(serialize_with = "ser_barrier")]
    pub barrier: BarrierKind,
    pub n_list: Vec<usize>,
    /// Points `x = round(ratio · σ√n)`.
    pub ratios: Vec<f64>,
    pub kmax: usize,
    #[serde(serialize_with = "ser_mode")]
    pub mode: ArithmeticMode,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.r >= 1, "r must be at least 1");
        ensure!(!self.n_list.is_empty(), "n list is empty");
        ensure!(self.n_list[0] >= 1, "n must be positive");
        ensure!(
            self.n_list.windows(2).all(|w| w[0] < w[1]),
            "n list must be strictly increasing"
        );
        ensure!(!self.ratios.is_empty(), "ratio list is empty");
        ensure!(
            self.ratios.iter().all(|r| *r > 0.0 && *r <= MAX_RATIO),
            "ratios must lie in (0, {MAX_RATIO}]"
        );
        Ok(())
    }

    pub fn nmax(&self) -> usize {
        *self.n_list.last().unwrap_or(&0)
    }
}

/// `{nmax/16, nmax/4, nmax}`.
pub fn default_n_list(nmax: usize) -> Vec<usize> {
    let mut v: Vec<usize> = [nmax / 16, nmax / 4, nmax]
        .into_iter()
        .filter(|n| *n >= 1)
        .collect();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTableRow {
    pub r: usize,
    pub n: usize,
    pub x: i64,
    /// `x / (σ√n)`.
    pub t: f64,
    pub exact: f64,
    pub approx: f64,
    pub abs_err: f64,
    /// `abs_err · n^{(r+2)/2}`.
    pub scaled_err: f64,
}

pub fn scaled_window(sigma: f64, n: usize, ratio: f64) -> i64 {
    (ratio * sigma * (n as f64).sqrt()).round() as i64
}

/// Rows at the grid points; the expansion is truncated at `P_{r+1}`.
pub fn error_rows(
    row: &Pmf<f64>,
    expansion: &ExpansionSet,
    n: usize,
    r: usize,
    ratios: &[f64],
) -> Vec<ErrorTableRow> {
    let sigma = expansion.sigma;
    let mut xs: Vec<i64> = ratios.iter().map(|q| scaled_window(sigma, n, *q)).collect();
    xs.dedup();
    xs.into_iter()
        .map(|x| error_row(row, expansion, n, r, x))
        .collect()
}

pub fn error_row(row: &Pmf<f64>, expansion: &ExpansionSet, n: usize, r: usize, x: i64) -> ErrorTableRow {
    let exact = row.get(x);
    let approx = expansion.evaluate_upto(n, x, r + 1);
    let abs_err = (exact - approx).abs();
    ErrorTableRow {
        r,
        n,
        x,
        t: x as f64 / (expansion.sigma * (n as f64).sqrt()),
        exact,
        approx,
        abs_err,
        scaled_err: abs_err * (n as f64).powf((r as f64 + 2.0) / 2.0),
    }
}

/// `max |exact − expansion|` over every lattice point of
/// `[0.2σ√n, 3σ√n]`.
pub fn window_max_error(row: &Pmf<f64>, expansion: &ExpansionSet, n: usize, r: usize) -> f64 {
    let s = expansion.sigma * (n as f64).sqrt();
    let lo = (0.2 * s).ceil() as i64;
    let hi = (3.0 * s).floor() as i64;
    (lo..=hi)
        .map(|x| (row.get(x) - expansion.evaluate_upto(n, x, r + 1)).abs())
        .fold(0.0, f64::max)
}

/// `log(E_i / E_{i+1}) / log(n_{i+1} / n_i)` for consecutive entries.
pub fn decay_exponents(ns: &[usize], errors: &[f64]) -> Vec<f64> {
    ns.windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

/// Whether no entry exceeds `factor` times the first.
pub fn bounded_growth(values: &[f64], factor: f64) -> bool {
    match values.first() {
        Some(first) => values.iter().all(|v| *v <= factor * first),
        None => true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRow {
    pub n: usize,
    pub u: f64,
    pub v: f64,
    pub conditional: f64,
    pub limit: f64,
    /// `|conditional − limit| · √n`.
    pub scaled_dev: f64,
}

/// `P(S_n/(σ√n) ∈ [u, v] | τ > n)` against `e^{−u²/2} − e^{−v²/2}`.
pub fn interval_row(dist: &IncrementDistribution, row: &Pmf<f64>, n: usize, u: f64, v: f64) -> Result<IntervalRow> {
    let conditional = conditioned_interval_prob(dist, row, n, u, v)?;
    let limit = (-u * u / 2.0).exp() - (-v * v / 2.0).exp();
    Ok(IntervalRow {
        n,
        u,
        v,
        conditional,
        limit,
        scaled_dev: (conditional - limit).abs() * (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub schema_version: u32,
    pub r: usize,
    #[serde(serialize_with = "ser_barrier")]
    pub barrier: BarrierKind,
    pub n_list: Vec<usize>,
    pub max_scaled_err: Vec<f64>,
    pub decay_exponents: Vec<f64>,
    pub target_exponent: f64,
    pub flat_within: f64,
    pub flat_pass: bool,
    pub interval: Vec<IntervalRow>,
    pub interval_within: f64,
    pub interval_pass: bool,
    pub pass: bool,
}

/// Summary over the error table and the interval rows.
pub fn summarize(
    r: usize,
    barrier: BarrierKind,
    n_list: &[usize],
    rows: &[ErrorTableRow],
    interval: Vec<IntervalRow>,
) -> VerifySummary {
    let max_scaled: Vec<f64> = n_list
        .iter()
        .map(|n| {
            rows.iter()
                .filter(|row| row.n == *n)
                .map(|row| row.scaled_err)
                .fold(0.0, f64::max)
        })
        .collect();
    let max_abs: Vec<f64> = n_list
        .iter()
        .map(|n| {
            rows.iter()
                .filter(|row| row.n == *n)
                .map(|row| row.abs_err)
                .fold(0.0, f64::max)
        })
        .collect();
    let flat_pass = bounded_growth(&max_scaled, FLATNESS_FACTOR);
    let devs: Vec<f64> = interval.iter().map(|i| i.scaled_dev).collect();
    let interval_pass = bounded_growth(&devs, INTERVAL_FACTOR);
    VerifySummary {
        schema_version: crate::SCHEMA_VERSION,
        r,
        barrier,
        n_list: n_list.to_vec(),
        decay_exponents: decay_exponents(n_list, &max_abs),
        target_exponent: (r as f64 + 2.0) / 2.0,
        max_scaled_err: max_scaled,
        flat_within: FLATNESS_FACTOR,
        flat_pass,
        interval,
        interval_within: INTERVAL_FACTOR,
        interval_pass,
        pass: flat_pass && interval_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            dist_path: "d.json".into(),
            r: 1,
            barrier: BarrierKind::Strict,
            n_list: vec![100, 400, 1600],
            ratios: DEFAULT_RATIOS.to_vec(),
            kmax: 4096,
            mode: ArithmeticMode::Float,
            out_dir: "out".into(),
        }
    }

    #[test]
    fn config_validation() {
        assert!(config().validate().is_ok());
        let mut c = config();
        c.n_list = vec![400, 100];
        assert!(c.validate().is_err());
        let mut c = config();
        c.ratios = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = config();
        c.ratios = vec![11.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_list() {
        assert_eq!(default_n_list(1600), vec![100, 400, 1600]);
        assert_eq!(default_n_list(8), vec![2, 8]);
    }

    #[test]
    fn exponents_and_growth() {
        let e = decay_exponents(&[100, 400], &[1.0, 1.0 / 8.0]);
        assert!((e[0] - 1.5).abs() < 1e-12);
        assert!(bounded_growth(&[1.0, 2.9, 0.5], 3.0));
        assert!(!bounded_growth(&[1.0, 3.1], 3.0));
    }
}
