//! The subcommands. Each returns a JSON report for stdout and whether its
//! thresholds passed; files go to the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use killed_walk::constants::{ConstantOptions, ConstantSet};
use killed_walk::expansion::ExpansionSet;
use killed_walk::integral::{closed_form, quadrature, QuadratureOptions};
use killed_walk::oracle::{KilledWalkTable, OracleOptions, Pmf};
use killed_walk::{ArithmeticMode, BarrierKind, Error, IncrementDistribution};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{self, CacheScalar};
use crate::distfile;
use crate::experiment::{
    self, barrier_name, error_row, error_rows, interval_row, summarize,
    ErrorTableRow, ExperimentConfig, VerifySummary,
};
use crate::export::{self, FitRecord};
use crate::SCHEMA_VERSION;

/// Failure classes, mapped to exit codes 1, 2 and 3.
#[derive(Debug)]
pub enum CliError {
    Threshold(String),
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Threshold(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Threshold(m) => write!(f, "verification threshold failed: {m}"),
            CliError::Input(e) => write!(f, "{e:#}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        let numeric = matches!(
            e.downcast_ref::<Error>(),
            Some(
                Error::DegenerateConditioning
                    | Error::InsufficientPoints { .. }
                    | Error::IllConditioned { .. }
                    | Error::NonPositiveConstant(_)
                    | Error::MissingConstant { .. }
                    | Error::MissingOrder { .. }
                    | Error::CancellationFailure { .. }
                    | Error::QuadratureNonconvergence { .. }
            )
        );
        if numeric {
            CliError::Numeric(e)
        } else {
            CliError::Input(e)
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

/// A finished command: the stdout report and its verdict.
#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub pass: bool,
    pub failure: Option<String>,
}

impl Outcome {
    pub fn into_result(self) -> Result<String, CliError> {
        if self.pass {
            Ok(self.report)
        } else {
            print!("{}", self.report);
            Err(CliError::Threshold(self.failure.unwrap_or_default()))
        }
    }
}

/// Options shared by the walk-dependent commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: ExperimentConfig,
    pub cache_dir: Option<PathBuf>,
}

impl RunOptions {
    fn load(&self) -> Result<IncrementDistribution, CliError> {
        self.config.validate().map_err(CliError::Input)?;
        Ok(distfile::load(&self.config.dist_path, self.config.mode)?)
    }

    fn constant_options(&self) -> ConstantOptions {
        ConstantOptions {
            kmax: self.config.kmax,
            u1_nmax: self.config.kmax,
            r: self.config.r,
            ..ConstantOptions::default()
        }
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        let dir = &self.config.out_dir;
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(dir)
    }
}

#[derive(Debug, Serialize)]
struct DistRecord {
    support: Vec<i64>,
    probs: Vec<String>,
    sha256: String,
}

fn dist_record(d: &IncrementDistribution) -> DistRecord {
    DistRecord {
        support: d.support().to_vec(),
        probs: d.probs().iter().map(|p| p.to_string()).collect(),
        sha256: distfile::hash_hex(d),
    }
}

/// Relative tolerance of the two `θ₀` pipelines and the `b_0` checks.
pub const CONSTANT_TOLERANCE: f64 = 1e-3;

/// The three constant cross-checks: both `θ₀` pipelines, `b_0^{(0)}` against
/// `θ₀` and `σ·b_0^{(1)}` against `θ₁`.
#[derive(Debug, Clone, Serialize)]
pub struct Agreement {
    pub theta0_relative_gap: f64,
    pub b00_relative_gap: f64,
    pub b01_sigma_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
struct BRecord {
    ell: usize,
    h: usize,
    value: f64,
}

#[derive(Debug, Serialize)]
struct U1Record {
    u: i64,
    value: f64,
    error_estimate: f64,
}

#[derive(Debug, Serialize)]
struct ConstantsReport {
    schema_version: u32,
    command: &'static str,
    dist: DistRecord,
    barrier: &'static str,
    kmax: usize,
    sigma: f64,
    theta0: f64,
    theta1: f64,
    theta0_via_u1: f64,
    agreement: Agreement,
    b: Vec<BRecord>,
    u1: Vec<U1Record>,
    provenance: BTreeMap<String, FitRecord>,
    warnings: Vec<String>,
}

pub fn agreement(c: &ConstantSet) -> Agreement {
    let b00 = c.b.get(&(0, 0)).copied().unwrap_or(f64::NAN);
    let b01 = c.b.get(&(0, 1)).copied().unwrap_or(f64::NAN);
    let theta0_relative_gap = c.theta0_agreement();
    let b00_relative_gap = (b00 - c.theta0).abs() / c.theta0;
    // θ₁ vanishes for some walks.
    let b01_sigma_gap = (b01 * c.sigma - c.theta1).abs() / c.theta1.abs().max(c.theta0);
    Agreement {
        theta0_relative_gap,
        b00_relative_gap,
        b01_sigma_gap,
        tolerance: CONSTANT_TOLERANCE,
        pass: [theta0_relative_gap, b00_relative_gap, b01_sigma_gap]
            .iter()
            .all(|g| *g <= CONSTANT_TOLERANCE),
    }
}

fn constants_report(d: &IncrementDistribution, c: &ConstantSet, kmax: usize) -> ConstantsReport {
    ConstantsReport {
        schema_version: SCHEMA_VERSION,
        command: "constants",
        dist: dist_record(d),
        barrier: barrier_name(&c.barrier),
        kmax,
        sigma: c.sigma,
        theta0: c.theta0,
        theta1: c.theta1,
        theta0_via_u1: c.theta0_via_u1,
        agreement: agreement(c),
        b: c.b.iter().map(|((ell, h), v)| BRecord { ell: *ell, h: *h, value: *v }).collect(),
        u1: c
            .u1_table
            .iter()
            .map(|(u, v)| U1Record {
                u: *u,
                value: *v,
                error_estimate: c.provenance[&format!("U1({u})")].error_estimate,
            })
            .collect(),
        provenance: c.provenance.iter().map(|(k, v)| (k.clone(), v.into())).collect(),
        warnings: c.warnings.clone(),
    }
}

pub fn cmd_constants(opts: &RunOptions) -> Result<Outcome, CliError> {
    let dist = opts.load()?;
    let c = ConstantSet::compute(&dist, opts.config.barrier, &opts.constant_options())?;
    let report = constants_report(&dist, &c, opts.config.kmax);
    let pass = report.agreement.pass;
    let text = export::to_json(&report)?;
    std::fs::write(opts.out_dir()?.join("constants.json"), &text).context("cannot write report")?;
    Ok(Outcome {
        report: text,
        pass,
        failure: (!pass).then(|| "constant pipelines disagree".to_string()),
    })
}

#[derive(Debug, Serialize)]
struct PolyRecord {
    nu: usize,
    degree: Option<i32>,
    expected_degree: usize,
    coefficients: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ResidualRecord {
    eta: usize,
    negative_power_ratio: f64,
}

#[derive(Debug, Serialize)]
struct PolysReport {
    schema_version: u32,
    command: &'static str,
    dist: DistRecord,
    barrier: &'static str,
    r: usize,
    sigma: f64,
    m3: f64,
    theta0: f64,
    theta1: f64,
    polys: Vec<PolyRecord>,
    cancellation: Vec<ResidualRecord>,
    /// Polynomial part of `W₁` in `x`, when `r ≥ 2`.
    w1: Option<Vec<f64>>,
    constants: ConstantsReport,
    warnings: Vec<String>,
}

fn polys_report(dist: &IncrementDistribution, e: &ExpansionSet, kmax: usize) -> PolysReport {
    let m3 = dist.raw_moment(3).to_f64().unwrap_or(f64::NAN);
    PolysReport {
        schema_version: SCHEMA_VERSION,
        command: "polys",
        dist: dist_record(dist),
        barrier: barrier_name(&e.barrier),
        r: e.r,
        sigma: e.sigma,
        m3,
        theta0: e.constants.theta0,
        theta1: e.constants.theta1,
        polys: e
            .p
            .iter()
            .map(|(nu, p)| PolyRecord {
                nu: *nu,
                degree: p.degree(),
                expected_degree: 3 * nu - 5,
                coefficients: export::poly_coefficients(p),
            })
            .collect(),
        cancellation: e
            .q
            .values()
            .map(|q| ResidualRecord {
                eta: q.eta,
                negative_power_ratio: q.residual_ratio,
            })
            .collect(),
        w1: e.uj_polynomial_part(1).ok().map(|p| export::poly_coefficients(&p)),
        constants: constants_report(dist, &e.constants, kmax),
        warnings: e.warnings.clone(),
    }
}

pub fn cmd_polys(opts: &RunOptions) -> Result<Outcome, CliError> {
    let dist = opts.load()?;
    let e = ExpansionSet::build(&dist, opts.config.r, opts.config.barrier, &opts.constant_options())?;
    let text = export::to_json(&polys_report(&dist, &e, opts.config.kmax))?;
    std::fs::write(opts.out_dir()?.join("polys.json"), &text).context("cannot write report")?;
    Ok(Outcome {
        report: text,
        pass: true,
        failure: None,
    })
}

fn table_rows<T: CacheScalar>(
    dist: &IncrementDistribution,
    n_list: &[usize],
    barrier: BarrierKind,
    cache_dir: Option<&Path>,
) -> Result<Vec<Pmf<f64>>> {
    let nmax = *n_list.last().expect("validated nonempty");
    let path = cache_dir.map(|d| d.join(cache::file_name(dist, nmax, barrier)));
    let cached = path.as_ref().filter(|p| p.exists()).and_then(|p| {
        match cache::load::<T>(p, dist, nmax, barrier) {
            Ok(t) if n_list.iter().all(|n| t.row(*n).is_some()) => Some(t),
            Ok(_) => None,
            Err(e) => {
                eprintln!("ignoring cache {}: {e:#}", p.display());
                None
            }
        }
    });
    let table = match cached {
        Some(t) => t,
        None => {
            let t = KilledWalkTable::<T>::build_rows(dist, nmax, barrier, n_list, &OracleOptions::default())?;
            if let (Some(p), Some(dir)) = (&path, cache_dir) {
                std::fs::create_dir_all(dir)?;
                cache::save(p, dist, &t)?;
            }
            t
        }
    };
    Ok(n_list
        .iter()
        .map(|n| table.row(*n).expect("row retained").to_f64())
        .collect())
}

fn killed_rows(dist: &IncrementDistribution, opts: &RunOptions) -> Result<Vec<Pmf<f64>>> {
    let c = &opts.config;
    let dir = opts.cache_dir.as_deref();
    match c.mode {
        ArithmeticMode::Exact => table_rows::<BigRational>(dist, &c.n_list, c.barrier, dir),
        ArithmeticMode::Float => table_rows::<f64>(dist, &c.n_list, c.barrier, dir),
    }
}

/// Expansion and oracle rows, computed side by side.
fn expansion_and_rows(
    dist: &IncrementDistribution,
    opts: &RunOptions,
) -> Result<(ExpansionSet, Vec<Pmf<f64>>), CliError> {
    let (e, rows) = rayon::join(
        || ExpansionSet::build(dist, opts.config.r, opts.config.barrier, &opts.constant_options()),
        || killed_rows(dist, opts),
    );
    Ok((e?, rows?))
}

/// Error table and summary for a configuration.
pub fn run_verify(opts: &RunOptions) -> Result<(Vec<ErrorTableRow>, VerifySummary), CliError> {
    let dist = opts.load()?;
    let (e, rows) = expansion_and_rows(&dist, opts)?;
    let c = &opts.config;
    let per_n: Vec<Vec<ErrorTableRow>> = c
        .n_list
        .par_iter()
        .zip(rows.par_iter())
        .map(|(n, row)| error_rows(row, &e, *n, c.r, &c.ratios))
        .collect();
    let table: Vec<ErrorTableRow> = per_n.into_iter().flatten().collect();
    let (u, v) = experiment::INTERVAL;
    let interval = c
        .n_list
        .iter()
        .zip(&rows)
        .map(|(n, row)| interval_row(&dist, row, *n, u, v))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(c.r, c.barrier, &c.n_list, &table, interval);
    Ok((table, summary))
}

pub fn cmd_verify(opts: &RunOptions) -> Result<Outcome, CliError> {
    let (table, summary) = run_verify(opts)?;
    let dir = opts.out_dir()?;
    export::write_csv(&dir.join("verify_errors.csv"), &table)?;
    export::write_json(&dir.join("verify_summary.json"), &summary)?;
    let mut failures = Vec::new();
    if !summary.flat_pass {
        failures.push(format!(
            "max scaled error {:?} grows beyond x{}",
            summary.max_scaled_err, summary.flat_within
        ));
    }
    if !summary.interval_pass {
        failures.push(format!(
            "interval deviation grows beyond x{}",
            summary.interval_within
        ));
    }
    Ok(Outcome {
        report: export::to_json(&summary)?,
        pass: summary.pass,
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

pub const INTEGRAL_BS: [usize; 4] = [0, 1, 2, 3];
pub const INTEGRAL_ZS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const INTEGRAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct IntegralRow {
    pub b: usize,
    pub z: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub quadrature_error: f64,
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
struct IntegralReport {
    schema_version: u32,
    command: &'static str,
    tolerance: f64,
    rows: Vec<IntegralRow>,
    pass: bool,
}

pub fn integral_rows() -> Result<Vec<IntegralRow>, CliError> {
    let opts = QuadratureOptions::default();
    let mut out = Vec::new();
    for b in INTEGRAL_BS {
        for z in INTEGRAL_ZS {
            let q = quadrature(b, z, &opts)?;
            let c = closed_form(b, z);
            let rel = ((q.value - c) / c).abs();
            out.push(IntegralRow {
                b,
                z,
                closed_form: c,
                quadrature: q.value,
                quadrature_error: q.error,
                relative_error: rel,
                pass: rel <= INTEGRAL_TOLERANCE,
            });
        }
    }
    Ok(out)
}

pub fn cmd_integral_check(out_dir: Option<&Path>) -> Result<Outcome, CliError> {
    let rows = integral_rows()?;
    let pass = rows.iter().all(|r| r.pass);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).context("cannot create output directory")?;
        export::write_csv(&dir.join("integral_check.csv"), &rows)?;
    }
    let report = IntegralReport {
        schema_version: SCHEMA_VERSION,
        command: "integral-check",
        tolerance: INTEGRAL_TOLERANCE,
        rows,
        pass,
    };
    Ok(Outcome {
        report: export::to_json(&report)?,
        pass,
        failure: (!pass).then(|| "quadrature and closed form disagree".to_string()),
    })
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    n: usize,
    x: i64,
    t: f64,
    exact: f64,
    approx: f64,
}

#[derive(Debug, Serialize)]
struct U1Row {
    u: i64,
    u1: f64,
    error_estimate: f64,
    /// `2θ₀u/σ²`.
    reference: f64,
    /// Polynomial part of `W₁`, blank when `r < 2`.
    w1: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReportIndex {
    schema_version: u32,
    command: &'static str,
    config: ExperimentConfig,
    files: Vec<String>,
}

/// Plot-ready files: profiles per `n`, scaled-error curves per order and the
/// `U₁` table.
pub fn cmd_report(opts: &RunOptions) -> Result<Outcome, CliError> {
    let dist = opts.load()?;
    let (e, rows) = expansion_and_rows(&dist, opts)?;
    let c = &opts.config;
    let dir = opts.out_dir()?;
    let mut files = Vec::new();

    for (n, row) in c.n_list.iter().zip(&rows) {
        let s = e.sigma * (*n as f64).sqrt();
        let hi = (3.0 * s).ceil() as i64;
        let profile: Vec<ProfileRow> = (c.barrier.floor()..=hi)
            .map(|x| ProfileRow {
                n: *n,
                x,
                t: x as f64 / s,
                exact: row.get(x),
                approx: e.evaluate(*n, x),
            })
            .collect();
        let name = format!("profile_n{n}.csv");
        export::write_csv(&dir.join(&name), &profile)?;
        files.push(name);
    }

    let curves: Vec<Vec<ErrorTableRow>> = (1..=c.r)
        .into_par_iter()
        .map(|order| {
            c.n_list
                .iter()
                .zip(&rows)
                .flat_map(|(n, row)| {
                    let s = e.sigma * (*n as f64).sqrt();
                    let lo = (0.2 * s).ceil() as i64;
                    let hi = (3.0 * s).floor() as i64;
                    (lo..=hi).map(|x| error_row(row, &e, *n, order, x)).collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let curves: Vec<ErrorTableRow> = curves.into_iter().flatten().collect();
    export::write_csv(&dir.join("scaled_error.csv"), &curves)?;
    files.push("scaled_error.csv".into());

    let slope = 2.0 * e.constants.theta0 / (e.sigma * e.sigma);
    let w1 = e.uj_polynomial_part(1).ok();
    let u1: Vec<U1Row> = e
        .constants
        .u1_table
        .iter()
        .map(|(u, v)| U1Row {
            u: *u,
            u1: *v,
            error_estimate: e.constants.provenance[&format!("U1({u})")].error_estimate,
            reference: slope * *u as f64,
            w1: w1.as_ref().map(|p| p.eval_f64(*u as f64)),
        })
        .collect();
    export::write_csv(&dir.join("u1.csv"), &u1)?;
    files.push("u1.csv".into());

    let index = ReportIndex {
        schema_version: SCHEMA_VERSION,
        command: "report",
        config: c.clone(),
        files,
    };
    let text = export::to_json(&index)?;
    std::fs::write(dir.join("report.json"), &text).context("cannot write report index")?;
    Ok(Outcome {
        report: text,
        pass: true,
        failure: None,
    })
}
