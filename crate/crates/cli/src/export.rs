//! CSV and JSON writers. Output depends only on the data, so identical runs
//! produce identical files.

use std::path::Path;

use anyhow::{Context, Result};
use killed_walk::edgeworth::Poly;
use killed_walk::extrapolation::ExtrapolationResult;
use killed_walk::oracle::Pmf;
use killed_walk::Scalar;
use serde::Serialize;

/// Writes `rows` with a header row taken from the field names.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json<R: Serialize>(value: &R) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<R: Serialize>(path: &Path, value: &R) -> Result<()> {
    std::fs::write(path, to_json(value)?)
        .with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FitRecord {
    pub limit: f64,
    pub error_estimate: f64,
    pub window: [usize; 2],
    pub model: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub condition: f64,
}

impl From<&ExtrapolationResult> for FitRecord {
    fn from(r: &ExtrapolationResult) -> Self {
        Self {
            limit: r.limit,
            error_estimate: r.error_estimate,
            window: [r.window.k_min, r.window.k_max],
            model: r.model.clone(),
            coefficients: r.coefficients.clone(),
            condition: r.condition,
        }
    }
}

/// Ascending coefficients, trailing zeros included up to the degree.
pub fn poly_coefficients(p: &Poly<f64>) -> Vec<f64> {
    p.to_ascending()
}

#[derive(Debug, Clone, Serialize)]
pub struct PmfRow {
    pub k: usize,
    pub y: i64,
    pub probability: String,
}

/// One CSV row per cell of each listed pmf; exact values print as `p/q`.
pub fn pmf_rows<T: Scalar + std::fmt::Display>(rows: &[(usize, &Pmf<T>)]) -> Vec<PmfRow> {
    rows.iter()
        .flat_map(|(k, p)| {
            p.iter().map(move |(y, v)| PmfRow {
                k: *k,
                y,
                probability: v.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: usize,
        value: f64,
    }

    #[test]
    fn csv_has_header_and_plain_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &[Row { n: 1, value: 0.1 }, Row { n: 2, value: 2.5e-8 }]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "n,value\n1,0.1\n2,2.5e-8\n");
    }

    #[test]
    fn pmf_slice_export() {
        let p = Pmf {
            offset: 1,
            probs: vec![0.25, 0.5],
        };
        let rows = pmf_rows(&[(3, &p)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].y, 2);
        assert_eq!(rows[1].probability, "0.5");
    }
}
