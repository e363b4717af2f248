//! Distribution files: `{"support": [ints], "probs": ["p/q" | "0.25" | 0.25]}`.

use std::path::Path;

use anyhow::{Context, Result};
use killed_walk::increments::parse_probability;
use killed_walk::{ArithmeticMode, IncrementDistribution};
use num_rational::BigRational;
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Prob {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistFile {
    support: Vec<i64>,
    probs: Vec<Prob>,
}

/// Parses the JSON text of a distribution file.
///
/// Every probability is first read as an exact decimal or fraction. In
/// float mode it is then rounded to the nearest `f64`, whose binary value
/// is what the walk uses.
pub fn parse(text: &str, mode: ArithmeticMode) -> Result<IncrementDistribution> {
    let file: DistFile = serde_json::from_str(text).context("malformed distribution file")?;
    let exact = file
        .probs
        .iter()
        .map(|p| match p {
            Prob::Text(s) => parse_probability(s),
            Prob::Number(n) => parse_probability(&n.to_string()),
        })
        .collect::<Result<Vec<BigRational>, _>>()?;
    let dist = match mode {
        ArithmeticMode::Exact => IncrementDistribution::validate(&file.support, &exact, mode)?,
        ArithmeticMode::Float => {
            let floats: Vec<f64> = exact
                .iter()
                .map(|r| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN))
                .collect();
            IncrementDistribution::from_f64(&file.support, &floats)?
        }
    };
    Ok(dist)
}

pub fn load(path: &Path, mode: ArithmeticMode) -> Result<IncrementDistribution> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read distribution file {}", path.display()))?;
    parse(&text, mode)
}

/// SHA-256 of the canonical form `x:p/q;…|mode`.
pub fn hash(dist: &IncrementDistribution) -> [u8; 32] {
    let mut h = Sha256::new();
    for (x, p) in dist.iter() {
        h.update(format!("{x}:{p};").as_bytes());
    }
    h.update(match dist.mode() {
        ArithmeticMode::Exact => b"|exact".as_slice(),
        ArithmeticMode::Float => b"|float".as_slice(),
    });
    h.finalize().into()
}

pub fn hash_hex(dist: &IncrementDistribution) -> String {
    hash(dist).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use killed_walk::Error;

    #[test]
    fn accepts_strings_and_numbers() {
        let d = parse(r#"{"support": [-1, 0, 2], "probs": ["2/5", 0.4, "0.2"]}"#, ArithmeticMode::Exact)
            .unwrap();
        assert_eq!(d.support(), &[-1, 0, 2]);
        assert_eq!(d.probs()[1], BigRational::new(2.into(), 5.into()));
    }

    #[test]
    fn float_mode_uses_binary_values() {
        let d = parse(r#"{"support": [-1, 0, 1], "probs": ["0.3", "0.4", "0.3"]}"#, ArithmeticMode::Float)
            .unwrap();
        assert_eq!(d.probs()[0], BigRational::from_float(0.3).unwrap());
    }

    #[test]
    fn span_error_surfaces() {
        let err = parse(r#"{"support": [-1, 1], "probs": ["1/2", "1/2"]}"#, ArithmeticMode::Exact)
            .unwrap_err();
        assert_eq!(err.downcast_ref::<Error>(), Some(&Error::SpanNotOne { span: 2 }));
    }

    #[test]
    fn hash_depends_on_law_and_mode() {
        let text = r#"{"support": [-1, 0, 1], "probs": ["0.3", "0.4", "0.3"]}"#;
        let a = parse(text, ArithmeticMode::Exact).unwrap();
        let b = parse(text, ArithmeticMode::Float).unwrap();
        let c = parse(r#"{"support": [-1, 0, 1], "probs": ["0.25", "0.5", "0.25"]}"#, ArithmeticMode::Exact)
            .unwrap();
        assert_eq!(hash(&a), hash(&a.clone()));
        assert_ne!(hash(&a), hash(&b));
        assert_ne!(hash(&a), hash(&c));
        assert_eq!(hash_hex(&a).len(), 64);
    }
}
