//! JSON wire formats. Every rational travels as a string (`"num/den"`,
//! integer, or decimal literal, converted exactly); complex entries as
//! `{"re": "...", "im": "..."}` or plain strings for real values. Emitted
//! JSON is always in canonical reduced form, so identical values always
//! serialize to identical bytes.

use crate::cptp;
use crate::dist::FiniteDistribution;
use crate::matrix::RationalMatrix;
use crate::nptools::{PartitionInstance, SubsetSumInstance, SubsetVariant};
use crate::rational::{format_rational, parse_rational, CRat, Rational};
use crate::roots::CMat;
use crate::satembed::SatInstance;
use num::traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("bad rational literal {0:?}")]
    BadRational(String),
    #[error("invalid payload: {0}")]
    Invalid(String),
}

fn rat(s: &str) -> Result<Rational, JsonError> {
    parse_rational(s).map_err(|_| JsonError::BadRational(s.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DistJson {
    pub pmf: Vec<String>,
}

pub fn dist_from_json(text: &str) -> Result<(FiniteDistribution, usize), JsonError> {
    let raw: DistJson = serde_json::from_str(text)?;
    let masses: Result<Vec<Rational>, JsonError> = raw.pmf.iter().map(|s| rat(s)).collect();
    FiniteDistribution::normalize(&masses?)
        .map_err(|e| JsonError::Invalid(e.to_string()))
}

pub fn dist_to_json(d: &FiniteDistribution) -> serde_json::Value {
    serde_json::json!({
        "pmf": d.probs().iter().map(format_rational).collect::<Vec<_>>(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<String>>,
}

pub fn matrix_from_json(text: &str) -> Result<RationalMatrix, JsonError> {
    let raw: MatrixJson = serde_json::from_str(text)?;
    if raw.rows.len() != raw.dim || raw.rows.iter().any(|r| r.len() != raw.dim) {
        return Err(JsonError::Invalid(format!(
            "expected {} rows of {} entries",
            raw.dim, raw.dim
        )));
    }
    let mut rows = Vec::with_capacity(raw.dim);
    for row in &raw.rows {
        let parsed: Result<Vec<Rational>, JsonError> = row.iter().map(|s| rat(s)).collect();
        rows.push(parsed?);
    }
    RationalMatrix::from_rows(rows).map_err(|e| JsonError::Invalid(e.to_string()))
}

pub fn matrix_to_json(m: &RationalMatrix) -> serde_json::Value {
    let rows: Vec<Vec<String>> = (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| format_rational(m.get(i, j))).collect())
        .collect();
    serde_json::json!({ "dim": m.dim(), "rows": rows })
}

/// Complex entries accept either a bare rational string or {re, im}.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntryJson {
    Real(String),
    Complex { re: String, im: String },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CMatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<ComplexEntryJson>>,
}

pub fn cmatrix_from_json(text: &str) -> Result<CMat, JsonError> {
    let raw: CMatrixJson = serde_json::from_str(text)?;
    if raw.rows.len() != raw.dim || raw.rows.iter().any(|r| r.len() != raw.dim) {
        return Err(JsonError::Invalid(format!(
            "expected {} rows of {} entries",
            raw.dim, raw.dim
        )));
    }
    let mut out = CMat::zeros(raw.dim);
    for (i, row) in raw.rows.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            *out.get_mut(i, j) = match entry {
                ComplexEntryJson::Real(s) => CRat::real(rat(s)?),
                ComplexEntryJson::Complex { re, im } => CRat::new(rat(re)?, rat(im)?),
            };
        }
    }
    Ok(out)
}

pub fn cmatrix_to_json(m: &CMat) -> serde_json::Value {
    let rows: Vec<Vec<serde_json::Value>> = (0..m.dim)
        .map(|i| {
            (0..m.dim)
                .map(|j| {
                    let e = m.get(i, j);
                    if e.im.is_zero() {
                        serde_json::json!(format_rational(&e.re))
                    } else {
                        serde_json::json!({
                            "re": format_rational(&e.re),
                            "im": format_rational(&e.im),
                        })
                    }
                })
                .collect()
        })
        .collect();
    serde_json::json!({ "dim": m.dim, "rows": rows })
}

/// Convenience for real rational matrices arriving through the complex
/// format.
pub fn cmat_real_part(m: &CMat) -> Result<RationalMatrix, JsonError> {
    if m.entries.iter().any(|e| !e.im.is_zero()) {
        return Err(JsonError::Invalid(
            "matrix has complex entries where a real one is required".into(),
        ));
    }
    Ok(m.real_part())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubsetJson {
    pub elements: Vec<String>,
    #[serde(default)]
    pub bound: Option<String>,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub x: Option<String>,
    #[serde(default)]
    pub y: Option<String>,
}

fn default_variant() -> String {
    "plain".into()
}

pub fn subset_from_json(text: &str) -> Result<SubsetSumInstance, JsonError> {
    let raw: SubsetJson = serde_json::from_str(text)?;
    let elements: Result<Vec<Rational>, JsonError> =
        raw.elements.iter().map(|s| rat(s)).collect();
    let elements = elements?;
    let bound = match &raw.bound {
        Some(s) => rat(s)?,
        None => Rational::zero(),
    };
    let variant = match raw.variant.as_str() {
        "plain" => SubsetVariant::Plain,
        "even" => SubsetVariant::Even,
        "m" => SubsetVariant::Cardinality(
            raw.m
                .ok_or_else(|| JsonError::Invalid("variant \"m\" needs field m".into()))?,
        ),
        "signed-m" | "signed_m" => {
            let m = raw
                .m
                .ok_or_else(|| JsonError::Invalid("signed variant needs field m".into()))?;
            let x = rat(raw
                .x
                .as_deref()
                .ok_or_else(|| JsonError::Invalid("signed variant needs field x".into()))?)?;
            let y = rat(raw
                .y
                .as_deref()
                .ok_or_else(|| JsonError::Invalid("signed variant needs field y".into()))?)?;
            SubsetVariant::Signed {
                cardinality: m,
                window: (x, y),
            }
        }
        other => {
            return Err(JsonError::Invalid(format!(
                "unknown variant {other:?}; use plain|even|m|signed-m"
            )))
        }
    };
    Ok(SubsetSumInstance {
        elements,
        bound,
        variant,
    })
}

pub fn subset_to_json(inst: &SubsetSumInstance) -> serde_json::Value {
    let mut value = serde_json::json!({
        "elements": inst.elements.iter().map(format_rational).collect::<Vec<_>>(),
        "bound": format_rational(&inst.bound),
    });
    let obj = value.as_object_mut().unwrap();
    match &inst.variant {
        SubsetVariant::Plain => {
            obj.insert("variant".into(), "plain".into());
        }
        SubsetVariant::Even => {
            obj.insert("variant".into(), "even".into());
        }
        SubsetVariant::Cardinality(m) => {
            obj.insert("variant".into(), "m".into());
            obj.insert("m".into(), (*m).into());
        }
        SubsetVariant::Signed {
            cardinality,
            window: (x, y),
        } => {
            obj.insert("variant".into(), "signed-m".into());
            obj.insert("m".into(), (*cardinality).into());
            obj.insert("x".into(), format_rational(x).into());
            obj.insert("y".into(), format_rational(y).into());
        }
    }
    value
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionJson {
    pub elements: Vec<String>,
}

pub fn partition_from_json(text: &str) -> Result<PartitionInstance, JsonError> {
    let raw: PartitionJson = serde_json::from_str(text)?;
    let elements: Result<Vec<Rational>, JsonError> =
        raw.elements.iter().map(|s| rat(s)).collect();
    Ok(PartitionInstance {
        elements: elements?,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SatJson {
    pub n_v: usize,
    pub clauses: Vec<[i32; 3]>,
}

pub fn sat_from_json(text: &str) -> Result<SatInstance, JsonError> {
    let raw: SatJson = serde_json::from_str(text)?;
    SatInstance::new(raw.n_v, raw.clauses).map_err(|e| JsonError::Invalid(e.to_string()))
}

pub fn sat_to_json(inst: &SatInstance) -> serde_json::Value {
    serde_json::json!({ "n_v": inst.n_v, "clauses": inst.clauses })
}

/// CPTP report serialization shared by the CLI.
pub fn cptp_report_to_json(report: &cptp::CptpReport) -> serde_json::Value {
    serde_json::json!({
        "cptp": report.is_cptp(),
        "completely_positive": report.completely_positive,
        "trace_preserving": report.trace_preserving,
        "hermiticity_deviation": format_rational(&report.hermiticity_deviation),
        "trace_deviation": format_rational(&report.trace_deviation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_roundtrip() {
        let (d, shift) = dist_from_json(r#"{"pmf":["0","2","1","1"]}"#).unwrap();
        assert_eq!(shift, 1);
        let emitted = dist_to_json(&d).to_string();
        let (again, _) = dist_from_json(&emitted).unwrap();
        assert_eq!(d, again);
        assert!(emitted.contains("1/2"));
    }

    #[test]
    fn matrix_roundtrip() {
        let text = r#"{"dim":2,"rows":[["1/2","1/2"],["0.25","3/4"]]}"#;
        let m = matrix_from_json(text).unwrap();
        assert!(m.classify().stochastic);
        let again = matrix_from_json(&matrix_to_json(&m).to_string()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn subset_variants() {
        let inst =
            subset_from_json(r#"{"elements":["1","3"],"bound":"3","variant":"even"}"#).unwrap();
        assert!(matches!(inst.variant, SubsetVariant::Even));
        let inst = subset_from_json(
            r#"{"elements":["1","2"],"variant":"signed-m","m":1,"x":"-1","y":"2"}"#,
        )
        .unwrap();
        assert!(matches!(inst.variant, SubsetVariant::Signed { .. }));
        let again = subset_from_json(&subset_to_json(&inst).to_string()).unwrap();
        assert_eq!(inst, again);
        assert!(subset_from_json(r#"{"elements":["1"],"variant":"m"}"#).is_err());
    }

    #[test]
    fn complex_matrix_accepts_both_entry_forms() {
        let text = r#"{"dim":1,"rows":[[{"re":"1/2","im":"0"}]]}"#;
        let m = cmatrix_from_json(text).unwrap();
        assert!(m.get(0, 0).im.is_zero());
        let text = r#"{"dim":1,"rows":[["1/2"]]}"#;
        let m2 = cmatrix_from_json(text).unwrap();
        assert_eq!(m.get(0, 0).re, m2.get(0, 0).re);
    }

    #[test]
    fn sat_parse() {
        let inst =
            sat_from_json(r#"{"n_v":4,"clauses":[[1,2,4],[2,3,4],[1,3,4],[1,2,3]]}"#).unwrap();
        assert_eq!(inst.n_c(), 4);
        assert!(sat_from_json(r#"{"n_v":1,"clauses":[[1,2,1]]}"#).is_err());
    }
}
