//! JSON and CSV formats for collections and reports.
//!
//! A collection file is
//! `{"n": 3, "mode": "exact", "hyperplanes": [{"a": ["1", "1/2", 0], "b": "-2"}]}`.
//! In exact mode values are `"p/q"` strings, integers, or decimal numbers
//! (read as the exact decimal they spell). `mode` defaults to `exact`.

use std::io::Write;

use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cube::{Collection, CoverReport, CubeError, Hyperplane, HyperplaneSet, NumericMode};
use crate::lab::{EstimateReport, Verdict};
use crate::matrix::Matrix;
use crate::rational::{format_rational, parse_rational, to_f64};
use crate::witness::BreakdownReport;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

fn exact_value(v: &Value, at: &str) -> Result<BigRational, IoError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => {
            return Err(format_err(format!(
                "{at}: expected a number or \"p/q\" string"
            )))
        }
    };
    parse_rational(&text).map_err(|e| format_err(format!("{at}: {e}")))
}

fn float_value(v: &Value, at: &str) -> Result<f64, IoError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => parse_rational(s)
            .ok()
            .map(|r| to_f64(&r))
            .or_else(|| s.parse().ok()),
        _ => None,
    };
    match x {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(format_err(format!("{at}: expected a finite number"))),
    }
}

fn planes_of(value: &Value) -> Result<&Vec<Value>, IoError> {
    value
        .get("hyperplanes")
        .and_then(Value::as_array)
        .ok_or_else(|| format_err("missing `hyperplanes` array"))
}

/// Parses a collection file. `mode` overrides the file's own mode.
pub fn parse_collection(text: &str, mode: Option<NumericMode>) -> Result<Collection, IoError> {
    let value: Value = serde_json::from_str(text)?;
    let planes = planes_of(&value)?;
    let file_mode = match value.get("mode").and_then(Value::as_str) {
        None | Some("exact") => NumericMode::Exact,
        Some("float") => NumericMode::Float,
        Some(other) => return Err(format_err(format!("unknown mode `{other}`"))),
    };
    let mode = mode.unwrap_or(file_mode);
    let n = match value.get("n") {
        Some(n) => n
            .as_u64()
            .ok_or_else(|| format_err("`n` must be a non-negative integer"))?
            as usize,
        None => planes
            .first()
            .and_then(|p| p.get("a"))
            .and_then(Value::as_array)
            .map(Vec::len)
            .ok_or_else(|| format_err("`n` missing and no hyperplane to infer it from"))?,
    };
    let rows = planes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let a = p
                .get("a")
                .and_then(Value::as_array)
                .ok_or_else(|| format_err(format!("hyperplane {i}: missing `a` array")))?;
            let b = p
                .get("b")
                .ok_or_else(|| format_err(format!("hyperplane {i}: missing `b`")))?;
            Ok((i, a, b))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(match mode {
        NumericMode::Exact => {
            let mut out = Vec::with_capacity(rows.len());
            for (i, a, b) in rows {
                let a = a
                    .iter()
                    .enumerate()
                    .map(|(j, x)| exact_value(x, &format!("hyperplane {i}, a[{j}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                out.push(Hyperplane::new(
                    a,
                    exact_value(b, &format!("hyperplane {i}, b"))?,
                )?);
            }
            Collection::Exact(HyperplaneSet::new(n, out)?)
        }
        NumericMode::Float => {
            let mut out = Vec::with_capacity(rows.len());
            for (i, a, b) in rows {
                let a = a
                    .iter()
                    .enumerate()
                    .map(|(j, x)| float_value(x, &format!("hyperplane {i}, a[{j}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                out.push(Hyperplane::new(
                    a,
                    float_value(b, &format!("hyperplane {i}, b"))?,
                )?);
            }
            Collection::Float(HyperplaneSet::new(n, out)?)
        }
    })
}

pub fn collection_to_json(c: &Collection) -> Value {
    let (mode, planes): (&str, Vec<Value>) = match c {
        Collection::Exact(s) => (
            "exact",
            s.planes()
                .iter()
                .map(|p| {
                    json!({
                        "a": p.coefficients().iter().map(format_rational).collect::<Vec<_>>(),
                        "b": format_rational(p.offset()),
                    })
                })
                .collect(),
        ),
        Collection::Float(s) => (
            "float",
            s.planes()
                .iter()
                .map(|p| json!({ "a": p.coefficients(), "b": p.offset() }))
                .collect(),
        ),
    };
    json!({ "n": c.dim(), "mode": mode, "hyperplanes": planes })
}

pub fn cover_report_json(r: &CoverReport) -> Value {
    json!({
        "n": r.n,
        "total_edges": r.total_edges,
        "sliced_edges": r.sliced_edges,
        "unsliced_count": r.unsliced_count,
        "unsliced_listed": r.unsliced.len(),
        "degenerate_incidences": r.degenerate_incidences,
        "per_hyperplane_slice_counts": r.per_hyperplane_slice_counts,
        "is_cover": r.is_cover(),
    })
}

/// `base_bits_hex,flip_index` rows for the listed unsliced edges.
pub fn write_unsliced_csv<W: Write>(r: &CoverReport, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["base_bits_hex", "flip_index"])?;
    for e in &r.unsliced {
        w.write_record([e.base().to_hex(), e.flip().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |x| x.to_string())
}

pub fn write_breakdown_csv<W: Write>(r: &BreakdownReport, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "quantity",
        "estimate",
        "ci_lo",
        "ci_hi",
        "paper_bound",
        "vacuous_flag",
    ])?;
    for row in &r.rows {
        w.write_record([
            row.quantity.clone(),
            row.estimate.to_string(),
            row.ci_lo.to_string(),
            row.ci_hi.to_string(),
            opt(row.paper_bound),
            row.vacuous.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Vacuous => "vacuous",
        Verdict::Fail => "fail",
    }
}

pub fn write_lab_csv<W: Write>(reports: &[EstimateReport], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "quantity",
        "estimate",
        "ci_lo",
        "ci_hi",
        "trials",
        "paper_bound",
        "verdict",
    ])?;
    for r in reports {
        w.write_record([
            r.quantity.clone(),
            r.estimate.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.trials.to_string(),
            r.paper_bound.to_string(),
            verdict_label(r.verdict).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A matrix given as a JSON array of rows, or the coefficient rows of a
/// collection file.
pub fn parse_matrix(text: &str) -> Result<Matrix, IoError> {
    let value: Value = serde_json::from_str(text)?;
    if value.is_array() {
        return serde_json::from_value(value).map_err(IoError::from);
    }
    let c = parse_collection(text, Some(NumericMode::Float))?;
    let (rows, _) = c.to_f64_rows();
    Matrix::from_rows(rows).map_err(|e| format_err(e.to_string()))
}

/// Offsets `b` of a collection file as floats.
pub fn parse_offsets(text: &str) -> Result<Vec<f64>, IoError> {
    let c = parse_collection(text, Some(NumericMode::Float))?;
    Ok(c.to_f64_rows().1)
}

/// A vector given as a JSON array of numbers.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, IoError> {
    let v: Vec<Value> = serde_json::from_str(text)?;
    v.iter()
        .enumerate()
        .map(|(i, x)| float_value(x, &format!("entry {i}")))
        .collect()
}
