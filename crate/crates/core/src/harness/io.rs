//! Serialization of sweep results.
//!
//! The CSV schema is pinned: 15 columns, floats in `{:.16e}` (17
//! significant digits, enough to round-trip any f64), the literals
//! `nan` / `inf` / `-inf` for non-finite values, lowercase booleans,
//! and LF line endings. A bound column for an inapplicable check
//! prints `false` in both its `_applicable` and `_satisfied` slots.
//! The JSON emitter mirrors the same 15 fields per record (non-finite
//! floats become JSON `null`).

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::TheoremId;
use crate::models::ModelKind;
use crate::{Error, Result};

use super::ComparisonRecord;

pub const CSV_HEADER: &str = "model,n,replicate,seed,log_exact,log_laplace,rel_error_signed,\
rel_error_abs,t2_applicable,t2_satisfied,t3_applicable,t3_satisfied,t4_applicable,t4_satisfied,\
degenerate";

/// One flat CSV/JSON row, exactly the 15 pinned columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub model: ModelKind,
    pub n: u64,
    pub replicate: u64,
    pub seed: u64,
    pub log_exact: f64,
    pub log_laplace: f64,
    pub rel_error_signed: f64,
    pub rel_error_abs: f64,
    pub t2_applicable: bool,
    pub t2_satisfied: bool,
    pub t3_applicable: bool,
    pub t3_satisfied: bool,
    pub t4_applicable: bool,
    pub t4_satisfied: bool,
    pub degenerate: bool,
}

impl RecordRow {
    /// Field-wise equality treating NaN == NaN (for round-trip tests).
    pub fn same_values(&self, other: &RecordRow) -> bool {
        fn feq(a: f64, b: f64) -> bool {
            a.to_bits() == b.to_bits() || a == b
        }
        self.model == other.model
            && self.n == other.n
            && self.replicate == other.replicate
            && self.seed == other.seed
            && feq(self.log_exact, other.log_exact)
            && feq(self.log_laplace, other.log_laplace)
            && feq(self.rel_error_signed, other.rel_error_signed)
            && feq(self.rel_error_abs, other.rel_error_abs)
            && self.t2_applicable == other.t2_applicable
            && self.t2_satisfied == other.t2_satisfied
            && self.t3_applicable == other.t3_applicable
            && self.t3_satisfied == other.t3_satisfied
            && self.t4_applicable == other.t4_applicable
            && self.t4_satisfied == other.t4_satisfied
            && self.degenerate == other.degenerate
    }
}

impl ComparisonRecord {
    pub fn to_row(&self) -> RecordRow {
        let (t2_applicable, t2_satisfied) = self.flags(TheoremId::T2);
        let (t3_applicable, t3_satisfied) = self.flags(TheoremId::T3);
        let (t4_applicable, t4_satisfied) = self.flags(TheoremId::T4);
        RecordRow {
            model: self.model,
            n: self.n,
            replicate: self.replicate,
            seed: self.seed,
            log_exact: self.log_exact,
            log_laplace: self.log_laplace,
            rel_error_signed: self.rel_error_signed,
            rel_error_abs: self.rel_error_abs,
            t2_applicable,
            t2_satisfied,
            t3_applicable,
            t3_satisfied,
            t4_applicable,
            t4_satisfied,
            degenerate: self.degenerate,
        }
    }
}

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(field: &str) -> Option<f64> {
    match field {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => f64::from_str(other).ok().filter(|v| v.is_finite()),
    }
}

fn parse_bool(field: &str) -> Option<bool> {
    match field {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

/// Writes the pinned CSV (header + one line per record, LF endings).
pub fn emit_csv<W: Write>(records: &[ComparisonRecord], out: &mut W) -> std::io::Result<()> {
    let mut buf = String::with_capacity(64 + records.len() * 160);
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for record in records {
        let row = record.to_row();
        let _ = writeln!(
            buf,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.model,
            row.n,
            row.replicate,
            row.seed,
            fmt_float(row.log_exact),
            fmt_float(row.log_laplace),
            fmt_float(row.rel_error_signed),
            fmt_float(row.rel_error_abs),
            row.t2_applicable,
            row.t2_satisfied,
            row.t3_applicable,
            row.t3_satisfied,
            row.t4_applicable,
            row.t4_satisfied,
            row.degenerate,
        );
    }
    out.write_all(buf.as_bytes())
}

/// Writes the records as a JSON array mirroring the CSV fields.
/// Non-finite floats serialize as `null`.
pub fn emit_json<W: Write>(records: &[ComparisonRecord], out: &mut W) -> std::io::Result<()> {
    let rows: Vec<RecordRow> = records.iter().map(ComparisonRecord::to_row).collect();
    serde_json::to_writer_pretty(&mut *out, &rows)?;
    out.write_all(b"\n")
}

/// Parses CSV text produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<RecordRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig("empty CSV input".into()))?;
    if header != CSV_HEADER {
        return Err(Error::InvalidConfig(format!(
            "unexpected CSV header: {header}"
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(Error::InvalidConfig(format!(
                "line {lineno}: expected 15 fields, found {}",
                fields.len()
            )));
        }
        let bad = |name: &str| Error::InvalidConfig(format!("line {lineno}: bad {name} field"));
        let row = RecordRow {
            model: ModelKind::from_str(fields[0]).map_err(|_| bad("model"))?,
            n: fields[1].parse().map_err(|_| bad("n"))?,
            replicate: fields[2].parse().map_err(|_| bad("replicate"))?,
            seed: fields[3].parse().map_err(|_| bad("seed"))?,
            log_exact: parse_float(fields[4]).ok_or_else(|| bad("log_exact"))?,
            log_laplace: parse_float(fields[5]).ok_or_else(|| bad("log_laplace"))?,
            rel_error_signed: parse_float(fields[6]).ok_or_else(|| bad("rel_error_signed"))?,
            rel_error_abs: parse_float(fields[7]).ok_or_else(|| bad("rel_error_abs"))?,
            t2_applicable: parse_bool(fields[8]).ok_or_else(|| bad("t2_applicable"))?,
            t2_satisfied: parse_bool(fields[9]).ok_or_else(|| bad("t2_satisfied"))?,
            t3_applicable: parse_bool(fields[10]).ok_or_else(|| bad("t3_applicable"))?,
            t3_satisfied: parse_bool(fields[11]).ok_or_else(|| bad("t3_satisfied"))?,
            t4_applicable: parse_bool(fields[12]).ok_or_else(|| bad("t4_applicable"))?,
            t4_satisfied: parse_bool(fields[13]).ok_or_else(|| bad("t4_satisfied"))?,
            degenerate: parse_bool(fields[14]).ok_or_else(|| bad("degenerate"))?,
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, ExperimentConfig};
    use super::*;
    use crate::models::TrueDistribution;

    fn sample_records() -> Vec<ComparisonRecord> {
        // n = 2 at θ* = ½ yields degenerate rows with seed 42 among 8
        // replicates; n = 30 rows are all regular.
        let config = ExperimentConfig::new(
            TrueDistribution::Bernoulli { theta_star: 0.5 },
            vec![2, 30],
            8,
            42,
        );
        run_experiment(&config).unwrap()
    }

    #[test]
    fn csv_round_trips_and_is_lf_terminated() {
        let records = sample_records();
        assert!(records.iter().any(|r| r.degenerate), "fixture needs a degenerate row");
        let mut buf = Vec::new();
        emit_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        assert!(text.starts_with(CSV_HEADER));
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), records.len());
        for (row, record) in rows.iter().zip(&records) {
            assert!(row.same_values(&record.to_row()), "row mismatch: {row:?}");
        }
    }

    #[test]
    fn csv_degenerate_row_shape() {
        let records = sample_records();
        let mut buf = Vec::new();
        emit_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text
            .lines()
            .find(|l| l.ends_with(",true"))
            .expect("a degenerate line");
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "bernoulli");
        assert_eq!(fields[5], "nan");
        assert_eq!(fields[6], "nan");
        assert_eq!(fields[7], "nan");
        for &flag in &fields[8..14] {
            assert_eq!(flag, "false");
        }
    }

    #[test]
    fn csv_float_format_is_pinned() {
        assert_eq!(fmt_float(-1.7917594692280550), "-1.7917594692280550e0");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(1.0 / 364.0), "2.7472527472527475e-3");
        assert_eq!(fmt_float(f64::NAN), "nan");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
        // 17 significant digits round-trip exactly.
        let x = std::f64::consts::LN_2;
        assert_eq!(parse_float(&fmt_float(x)), Some(x));
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("model,n\n").is_err());
        let short = format!("{CSV_HEADER}\nbernoulli,2,0\n");
        assert!(parse_csv(&short).is_err());
        let bad_bool = format!(
            "{CSV_HEADER}\nbernoulli,2,0,1,0.0e0,nan,nan,nan,maybe,false,false,false,false,false,true\n"
        );
        assert!(parse_csv(&bad_bool).is_err());
        let bad_model = format!(
            "{CSV_HEADER}\ngaussian,2,0,1,0.0e0,nan,nan,nan,false,false,false,false,false,false,true\n"
        );
        assert!(parse_csv(&bad_model).is_err());
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let records = sample_records();
        let mut buf = Vec::new();
        emit_json(&records, &mut buf).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let array = value.as_array().unwrap();
        assert_eq!(array.len(), records.len());
        let first = &array[0];
        for key in [
            "model",
            "n",
            "replicate",
            "seed",
            "log_exact",
            "log_laplace",
            "rel_error_signed",
            "rel_error_abs",
            "t2_applicable",
            "t2_satisfied",
            "t3_applicable",
            "t3_satisfied",
            "t4_applicable",
            "t4_satisfied",
            "degenerate",
        ] {
            assert!(first.get(key).is_some(), "missing key {key}");
        }
        // Non-finite floats become null.
        let degenerate = array
            .iter()
            .find(|v| v["degenerate"] == serde_json::Value::Bool(true))
            .expect("a degenerate row");
        assert!(degenerate["log_laplace"].is_null());
        let regular = array
            .iter()
            .find(|v| v["degenerate"] == serde_json::Value::Bool(false))
            .unwrap();
        assert!(regular["log_laplace"].is_f64());
    }
}
