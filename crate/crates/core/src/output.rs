//! Deterministic CSV and JSON rendering.
//!
//! Every float is rounded to 12 significant digits before it is written, so
//! the same inputs give byte-identical files across runs and thread counts.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::measures::MeasureSet;
use crate::oracle::OracleCheck;
use crate::sweeps::{AdditivityReport, SweepResult};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits; `-0.0` becomes `0.0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let r: f64 = s.parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest round-trip text of the rounded value; exponent form outside
/// `[1e-4, 1e12)` so tiny residuals stay readable.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    let a = r.abs();
    if a != 0.0 && !(1e-4..1e12).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Recursively rounds every float inside a JSON value.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = round_json(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn write_records<W: Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn measure_fields(m: &MeasureSet) -> [String; 4] {
    [
        fmt_num(m.reflected_entropy),
        fmt_num(m.mutual_information),
        fmt_num(m.log_negativity),
        fmt_num(m.markov_gap),
    ]
}

pub const MEASURE_HEADER: [&str; 9] = ["L", "x1", "x2", "y", "K", "S_R", "I", "E_N", "gap"];

/// One row per sweep point. Extrapolated limits, when present, go in a
/// trailing row with `L` set to `inf`.
pub fn write_sweep_csv<W: Write>(out: W, result: &SweepResult) -> Result<()> {
    let mut rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.sites.to_string(),
                fmt_num(r.x1),
                fmt_num(r.x2),
                fmt_num(r.y),
                r.k.to_string(),
            ];
            v.extend(measure_fields(&r.measures));
            v
        })
        .collect();
    if let (Some(e), Some(last)) = (&result.extrapolated, result.rows.last()) {
        let mut v = vec![
            "inf".to_string(),
            fmt_num(last.x1),
            fmt_num(last.x2),
            fmt_num(last.y),
            result.momenta.clone(),
        ];
        v.extend(measure_fields(&e.limit));
        rows.push(v);
    }
    write_records(out, &MEASURE_HEADER, rows)
}

pub const ADDITIVITY_HEADER: [&str; 15] = [
    "L", "x1", "x2", "y", "K", "S_R", "I", "E_N", "S_R_sum", "I_sum", "E_N_sum", "dS_R", "dI",
    "dE_N", "pass",
];

pub fn write_additivity_csv<W: Write>(out: W, reports: &[AdditivityReport]) -> Result<()> {
    let rows = reports
        .iter()
        .flat_map(|rep| {
            rep.rows.iter().map(move |r| {
                let mut v = vec![
                    r.sites.to_string(),
                    fmt_num(r.x1),
                    fmt_num(r.x2),
                    fmt_num(r.y),
                    r.k.to_string(),
                ];
                v.extend(r.joint.triple().map(fmt_num));
                v.extend(r.predicted.triple().map(fmt_num));
                v.extend(r.deviation.map(fmt_num));
                v.push(rep.pass.to_string());
                v
            })
        })
        .collect();
    write_records(out, &ADDITIVITY_HEADER, rows)
}

pub const ORACLE_HEADER: [&str; 14] = [
    "stats",
    "L",
    "ell1",
    "d",
    "ell2",
    "K",
    "S_R",
    "I",
    "E_N",
    "S_R_oracle",
    "I_oracle",
    "E_N_oracle",
    "max_diff",
    "pass",
];

pub fn write_oracle_csv<W: Write>(out: W, checks: &[OracleCheck]) -> Result<()> {
    let rows = checks
        .iter()
        .map(|c| {
            let g = &c.case.geometry;
            let mut v = vec![
                c.case.stats.to_string(),
                g.sites().to_string(),
                g.ell1().to_string(),
                g.d().to_string(),
                g.ell2().to_string(),
                c.case.k.to_string(),
            ];
            v.extend(c.pipeline.triple().map(fmt_num));
            v.extend(c.oracle.triple().map(fmt_num));
            v.push(fmt_num(c.max_diff));
            v.push(c.pass.to_string());
            v
        })
        .collect();
    write_records(out, &ORACLE_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-1e-20 * 0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(round_sig(123456.7890123456), 123456.789012);
    }

    #[test]
    fn number_text() {
        assert_eq!(fmt_num(1.1102230246251565e-16), "1.11022302463e-16");
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(256.0), "256");
    }

    #[test]
    fn json_floats_are_rounded() {
        let m = MeasureSet::new(2.0f64.ln() * 2.0, 0.1 + 0.2, 0.0);
        let s = to_json(&m).unwrap();
        assert!(s.contains("\"I\": 0.3"), "{s}");
        assert!(s.contains("\"S_R\": 1.38629436112"), "{s}");
        let v: Value = serde_json::from_str(&s).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, ["E_N", "I", "S_R", "gap"]);
    }
}
