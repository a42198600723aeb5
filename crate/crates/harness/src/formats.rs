//! Trajectory CSV, report writers and the logistic-data loader.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing a
//! file back yields the exact bits that were written.

use std::io::{Read, Write};
use std::path::Path;

use genflow_core::integrators::{Sample, Trajectory};
use genflow_core::numerics::Matrix;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(s: &str, what: &'static str) -> Result<f64> {
    s.trim().parse().map_err(|_| HarnessError::Format {
        what,
        detail: format!("not a number: `{s}`"),
    })
}

/// Header `t,f,grad_norm,V,x0..x{n-1}`, followed by `v0..` when the samples carry
/// a co-state.
pub fn trajectory_header(n: usize, with_v: bool) -> Vec<String> {
    let mut h: Vec<String> = ["t", "f", "grad_norm", "V"].iter().map(|s| s.to_string()).collect();
    h.extend((0..n).map(|i| format!("x{i}")));
    if with_v {
        h.extend((0..n).map(|i| format!("v{i}")));
    }
    h
}

/// One row per recorded sample; `V` is empty where no Lyapunov value was recorded.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let samples = traj.samples();
    let n = samples.first().map_or(0, |s| s.x.len());
    let with_v = samples.first().is_some_and(|s| s.v.is_some());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n, with_v))?;
    let mut row = Vec::with_capacity(4 + 2 * n);
    for s in samples {
        row.clear();
        row.push(fmt_f64(s.t));
        row.push(fmt_f64(s.f));
        row.push(fmt_f64(s.grad_norm));
        row.push(s.lyapunov.map(fmt_f64).unwrap_or_default());
        row.extend(s.x.iter().map(|v| fmt_f64(*v)));
        if let Some(v) = &s.v {
            row.extend(v.iter().map(|v| fmt_f64(*v)));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::Format {
        what: "trajectory csv",
        detail: e.to_string(),
    })?;
    Ok(())
}

pub fn trajectory_csv_string(traj: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ascii"))
}

/// Parse the samples of a trajectory CSV written by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<Sample>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4 || cols[..4] != ["t", "f", "grad_norm", "V"] {
        return Err(HarnessError::Format {
            what: "trajectory csv",
            detail: "header must start with t,f,grad_norm,V".into(),
        });
    }
    let n = cols.iter().filter(|c| c.starts_with('x')).count();
    let with_v = cols.iter().any(|c| c.starts_with('v'));
    if cols.len() != 4 + n * if with_v { 2 } else { 1 } {
        return Err(HarnessError::Format {
            what: "trajectory csv",
            detail: "state and co-state columns disagree".into(),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| parse_f64(&rec[i], "trajectory csv");
        let lyapunov = if rec[3].is_empty() { None } else { Some(field(3)?) };
        let x = (0..n).map(|i| field(4 + i)).collect::<Result<Vec<_>>>()?;
        let v = if with_v {
            Some((0..n).map(|i| field(4 + n + i)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        out.push(Sample {
            t: field(0)?,
            f: field(1)?,
            grad_norm: field(2)?,
            lyapunov,
            x,
            v,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord<'a> {
    pub t: f64,
    pub f: f64,
    pub grad_norm: f64,
    #[serde(rename = "V")]
    pub lyapunov: Option<f64>,
    pub x: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<&'a [f64]>,
}

pub fn trajectory_records(traj: &Trajectory) -> Vec<SampleRecord<'_>> {
    traj.samples()
        .iter()
        .map(|s| SampleRecord {
            t: s.t,
            f: s.f,
            grad_norm: s.grad_norm,
            lyapunov: s.lyapunov,
            x: &s.x,
            v: s.v.as_deref(),
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Rows of a flat report table.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Format {
        what: "report csv",
        detail: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Logistic data: header `label,f1,..,fd`, labels `±1` (or `0/1`, mapped to `-1/+1`).
pub fn read_logistic_csv<R: Read>(input: R) -> Result<(Matrix, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0).map(str::trim) != Some("label") || header.len() < 2 {
        return Err(HarnessError::Format {
            what: "logistic csv",
            detail: "header must be label,f1,..,fd".into(),
        });
    }
    let d = header.len() - 1;
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let y = parse_f64(&rec[0], "logistic csv")?;
        labels.push(match y {
            1.0 => 1.0,
            -1.0 | 0.0 => -1.0,
            _ => {
                return Err(HarnessError::Format {
                    what: "logistic csv",
                    detail: format!("label must be ±1 or 0/1, got {y}"),
                })
            }
        });
        for i in 1..=d {
            data.push(parse_f64(&rec[i], "logistic csv")?);
        }
    }
    let rows = labels.len();
    Ok((Matrix::from_row_major(rows, d, data)?, labels))
}

pub fn read_logistic_file(path: &Path) -> Result<(Matrix, Vec<f64>)> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_logistic_csv(f)
}
