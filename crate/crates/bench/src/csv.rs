//! Per-trial CSV output.
//!
//! Floats are written in scientific notation with the fewest digits (at least
//! nine significant) that parse back to the identical value.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rotavg::averaging::Method;

use crate::sweep::TrialRecord;
use crate::{BenchError, Result};

pub const CSV_HEADER: &str =
    "method,rejection,sigma_deg,outlier_ratio,trial,error_deg,time_us_per_rot,iterations";

fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    (8..16)
        .map(|p| format!("{x:.p$e}"))
        .find(|s| s.parse::<f64>() == Ok(x))
        .unwrap_or_else(|| format!("{x:.16e}"))
}

pub fn write_csv<W: Write>(records: &[TrialRecord], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.variant().rejection_label(),
            fmt_float(r.sigma_deg),
            fmt_float(r.outlier_ratio),
            r.trial,
            fmt_float(r.error_deg),
            fmt_float(r.time_us_per_rotation),
            r.iterations
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `records` to `path`. An empty record list is an error and creates
/// no file.
pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(BenchError::NoRecords);
    }
    write_csv(records, BufWriter::new(File::create(path)?))
}

pub fn parse_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(BenchError::Csv {
                line: 1,
                message: "missing or unexpected header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_row(l).map_err(|message| BenchError::Csv {
                line: i + 1,
                message,
            })
        })
        .collect()
}

fn parse_row(line: &str) -> std::result::Result<TrialRecord, String> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    }
    let float = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| format!("invalid number `{s}`"))
    };
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("invalid integer `{s}`"))
    };
    let method: Method = fields[0]
        .parse()
        .map_err(|e: rotavg::Error| e.to_string())?;
    let rejection = match fields[1] {
        "on" => Some(true),
        "off" => Some(false),
        "none" => None,
        other => return Err(format!("invalid rejection flag `{other}`")),
    };
    Ok(TrialRecord {
        method,
        rejection,
        sigma_deg: float(fields[2])?,
        outlier_ratio: float(fields[3])?,
        trial: int(fields[4])?,
        error_deg: float(fields[5])?,
        time_us_per_rotation: float(fields[6])?,
        iterations: int(fields[7])?,
    })
}
