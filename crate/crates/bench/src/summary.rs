//! Human-readable summary table: one row per (σ, outlier ratio), one column
//! per estimator variant.

use std::fmt::Write as _;

use rotavg::averaging::Method;

use crate::sweep::{aggregate, CellAggregate, TrialRecord, Variant};

/// `5` → `"5"`, `0.25` → `"0.25"`; avoids `95.00000000000001`.
fn trim(x: f64) -> String {
    let rounded = (x * 1e6).round() / 1e6;
    format!("{rounded}")
}

pub fn row_label(sigma_deg: f64, outlier_ratio: f64) -> String {
    format!("({}°, {}%)", trim(sigma_deg), trim(outlier_ratio * 100.0))
}

/// Each cell shows the median time per rotation and the mean/median error.
/// A chordal-l1 cell also shows the geodesic/chordal timing ratio in
/// parentheses when geodesic-l1 ran with the same rejection setting.
pub fn emit_summary(records: &[TrialRecord]) -> String {
    let cells = aggregate(records);
    let mut variants: Vec<Variant> = Vec::new();
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for c in &cells {
        if !variants.contains(&c.variant) {
            variants.push(c.variant);
        }
        if !rows.contains(&(c.sigma_deg, c.outlier_ratio)) {
            rows.push((c.sigma_deg, c.outlier_ratio));
        }
    }
    let find = |v: Variant, row: (f64, f64)| -> Option<&CellAggregate> {
        cells
            .iter()
            .find(|c| c.variant == v && (c.sigma_deg, c.outlier_ratio) == row)
    };

    let label_width = rows
        .iter()
        .map(|&(s, r)| row_label(s, r).chars().count())
        .max()
        .unwrap_or(0)
        .max("(σ, outliers)".len());
    const COL: usize = 34;

    let mut out = String::new();
    let _ = writeln!(out, "median time [µs/rotation], mean/median error [deg]");
    let _ = write!(out, "{:<label_width$}", "(σ, outliers)");
    for v in &variants {
        let _ = write!(out, " | {:<COL$}", v.to_string());
    }
    out.push('\n');

    for &row in &rows {
        let _ = write!(out, "{:<label_width$}", row_label(row.0, row.1));
        for &v in &variants {
            let text = match find(v, row) {
                Some(c) if c.trials > 0 => {
                    let mut t = format!(
                        "{:.2} µs {:.2}°/{:.2}°",
                        c.median_time_us, c.mean_error_deg, c.median_error_deg
                    );
                    if v.method == Method::ChordalL1 {
                        let geodesic = Variant::new(Method::GeodesicL1, v.rejection);
                        if let Some(g) = find(geodesic, row) {
                            let _ = write!(t, " ({:.1}×)", g.median_time_us / c.median_time_us);
                        }
                    }
                    if c.failures > 0 {
                        let _ = write!(t, " [{} failed]", c.failures);
                    }
                    t
                }
                Some(c) => format!("all {} failed", c.failures),
                None => "-".to_string(),
            };
            let _ = write!(out, " | {text:<COL$}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(
        method: Method,
        rejection: Option<bool>,
        sigma: f64,
        ratio: f64,
        time: f64,
    ) -> TrialRecord {
        TrialRecord {
            method,
            rejection,
            sigma_deg: sigma,
            outlier_ratio: ratio,
            trial: 0,
            error_deg: 1.5,
            time_us_per_rotation: time,
            iterations: 4,
        }
    }

    #[test]
    fn single_cell_single_row() {
        let s = emit_summary(&[rec(Method::GeodesicL1, Some(true), 5.0, 0.0, 8.0)]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("(5°, 0%)"));
        assert!(lines[2].contains("8.00 µs 1.50°/1.50°"));
        assert!(!s.contains('×'));
    }

    #[test]
    fn row_labels() {
        assert_eq!(row_label(5.0, 0.0), "(5°, 0%)");
        assert_eq!(row_label(15.0, 0.95), "(15°, 95%)");
        assert_eq!(row_label(5.0, 0.25), "(5°, 25%)");
    }

    #[test]
    fn speed_ratio_only_with_both_l1_methods() {
        let g = rec(Method::GeodesicL1, Some(true), 5.0, 0.5, 9.0);
        let c = rec(Method::ChordalL1, Some(true), 5.0, 0.5, 3.0);
        let both = emit_summary(&[g.clone(), c.clone()]);
        assert!(both.contains("(3.0×)"));
        assert!(!emit_summary(std::slice::from_ref(&c)).contains('×'));
        // Different rejection settings are not compared.
        let g_off = rec(Method::GeodesicL1, Some(false), 5.0, 0.5, 9.0);
        assert!(!emit_summary(&[g_off, c]).contains('×'));
    }

    #[test]
    fn default_grid_rows() {
        let mut records = Vec::new();
        for sigma in [5.0, 15.0] {
            for ratio in [0.0, 0.25, 0.5, 0.75, 0.95] {
                records.push(rec(Method::ChordalL2, None, sigma, ratio, 1.0));
            }
        }
        let s = emit_summary(&records);
        let labels: Vec<&str> = s
            .lines()
            .skip(2)
            .map(|l| l.split(" | ").next().unwrap().trim())
            .collect();
        assert_eq!(labels.first(), Some(&"(5°, 0%)"));
        assert_eq!(labels.last(), Some(&"(15°, 95%)"));
        assert_eq!(labels.len(), 10);
    }
}
