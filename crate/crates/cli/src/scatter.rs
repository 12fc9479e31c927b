//! Plot-ready scatter dataset: for each study, the proximity to perfect
//! correlation `-log(1 - rho)` against the residual dependence
//! `log d(C)`, one point per scheme, plus the two first-order reference
//! lines `y = -x + log 8` and `y = -x + log 4`.

use std::path::Path;

use anyhow::Result;

use crate::output::{fmt_sig6, write_atomic};
use crate::study::StudyRow;

#[derive(Debug, Clone)]
pub struct ScatterPoint {
    pub study: String,
    /// "oasis" or "cholesky".
    pub series: String,
    /// `log d(C)`.
    pub x: f64,
    /// `-log(1 - rho)`.
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct RefLine {
    pub series: String,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone)]
pub struct ScatterData {
    pub points: Vec<ScatterPoint>,
    pub lines: [RefLine; 2],
    /// One note per skipped degenerate row.
    pub warnings: Vec<String>,
}

/// Builds the dataset, skipping rows whose values are degenerate
/// (`d(C) = 0` or an average correlation of one) with a warning each.
pub fn emit_scatter(rows: &[StudyRow]) -> ScatterData {
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for row in rows {
        if !(row.d_corr > 0.0) {
            warnings.push(format!("{}: skipped, d(C) = 0", row.label));
            continue;
        }
        let x = row.d_corr.ln();
        for (series, rho) in [("oasis", row.rho_star), ("cholesky", row.rho_chol)] {
            if rho >= 1.0 {
                warnings.push(format!("{}: skipped {series}, rho = 1", row.label));
                continue;
            }
            points.push(ScatterPoint {
                study: row.label.clone(),
                series: series.to_string(),
                x,
                y: -(1.0 - rho).ln(),
            });
        }
    }
    ScatterData {
        points,
        lines: [
            RefLine {
                series: "oasis".to_string(),
                slope: -1.0,
                intercept: 8.0_f64.ln(),
            },
            RefLine {
                series: "cholesky".to_string(),
                slope: -1.0,
                intercept: 4.0_f64.ln(),
            },
        ],
        warnings,
    }
}

/// Writes `scatter_points.csv` and `scatter_lines.csv` into `out_dir`.
pub fn write_scatter(data: &ScatterData, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut points = String::from("study,series,x,y\n");
    for p in &data.points {
        points.push_str(&format!(
            "{},{},{},{}\n",
            p.study,
            p.series,
            fmt_sig6(p.x),
            fmt_sig6(p.y)
        ));
    }
    write_atomic(&out_dir.join("scatter_points.csv"), &points)?;

    let mut lines = String::from("series,slope,intercept\n");
    for l in &data.lines {
        lines.push_str(&format!(
            "{},{},{}\n",
            l.series,
            fmt_sig6(l.slope),
            fmt_sig6(l.intercept)
        ));
    }
    write_atomic(&out_dir.join("scatter_lines.csv"), &lines)?;
    for warning in &data.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn row(label: &str, d: f64, star: f64, chol: f64) -> StudyRow {
        StudyRow {
            label: label.to_string(),
            n: 2,
            rho_star: star,
            rho_chol: chol,
            rho_chol_min: chol,
            rho_chol_max: chol,
            rho_star_chol: 1.0,
            abs_corr_mean: 0.1,
            ratio: Some(2.0),
            d_corr: d,
            exhaustive: true,
        }
    }

    #[test]
    fn hand_computed_point() {
        // d = 0.25 and rho_star = 0.96593 map to (log 0.25, -log 0.03407).
        let data = emit_scatter(&[row("demo", 0.25, 0.96593, 0.93301)]);
        let p = &data.points[0];
        assert_eq!(p.series, "oasis");
        assert_abs_diff_eq!(p.x, 0.25_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, -(0.03407_f64).ln(), epsilon = 1e-12);
        assert!(data.warnings.is_empty());
    }

    #[test]
    fn empty_input_keeps_reference_lines() {
        let data = emit_scatter(&[]);
        assert!(data.points.is_empty());
        assert_abs_diff_eq!(data.lines[0].intercept, 8.0_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(data.lines[1].intercept, 4.0_f64.ln(), epsilon = 1e-15);
        assert_eq!(data.lines[0].slope, -1.0);
    }

    #[test]
    fn degenerate_rows_are_skipped_with_warnings() {
        let data = emit_scatter(&[row("perfect", 0.0, 1.0, 1.0), row("ok", 0.1, 0.99, 0.98)]);
        assert_eq!(data.points.len(), 2);
        assert_eq!(data.warnings.len(), 1);
        assert!(data.warnings[0].contains("perfect"));
    }
}
