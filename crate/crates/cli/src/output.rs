//! Output helpers: atomic file writes, fixed float formats for human
//! tables, and full-precision matrix/IRF writers for machine readers.

use std::io;
use std::path::Path;

use nalgebra::DMatrix;
use oasis_core::IrfSet;

/// Correlations are displayed with four decimals.
pub fn fmt_corr(x: f64) -> String {
    format!("{x:.4}")
}

/// Dependence measures and ratios are displayed with two decimals.
pub fn fmt_coarse(x: f64) -> String {
    format!("{x:.2}")
}

/// Six significant digits, used for plot-ready datasets.
pub fn fmt_sig6(x: f64) -> String {
    format!("{x:.5e}")
}

/// Shortest round-trip representation: full precision for machine use.
pub fn fmt_full(x: f64) -> String {
    format!("{x}")
}

/// Writes through a temporary sibling and renames, so a study's outputs
/// are never observed half-written.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp-write");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// Matrix as CSV at full precision, with optional column header and
/// optional leading row-label column.
pub fn matrix_csv(
    m: &DMatrix<f64>,
    col_names: Option<&[String]>,
    row_names: Option<&[String]>,
) -> String {
    let mut out = String::new();
    if let Some(cols) = col_names {
        if row_names.is_some() {
            out.push_str("variable,");
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    for i in 0..m.nrows() {
        let mut fields = Vec::with_capacity(m.ncols() + 1);
        if let Some(rows) = row_names {
            fields.push(rows[i].clone());
        }
        for j in 0..m.ncols() {
            fields.push(fmt_full(m[(i, j)]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// IRF set in long format: horizon, responding variable, shock, value.
pub fn irf_csv(irf: &IrfSet, variables: &[String], shocks: &[String]) -> String {
    let mut out = String::from("horizon,variable,shock,value\n");
    for (h, m) in irf.values.iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push_str(&format!(
                    "{h},{},{},{}\n",
                    variables[i],
                    shocks[j],
                    fmt_full(m[(i, j)])
                ));
            }
        }
    }
    out
}
