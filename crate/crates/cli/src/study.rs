//! The study pipeline: estimate, diagnose, identify, scan, rotate, and
//! emit one report row plus per-scheme artifacts. Stages compose so the
//! subcommands can run any prefix; every error is tagged with the stage
//! that raised it.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use oasis_core::var::{TimeSeriesPanel, VarModel, VarOptions};
use oasis_core::{
    cholesky_id, cross_scheme_corr, diagnostics, estimate_var_with, local_projection,
    lp_structural_irf, ma_coefficients, oasis, permutation_scan, proxy_oasis, rotation_between,
    structural_irf, subset_oasis, weighted_oasis, Diagnostics, IdentificationResult, IrfSet,
    ProxyInputs, ProxyResult, ScanResult, Weights,
};
use serde_json::json;

use crate::config::{ProxyConfig, StudyConfig};
use crate::ingest::{ingest_csv, ingest_instruments};
use crate::output::{fmt_coarse, fmt_corr, fmt_full, irf_csv, matrix_csv, write_atomic};

/// One row of the combined study report, at full precision.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub label: String,
    pub n: usize,
    pub rho_star: f64,
    pub rho_chol: f64,
    pub rho_chol_min: f64,
    pub rho_chol_max: f64,
    pub rho_star_chol: f64,
    pub abs_corr_mean: f64,
    pub ratio: Option<f64>,
    pub d_corr: f64,
    pub exhaustive: bool,
}

pub const REPORT_HEADER: &str =
    "study,n,rho_star,rho_chol,rho_chol_min,rho_chol_max,rho_star_chol,abs_corr_mean,ratio,d_corr,exhaustive";

impl StudyRow {
    /// Display row with the table precision: four decimals for
    /// correlations, two for the dependence measures and the ratio.
    pub fn display_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.n,
            fmt_corr(self.rho_star),
            fmt_corr(self.rho_chol),
            fmt_corr(self.rho_chol_min),
            fmt_corr(self.rho_chol_max),
            fmt_corr(self.rho_star_chol),
            fmt_coarse(self.abs_corr_mean),
            ratio_display(self.ratio),
            fmt_coarse(self.d_corr),
            self.exhaustive
        )
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "study": self.label,
            "n": self.n,
            "rho_star": self.rho_star,
            "rho_chol": self.rho_chol,
            "rho_chol_min": self.rho_chol_min,
            "rho_chol_max": self.rho_chol_max,
            "rho_star_chol": self.rho_star_chol,
            "abs_corr_mean": self.abs_corr_mean,
            "ratio": ratio_json(self.ratio),
            "d_corr": self.d_corr,
            "exhaustive": self.exhaustive,
        })
    }
}

fn ratio_display(ratio: Option<f64>) -> String {
    match ratio {
        Some(v) => fmt_coarse(v),
        None => "undefined".to_string(),
    }
}

/// Undefined ratios keep a distinct sentinel in machine output.
fn ratio_json(ratio: Option<f64>) -> serde_json::Value {
    match ratio {
        Some(v) => json!(v),
        None => json!("undefined"),
    }
}

// ---------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------

pub struct Estimated {
    pub panel: TimeSeriesPanel,
    pub model: VarModel,
}

pub fn estimate_stage(config: &StudyConfig) -> Result<Estimated> {
    let panel = ingest_csv(&config.data, &config.variables).context("stage: ingest")?;
    let opts = VarOptions {
        df_adjust: config.df_adjust,
        trend: config.trend,
    };
    let model = estimate_var_with(&panel, config.lag_order, opts).context("stage: estimate")?;
    Ok(Estimated { panel, model })
}

pub struct Identified {
    pub diag: Diagnostics,
    pub star: IdentificationResult,
    pub chol: IdentificationResult,
    pub weighted: Option<IdentificationResult>,
    /// Rotation from the OASIS shocks into the Cholesky shocks.
    pub rotation: DMatrix<f64>,
    /// Average correlation between the two schemes' shocks.
    pub rho_star_chol: f64,
}

pub fn identify_stage(config: &StudyConfig, est: &Estimated) -> Result<Identified> {
    let diag = diagnostics(&est.model.sigma, &config.ordering).context("stage: diagnose")?;
    let star = oasis(&est.model.sigma).context("stage: identify")?;
    let chol = cholesky_id(&est.model.sigma, &config.ordering).context("stage: identify")?;
    let weighted = config
        .weights
        .as_ref()
        .map(|w| weighted_oasis(&est.model.sigma, w))
        .transpose()
        .context("stage: identify")?;
    let rotation =
        rotation_between(&star.a, &chol.a, &est.model.sigma).context("stage: rotate")?;
    let rho_star_chol =
        cross_scheme_corr(&star.a, &chol.a, &est.model.sigma).context("stage: rotate")?;
    Ok(Identified {
        diag,
        star,
        chol,
        weighted,
        rotation: rotation.values().clone(),
        rho_star_chol,
    })
}

pub fn scan_stage(config: &StudyConfig, est: &Estimated) -> Result<ScanResult> {
    permutation_scan(&est.model.sigma, config.budget, config.seed).context("stage: scan")
}

pub fn proxy_stage(
    config: &StudyConfig,
    est: &Estimated,
) -> Result<Option<(Vec<String>, ProxyResult)>> {
    match &config.proxy {
        None => Ok(None),
        Some(ProxyConfig::Subset { indices }) => {
            let result = subset_oasis(&est.model.sigma, indices).context("stage: proxy")?;
            let names = indices
                .iter()
                .map(|&i| est.panel.names()[i].clone())
                .collect();
            Ok(Some((names, result)))
        }
        Some(ProxyConfig::Instruments { path, weights }) => {
            let (names, series) = ingest_instruments(path).context("stage: proxy")?;
            let needed = est.model.residuals.nrows();
            if series.nrows() < needed {
                bail!(
                    "stage: proxy: {} instrument rows for {} residual rows",
                    series.nrows(),
                    needed
                );
            }
            let tail = series.rows(series.nrows() - needed, needed).into_owned();
            let w = match weights {
                Some(w) => Weights::new(w.clone()).context("stage: proxy")?,
                None => Weights::new(vec![1.0; names.len()]).context("stage: proxy")?,
            };
            let inputs = ProxyInputs::from_samples(&est.model.residuals, &tail, w)
                .context("stage: proxy")?;
            let result = proxy_oasis(&inputs).context("stage: proxy")?;
            Ok(Some((names, result)))
        }
    }
}

pub fn irf_stage(
    config: &StudyConfig,
    est: &Estimated,
    ident: &Identified,
) -> Result<Vec<IrfSet>> {
    let mut irfs = Vec::new();
    let ma = ma_coefficients(&est.model, config.horizon);
    irfs.push(structural_irf(&ma, &ident.star).context("stage: irf")?);
    irfs.push(structural_irf(&ma, &ident.chol).context("stage: irf")?);
    if let Some(w) = &ident.weighted {
        irfs.push(structural_irf(&ma, w).context("stage: irf")?);
    }
    if config.local_projections {
        let lp = local_projection(&est.panel, &est.model.residuals, config.horizon)
            .context("stage: irf")?;
        irfs.push(lp_structural_irf(&lp, &ident.star).context("stage: irf")?);
        irfs.push(lp_structural_irf(&lp, &ident.chol).context("stage: irf")?);
    }
    Ok(irfs)
}

/// Everything the full pipeline computes for one study.
pub struct StudyArtifacts {
    pub est: Estimated,
    pub ident: Identified,
    pub scan: ScanResult,
    pub irfs: Vec<IrfSet>,
    pub proxy: Option<(Vec<String>, ProxyResult)>,
    pub row: StudyRow,
}

/// Runs every stage without touching the filesystem beyond reading
/// inputs.
pub fn compute_study(config: &StudyConfig) -> Result<StudyArtifacts> {
    let est = estimate_stage(config)?;
    let ident = identify_stage(config, &est)?;
    let scan = scan_stage(config, &est)?;
    let proxy = proxy_stage(config, &est)?;
    let irfs = irf_stage(config, &est, &ident)?;
    let row = StudyRow {
        label: config.label.clone(),
        n: est.panel.dim(),
        rho_star: ident.diag.rho_star,
        rho_chol: ident.diag.rho_chol,
        rho_chol_min: scan.min_rho,
        rho_chol_max: scan.max_rho,
        rho_star_chol: ident.rho_star_chol,
        abs_corr_mean: ident.diag.abs_corr_mean,
        ratio: ident.diag.proximity_ratio,
        d_corr: ident.diag.d_corr,
        exhaustive: scan.exhaustive,
    };
    Ok(StudyArtifacts {
        est,
        ident,
        scan,
        irfs,
        proxy,
        row,
    })
}

// ---------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------

fn ensure_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))
}

fn scheme_file_tag(scheme: &str) -> String {
    if let Some(rest) = scheme.strip_prefix("lp:") {
        return format!("lp_{}", scheme_file_tag(rest));
    }
    scheme.split('(').next().unwrap_or(scheme).to_string()
}

fn names_of(ordering: &[usize], names: &[String]) -> Vec<String> {
    ordering.iter().map(|&i| names[i].clone()).collect()
}

pub fn emit_estimation(est: &Estimated, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let names: Vec<String> = est.panel.names().to_vec();
    write_atomic(
        &out_dir.join("sigma.csv"),
        &matrix_csv(est.model.sigma.values(), Some(&names), Some(&names)),
    )?;
    let resid_index: Vec<String> = est
        .panel
        .index()
        .iter()
        .skip(est.panel.len() - est.model.residuals.nrows())
        .cloned()
        .collect();
    write_atomic(
        &out_dir.join("residuals.csv"),
        &matrix_csv(&est.model.residuals, Some(&names), Some(&resid_index)),
    )?;
    write_atomic(&out_dir.join("coefficients.csv"), &coefficients_csv(est))?;
    Ok(())
}

fn coefficients_csv(est: &Estimated) -> String {
    let names = est.panel.names();
    let mut out = String::from("equation,term,value\n");
    for (i, name) in names.iter().enumerate() {
        out.push_str(&format!("{name},intercept,{}\n", fmt_full(est.model.mu[i])));
        if let Some(trend) = &est.model.trend_coef {
            out.push_str(&format!("{name},trend,{}\n", fmt_full(trend[i])));
        }
        for (lag, phi) in est.model.phi.iter().enumerate() {
            for (j, reg) in names.iter().enumerate() {
                out.push_str(&format!(
                    "{name},{reg}.l{},{}\n",
                    lag + 1,
                    fmt_full(phi[(i, j)])
                ));
            }
        }
    }
    out
}

pub fn emit_identification(est: &Estimated, ident: &Identified, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let names: Vec<String> = est.panel.names().to_vec();
    let mut schemes: Vec<&IdentificationResult> = vec![&ident.star, &ident.chol];
    if let Some(w) = &ident.weighted {
        schemes.push(w);
    }
    for result in &schemes {
        let tag = scheme_file_tag(&result.scheme.to_string());
        write_atomic(
            &out_dir.join(format!("a_{tag}.csv")),
            &matrix_csv(&result.a, Some(&names), Some(&names)),
        )?;
        write_atomic(
            &out_dir.join(format!("b_{tag}.csv")),
            &matrix_csv(&result.b, Some(&names), Some(&names)),
        )?;
    }
    write_atomic(
        &out_dir.join("rotation_oasis_cholesky.csv"),
        &matrix_csv(&ident.rotation, Some(&names), Some(&names)),
    )?;
    write_atomic(
        &out_dir.join("shock_correlations.csv"),
        &shock_correlations_csv(ident, &names),
    )?;
    Ok(())
}

/// Per-variable correlation table in the layout of the study tables:
/// corr(eps, u*) and corr(eps, u_c) per variable, corr(u*, u_c) per pair,
/// then the averages.
fn shock_correlations_csv(ident: &Identified, names: &[String]) -> String {
    let mut out = String::from("variable,corr_eps_oasis,corr_eps_cholesky,corr_oasis_cholesky\n");
    for (i, name) in names.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            name,
            fmt_corr(ident.star.per_shock_corr[i]),
            fmt_corr(ident.chol.per_shock_corr[i]),
            fmt_corr(ident.rotation[(i, i)]),
        ));
    }
    out.push_str(&format!(
        "average,{},{},{}\n",
        fmt_corr(ident.star.avg_corr),
        fmt_corr(ident.chol.avg_corr),
        fmt_corr(ident.rho_star_chol),
    ));
    out
}

pub fn emit_irfs(est: &Estimated, irfs: &[IrfSet], out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let names: Vec<String> = est.panel.names().to_vec();
    for irf in irfs {
        let tag = scheme_file_tag(&irf.scheme);
        write_atomic(
            &out_dir.join(format!("irf_{tag}.csv")),
            &irf_csv(irf, &names, &names),
        )?;
    }
    Ok(())
}

pub fn emit_proxy(
    est: &Estimated,
    proxy: &(Vec<String>, ProxyResult),
    out_dir: &Path,
) -> Result<()> {
    ensure_dir(out_dir)?;
    let names: Vec<String> = est.panel.names().to_vec();
    let (proxy_names, result) = proxy;
    write_atomic(
        &out_dir.join("proxy_a.csv"),
        &matrix_csv(&result.a_star, Some(proxy_names), Some(&names)),
    )?;
    write_atomic(
        &out_dir.join("proxy.json"),
        &format!("{:#}\n", proxy_json(proxy)),
    )?;
    Ok(())
}

fn proxy_json(proxy: &(Vec<String>, ProxyResult)) -> serde_json::Value {
    let (names, result) = proxy;
    json!({
        "instruments": names,
        "xi": result.xi.iter().copied().collect::<Vec<f64>>(),
        "objective": result.objective,
        "full_rank": result.full_rank,
    })
}

fn scan_json(scan: &ScanResult, names: &[String]) -> serde_json::Value {
    json!({
        "min_rho": scan.min_rho,
        "max_rho": scan.max_rho,
        "argmin": names_of(&scan.argmin, names),
        "argmax": names_of(&scan.argmax, names),
        "exhaustive": scan.exhaustive,
        "evaluated": scan.evaluated,
    })
}

fn scheme_json(result: &IdentificationResult, names: &[String]) -> serde_json::Value {
    let per_shock: Vec<serde_json::Value> = names
        .iter()
        .zip(result.per_shock_corr.iter())
        .map(|(name, rho)| json!({"variable": name, "corr": rho}))
        .collect();
    json!({
        "scheme": result.scheme.to_string(),
        "avg_corr": result.avg_corr,
        "per_shock_corr": per_shock,
    })
}

fn summary_json(config: &StudyConfig, art: &StudyArtifacts, names: &[String]) -> serde_json::Value {
    let variables: Vec<serde_json::Value> = config
        .variables
        .iter()
        .map(|(name, transform)| json!({"name": name, "transform": transform.as_str()}))
        .collect();
    let mut schemes = vec![
        scheme_json(&art.ident.star, names),
        scheme_json(&art.ident.chol, names),
    ];
    if let Some(w) = &art.ident.weighted {
        schemes.push(scheme_json(w, names));
    }
    json!({
        "study": config.label,
        "n": art.est.panel.dim(),
        "lag_order": config.lag_order,
        "horizon": config.horizon,
        "seed": config.seed,
        "budget": config.budget,
        "effective_obs": art.est.model.effective_obs(),
        "sample": {
            "first": art.est.panel.index().first(),
            "last": art.est.panel.index().last(),
            "rows": art.est.panel.len(),
        },
        "variables": variables,
        "ordering": names_of(&config.ordering, names),
        "report": art.row.json(),
        "diagnostics": {
            "d_corr": art.ident.diag.d_corr,
            "abs_corr_mean": art.ident.diag.abs_corr_mean,
            "rho_star": art.ident.diag.rho_star,
            "rho_chol": art.ident.diag.rho_chol,
            "proximity_ratio": ratio_json(art.ident.diag.proximity_ratio),
            "approx_star": art.ident.diag.approx_star,
            "approx_chol": art.ident.diag.approx_chol,
        },
        "scan": scan_json(&art.scan, names),
        "schemes": schemes,
        "cross_scheme_corr": art.ident.rho_star_chol,
        "proxy": art.proxy.as_ref().map(proxy_json),
    })
}

/// Writes every artifact of one study into `out_dir` and returns the
/// report row.
pub fn run_study(config: &StudyConfig, out_dir: &Path) -> Result<StudyRow> {
    let art = compute_study(config)?;
    emit_study(config, &art, out_dir).context("stage: emit")?;
    Ok(art.row)
}

pub fn emit_study(config: &StudyConfig, art: &StudyArtifacts, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let names: Vec<String> = art.est.panel.names().to_vec();

    let mut report = String::from(REPORT_HEADER);
    report.push('\n');
    report.push_str(&art.row.display_csv());
    report.push('\n');
    write_atomic(&out_dir.join("report.csv"), &report)?;

    emit_estimation(&art.est, out_dir)?;
    emit_identification(&art.est, &art.ident, out_dir)?;
    emit_irfs(&art.est, &art.irfs, out_dir)?;
    if let Some(proxy) = &art.proxy {
        emit_proxy(&art.est, proxy, out_dir)?;
    }
    write_atomic(
        &out_dir.join("summary.json"),
        &format!("{:#}\n", summary_json(config, art, &names)),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------
// Subcommand entry points
// ---------------------------------------------------------------------

pub fn cmd_estimate(config: &StudyConfig, out_dir: &Path) -> Result<()> {
    let est = estimate_stage(config)?;
    emit_estimation(&est, out_dir).context("stage: emit")
}

pub fn cmd_identify(config: &StudyConfig, out_dir: &Path) -> Result<()> {
    let est = estimate_stage(config)?;
    let ident = identify_stage(config, &est)?;
    emit_estimation(&est, out_dir).context("stage: emit")?;
    emit_identification(&est, &ident, out_dir).context("stage: emit")?;
    let names: Vec<String> = est.panel.names().to_vec();
    let diag = &ident.diag;
    let body = json!({
        "study": config.label,
        "ordering": names_of(&config.ordering, &names),
        "d_corr": diag.d_corr,
        "abs_corr_mean": diag.abs_corr_mean,
        "rho_star": diag.rho_star,
        "rho_chol": diag.rho_chol,
        "proximity_ratio": ratio_json(diag.proximity_ratio),
        "approx_star": diag.approx_star,
        "approx_chol": diag.approx_chol,
        "cross_scheme_corr": ident.rho_star_chol,
    });
    write_atomic(&out_dir.join("diagnostics.json"), &format!("{body:#}\n"))
        .context("stage: emit")
}

pub fn cmd_scan(config: &StudyConfig, out_dir: &Path) -> Result<()> {
    let est = estimate_stage(config)?;
    let scan = scan_stage(config, &est)?;
    ensure_dir(out_dir)?;
    let names: Vec<String> = est.panel.names().to_vec();
    write_atomic(
        &out_dir.join("scan.json"),
        &format!("{:#}\n", scan_json(&scan, &names)),
    )
    .context("stage: emit")
}

pub fn cmd_proxy(config: &StudyConfig, out_dir: &Path) -> Result<()> {
    if config.proxy.is_none() {
        bail!("stage: proxy: config has no [proxy] section");
    }
    let est = estimate_stage(config)?;
    let proxy = proxy_stage(config, &est)?.expect("checked above");
    emit_proxy(&est, &proxy, out_dir).context("stage: emit")
}

pub fn cmd_irf(config: &StudyConfig, out_dir: &Path) -> Result<()> {
    let est = estimate_stage(config)?;
    let ident = identify_stage(config, &est)?;
    let irfs = irf_stage(config, &est, &ident)?;
    emit_irfs(&est, &irfs, out_dir).context("stage: emit")
}

/// Batch mode: runs each study into `out_dir/<label>/` and writes the
/// combined report table.
pub fn run_report(configs: &[StudyConfig], out_dir: &Path) -> Result<Vec<StudyRow>> {
    ensure_dir(out_dir)?;
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let row = run_study(config, &out_dir.join(&config.label))
            .with_context(|| format!("study {}", config.label))?;
        rows.push(row);
    }
    let mut combined = String::from(REPORT_HEADER);
    combined.push('\n');
    for row in &rows {
        combined.push_str(&row.display_csv());
        combined.push('\n');
    }
    write_atomic(&out_dir.join("report.csv"), &combined)?;

    let json_rows: Vec<serde_json::Value> = rows.iter().map(StudyRow::json).collect();
    write_atomic(
        &out_dir.join("report.json"),
        &format!("{:#}\n", json!({ "rows": json_rows })),
    )?;
    Ok(rows)
}
