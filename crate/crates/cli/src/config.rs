//! Study configuration: a TOML file per study, plus a manifest format
//! listing several studies for batch reports.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use oasis_core::var::Transform;
use oasis_core::{Weights, DEFAULT_SCAN_BUDGET};
use serde::Deserialize;

pub const DEFAULT_HORIZON: usize = 40;

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_budget() -> u64 {
    DEFAULT_SCAN_BUDGET
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub transform: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxySpec {
    /// CSV of external instrument series, aligned to the end of the
    /// estimation sample.
    pub instruments: Option<PathBuf>,
    /// Variable names whose reduced-form shocks act as instruments.
    pub subset: Option<Vec<String>>,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyConfigFile {
    label: String,
    data: PathBuf,
    lag_order: usize,
    #[serde(default = "default_horizon")]
    horizon: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_budget")]
    budget: u64,
    ordering: Option<Vec<String>>,
    weights: Option<Vec<f64>>,
    #[serde(default)]
    trend: bool,
    #[serde(default)]
    df_adjust: bool,
    #[serde(default)]
    local_projections: bool,
    variables: Vec<VariableSpec>,
    proxy: Option<ProxySpec>,
}

/// Proxy configuration resolved against the variable list.
#[derive(Debug, Clone)]
pub enum ProxyConfig {
    Instruments { path: PathBuf, weights: Option<Vec<f64>> },
    Subset { indices: Vec<usize> },
}

/// A validated study configuration with paths resolved relative to the
/// config file's directory and names resolved to indices.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub label: String,
    pub data: PathBuf,
    pub lag_order: usize,
    pub horizon: usize,
    pub seed: u64,
    pub budget: u64,
    /// Cholesky ordering as indices into the variable list.
    pub ordering: Vec<usize>,
    /// Optional weighted-objective weights.
    pub weights: Option<Weights>,
    pub trend: bool,
    pub df_adjust: bool,
    pub local_projections: bool,
    pub variables: Vec<(String, Transform)>,
    pub proxy: Option<ProxyConfig>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub horizon: Option<usize>,
}

impl StudyConfig {
    pub fn load(path: &Path, overrides: Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let file: StudyConfigFile = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::resolve(file, base, overrides)
    }

    fn resolve(file: StudyConfigFile, base: &Path, overrides: Overrides) -> Result<Self> {
        if file.variables.is_empty() {
            bail!("config lists no variables");
        }
        let mut variables = Vec::with_capacity(file.variables.len());
        for spec in &file.variables {
            let transform: Transform = spec
                .transform
                .parse()
                .map_err(|e: String| anyhow::anyhow!(e))
                .with_context(|| format!("variable {}", spec.name))?;
            if variables.iter().any(|(n, _)| n == &spec.name) {
                bail!("variable {} listed twice", spec.name);
            }
            variables.push((spec.name.clone(), transform));
        }
        let names: Vec<&str> = variables.iter().map(|(n, _)| n.as_str()).collect();

        let ordering = match &file.ordering {
            None => (0..variables.len()).collect(),
            Some(listed) => {
                let mut indices = Vec::with_capacity(listed.len());
                for name in listed {
                    let idx = names
                        .iter()
                        .position(|n| n == name)
                        .with_context(|| format!("ordering names unknown variable '{name}'"))?;
                    indices.push(idx);
                }
                oasis_core::matprim::validate_permutation(&indices, variables.len())
                    .context("ordering is not a permutation of the variable list")?;
                indices
            }
        };

        let weights = file
            .weights
            .map(|w| {
                if w.len() != variables.len() {
                    bail!("{} weights for {} variables", w.len(), variables.len());
                }
                Weights::new(w).context("weights must be positive")
            })
            .transpose()?;

        let proxy = file
            .proxy
            .map(|p| -> Result<ProxyConfig> {
                match (p.instruments, p.subset) {
                    (Some(path), None) => Ok(ProxyConfig::Instruments {
                        path: base.join(path),
                        weights: p.weights,
                    }),
                    (None, Some(subset)) => {
                        if p.weights.is_some() {
                            bail!("subset proxies use unit weights");
                        }
                        let mut indices = Vec::with_capacity(subset.len());
                        for name in &subset {
                            let idx = names.iter().position(|n| n == name).with_context(
                                || format!("proxy subset names unknown variable '{name}'"),
                            )?;
                            indices.push(idx);
                        }
                        Ok(ProxyConfig::Subset { indices })
                    }
                    _ => bail!("proxy section needs exactly one of `instruments` or `subset`"),
                }
            })
            .transpose()?;

        Ok(Self {
            label: file.label,
            data: base.join(file.data),
            lag_order: file.lag_order,
            horizon: overrides.horizon.unwrap_or(file.horizon),
            seed: overrides.seed.unwrap_or(file.seed),
            budget: overrides.budget.unwrap_or(file.budget),
            ordering,
            weights,
            trend: file.trend,
            df_adjust: file.df_adjust,
            local_projections: file.local_projections,
            variables,
            proxy,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    studies: Vec<PathBuf>,
}

/// Loads a batch manifest: `studies = ["a.toml", "b.toml"]`, paths
/// relative to the manifest file.
pub fn load_manifest(path: &Path, overrides: Overrides) -> Result<Vec<StudyConfig>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let manifest: ManifestFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse manifest {}", path.display()))?;
    if manifest.studies.is_empty() {
        bail!("manifest lists no studies");
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    manifest
        .studies
        .iter()
        .map(|p| StudyConfig::load(&base.join(p), overrides))
        .collect()
}
