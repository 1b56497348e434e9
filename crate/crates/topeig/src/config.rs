//! Experiment configuration: one TOML file of flat tables, `--set`
//! overrides applied to the parsed document before validation, and replay
//! from an emitted `summary.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use topeig_core::{AutocovarianceSpec, EntryLaw, PopulationModel, SlowlyVarying};

use crate::error::{AppError, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<EntryLaw>,
    /// Root seed; every random stream is derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub support: SupportSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationKind {
    /// `Γ = I_N`.
    Identity,
    /// `Γ = (γ(i − j))` with `γ(h) = L(h)(1+|h|)^{2d−1} e^{ihθ}`.
    Toeplitz,
    /// `diag(spikes…, bulk, …, bulk)`.
    Spiked,
    /// Fixed diagonal `values`.
    Diagonal,
    /// Dense Hermitian matrix read from an SPLM file.
    Explicit,
}

/// One flat `[population]` table; which keys apply depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub kind: PopulationKind,
    /// Dimension used when no `experiment.n_ladder` is given.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slowly_varying: Option<SlowlyVarying>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spikes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_path: Option<PathBuf>,
}

pub const DEFAULT_DIM: usize = 1000;

impl PopulationConfig {
    pub fn new(kind: PopulationKind) -> Self {
        Self {
            kind,
            n: None,
            d: None,
            theta: None,
            slowly_varying: None,
            spikes: None,
            bulk: None,
            values: None,
            matrix_path: None,
        }
    }

    pub fn toeplitz(d: f64) -> Self {
        Self {
            d: Some(d),
            ..Self::new(PopulationKind::Toeplitz)
        }
    }

    fn validate(&self) -> Result<()> {
        let present = [
            ("d", self.d.is_some()),
            ("theta", self.theta.is_some()),
            ("slowly_varying", self.slowly_varying.is_some()),
            ("spikes", self.spikes.is_some()),
            ("bulk", self.bulk.is_some()),
            ("values", self.values.is_some()),
            ("matrix_path", self.matrix_path.is_some()),
        ];
        let (allowed, required): (&[&str], &[&str]) = match self.kind {
            PopulationKind::Identity => (&[], &[]),
            PopulationKind::Toeplitz => (&["d", "theta", "slowly_varying"], &["d"]),
            PopulationKind::Spiked => (&["spikes", "bulk"], &["spikes"]),
            PopulationKind::Diagonal => (&["values"], &["values"]),
            PopulationKind::Explicit => (&["matrix_path"], &["matrix_path"]),
        };
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(AppError::config(format!(
                    "population key `{key}` does not apply to kind = \"{}\"",
                    self.kind_name()
                )));
            }
            if !set && required.contains(&key) {
                return Err(AppError::config(format!(
                    "population kind = \"{}\" requires `{key}`",
                    self.kind_name()
                )));
            }
        }
        if self.n == Some(0) {
            return Err(AppError::config("population.N must be ≥ 1"));
        }
        if let (Some(n), Some(v)) = (self.n, &self.values) {
            if n != v.len() {
                return Err(AppError::config(format!(
                    "population.N = {n} but `values` has {} entries",
                    v.len()
                )));
            }
        }
        if let Some(spec) = self.autocovariance_spec() {
            spec?;
        }
        Ok(())
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            PopulationKind::Identity => "identity",
            PopulationKind::Toeplitz => "toeplitz",
            PopulationKind::Spiked => "spiked",
            PopulationKind::Diagonal => "diagonal",
            PopulationKind::Explicit => "explicit",
        }
    }

    fn autocovariance_spec(&self) -> Option<Result<AutocovarianceSpec>> {
        (self.kind == PopulationKind::Toeplitz).then(|| {
            AutocovarianceSpec::new(
                self.d.unwrap_or_default(),
                self.slowly_varying.unwrap_or_default(),
                self.theta.unwrap_or(0.0),
            )
            .map_err(AppError::from)
        })
    }

    /// `None` unless `kind = "toeplitz"`.
    pub fn autocovariance(&self) -> Option<AutocovarianceSpec> {
        self.autocovariance_spec().and_then(|r| r.ok())
    }

    /// `N`, else the size fixed by `values` or the matrix file, else the default.
    pub fn dim(&self) -> Result<usize> {
        if let Some(n) = self.n {
            return Ok(n);
        }
        if let Some(v) = &self.values {
            return Ok(v.len());
        }
        if let Some(path) = &self.matrix_path {
            return Ok(io::splm_shape(path)?.0);
        }
        Ok(DEFAULT_DIM)
    }

    pub fn model(&self, n: usize) -> Result<PopulationModel> {
        Ok(match self.kind {
            PopulationKind::Identity => PopulationModel::Diagonal(vec![1.0; n]),
            PopulationKind::Toeplitz => PopulationModel::Toeplitz {
                spec: self.autocovariance_spec().expect("toeplitz kind")?,
                n,
            },
            PopulationKind::Spiked => PopulationModel::Spiked {
                spikes: self.spikes.clone().unwrap_or_default(),
                bulk: self.bulk.unwrap_or(1.0),
                n,
            },
            PopulationKind::Diagonal => {
                let values = self.values.clone().unwrap_or_default();
                if values.len() != n {
                    return Err(AppError::config(format!(
                        "diagonal population has {} entries but N = {n}",
                        values.len()
                    )));
                }
                PopulationModel::Diagonal(values)
            }
            PopulationKind::Explicit => {
                let path = self.matrix_path.as_ref().expect("validated");
                let m = io::read_splm(path)?;
                if m.nrows() != n || m.ncols() != n {
                    return Err(AppError::config(format!(
                        "{} holds a {}x{} matrix but N = {n}",
                        path.display(),
                        m.nrows(),
                        m.ncols()
                    )));
                }
                PopulationModel::Explicit(m)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Population dimensions `N`; defaults to `[population.N]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
    /// `n = ⌊c N⌋` with `c = sample_ratio[0]/sample_ratio[1]`.
    #[serde(default = "default_sample_ratio")]
    pub sample_ratio: [u64; 2],
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Replace `Γ` by `diag(λ1 ≥ … ≥ λN)`.
    #[serde(default)]
    pub diagonalize_population: bool,
    /// Freedman–Diaconis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_bins: Option<usize>,
    /// Warn when `λ2/λ1 ≥ 1 − gap_margin`.
    #[serde(default = "default_gap_margin")]
    pub gap_margin: f64,
}

fn default_sample_ratio() -> [u64; 2] {
    [5, 4]
}
fn default_replicates() -> usize {
    1
}
fn default_gap_margin() -> f64 {
    0.05
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            n_ladder: None,
            sample_ratio: default_sample_ratio(),
            replicates: default_replicates(),
            diagonalize_population: false,
            histogram_bins: None,
            gap_margin: default_gap_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Drop atoms closer than this (relative) in `esd.csv`; 0 keeps all.
    #[serde(default)]
    pub merge_tolerance: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            merge_tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub slowly_varying: SlowlyVarying,
    /// Doubling sequence of discretization sizes.
    #[serde(default = "default_grids")]
    pub grids: Vec<usize>,
    /// Toeplitz sizes at which `λ_k(T_N)/(N R(N))` is reported.
    #[serde(default = "default_compare")]
    pub compare_n: Vec<usize>,
}

fn default_rho() -> f64 {
    -0.75
}
fn default_grids() -> Vec<usize> {
    topeig_core::kernel::DEFAULT_GRIDS.to_vec()
}
fn default_compare() -> Vec<usize> {
    vec![500, 1000, 2000, 4000]
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            rho: default_rho(),
            slowly_varying: SlowlyVarying::default(),
            grids: default_grids(),
            compare_n: default_compare(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportSection {
    /// `r_N = N/n`.
    #[serde(default = "one")]
    pub ratio: f64,
    /// Defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    /// Defaults to `1.25 λmax (1 + √r)²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default = "default_x_count")]
    pub x_count: usize,
    /// Heights `η`; the transform is solved at `x + iη` for every grid `x`.
    #[serde(default)]
    pub stieltjes_heights: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_x_count() -> usize {
    201
}

impl Default for SupportSection {
    fn default() -> Self {
        Self {
            ratio: 1.0,
            x_min: None,
            x_max: None,
            x_count: default_x_count(),
            stieltjes_heights: Vec::new(),
        }
    }
}

impl Config {
    /// Reads a TOML config or a previous run's `summary.json` (its `config`
    /// member), applies `key=value` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            None => Value::Object(Map::new()),
            Some(p) => read_document(p)?,
        };
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let config: Config =
            serde_json::from_value(doc).map_err(|e| AppError::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.replicates == 0 {
            return Err(AppError::config("experiment.replicates must be ≥ 1"));
        }
        if let Some(ladder) = &e.n_ladder {
            if let Some(&n) = ladder.iter().find(|&&n| n < 2) {
                return Err(AppError::config(format!(
                    "every N in experiment.n_ladder must be ≥ 2, got {n}"
                )));
            }
            if ladder.is_empty() {
                return Err(AppError::config("experiment.n_ladder is empty"));
            }
        }
        if let Some(p) = &self.population {
            p.validate()?;
        }
        if e.sample_ratio[0] == 0 || e.sample_ratio[1] == 0 {
            return Err(AppError::config(
                "experiment.sample_ratio entries must be positive",
            ));
        }
        if !(e.gap_margin >= 0.0 && e.gap_margin < 1.0) {
            return Err(AppError::config("experiment.gap_margin must lie in [0, 1)"));
        }
        if self.support.x_count < 2 {
            return Err(AppError::config("support.x_count must be ≥ 2"));
        }
        if !(self.support.ratio > 0.0 && self.support.ratio.is_finite()) {
            return Err(AppError::config("support.ratio must be positive"));
        }
        if let Some(h) = self.support.stieltjes_heights.iter().find(|h| !(**h > 0.0)) {
            return Err(AppError::config(format!(
                "support.stieltjes_heights must be positive, got {h}"
            )));
        }
        Ok(())
    }

    pub fn population(&self) -> Result<&PopulationConfig> {
        self.population
            .as_ref()
            .ok_or_else(|| AppError::config("missing [population] table"))
    }

    pub fn ladder(&self) -> Result<Vec<usize>> {
        match &self.experiment.n_ladder {
            Some(l) => Ok(l.clone()),
            None => {
                let n = self.population()?.dim()?;
                if n < 2 {
                    return Err(AppError::config(format!(
                        "population.N must be ≥ 2 here, got {n}"
                    )));
                }
                Ok(vec![n])
            }
        }
    }

    pub fn law(&self) -> Result<EntryLaw> {
        self.law.ok_or_else(|| AppError::config("missing `law`"))
    }

    /// `n = ⌊c N⌋`.
    pub fn columns(&self, rows: usize) -> Result<usize> {
        let [num, den] = self.experiment.sample_ratio;
        let n = (rows as u128 * num as u128 / den as u128) as usize;
        if n == 0 {
            return Err(AppError::config(format!(
                "sample_ratio gives n = 0 for N = {rows}"
            )));
        }
        Ok(n)
    }
}

fn read_document(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: Value = serde_json::from_str(&text)
            .map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
        // a summary.json carries the resolved config under `config`
        if let Some(inner) = v.get_mut("config") {
            return Ok(inner.take());
        }
        return Ok(v);
    }
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
    serde_json::to_value(table).map_err(|e| AppError::config(e.to_string()))
}

/// `a.b.c=value`, where `value` is read as a TOML literal and falls back to a
/// bare string.
fn apply_override(doc: &mut Value, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| AppError::config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(AppError::config(format!("bad override key `{key}`")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("parsed key"))
            .map_err(|e| AppError::config(e.to_string()))?,
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            AppError::config(format!(
                "override `{key}`: `{}` is not a table",
                parts[..i].join(".")
            ))
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!()
}
