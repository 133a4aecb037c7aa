//! Simulation config files, series CSVs, run manifests and analysis records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::model::{
    Axis, CouplingOverrides, Couplings, ModelSpec, MonitorKind, MonitorSpec, Preset,
};
use crate::monitoring::Scheme;
use crate::runner::{
    default_sample_times, RunConfig, ScalingPoint, SizeDiagnostics, SweepResult,
    DEFAULT_MAX_SITES,
};
use crate::state::InitMode;
use crate::stats::{f_test, FTestReport, FitWeighting, ScalingSeries};
use crate::trotter::DEFAULT_DT;

pub const SERIES_HEADER: &str = "model,monitor,L,gamma,dt,n_traj,S_mean,S_stderr";
pub const SERIES_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SERIES_FILE: &str = "series.csv";
pub const DEFAULT_VERDICT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorKeys {
    pub kind: MonitorKind,
    pub axis: Axis,
}

/// The `simulate` config file (TOML).
///
/// ```toml
/// model = "XXZ"            # or an explicit [couplings] table
/// sizes = [8, 10, 12, 14]
/// gamma = 0.1
/// seed = 7
/// n_traj = 100
/// [monitor]
/// kind = "single-site"     # or "bond"
/// axis = "z"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<CouplingOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Couplings>,
    pub monitor: MonitorKeys,
    pub gamma: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub sizes: Vec<usize>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_sample_times")]
    pub sample_times: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_init_mode")]
    pub init_mode: InitMode,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_max_sites", rename = "max_L")]
    pub max_sites: usize,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_n_traj() -> usize {
    100
}
fn default_init_mode() -> InitMode {
    InitMode::HaarSite
}
fn default_workers() -> usize {
    1
}
fn default_max_sites() -> usize {
    DEFAULT_MAX_SITES
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    /// Base run configuration, built at the first requested size.
    pub fn run_config(&self) -> Result<RunConfig> {
        let monitor = MonitorSpec::new(self.monitor.kind, self.monitor.axis, self.gamma)?;
        let first = *self
            .sizes
            .first()
            .ok_or_else(|| Error::InvalidConfig("`sizes` must not be empty".into()))?;
        let model = match (&self.model, &self.couplings) {
            (Some(name), None) => {
                let preset: Preset = name.parse()?;
                ModelSpec::preset_with(preset, first, self.overrides.unwrap_or_default())?
            }
            (None, Some(c)) => {
                if self.overrides.is_some() {
                    return Err(Error::InvalidConfig(
                        "`overrides` only applies to a preset `model`".into(),
                    ));
                }
                ModelSpec::new(first, *c)?
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "give either `model` or `couplings`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "missing key `model` (or an explicit `couplings` table)".into(),
                ))
            }
        };
        let config = RunConfig {
            model,
            monitor,
            dt: self.dt,
            n_traj: self.n_traj,
            sample_times: self.sample_times.clone(),
            master_seed: self.seed,
            init_mode: self.init_mode,
            scheme: self.scheme,
        };
        config.validate()?;
        Ok(config)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub model: String,
    pub monitor: String,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub gamma: f64,
    pub dt: f64,
    pub n_traj: usize,
    #[serde(rename = "S_mean")]
    pub s_mean: f64,
    #[serde(rename = "S_stderr")]
    pub s_stderr: f64,
}

impl SeriesRow {
    pub fn setup_key(&self) -> SetupKey {
        SetupKey {
            model: self.model.clone(),
            monitor: self.monitor.clone(),
            gamma: self.gamma.to_string(),
            dt: self.dt.to_string(),
        }
    }
}

/// Rows sharing a setup form one scaling series.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SetupKey {
    pub model: String,
    pub monitor: String,
    pub gamma: String,
    pub dt: String,
}

impl SetupKey {
    /// File-name-safe label such as `XXZ_z_g0.1`.
    pub fn label(&self) -> String {
        let raw = format!("{}_{}_g{}_dt{}", self.model, self.monitor, self.gamma, self.dt);
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
            .collect()
    }
}

pub fn series_rows(config: &RunConfig, points: &[ScalingPoint]) -> Vec<SeriesRow> {
    points
        .iter()
        .map(|p| SeriesRow {
            model: config.model.label(),
            monitor: config.monitor.label(),
            n_sites: p.n_sites,
            gamma: config.monitor.gamma,
            dt: config.dt,
            n_traj: config.n_traj,
            s_mean: p.s_mean,
            s_stderr: p.s_stderr,
        })
        .collect()
}

pub fn series_to_csv(rows: &[SeriesRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(SERIES_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::MalformedSeries(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_series(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    fs::write(path, series_to_csv(rows)?).map_err(io_err(path))
}

pub fn parse_series(text: &str) -> Result<Vec<SeriesRow>> {
    let header = text.lines().next().unwrap_or("");
    if header.trim_end_matches('\r') != SERIES_HEADER {
        return Err(Error::MalformedSeries(format!(
            "expected header `{SERIES_HEADER}`, found `{header}`"
        )));
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(k, row)| row.map_err(|e| Error::MalformedSeries(format!("row {}: {e}", k + 1))))
        .collect()
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_series(&text)
}

/// Groups rows by setup, each group sorted by `L`.
pub fn group_series(rows: &[SeriesRow]) -> BTreeMap<SetupKey, Vec<SeriesRow>> {
    let mut groups: BTreeMap<SetupKey, Vec<SeriesRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.setup_key()).or_default().push(r.clone());
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.n_sites);
    }
    groups
}

pub fn rows_to_series(rows: &[SeriesRow]) -> Result<ScalingSeries> {
    ScalingSeries::new(
        rows.iter()
            .map(|r| ScalingPoint {
                n_sites: r.n_sites,
                s_mean: r.s_mean,
                s_stderr: r.s_stderr,
                n_samples: r.n_traj,
            })
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisEntry {
    pub setup: SetupKey,
    pub report: FTestReport,
    pub threshold: f64,
    pub verdict: String,
}

pub fn verdict(p: f64, threshold: f64) -> &'static str {
    if p >= threshold {
        "volume-law favored"
    } else {
        "non-volume-law favored"
    }
}

/// F-test of every setup found in `rows`.
pub fn analyze_rows(
    rows: &[SeriesRow],
    weighting: FitWeighting,
    threshold: f64,
) -> Result<Vec<AnalysisEntry>> {
    if rows.is_empty() {
        return Err(Error::MalformedSeries("series has no rows".into()));
    }
    group_series(rows)
        .into_iter()
        .map(|(setup, group)| {
            let series = rows_to_series(&group)?;
            let report = f_test(&series, weighting)?;
            Ok(AnalysisEntry {
                verdict: verdict(report.p, threshold).to_owned(),
                setup,
                report,
                threshold,
            })
        })
        .collect()
}

pub fn summary_text(entries: &[AnalysisEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let r = &e.report;
        out.push_str(&format!(
            "{} + {} (gamma = {}, dt = {})\n\
             \x20 fit in L:    slope = {:.6}, intercept = {:.6}, SSE = {:.6e}\n\
             \x20 fit in ln L: slope = {:.6}, intercept = {:.6}, SSE = {:.6e}\n\
             \x20 F = {:.6e}, dof = ({}, {}), P = {:.6}\n\
             \x20 verdict: {} (threshold P ≥ {})\n",
            e.setup.model,
            e.setup.monitor,
            e.setup.gamma,
            e.setup.dt,
            r.fit_l.slope,
            r.fit_l.intercept,
            r.fit_l.sse,
            r.fit_ln_l.slope,
            r.fit_ln_l.intercept,
            r.fit_ln_l.sse,
            r.f,
            r.dof.0,
            r.dof.1,
            r.p,
            e.verdict,
            e.threshold,
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config: SimConfig,
    pub resolved: RunConfig,
    pub master_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub series_file: String,
    pub sizes: Vec<SizeDiagnostics>,
}

impl RunManifest {
    pub fn new(config: &SimConfig, resolved: &RunConfig, started_unix: u64, sweep: &SweepResult) -> Self {
        Self {
            schema_version: SERIES_SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            resolved: resolved.clone(),
            master_seed: resolved.master_seed,
            started_unix,
            finished_unix: unix_now(),
            series_file: SERIES_FILE.to_owned(),
            sizes: sweep.diagnostics.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(io_err(path))
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_analysis(path: &Path) -> Result<Vec<AnalysisEntry>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir.to_owned())
}
