use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model preset `{0}` (expected one of XX, XY, XXZ, XYZ, XXZz, XYZz)")]
    UnknownPreset(String),
    #[error("chain length must be even and at least {min}, got {got}")]
    InvalidLength { got: usize, min: usize },
    #[error("preset {preset} requires {constraint}")]
    PresetConstraint {
        preset: &'static str,
        constraint: &'static str,
    },
    #[error("measurement rate must be ≥ 0, got {0}")]
    NegativeRate(f64),
    #[error("time step must be > 0, got {0}")]
    InvalidTimeStep(f64),
    #[error("expected {expected} single-spin states, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("single-spin state {index} is not normalized (norm² = {norm_sqr})")]
    UnnormalizedSpin { index: usize, norm_sqr: f64 },
    #[error("site {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("state is not normalized (norm² = {0})")]
    UnnormalizedState(f64),
    #[error("operator {0} does not square to the identity")]
    NonInvolutory(String),
    #[error("plan built for {plan} sites applied to a state of {state} sites")]
    SizeMismatch { plan: usize, state: usize },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("L = {requested} exceeds the memory cap of {cap} sites")]
    MemoryCap { requested: usize, cap: usize },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("checkpoint {path} is corrupt: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },
    #[error("malformed series data: {0}")]
    MalformedSeries(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
