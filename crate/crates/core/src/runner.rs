//! Trajectory ensembles and system-size sweeps.

use std::path::Path;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{CheckpointWriter, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::model::{classify, monitored_operators, ModelSpec, MonitorOp, MonitorSpec};
use crate::monitoring::{measurement_layer, stream_key, NoiseStream, Scheme};
use crate::state::{EntropySample, InitMode, StateVector};
use crate::trotter::TrotterPlan;

const INIT_DOMAIN: u64 = 0x696e_6974_0000_0001;
/// Slack when mapping a sample time onto the step grid.
const GRID_EPS: f64 = 1e-9;
pub const DEFAULT_MAX_SITES: usize = 24;

/// `T_k = (25 + k)/J_x` for `k = 1..=5`.
pub fn default_sample_times() -> Vec<f64> {
    (1..=5).map(|k| 25.0 + f64::from(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub monitor: MonitorSpec,
    pub dt: f64,
    pub n_traj: usize,
    pub sample_times: Vec<f64>,
    pub master_seed: u64,
    pub init_mode: InitMode,
    #[serde(default)]
    pub scheme: Scheme,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidTimeStep(self.dt));
        }
        if !(self.monitor.gamma >= 0.0) {
            return Err(Error::NegativeRate(self.monitor.gamma));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidConfig("n_traj must be at least 1".into()));
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidConfig("sample_times must not be empty".into()));
        }
        if self.sample_times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidConfig("sample times must be finite and ≥ 0".into()));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "sample_times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// The same run on a chain of `n_sites` spins.
    pub fn with_length(&self, n_sites: usize) -> Result<Self> {
        Ok(Self {
            model: self.model.with_length(n_sites)?,
            ..self.clone()
        })
    }

    /// Step counts at which each sample is taken: the first step boundary at
    /// or after the requested time.
    pub fn sample_steps(&self) -> Vec<u64> {
        self.sample_times
            .iter()
            .map(|t| (t / self.dt - GRID_EPS).ceil().max(0.0) as u64)
            .collect()
    }
}

/// Everything a worker needs, shared read-only across trajectories.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: RunConfig,
    plan: TrotterPlan,
    ops: Vec<MonitorOp>,
    sample_steps: Vec<u64>,
}

impl Simulator {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            plan: TrotterPlan::new(&config.model, config.dt)?,
            ops: monitored_operators(&config.model, &config.monitor),
            sample_steps: config.sample_steps(),
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn plan(&self) -> &TrotterPlan {
        &self.plan
    }

    pub fn operators(&self) -> &[MonitorOp] {
        &self.ops
    }

    pub fn initial_state(&self, trajectory: usize) -> StateVector {
        let mut rng = ChaCha8Rng::from_seed(stream_key(self.config.master_seed, INIT_DOMAIN));
        rng.set_stream(trajectory as u64);
        StateVector::random_product(self.config.model.n_sites, &mut rng, self.config.init_mode)
    }

    pub fn noise(&self, trajectory: usize) -> NoiseStream {
        NoiseStream::new(
            self.config.master_seed,
            trajectory as u64,
            self.config.monitor.gamma,
            self.config.dt,
        )
    }

    /// Evolves one trajectory, `[unitary step; measurement layer]` per step.
    pub fn run_trajectory(&self, trajectory: usize) -> Result<TrajectoryRecord> {
        let mut state = self.initial_state(trajectory);
        let mut noise = self.noise(trajectory);
        let sz0 = state.magnetization();
        let mut sz_drift: f64 = 0.0;
        let mut times = Vec::with_capacity(self.sample_steps.len());
        let mut entropies = Vec::with_capacity(self.sample_steps.len());
        let mut step = 0u64;
        for &target in &self.sample_steps {
            while step < target {
                self.plan.step(&mut state)?;
                measurement_layer(self.config.scheme, &mut state, &self.ops, &mut noise, step)?;
                step += 1;
            }
            times.push(step as f64 * self.config.dt);
            entropies.push(state.half_chain_entropy()?);
            sz_drift = sz_drift.max((state.magnetization() - sz0).abs());
        }
        Ok(TrajectoryRecord {
            index: trajectory,
            times,
            entropies,
            sz_drift,
        })
    }
}

/// Runs one trajectory from scratch.
pub fn run_trajectory(config: &RunConfig, trajectory: usize) -> Result<Vec<EntropySample>> {
    Ok(Simulator::new(config)?.run_trajectory(trajectory)?.samples())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub s_mean: f64,
    pub s_stderr: f64,
    pub n_samples: usize,
}

/// Comparison of the ensemble mean at the first and last sample time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    pub first_mean: f64,
    pub last_mean: f64,
    pub combined_stderr: f64,
    /// `|last - first| ≥ 3 · combined_stderr`.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub point: ScalingPoint,
    pub stationarity: Option<Stationarity>,
    /// Largest per-trajectory magnetization drift.
    pub max_sz_drift: f64,
    pub records: Vec<TrajectoryRecord>,
}

/// Runs `indices` on a pool of `workers` threads, reporting each finished
/// trajectory to `on_done`. Results come back in the order of `indices`.
pub fn run_trajectories<F>(
    sim: &Simulator,
    indices: &[usize],
    workers: usize,
    on_done: F,
) -> Result<Vec<TrajectoryRecord>>
where
    F: Fn(&TrajectoryRecord) -> Result<()> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        indices
            .par_iter()
            .map(|&i| {
                let record = sim.run_trajectory(i)?;
                on_done(&record)?;
                Ok(record)
            })
            .collect()
    })
}

pub fn run_ensemble(config: &RunConfig, workers: usize) -> Result<EnsembleResult> {
    let sim = Simulator::new(config)?;
    let indices: Vec<usize> = (0..config.n_traj).collect();
    let records = run_trajectories(&sim, &indices, workers, |_| Ok(()))?;
    Ok(aggregate(config.model.n_sites, records))
}

/// Reduces trajectory records, in index order, to a scaling point.
///
/// The mean is the flat average of all samples; the standard error is taken
/// over per-trajectory time averages.
pub fn aggregate(n_sites: usize, mut records: Vec<TrajectoryRecord>) -> EnsembleResult {
    records.sort_by_key(|r| r.index);
    let n_samples: usize = records.iter().map(|r| r.entropies.len()).sum();
    let total: f64 = records.iter().flat_map(|r| r.entropies.iter()).sum();
    let s_mean = total / n_samples as f64;
    let per_traj: Vec<f64> = records
        .iter()
        .map(|r| r.entropies.iter().sum::<f64>() / r.entropies.len() as f64)
        .collect();
    let s_stderr = standard_error(&per_traj);

    let n_times = records.first().map_or(0, |r| r.entropies.len());
    let stationarity = (n_times >= 2).then(|| {
        let first: Vec<f64> = records.iter().map(|r| r.entropies[0]).collect();
        let last: Vec<f64> = records.iter().map(|r| r.entropies[n_times - 1]).collect();
        let (first_mean, last_mean) = (mean(&first), mean(&last));
        let combined_stderr = standard_error(&first).hypot(standard_error(&last));
        let diff = (last_mean - first_mean).abs();
        Stationarity {
            first_mean,
            last_mean,
            combined_stderr,
            flagged: diff > 0.0 && diff >= 3.0 * combined_stderr,
        }
    });
    let max_sz_drift = records.iter().map(|r| r.sz_drift).fold(0.0, f64::max);
    EnsembleResult {
        point: ScalingPoint {
            n_sites,
            s_mean,
            s_stderr,
            n_samples,
        },
        stationarity,
        max_sz_drift,
        records,
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard error; zero for a single value.
fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

#[derive(Clone, Debug)]
pub struct SweepOptions<'a> {
    pub workers: usize,
    pub max_sites: usize,
    /// Directory for per-size checkpoint files; `None` disables persistence.
    pub checkpoint_dir: Option<&'a Path>,
    /// Reuse records already present in the checkpoint files.
    pub resume: bool,
}

impl Default for SweepOptions<'_> {
    fn default() -> Self {
        Self {
            workers: 1,
            max_sites: DEFAULT_MAX_SITES,
            checkpoint_dir: None,
            resume: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeDiagnostics {
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub stationarity: Option<Stationarity>,
    pub max_sz_drift: f64,
    pub u1_symmetric: bool,
    pub resumed_trajectories: usize,
    pub checkpoint_digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<ScalingPoint>,
    pub diagnostics: Vec<SizeDiagnostics>,
}

pub fn validate_sizes(sizes: &[usize], max_sites: usize) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidConfig("sizes must not be empty".into()));
    }
    if let Some(&odd) = sizes.iter().find(|l| *l % 2 != 0 || **l < 2) {
        return Err(Error::InvalidLength { got: odd, min: 2 });
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("sizes must be strictly increasing".into()));
    }
    if let Some(&big) = sizes.iter().find(|l| **l > max_sites) {
        return Err(Error::MemoryCap {
            requested: big,
            cap: max_sites,
        });
    }
    Ok(())
}

/// Runs `base` at every size; with a checkpoint directory, each finished
/// trajectory is appended to `checkpoint_L{L}.jsonl` so an interrupted sweep
/// can resume.
pub fn sweep_sizes(base: &RunConfig, sizes: &[usize], opts: &SweepOptions<'_>) -> Result<SweepResult> {
    validate_sizes(sizes, opts.max_sites)?;
    base.validate()?;
    let mut points = Vec::with_capacity(sizes.len());
    let mut diagnostics = Vec::with_capacity(sizes.len());
    for &n_sites in sizes {
        let config = base.with_length(n_sites)?;
        let sim = Simulator::new(&config)?;
        let (records, resumed, digest) = match opts.checkpoint_dir {
            None => {
                let all: Vec<usize> = (0..config.n_traj).collect();
                (run_trajectories(&sim, &all, opts.workers, |_| Ok(()))?, 0, None)
            }
            Some(dir) => {
                let mut writer = CheckpointWriter::open(dir, &config, opts.resume)?;
                let done = writer.take_existing();
                let missing: Vec<usize> = (0..config.n_traj)
                    .filter(|i| !done.iter().any(|r| r.index == *i))
                    .collect();
                let resumed = done.len();
                log::info!(
                    "L = {n_sites}: {resumed} trajectories from checkpoint, {} to run",
                    missing.len()
                );
                let writer = Mutex::new(writer);
                let fresh = run_trajectories(&sim, &missing, opts.workers, |r| {
                    writer.lock().expect("checkpoint writer poisoned").append(r)
                })?;
                let writer = writer.into_inner().expect("checkpoint writer poisoned");
                let mut records = done;
                records.extend(fresh);
                records.sort_by_key(|r| r.index);
                let digest = writer.digest(&records)?;
                (records, resumed, Some(digest))
            }
        };
        let result = aggregate(n_sites, records);
        log::info!(
            "L = {n_sites}: S = {:.6} ± {:.6}",
            result.point.s_mean,
            result.point.s_stderr
        );
        diagnostics.push(SizeDiagnostics {
            n_sites,
            stationarity: result.stationarity,
            max_sz_drift: result.max_sz_drift,
            u1_symmetric: classify(&config.model, &config.monitor).u1_symmetric,
            resumed_trajectories: resumed,
            checkpoint_digest: digest,
        });
        points.push(result.point);
    }
    Ok(SweepResult { points, diagnostics })
}
