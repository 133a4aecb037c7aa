//! Append-only per-trajectory checkpoints.
//!
//! One JSON object per line. The first line is a header binding the file to a
//! run configuration; every further line is one finished trajectory:
//!
//! ```text
//! {"kind":"header","L":8,"config_digest":"…"}
//! {"kind":"trajectory","traj":0,"times":[26.0,…],"entropies":[…],"sz_drift":0.0}
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};
use crate::runner::RunConfig;
use crate::state::EntropySample;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    #[serde(rename = "traj")]
    pub index: usize,
    pub times: Vec<f64>,
    pub entropies: Vec<f64>,
    pub sz_drift: f64,
}

impl TrajectoryRecord {
    pub fn samples(&self) -> Vec<EntropySample> {
        self.times
            .iter()
            .zip(&self.entropies)
            .map(|(&t, &entropy)| EntropySample { t, entropy })
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Header {
        #[serde(rename = "L")]
        n_sites: usize,
        config_digest: String,
    },
    Trajectory(TrajectoryRecord),
}

pub fn checkpoint_path(dir: &Path, n_sites: usize) -> PathBuf {
    dir.join(format!("checkpoint_L{n_sites}.jsonl"))
}

pub fn config_digest(config: &RunConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex_digest(text.as_bytes())
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Single writer for one size's checkpoint file.
#[derive(Debug)]
pub struct CheckpointWriter {
    path: PathBuf,
    file: File,
    existing: Vec<TrajectoryRecord>,
}

impl CheckpointWriter {
    /// Opens (or creates) the checkpoint for `config`. With `resume`, records
    /// already on disk are validated and kept; otherwise the file is reset.
    pub fn open(dir: &Path, config: &RunConfig, resume: bool) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = checkpoint_path(dir, config.model.n_sites);
        let digest = config_digest(config);
        let existing = if resume && path.exists() {
            load_records(&path, config, &digest)?
        } else {
            Vec::new()
        };
        // Rewrite the validated contents so a truncated tail never survives.
        let mut file = File::create(&path).map_err(io_err(&path))?;
        let mut text = to_line(&Line::Header {
            n_sites: config.model.n_sites,
            config_digest: digest,
        });
        for r in &existing {
            text.push_str(&to_line(&Line::Trajectory(r.clone())));
        }
        file.write_all(text.as_bytes()).map_err(io_err(&path))?;
        file.flush().map_err(io_err(&path))?;
        drop(file);
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok(Self {
            path,
            file,
            existing,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Records recovered from disk when resuming.
    pub fn take_existing(&mut self) -> Vec<TrajectoryRecord> {
        std::mem::take(&mut self.existing)
    }

    pub fn append(&mut self, record: &TrajectoryRecord) -> Result<()> {
        let line = to_line(&Line::Trajectory(record.clone()));
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(io_err(&self.path))
    }

    /// SHA-256 over the canonical lines of `records`, in index order.
    pub fn digest(&self, records: &[TrajectoryRecord]) -> Result<String> {
        let mut sorted: Vec<&TrajectoryRecord> = records.iter().collect();
        sorted.sort_by_key(|r| r.index);
        let text: String = sorted
            .into_iter()
            .map(|r| to_line(&Line::Trajectory(r.clone())))
            .collect();
        Ok(hex_digest(text.as_bytes()))
    }
}

fn to_line(line: &Line) -> String {
    let mut s = serde_json::to_string(line).expect("checkpoint line serializes");
    s.push('\n');
    s
}

fn load_records(path: &Path, config: &RunConfig, digest: &str) -> Result<Vec<TrajectoryRecord>> {
    let corrupt = |reason: String| Error::CorruptCheckpoint {
        path: path.to_owned(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    let n_times = config.sample_times.len();
    for (k, raw) in lines.iter().enumerate() {
        let last = k + 1 == lines.len();
        let parsed: Line = match serde_json::from_str(raw) {
            Ok(l) => l,
            // An interrupted append leaves an unterminated final line.
            Err(_) if last && !complete && k > 0 => break,
            Err(e) => return Err(corrupt(format!("line {}: {e}", k + 1))),
        };
        match (k, parsed) {
            (0, Line::Header { n_sites, config_digest }) => {
                if n_sites != config.model.n_sites || config_digest != digest {
                    return Err(corrupt("written by a different run configuration".into()));
                }
            }
            (0, _) => return Err(corrupt("missing header".into())),
            (_, Line::Header { .. }) => {
                return Err(corrupt(format!("unexpected header on line {}", k + 1)))
            }
            (_, Line::Trajectory(r)) => {
                if r.index >= config.n_traj {
                    return Err(corrupt(format!("trajectory index {} out of range", r.index)));
                }
                if r.entropies.len() != n_times || r.times.len() != n_times {
                    return Err(corrupt(format!(
                        "trajectory {} has {} samples, expected {n_times}",
                        r.index,
                        r.entropies.len()
                    )));
                }
                if records.iter().any(|o| o.index == r.index) {
                    return Err(corrupt(format!("duplicate trajectory {}", r.index)));
                }
                records.push(r);
            }
        }
    }
    if lines.is_empty() {
        return Err(corrupt("empty file".into()));
    }
    records.sort_by_key(|r| r.index);
    Ok(records)
}
