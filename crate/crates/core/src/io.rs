//! Dataset, manifest, prediction and result-table persistence.
//!
//! A dataset is a raw payload of little-endian `f64` values laid out as
//! `[trajectory][step][r, z]` plus a JSON sidecar (`<payload>.meta.json`)
//! carrying the run parameters and a SHA-256 over sidecar fields and payload.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{ExperimentConfig, StopRule, TrialResult, TrialStatistics};
use crate::forward::{TimeGrid, Trajectory, TrajectoryBatch};
use crate::strain::{FlowKind, State, StrainConfig};

pub const DATASET_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;

/// Header of the results table produced by a sweep.
pub const RESULTS_COLUMNS: [&str; 10] = [
    "flow_kind",
    "nu",
    "s",
    "component",
    "n_trials",
    "mean_rel_mae",
    "std",
    "se",
    "rel_se",
    "converged",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatasetHeader {
    format_version: u32,
    flow_kind: FlowKind,
    a: f64,
    nu: f64,
    t_end: f64,
    points: usize,
    s: f64,
    n: usize,
    seed: u64,
    attempts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatasetSidecar {
    #[serde(flatten)]
    header: DatasetHeader,
    content_hash: String,
}

pub fn sidecar_path(payload: &Path) -> PathBuf {
    let mut name = payload.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn content_hash(header: &DatasetHeader, payload: &[u8]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(header)?);
    h.update(payload);
    Ok(hex::encode(h.finalize()))
}

fn encode_payload(batch: &TrajectoryBatch) -> Vec<u8> {
    let mut out = Vec::with_capacity(batch.len() * batch.grid.points() * 16);
    for t in &batch.trajectories {
        for s in &t.states {
            out.extend_from_slice(&s.r.to_le_bytes());
            out.extend_from_slice(&s.z.to_le_bytes());
        }
    }
    out
}

/// Writes the payload and its sidecar; returns the content hash.
pub fn write_dataset(path: &Path, batch: &TrajectoryBatch) -> Result<String> {
    let header = DatasetHeader {
        format_version: DATASET_VERSION,
        flow_kind: batch.cfg.kind(),
        a: batch.cfg.a(),
        nu: batch.cfg.nu(),
        t_end: batch.grid.t_end(),
        points: batch.grid.points(),
        s: batch.scale_s,
        n: batch.len(),
        seed: batch.seed,
        attempts: batch.attempts,
    };
    let payload = encode_payload(batch);
    let hash = content_hash(&header, &payload)?;
    fs::write(path, &payload)?;
    let sidecar = DatasetSidecar {
        header,
        content_hash: hash.clone(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(hash)
}

/// Reads a dataset back, validating version, size and hash.
pub fn read_dataset(path: &Path) -> Result<(TrajectoryBatch, String)> {
    let corrupt = |reason: String| Error::Corruption {
        path: path.to_path_buf(),
        reason,
    };
    let sidecar: DatasetSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let h = &sidecar.header;
    if h.format_version != DATASET_VERSION {
        return Err(Error::VersionMismatch {
            found: h.format_version,
            expected: DATASET_VERSION,
        });
    }
    let mut payload = Vec::new();
    fs::File::open(path)?.read_to_end(&mut payload)?;
    let expected = h.n * h.points * 2 * 8;
    if payload.len() != expected {
        return Err(corrupt(format!("payload has {} bytes, expected {expected}", payload.len())));
    }
    let hash = content_hash(h, &payload)?;
    if hash != sidecar.content_hash {
        return Err(corrupt("content hash mismatch".into()));
    }
    let cfg = StrainConfig::new(h.flow_kind, h.a, h.nu)?;
    let grid = TimeGrid::new(h.t_end, h.points)?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    let trajectories = values
        .chunks_exact(h.points * 2)
        .map(|t| Trajectory {
            states: t.chunks_exact(2).map(|p| State::new(p[0], p[1])).collect(),
        })
        .collect();
    Ok((
        TrajectoryBatch {
            cfg,
            grid,
            scale_s: h.s,
            seed: h.seed,
            attempts: h.attempts,
            trajectories,
        },
        hash,
    ))
}

/// Complete configuration of a trial or sweep. A trial uses the first scale
/// and `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub experiment: ExperimentConfig,
    pub s_values: Vec<f64>,
    pub base_seed: u64,
    pub stop: StopRule,
}

impl RunManifest {
    pub fn new(experiment: ExperimentConfig, s_values: Vec<f64>, base_seed: u64, stop: StopRule) -> Self {
        Self {
            format_version: MANIFEST_VERSION,
            experiment,
            s_values,
            base_seed,
            stop,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::VersionMismatch {
                found: m.format_version,
                expected: MANIFEST_VERSION,
            });
        }
        if m.s_values.is_empty() {
            return Err(Error::Schema("manifest lists no scale parameters".into()));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub index: usize,
    pub r0: f64,
    pub z0: f64,
}

pub fn write_predictions(w: impl Write, indices: &[usize], predicted: &[State]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (&index, p) in indices.iter().zip(predicted) {
        out.serialize(PredictionRow { index, r0: p.r, z0: p.z })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions(r: impl Read) -> Result<Vec<PredictionRow>> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub flow_kind: String,
    pub nu: f64,
    pub s: f64,
    pub seed: u64,
    pub component: String,
    pub rel_mae: f64,
}

impl From<&TrialResult> for MetricsRow {
    fn from(t: &TrialResult) -> Self {
        Self {
            flow_kind: t.kind.as_str().to_string(),
            nu: t.nu,
            s: t.s,
            seed: t.seed,
            component: t.component.as_str().to_string(),
            rel_mae: t.rel_mae,
        }
    }
}

/// Per-trial metrics. Wall-clock runtime is left out so that replays compare
/// byte for byte.
pub fn write_metrics(w: impl Write, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub flow_kind: String,
    pub nu: f64,
    pub s: f64,
    pub component: String,
    pub n_trials: usize,
    pub mean_rel_mae: f64,
    pub std: f64,
    pub se: f64,
    pub rel_se: f64,
    pub converged: bool,
}

impl From<&TrialStatistics> for ResultRow {
    fn from(t: &TrialStatistics) -> Self {
        Self {
            flow_kind: t.kind.as_str().to_string(),
            nu: t.nu,
            s: t.s,
            component: t.component.as_str().to_string(),
            n_trials: t.summary.n_trials,
            mean_rel_mae: t.summary.mean,
            std: t.summary.std,
            se: t.summary.se,
            rel_se: t.summary.rel_se,
            converged: t.converged,
        }
    }
}

pub fn write_results(w: impl Write, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(RESULTS_COLUMNS)?;
    }
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a results table, rejecting unexpected headers and empty tables.
pub fn read_results(r: impl Read) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(RESULTS_COLUMNS.iter().copied()) {
        return Err(Error::Schema(format!(
            "expected columns {RESULTS_COLUMNS:?}, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row.map_err(|e| Error::Schema(e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(Error::Schema("results table has no rows".into()));
    }
    Ok(rows)
}
