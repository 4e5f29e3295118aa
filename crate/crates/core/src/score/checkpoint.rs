use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, Architecture, NormStats, ScoreModel, TimeEmbedding};
use crate::error::{Error, Result};
use crate::forward::TimeGrid;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    fan_in: usize,
    fan_out: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// On-disk JSON form of a [`ScoreModel`]. Floats are written in shortest
/// round-trip form so a reload reproduces every parameter bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub architecture: Architecture,
    pub activation: Activation,
    pub embedding: TimeEmbedding,
    pub norm: NormStats,
    pub grid: TimeGrid,
    /// Content hash of the dataset the model was trained on.
    pub dataset_hash: Option<String>,
    layers: Vec<LayerRecord>,
}

impl Checkpoint {
    pub fn from_model(model: &ScoreModel, dataset_hash: Option<String>) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            architecture: *model.architecture(),
            activation: model.activation(),
            embedding: model.embedding().clone(),
            norm: *model.norm(),
            grid: *model.grid(),
            dataset_hash,
            layers: model
                .layers()
                .map(|(fan_in, fan_out, w, b)| LayerRecord {
                    fan_in,
                    fan_out,
                    weights: w.to_vec(),
                    bias: b.to_vec(),
                })
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<ScoreModel> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                found: self.format_version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let shapes = self.architecture.layer_shapes();
        if shapes.len() != self.layers.len() {
            return Err(Error::Schema(format!(
                "checkpoint has {} layers, architecture implies {}",
                self.layers.len(),
                shapes.len()
            )));
        }
        let mut params = Vec::with_capacity(self.architecture.parameter_count());
        for (i, (layer, (fan_in, fan_out))) in self.layers.into_iter().zip(shapes).enumerate() {
            if layer.fan_in != fan_in
                || layer.fan_out != fan_out
                || layer.weights.len() != fan_in * fan_out
                || layer.bias.len() != fan_out
            {
                return Err(Error::Schema(format!("layer {i} does not match a {fan_in}x{fan_out} dense layer")));
            }
            params.extend(layer.weights);
            params.extend(layer.bias);
        }
        ScoreModel::from_parts(
            self.architecture,
            self.activation,
            self.embedding,
            self.norm,
            self.grid,
            params,
        )
    }
}

pub fn write_checkpoint(path: &Path, model: &ScoreModel, dataset_hash: Option<String>) -> Result<()> {
    let text = serde_json::to_string_pretty(&Checkpoint::from_model(model, dataset_hash))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
