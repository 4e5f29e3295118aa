//! Backward-drift regression: dataset construction, the score network, exact
//! backpropagation, Adam and the training loop.
//!
//! Each forward transition `x_k -> x_{k+1}` yields the regression target
//! `(x_k - x_{k+1}) / dt`, to be predicted from `(x_{k+1}, k)`. The
//! least-squares fit over all pairs approximates the conditional expectation
//! of that target, which is the backward drift used for reconstruction.

mod adam;
mod checkpoint;
mod embed;
mod model;
mod train;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use embed::TimeEmbedding;
pub use model::{Activation, Architecture, ScoreModel};
pub use train::{train, TrainConfig, TrainingReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::TrajectoryBatch;
use crate::strain::State;

/// One regression sample built from a forward transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingPair {
    pub x_next: State,
    pub k: usize,
    pub target: [f64; 2],
}

impl TrainingPair {
    pub fn from_transition(x: State, x_next: State, k: usize, dt: f64) -> Self {
        Self {
            x_next,
            k,
            target: [(x.r - x_next.r) / dt, (x.z - x_next.z) / dt],
        }
    }
}

/// `N (L - 1)` pairs, trajectory-major.
pub fn build_training_pairs(batch: &TrajectoryBatch) -> Result<Vec<TrainingPair>> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("cannot build pairs from an empty batch".into()));
    }
    let dt = batch.grid.dt();
    let mut pairs = Vec::with_capacity(batch.len() * batch.grid.steps());
    for t in &batch.trajectories {
        for (k, w) in t.states.windows(2).enumerate() {
            pairs.push(TrainingPair::from_transition(w[0], w[1], k, dt));
        }
    }
    Ok(pairs)
}

/// Per-component standardization of network inputs and targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub input_mean: [f64; 2],
    pub input_std: [f64; 2],
    pub target_mean: [f64; 2],
    pub target_std: [f64; 2],
}

impl NormStats {
    pub const IDENTITY: NormStats = NormStats {
        input_mean: [0.0; 2],
        input_std: [1.0; 2],
        target_mean: [0.0; 2],
        target_std: [1.0; 2],
    };

    /// Population statistics over the pairs. A component with zero spread
    /// gets unit scale.
    pub fn from_pairs(pairs: &[TrainingPair]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("cannot normalize an empty pair set".into()));
        }
        let n = pairs.len() as f64;
        let mut stats = Self::IDENTITY;
        for c in 0..2 {
            let xs = pairs.iter().map(|p| p.x_next.to_array()[c]);
            let (m, s) = mean_std(xs, n);
            stats.input_mean[c] = m;
            stats.input_std[c] = s;
            let ts = pairs.iter().map(|p| p.target[c]);
            let (m, s) = mean_std(ts, n);
            stats.target_mean[c] = m;
            stats.target_std[c] = s;
        }
        Ok(stats)
    }

    pub fn normalize_input(&self, x: State) -> [f64; 2] {
        [
            (x.r - self.input_mean[0]) / self.input_std[0],
            (x.z - self.input_mean[1]) / self.input_std[1],
        ]
    }

    pub fn denormalize_input(&self, v: [f64; 2]) -> State {
        State::new(
            v[0] * self.input_std[0] + self.input_mean[0],
            v[1] * self.input_std[1] + self.input_mean[1],
        )
    }

    pub fn normalize_target(&self, t: [f64; 2]) -> [f64; 2] {
        [
            (t[0] - self.target_mean[0]) / self.target_std[0],
            (t[1] - self.target_mean[1]) / self.target_std[1],
        ]
    }

    pub fn denormalize_target(&self, v: [f64; 2]) -> [f64; 2] {
        [
            v[0] * self.target_std[0] + self.target_mean[0],
            v[1] * self.target_std[1] + self.target_mean[1],
        ]
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 && std.is_finite() { std } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{generate_batch, RngSpec, TimeGrid};
    use crate::strain::{FlowKind, StrainConfig};

    #[test]
    fn target_examples() {
        let p = TrainingPair::from_transition(State::new(1.0, 2.0), State::new(0.9, 2.1), 0, 0.01);
        assert!((p.target[0] - 10.0).abs() < 1e-12);
        assert!((p.target[1] + 10.0).abs() < 1e-12);
        let p = TrainingPair::from_transition(State::new(1.0, 2.0), State::new(1.0, 2.0), 3, 0.01);
        assert_eq!(p.target, [0.0, 0.0]);
    }

    #[test]
    fn pair_count_and_layout() {
        let cfg = StrainConfig::new(FlowKind::Planar2D, 1.0, 1.0).unwrap();
        let grid = TimeGrid::new(2.0, 7).unwrap();
        let b = generate_batch(&cfg, &grid, 1.0, 5, RngSpec::new(2)).unwrap();
        let pairs = build_training_pairs(&b).unwrap();
        assert_eq!(pairs.len(), 5 * 6);
        for (i, p) in pairs.iter().enumerate() {
            let (n, k) = (i / 6, i % 6);
            assert_eq!(p.k, k);
            let t = &b.trajectories[n];
            assert_eq!(p.x_next, t.states[k + 1]);
            let back = State::new(p.x_next.r + p.target[0] * grid.dt(), p.x_next.z + p.target[1] * grid.dt());
            assert!((back.r - t.states[k].r).abs() < 1e-12 * (1.0 + t.states[k].r.abs()));
        }
    }

    #[test]
    fn pair_count_at_full_scale() {
        let cfg = StrainConfig::new(FlowKind::Planar2D, 1.0, 1.0).unwrap();
        let grid = TimeGrid::new(2.0, 200).unwrap();
        let b = generate_batch(&cfg, &grid, 1.0, 10_000, RngSpec::new(0)).unwrap();
        assert_eq!(build_training_pairs(&b).unwrap().len(), 1_990_000);
    }

    #[test]
    fn constant_component_gets_unit_scale() {
        let pairs = vec![
            TrainingPair { x_next: State::new(1.0, 5.0), k: 0, target: [3.0, 2.0] },
            TrainingPair { x_next: State::new(3.0, 5.0), k: 1, target: [3.0, 4.0] },
        ];
        let n = NormStats::from_pairs(&pairs).unwrap();
        assert_eq!(n.input_mean, [2.0, 5.0]);
        assert_eq!(n.input_std, [1.0, 1.0]);
        assert_eq!(n.target_std, [1.0, 1.0]);
        assert_eq!(n.target_mean, [3.0, 3.0]);
        assert!(NormStats::from_pairs(&[]).is_err());
    }
}
