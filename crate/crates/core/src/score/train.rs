use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Adam, AdamConfig, ScoreModel, TrainingPair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 1024,
            max_epochs: 200,
            patience: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean normalized minibatch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Normalized validation loss after each epoch.
    pub val_loss: Vec<f64>,
    /// Epoch whose parameters were returned, if any epoch ran.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainingReport {
    pub fn epochs_run(&self) -> usize {
        self.train_loss.len()
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.best_epoch.map(|e| self.val_loss[e])
    }
}

/// Validation loss evaluated in chunks to bound memory.
fn chunked_loss(model: &ScoreModel, pairs: &[TrainingPair], chunk: usize) -> Result<f64> {
    let mut total = 0.0;
    for c in pairs.chunks(chunk.max(1)) {
        total += model.normalized_loss(c)? * c.len() as f64;
    }
    Ok(total / pairs.len() as f64)
}

/// Minibatch Adam on the normalized objective. Each epoch reshuffles the
/// training pairs with its own deterministic stream; the parameters with the
/// lowest validation loss are returned.
pub fn train(
    train_pairs: &[TrainingPair],
    val_pairs: &[TrainingPair],
    cfg: &TrainConfig,
    init: ScoreModel,
) -> Result<(ScoreModel, TrainingReport)> {
    if train_pairs.is_empty() || val_pairs.is_empty() {
        return Err(Error::InvalidArgument("training and validation sets must be non-empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut report = TrainingReport::default();
    if cfg.max_epochs == 0 {
        return Ok((init, report));
    }

    let mut opt = Adam::new(cfg.adam, init.params().len())?;
    let mut model = init;
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| train_pairs[i]));
            let (loss, grad) = model.loss_and_gradient(&batch)?;
            opt.step(model.params_mut(), &grad)?;
            epoch_loss += loss * idx.len() as f64;
        }
        let train_loss = epoch_loss / train_pairs.len() as f64;
        let val_loss = chunked_loss(&model, val_pairs, cfg.batch_size.max(4096))?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::ModelDivergence(format!(
                "epoch {epoch}: train loss {train_loss}, validation loss {val_loss}"
            )));
        }
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);

        if val_loss < best_val {
            best_val = val_loss;
            best = model.clone();
            report.best_epoch = Some(epoch);
        } else if epoch - report.best_epoch.unwrap_or(0) >= cfg.patience {
            report.stopped_early = true;
            break;
        }
    }
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::TimeGrid;
    use crate::score::{Activation, Architecture, NormStats};
    use crate::strain::State;

    fn tiny() -> Architecture {
        Architecture {
            state_width: 8,
            embed_dim: 4,
            hidden_width: 16,
            hidden_layers: 2,
        }
    }

    fn constant_pairs(n: usize, offset: usize) -> Vec<TrainingPair> {
        (0..n)
            .map(|i| {
                let u = ((i + offset) as f64 * 0.618_033_988_75).fract();
                TrainingPair {
                    x_next: State::new(4.0 * u - 2.0, 1.0 + u * u),
                    k: (i + offset) % 9,
                    target: [2.5, -1.5],
                }
            })
            .collect()
    }

    #[test]
    fn zero_epochs_returns_init() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let init = ScoreModel::init(tiny(), Activation::Silu, NormStats::IDENTITY, grid, 3).unwrap();
        let cfg = TrainConfig { max_epochs: 0, ..TrainConfig::default() };
        let (m, rep) = train(&constant_pairs(10, 0), &constant_pairs(5, 10), &cfg, init.clone()).unwrap();
        assert_eq!(m, init);
        assert_eq!(rep.epochs_run(), 0);
        assert_eq!(rep.best_epoch, None);
    }

    #[test]
    fn learns_a_constant() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let tr = constant_pairs(512, 0);
        let va = constant_pairs(128, 512);
        let norm = NormStats::from_pairs(&tr).unwrap();
        let init = ScoreModel::init(tiny(), Activation::Silu, norm, grid, 5).unwrap();
        let cfg = TrainConfig {
            adam: AdamConfig { learning_rate: 3e-3, ..AdamConfig::default() },
            batch_size: 64,
            max_epochs: 60,
            patience: 60,
            seed: 1,
        };
        let (m, rep) = train(&tr, &va, &cfg, init).unwrap();
        assert!(rep.best_val_loss().unwrap() < 1e-4, "{:?}", rep.best_val_loss());
        for p in &va {
            let y = m.forward(p.x_next, p.k).unwrap();
            assert!((y[0] - 2.5).abs() < 0.02 && (y[1] + 1.5).abs() < 0.02, "{y:?}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let mut tr = constant_pairs(200, 0);
        for (i, p) in tr.iter_mut().enumerate() {
            p.target = [p.x_next.r * 2.0, (i % 3) as f64];
        }
        let va = constant_pairs(50, 200);
        let init = ScoreModel::init(tiny(), Activation::Silu, NormStats::IDENTITY, grid, 2).unwrap();
        let cfg = TrainConfig { batch_size: 32, max_epochs: 3, ..TrainConfig::default() };
        let a = train(&tr, &va, &cfg, init.clone()).unwrap();
        let b = train(&tr, &va, &cfg, init).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_splits_rejected() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let init = ScoreModel::init(tiny(), Activation::Silu, NormStats::IDENTITY, grid, 3).unwrap();
        assert!(train(&[], &constant_pairs(2, 0), &TrainConfig::default(), init.clone()).is_err());
        assert!(train(&constant_pairs(2, 0), &[], &TrainConfig::default(), init).is_err());
    }

    #[test]
    fn divergence_surfaces_as_error() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let mut tr = constant_pairs(64, 0);
        tr[3].target = [f64::NAN, 0.0];
        let init = ScoreModel::init(tiny(), Activation::Silu, NormStats::IDENTITY, grid, 3).unwrap();
        let cfg = TrainConfig { batch_size: 16, max_epochs: 2, ..TrainConfig::default() };
        let err = train(&tr, &constant_pairs(8, 64), &cfg, init).unwrap_err();
        assert!(matches!(err, Error::ModelDivergence(_)), "{err}");
    }
}
