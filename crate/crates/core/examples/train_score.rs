//! Fits the score network on a small dataset and saves a checkpoint.

use vortex_score::forward::{generate_batch, split_batch, RngSpec, TimeGrid};
use vortex_score::score::{
    build_training_pairs, read_checkpoint, train, write_checkpoint, Activation, Architecture, NormStats, ScoreModel,
    TrainConfig,
};
use vortex_score::{FlowKind, StrainConfig};

fn main() -> vortex_score::Result<()> {
    let cfg = StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, 1.0)?;
    let grid = TimeGrid::new(2.0, 50)?;
    let batch = generate_batch(&cfg, &grid, 2.0, 1000, RngSpec::new(1))?;
    let (train_set, val_set) = split_batch(&batch, 0.8)?;
    let train_pairs = build_training_pairs(&train_set)?;
    let val_pairs = build_training_pairs(&val_set)?;
    println!("{} training pairs, {} validation pairs", train_pairs.len(), val_pairs.len());

    let norm = NormStats::from_pairs(&train_pairs)?;
    let arch = Architecture::default();
    let init = ScoreModel::init(arch, Activation::Silu, norm, grid, 11)?;
    println!("{} parameters", arch.parameter_count());

    let tc = TrainConfig { max_epochs: 10, patience: 3, seed: 12, ..TrainConfig::default() };
    let (model, report) = train(&train_pairs, &val_pairs, &tc, init)?;
    for (epoch, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
        println!("epoch {epoch:>2}: train {t:.4}  val {v:.4}");
    }
    println!("best epoch {:?}, physical validation loss {:.3}", report.best_epoch, model.loss(&val_pairs)?);

    let path = std::env::temp_dir().join("vortex-score-checkpoint.json");
    write_checkpoint(&path, &model, None)?;
    let reloaded = read_checkpoint(&path)?.into_model()?;
    assert_eq!(reloaded.params(), model.params());
    println!("checkpoint written to {}", path.display());
    Ok(())
}
