//! Simulates a batch of noisy trajectories, prints the spread of the terminal
//! states and round-trips the batch through the dataset format.

use vortex_score::forward::{generate_batch, split_batch, RngSpec, TimeGrid};
use vortex_score::io::{read_dataset, write_dataset};
use vortex_score::{Component, FlowKind, StrainConfig};

fn main() -> vortex_score::Result<()> {
    let cfg = StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, 1.0)?;
    let grid = TimeGrid::new(2.0, 200)?;
    let batch = generate_batch(&cfg, &grid, 1.0, 2000, RngSpec::new(7))?;
    let x0 = batch.initial_state();
    println!("initial point ({:.4}, {:.4}), {} attempts for {} trajectories", x0.r, x0.z, batch.attempts, batch.len());

    for c in Component::BOTH {
        let end: Vec<f64> = batch.terminals().iter().map(|s| s.component(c)).collect();
        let mean = end.iter().sum::<f64>() / end.len() as f64;
        let sd = (end.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (end.len() - 1) as f64).sqrt();
        println!("{c}: start {:.3}, terminal mean {mean:.3}, sd {sd:.3}", x0.component(c));
    }

    let (train, val) = split_batch(&batch, 0.8)?;
    println!("split {} / {}", train.len(), val.len());

    let dir = std::env::temp_dir().join("vortex-score-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("forward.bin");
    let hash = write_dataset(&path, &batch)?;
    let (back, hash_back) = read_dataset(&path)?;
    assert_eq!(back.trajectories, batch.trajectories);
    assert_eq!(hash, hash_back);
    println!("dataset written to {} (sha256 {})", path.display(), &hash[..16]);
    Ok(())
}
