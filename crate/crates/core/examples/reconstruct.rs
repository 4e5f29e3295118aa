//! Backward reconstruction on the planar flow, with the exact posterior-mean
//! drift and with a trained network side by side.

use vortex_score::backward::reconstruct;
use vortex_score::eval::{relative_mae, run_trial, ExperimentConfig};
use vortex_score::forward::{generate_batch, split_batch, RngSpec, TimeGrid};
use vortex_score::oracle::GaussianChain;
use vortex_score::{Component, FlowKind};

fn main() -> vortex_score::Result<()> {
    let mut exp = ExperimentConfig::standard(FlowKind::Planar2D, 1.0)?;
    exp.samples = 1000;
    exp.grid = TimeGrid::new(2.0, 100)?;
    exp.train.max_epochs = 5;
    let seed = 3;

    let batch = generate_batch(&exp.strain, &exp.grid, 1.0, exp.samples, RngSpec::new(seed))?;
    let (_, val) = split_batch(&batch, exp.train_fraction)?;
    let x0 = batch.initial_state();

    let chain = GaussianChain::planar(&exp.strain, &exp.grid, x0)?;
    let exact = reconstruct(&chain, &val.terminals())?;
    let learned = run_trial(1.0, &exp, seed)?;

    println!("true initial point ({:.4}, {:.4})", x0.r, x0.z);
    for (i, (e, l)) in exact.predicted_x0.iter().zip(&learned.predicted_x0).take(5).enumerate() {
        println!("  #{i}: oracle ({:.4}, {:.4})  network ({:.4}, {:.4})", e.r, e.z, l.r, l.z);
    }
    for c in Component::BOTH {
        println!(
            "{c}: relative MAE oracle {:.2e}, network {:.4}",
            relative_mae(x0, &exact.predicted_x0, &val.trajectories, c)?,
            relative_mae(x0, &learned.predicted_x0, &val.trajectories, c)?
        );
    }
    Ok(())
}
