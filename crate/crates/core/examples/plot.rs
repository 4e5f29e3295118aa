//! Charts: relative MAE against scale, and example trajectories with their
//! reconstructed starting points.

use vortex_score::eval::{run_trial, ExperimentConfig};
use vortex_score::forward::{generate_batch, split_batch, RngSpec, TimeGrid};
use vortex_score::io::ResultRow;
use vortex_score::plot::{emit_svg, emit_trajectory_svg};
use vortex_score::FlowKind;

fn row(s: f64, component: &str, mean: f64, std: f64) -> ResultRow {
    ResultRow {
        flow_kind: "axisymmetric3d".into(),
        nu: 1.0,
        s,
        component: component.into(),
        n_trials: 10,
        mean_rel_mae: mean,
        std,
        se: std / 10f64.sqrt(),
        rel_se: std / 10f64.sqrt() / mean,
        converged: true,
    }
}

fn main() -> vortex_score::Result<()> {
    let dir = std::env::temp_dir().join("vortex-score-plots");
    std::fs::create_dir_all(&dir)?;

    let rows: Vec<ResultRow> = [1.0, 4.0, 8.0, 12.0]
        .iter()
        .flat_map(|&s| [row(s, "R", 0.9 - 0.02 * s, 0.08), row(s, "Z", 0.15 / s, 0.02)])
        .collect();
    std::fs::write(dir.join("results.svg"), emit_svg(&rows)?)?;

    let mut exp = ExperimentConfig::standard(FlowKind::Axisymmetric3D, 1.0)?;
    exp.samples = 500;
    exp.grid = TimeGrid::new(2.0, 100)?;
    exp.train.max_epochs = 3;
    let out = run_trial(1.0, &exp, 5)?;
    let batch = generate_batch(&exp.strain, &exp.grid, 1.0, exp.samples, RngSpec::new(5))?;
    let (_, val) = split_batch(&batch, exp.train_fraction)?;
    std::fs::write(
        dir.join("trajectories.svg"),
        emit_trajectory_svg(&val, 12, Some(&out.predicted_x0))?,
    )?;
    println!("charts written to {}", dir.display());
    Ok(())
}
