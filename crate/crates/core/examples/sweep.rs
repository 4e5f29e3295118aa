//! A reduced sweep over scales with the relative-SE stopping rule.

use vortex_score::eval::{sweep, ExperimentConfig, StopRule};
use vortex_score::forward::TimeGrid;
use vortex_score::io::{write_results, ResultRow};
use vortex_score::score::Architecture;
use vortex_score::FlowKind;

fn main() -> vortex_score::Result<()> {
    let mut exp = ExperimentConfig::standard(FlowKind::Axisymmetric3D, 1.0)?;
    exp.samples = 300;
    exp.grid = TimeGrid::new(2.0, 40)?;
    exp.architecture = Architecture { state_width: 16, embed_dim: 8, hidden_width: 32, hidden_layers: 2 };
    exp.train.max_epochs = 5;
    exp.train.batch_size = 256;
    let rule = StopRule { target_rel_se: 0.1, max_trials: 8, ..StopRule::default() };

    let result = sweep(&[1.0, 4.0, 8.0], &exp, &rule, 0)?;
    for row in &result.rows {
        match &row.outcome {
            Ok(c) => println!(
                "s={}: {} trials, R {:.4} (rel SE {:.3}), Z {:.4} (rel SE {:.3}), converged {}",
                row.s,
                c.trials.len(),
                c.r.mean,
                c.r.rel_se,
                c.z.mean,
                c.z.rel_se,
                c.converged
            ),
            Err(e) => println!("s={}: failed: {e}", row.s),
        }
    }
    let rows: Vec<ResultRow> = result.statistics().iter().map(ResultRow::from).collect();
    write_results(std::io::stdout().lock(), &rows)
}
