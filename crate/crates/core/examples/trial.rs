//! One end-to-end trial in the axisymmetric field, plus its manifest.

use vortex_score::eval::{run_trial, ExperimentConfig, StopRule};
use vortex_score::forward::TimeGrid;
use vortex_score::io::{write_metrics, MetricsRow, RunManifest};
use vortex_score::FlowKind;

fn main() -> vortex_score::Result<()> {
    let s: f64 = std::env::args().nth(1).map_or(Ok(4.0), |v| v.parse()).expect("scale must be a number");
    let mut exp = ExperimentConfig::standard(FlowKind::Axisymmetric3D, 1.0)?;
    exp.samples = 2000;
    exp.grid = TimeGrid::new(2.0, 100)?;
    exp.train.max_epochs = 3;

    let manifest = RunManifest::new(exp, vec![s], 42, StopRule::default());
    let path = std::env::temp_dir().join("vortex-score-trial.json");
    manifest.write(&path)?;
    println!("manifest: {}", path.display());

    let out = run_trial(s, &exp, manifest.base_seed)?;
    println!(
        "{} epochs, {} excursions through r <= 0, {:.1}s",
        out.report.epochs_run(),
        out.radial_excursions,
        out.r.runtime_secs
    );
    let rows: Vec<MetricsRow> = vec![(&out.r).into(), (&out.z).into()];
    write_metrics(std::io::stdout().lock(), &rows)
}
