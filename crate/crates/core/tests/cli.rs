use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vortex_score::io::read_results;
use vortex_score::plot::emit_svg;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex-score"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SMALL_NET: &[&str] = &[
    "--samples", "40", "--points", "12", "--epochs", "2", "--state-width", "8", "--embed-dim", "4",
    "--hidden-width", "16", "--hidden-layers", "1", "--batch-size", "64",
];

#[test]
fn generate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--nu", "1", "--s", "1", "--seed", "7", "--samples", "200", "--points", "50"];
    run(dir.path(), &[&args[..], &["-o", "a.bin"]].concat());
    run(dir.path(), &[&args[..], &["-o", "b.bin"]].concat());
    let a = fs::read(dir.path().join("a.bin")).unwrap();
    assert_eq!(a.len(), 200 * 50 * 2 * 8);
    assert_eq!(a, fs::read(dir.path().join("b.bin")).unwrap());
    let meta = |p: &str| fs::read_to_string(dir.path().join(p)).unwrap();
    assert_eq!(meta("a.bin.meta.json"), meta("b.bin.meta.json"));
}

#[test]
fn sweep_writes_two_rows_per_scale() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--nu", "0.01", "--s", "1..12", "--max-trials", "2", "-o", "r.csv"];
    args.extend_from_slice(SMALL_NET);
    run(dir.path(), &args);
    let rows = read_results(fs::File::open(dir.path().join("r.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r.nu == 0.01 && r.n_trials >= 2));
    let scales: Vec<f64> = rows.iter().step_by(2).map(|r| r.s).collect();
    assert_eq!(scales, (1..=12).map(f64::from).collect::<Vec<_>>());
}

#[test]
fn pipeline_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["generate", "--samples", "40", "--points", "12", "--seed", "3", "-o", "d.bin"]);
    let mut train = vec!["train", "--dataset", "d.bin", "-o", "c.json"];
    train.extend_from_slice(&SMALL_NET[4..]);
    run(d, &train);
    run(d, &["reconstruct", "--checkpoint", "c.json", "--dataset", "d.bin", "-o", "p.csv"]);
    let preds = fs::read_to_string(d.join("p.csv")).unwrap();
    assert_eq!(preds.lines().count(), 1 + 8);
    let out = run(d, &["evaluate", "--predictions", "p.csv", "--dataset", "d.bin"]);
    let metrics = String::from_utf8(out.stdout).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(metrics.lines().nth(1).unwrap().starts_with("axisymmetric3d,1.0,1.0,3,R,"));
}

#[test]
fn plot_writes_svg_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::copy(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/results.csv"), d.join("r.csv")).unwrap();
    run(d, &["generate", "--samples", "10", "--points", "20", "-o", "d.bin"]);
    run(d, &["plot", "r.csv", "--trajectories", "d.bin", "--count", "4"]);
    let svg = fs::read_to_string(d.join("r.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let traj = fs::read_to_string(d.join("r-trajectories.svg")).unwrap();
    assert_eq!(traj.matches("<polyline").count(), 8);
}

#[test]
fn plot_matches_golden_file() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let rows = read_results(fs::File::open(root.join("results.csv")).unwrap()).unwrap();
    let svg = emit_svg(&rows).unwrap();
    let golden = root.join("results.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &svg).unwrap();
    }
    assert_eq!(svg, fs::read_to_string(golden).unwrap());
}

#[test]
fn manifest_replay_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut args = vec!["trial", "--s", "2", "--seed", "11", "--write-manifest", "m.json", "-o", "first.csv"];
    args.extend_from_slice(SMALL_NET);
    run(d, &args);
    run(d, &["trial", "--manifest", "m.json", "-o", "a.csv"]);
    run(d, &["trial", "--manifest", "m.json", "-o", "b.csv"]);
    let read = |p: &str| fs::read(d.join(p)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv"), read("first.csv"));
}

#[test]
fn oracle_check_passes() {
    let out = bin().arg("oracle-check").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn usage_and_runtime_errors_have_distinct_statuses() {
    let status = |args: &[&str], dir: &Path| bin().current_dir(dir).args(args).output().unwrap().status.code();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(status(&["generate", "--bogus"], d), Some(2));
    assert_eq!(status(&["frobnicate"], d), Some(2));
    assert_eq!(status(&["generate", "--a=-1"], d), Some(3));
    assert_eq!(status(&["train", "--dataset", "missing.bin"], d), Some(4));
    fs::write(d.join("empty.csv"), "flow_kind,nu,s,component,n_trials,mean_rel_mae,std,se,rel_se,converged\n").unwrap();
    assert_eq!(status(&["plot", "empty.csv"], d), Some(5));
    run(d, &["generate", "--samples", "5", "--points", "5", "-o", "x.bin"]);
    let mut bytes = fs::read(d.join("x.bin")).unwrap();
    bytes.truncate(bytes.len() - 8);
    fs::write(d.join("x.bin"), bytes).unwrap();
    assert_eq!(status(&["train", "--dataset", "x.bin"], d), Some(5));
}

#[test]
fn scale_ranges_parse() {
    use vortex_score::cli::parse_scales;
    assert_eq!(parse_scales("1..4").unwrap().0, vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(parse_scales("1,8").unwrap().0, vec![1.0, 8.0]);
    assert!(parse_scales("0..3").is_err());
    assert!(parse_scales("4..1").is_err());
    assert!(parse_scales("x").is_err());
}
