//! Reconstruction metrics, repeated-trial statistics and the scale sweep.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backward::{reconstruct, BackwardDrift};
use crate::error::{Error, Result};
use crate::forward::{generate_batch, split_batch, RngSpec, TimeGrid, Trajectory};
use crate::oracle::GaussianChain;
use crate::score::{build_training_pairs, train, Activation, Architecture, NormStats, ScoreModel, TrainConfig, TrainingPair, TrainingReport};
use crate::strain::{Component, FlowKind, State, StrainConfig};

/// Mean over trajectories of `|x0 - x0_hat| / sum_k |x_{k+1} - x_k|` in one
/// component.
pub fn relative_mae(true_x0: State, predicted: &[State], trajectories: &[Trajectory], component: Component) -> Result<f64> {
    if predicted.len() != trajectories.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} trajectories",
            predicted.len(),
            trajectories.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument("relative MAE of an empty set".into()));
    }
    let x0 = true_x0.component(component);
    let mut total = 0.0;
    for (index, (p, t)) in predicted.iter().zip(trajectories).enumerate() {
        let denom = t.displacement(component);
        if !(denom > 0.0) {
            return Err(Error::DegenerateDenominator { index });
        }
        total += (x0 - p.component(component)).abs() / denom;
    }
    Ok(total / predicted.len() as f64)
}

/// `sqrt(sum |v - v_ref|^2 / sum |v_ref|^2)` over `(state, step)` points.
pub fn relative_rms_error(
    drift: &impl BackwardDrift,
    reference: &impl BackwardDrift,
    points: &[(State, usize)],
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, k) in points {
        let a = drift.drift(x, k)?;
        let b = reference.drift(x, k)?;
        num += (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        den += b[0] * b[0] + b[1] * b[1];
    }
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("reference drift vanishes on every point".into()));
    }
    Ok((num / den).sqrt())
}

/// Pairs whose `x_{k+1}` lies within `max_std` marginal standard deviations of
/// the chain mean in both components.
pub fn bulk_points(chain: &GaussianChain, pairs: &[TrainingPair], max_std: f64) -> Result<Vec<(State, usize)>> {
    let mut out = Vec::new();
    for p in pairs {
        let (mean, var) = chain.marginal(p.k + 1)?;
        let x = p.x_next.to_array();
        if (0..2).all(|c| (x[c] - mean[c]).abs() <= max_std * var[c].sqrt()) {
            out.push((p.x_next, p.k));
        }
    }
    Ok(out)
}

/// Everything needed to run one trial besides the scale and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strain: StrainConfig,
    pub grid: TimeGrid,
    pub samples: usize,
    pub train_fraction: f64,
    pub architecture: Architecture,
    pub activation: Activation,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// `a = 1`, `T = 2`, `L = 200`, `N = 10^4`, 80/20 split and the default
    /// network and optimizer.
    pub fn standard(kind: FlowKind, nu: f64) -> Result<Self> {
        Ok(Self {
            strain: StrainConfig::new(kind, 1.0, nu)?,
            grid: TimeGrid::new(2.0, 200)?,
            samples: 10_000,
            train_fraction: 0.8,
            architecture: Architecture::default(),
            activation: Activation::Silu,
            train: TrainConfig::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub kind: FlowKind,
    pub s: f64,
    pub nu: f64,
    pub component: Component,
    pub rel_mae: f64,
    pub seed: u64,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub r: TrialResult,
    pub z: TrialResult,
    pub model: ScoreModel,
    pub report: TrainingReport,
    pub predicted_x0: Vec<State>,
    pub radial_excursions: usize,
}

/// Added to a trial seed to key the network initialization.
pub const INIT_SEED_OFFSET: u64 = 0x5EED_0000_0000_0001;
/// Added to a trial seed to key the minibatch order.
pub const SHUFFLE_SEED_OFFSET: u64 = 0x5EED_0000_0000_0002;

/// Data generation, training and validation-set reconstruction for one seed.
///
/// The seed drives the forward noise, the network initialization and the
/// minibatch order through independent keys.
pub fn run_trial(s: f64, exp: &ExperimentConfig, seed: u64) -> Result<TrialOutcome> {
    run_trial_inner(s, exp, seed).map_err(|e| Error::Trial {
        s,
        seed,
        source: Box::new(e),
    })
}

fn run_trial_inner(s: f64, exp: &ExperimentConfig, seed: u64) -> Result<TrialOutcome> {
    let start = Instant::now();
    let batch = generate_batch(&exp.strain, &exp.grid, s, exp.samples, RngSpec::new(seed))?;
    let (train_set, val_set) = split_batch(&batch, exp.train_fraction)?;
    let train_pairs = build_training_pairs(&train_set)?;
    let val_pairs = build_training_pairs(&val_set)?;
    let norm = NormStats::from_pairs(&train_pairs)?;
    let init = ScoreModel::init(
        exp.architecture,
        exp.activation,
        norm,
        exp.grid,
        seed.wrapping_add(INIT_SEED_OFFSET),
    )?;
    let train_cfg = TrainConfig {
        seed: seed.wrapping_add(SHUFFLE_SEED_OFFSET),
        ..exp.train
    };
    let (model, report) = train(&train_pairs, &val_pairs, &train_cfg, init)?;
    let recon = reconstruct(&model, &val_set.terminals())?;
    let x0 = batch.initial_state();
    let runtime_secs = start.elapsed().as_secs_f64();
    let result = |component| -> Result<TrialResult> {
        Ok(TrialResult {
            kind: exp.strain.kind(),
            s,
            nu: exp.strain.nu(),
            component,
            rel_mae: relative_mae(x0, &recon.predicted_x0, &val_set.trajectories, component)?,
            seed,
            runtime_secs,
        })
    };
    Ok(TrialOutcome {
        r: result(Component::R)?,
        z: result(Component::Z)?,
        model,
        report,
        predicted_x0: recon.predicted_x0,
        radial_excursions: recon.radial_excursions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StopTarget {
    /// Both components must reach the target relative standard error.
    #[default]
    Both,
    Either,
    ROnly,
    ZOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub target_rel_se: f64,
    pub max_trials: usize,
    pub target: StopTarget,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            target_rel_se: 0.06,
            max_trials: 80,
            target: StopTarget::Both,
        }
    }
}

/// Summary of repeated trials in one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_trials: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
    pub se: f64,
    pub rel_se: f64,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 trials for a spread, got {n}")));
        }
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let std = var.sqrt();
        let se = std / nf.sqrt();
        let rel_se = if se == 0.0 { 0.0 } else { se / mean.abs() };
        Ok(Self { n_trials: n, mean, std, se, rel_se })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStatistics {
    pub kind: FlowKind,
    pub nu: f64,
    pub s: f64,
    pub component: Component,
    pub summary: Summary,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub r: Summary,
    pub z: Summary,
    /// The relative standard error target was met before the trial cap.
    pub converged: bool,
    /// `(seed, rel_mae_r, rel_mae_z)` in seed order.
    pub trials: Vec<(u64, f64, f64)>,
}

impl StopRule {
    fn satisfied(&self, r: &Summary, z: &Summary) -> bool {
        let ok = |s: &Summary| s.rel_se <= self.target_rel_se;
        match self.target {
            StopTarget::Both => ok(r) && ok(z),
            StopTarget::Either => ok(r) || ok(z),
            StopTarget::ROnly => ok(r),
            StopTarget::ZOnly => ok(z),
        }
    }
}

/// Runs `trial(seed)` for seeds `base_seed, base_seed + 1, ...` until the
/// relative standard error of the mean drops to the target or the cap is hit.
/// Stopping is decided on the seed-ordered prefix only.
pub fn run_until_converged_with(
    rule: &StopRule,
    base_seed: u64,
    mut trial: impl FnMut(u64) -> Result<(f64, f64)>,
) -> Result<Convergence> {
    if rule.max_trials < 2 {
        return Err(Error::InvalidArgument(format!("max_trials must be at least 2, got {}", rule.max_trials)));
    }
    let mut trials = Vec::new();
    let (mut rs, mut zs) = (Vec::new(), Vec::new());
    loop {
        let seed = base_seed.wrapping_add(trials.len() as u64);
        let (r, z) = trial(seed)?;
        trials.push((seed, r, z));
        rs.push(r);
        zs.push(z);
        if trials.len() < 2 {
            continue;
        }
        let sr = Summary::from_values(&rs)?;
        let sz = Summary::from_values(&zs)?;
        let converged = rule.satisfied(&sr, &sz);
        if converged || trials.len() >= rule.max_trials {
            return Ok(Convergence { r: sr, z: sz, converged, trials });
        }
    }
}

pub fn run_until_converged(s: f64, exp: &ExperimentConfig, rule: &StopRule, base_seed: u64) -> Result<Convergence> {
    run_until_converged_with(rule, base_seed, |seed| {
        let out = run_trial(s, exp, seed)?;
        Ok((out.r.rel_mae, out.z.rel_mae))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s: f64,
    pub outcome: std::result::Result<Convergence, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: FlowKind,
    pub nu: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Two statistics per successful scale, R before Z.
    pub fn statistics(&self) -> Vec<TrialStatistics> {
        let mut out = Vec::new();
        for row in &self.rows {
            if let Ok(c) = &row.outcome {
                for (component, summary) in [(Component::R, c.r), (Component::Z, c.z)] {
                    out.push(TrialStatistics {
                        kind: self.kind,
                        nu: self.nu,
                        s: row.s,
                        component,
                        summary,
                        converged: c.converged,
                    });
                }
            }
        }
        out
    }
}

/// Sweep driver with an injectable trial; failures at one scale are recorded
/// and the sweep moves on.
pub fn sweep_with(
    kind: FlowKind,
    nu: f64,
    s_values: &[f64],
    rule: &StopRule,
    base_seed: u64,
    mut trial: impl FnMut(f64, u64) -> Result<(f64, f64)>,
) -> Result<SweepResult> {
    if s_values.is_empty() {
        return Err(Error::InvalidArgument("empty scale list".into()));
    }
    if let Some(bad) = s_values.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument(format!("scale parameters must be positive, got {bad}")));
    }
    let rows = s_values
        .iter()
        .map(|&s| SweepRow {
            s,
            outcome: run_until_converged_with(rule, base_seed, |seed| trial(s, seed)).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(SweepResult { kind, nu, rows })
}

pub fn sweep(s_values: &[f64], exp: &ExperimentConfig, rule: &StopRule, base_seed: u64) -> Result<SweepResult> {
    sweep_with(exp.strain.kind(), exp.strain.nu(), s_values, rule, base_seed, |s, seed| {
        let out = run_trial(s, exp, seed)?;
        Ok((out.r.rel_mae, out.z.rel_mae))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(rs: &[f64]) -> Trajectory {
        Trajectory {
            states: rs.iter().map(|&r| State::new(r, r)).collect(),
        }
    }

    #[test]
    fn mae_examples() {
        let t = traj(&[2.0, 4.0, 1.0]);
        assert_eq!(relative_mae(State::new(2.0, 2.0), &[State::new(2.0, 2.0)], std::slice::from_ref(&t), Component::R).unwrap(), 0.0);
        // |2 - 1.5| / (2 + 3)
        let v = relative_mae(State::new(2.0, 0.0), &[State::new(1.5, 0.0)], &[t], Component::R).unwrap();
        assert!((v - 0.1).abs() < 1e-15);

        let ts = vec![traj(&[0.0, 1.0]), traj(&[0.0, 1.0])];
        let preds = [State::new(0.1, 0.0), State::new(-0.3, 0.0)];
        let v = relative_mae(State::new(0.0, 0.0), &preds, &ts, Component::R).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mae_errors() {
        let flat = traj(&[1.0, 1.0, 1.0]);
        let err = relative_mae(State::new(1.0, 1.0), &[State::new(1.0, 1.0)], &[flat], Component::Z).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { index: 0 }));
        assert!(relative_mae(State::default(), &[], &[traj(&[0.0, 1.0])], Component::R).is_err());
    }

    #[test]
    fn summary_matches_two_pass() {
        let v = [0.3, 0.5, 0.45, 0.61, 0.2];
        let s = Summary::from_values(&v).unwrap();
        let mean = (0.3 + 0.5 + 0.45 + 0.61 + 0.2) / 5.0;
        let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
        let std = (ss / 4.0).sqrt();
        assert!((s.mean - mean).abs() < 1e-15);
        assert!((s.std - std).abs() < 1e-15);
        assert!((s.se - std / 5f64.sqrt()).abs() < 1e-15);
        assert!((s.rel_se - std / 5f64.sqrt() / mean).abs() < 1e-15);
        assert!(Summary::from_values(&[1.0]).is_err());
    }

    #[test]
    fn identical_values_stop_at_two() {
        let c = run_until_converged_with(&StopRule::default(), 10, |_| Ok((0.4, 0.1))).unwrap();
        assert_eq!(c.trials.len(), 2);
        assert!(c.converged);
        assert_eq!(c.r.rel_se, 0.0);
        assert_eq!(c.trials[1].0, 11);
    }

    #[test]
    fn cap_reports_non_convergence() {
        let rule = StopRule { max_trials: 15, ..StopRule::default() };
        // heavy tail: every value dwarfs the running mean
        let c = run_until_converged_with(&rule, 0, |seed| {
            let v = 10f64.powi(seed as i32);
            Ok((v, v))
        })
        .unwrap();
        assert_eq!(c.trials.len(), 15);
        assert!(!c.converged);
        assert!(run_until_converged_with(&StopRule { max_trials: 1, ..rule }, 0, |_| Ok((1.0, 1.0))).is_err());
    }

    #[test]
    fn stop_target_variants() {
        let mut n = 0;
        let rule = StopRule { target: StopTarget::ZOnly, max_trials: 40, ..StopRule::default() };
        let c = run_until_converged_with(&rule, 0, |_| {
            n += 1;
            let wobble = if n % 2 == 0 { 1.0 } else { -1.0 };
            Ok((1.0 + 0.9 * wobble, 1.0))
        })
        .unwrap();
        assert_eq!(c.trials.len(), 2);
        assert!(c.r.rel_se > 0.06);
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let rule = StopRule { max_trials: 3, ..StopRule::default() };
        let res = sweep_with(FlowKind::Planar2D, 1.0, &[1.0, 2.0, 3.0], &rule, 0, |s, seed| {
            if s == 2.0 {
                Err(Error::ModelDivergence("boom".into()))
            } else {
                Ok((s + seed as f64, 0.5))
            }
        })
        .unwrap();
        assert_eq!(res.rows.len(), 3);
        assert!(res.rows[1].outcome.is_err());
        let stats = res.statistics();
        assert_eq!(stats.len(), 4);
        assert_eq!(stats[0].component, Component::R);
        assert_eq!(stats[2].s, 3.0);
        assert!(sweep_with(FlowKind::Planar2D, 1.0, &[], &rule, 0, |_, _| Ok((1.0, 1.0))).is_err());
        assert!(sweep_with(FlowKind::Planar2D, 1.0, &[0.0], &rule, 0, |_, _| Ok((1.0, 1.0))).is_err());
    }

    #[test]
    fn singleton_sweep_equals_direct_run() {
        let rule = StopRule { max_trials: 6, ..StopRule::default() };
        let f = |s: f64, seed: u64| Ok((s * (1.0 + (seed as f64).sin()), 0.3 + 0.01 * seed as f64));
        let sw = sweep_with(FlowKind::Axisymmetric3D, 1.0, &[4.0], &rule, 7, f).unwrap();
        let direct = run_until_converged_with(&rule, 7, |seed| f(4.0, seed)).unwrap();
        assert_eq!(sw.rows[0].outcome.as_ref().unwrap(), &direct);
    }
}
