//! Self-contained analytic-oracle property suite, exposed on the command line
//! as `oracle-check`.

use crate::forward::{generate_batch, RngSpec, TimeGrid};
use crate::oracle::{finite_diff_grad, frozen_transition_density, gaussian_log_density, gaussian_score, GaussianChain};
use crate::strain::{FlowKind, State, StrainConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn planar() -> Result<StrainConfig> {
    StrainConfig::new(FlowKind::Planar2D, 1.0, 1.0)
}

fn moments(seed: u64) -> Result<CheckOutcome> {
    let cfg = planar()?;
    let grid = TimeGrid::new(2.0, 200)?;
    let n = 10_000;
    let batch = generate_batch(&cfg, &grid, 1.0, n, RngSpec::new(seed))?;
    let chain = GaussianChain::planar(&cfg, &grid, batch.initial_state())?;
    let mut worst: f64 = 0.0;
    for k in [10, 100, grid.points() - 1] {
        let (mean, var) = chain.marginal(k)?;
        for c in 0..2 {
            let xs: Vec<f64> = batch.trajectories.iter().map(|t| t.states[k].to_array()[c]).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            worst = worst
                .max((m - mean[c]).abs() / (var[c] / n as f64).sqrt())
                .max((v - var[c]).abs() / (var[c] * (2.0 / (n as f64 - 1.0)).sqrt()));
        }
    }
    Ok(CheckOutcome::new(
        "marginal moments within 3 SE",
        worst <= 3.0,
        format!("worst deviation {worst:.3} SE"),
    ))
}

fn divergence() -> Result<CheckOutcome> {
    let grid = TimeGrid::new(2.0, 200)?;
    let chain = GaussianChain::planar(&planar()?, &grid, State::new(54.6, 1.0))?;
    let div = chain.posterior_drift_divergence(0)?;
    let expected = -2.0 / grid.dt();
    Ok(CheckOutcome::new(
        "delta-prior divergence equals -2/dt",
        div == expected,
        format!("{div} vs {expected}"),
    ))
}

fn kernel_mass() -> Result<CheckOutcome> {
    let cfg = StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, 1.0)?;
    let x = State::new(1.0, 0.5);
    let dt = 0.01;
    let (br, bz) = cfg.drift(x)?;
    let sd = (cfg.sigma().powi(2) * dt).sqrt();
    let n = 400;
    let half = 10.0 * sd;
    let h = 2.0 * half / n as f64;
    let mut mass = 0.0;
    for i in 0..=n {
        let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
        for j in 0..=n {
            let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
            let y = State::new(x.r + br * dt - half + i as f64 * h, x.z + bz * dt - half + j as f64 * h);
            mass += wi * wj * frozen_transition_density(&cfg, x, y, dt)?;
        }
    }
    mass *= h * h;
    let expected = (cfg.reaction(x)? * dt).exp();
    Ok(CheckOutcome::new(
        "frozen kernel integrates to exp(S dt)",
        (mass - expected).abs() <= 1e-6,
        format!("{mass:.12} vs {expected:.12}"),
    ))
}

fn score_consistency() -> Result<CheckOutcome> {
    let grid = TimeGrid::new(2.0, 200)?;
    let chain = GaussianChain::planar(&planar()?, &grid, State::new(54.6, 1.0))?;
    let (mean, var) = chain.marginal(50)?;
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        let x = mean[c] + 0.7 * var[c].sqrt();
        let fd = finite_diff_grad(|p| gaussian_log_density(mean[c], var[c], p[0]).unwrap_or(f64::NAN), &[x], 1e-4 * var[c].sqrt())[0];
        worst = worst.max((fd - gaussian_score(mean[c], var[c], x)?).abs());
    }
    Ok(CheckOutcome::new(
        "finite-difference log density matches score",
        worst <= 1e-6,
        format!("max abs difference {worst:.2e}"),
    ))
}

fn heat_kernel() -> Result<CheckOutcome> {
    let (nu, dt, eps) = (1.0f64, 0.01f64, 0.7f64);
    let x_tilde = (2.0 * nu * dt).sqrt() * eps;
    let lhs = 2.0 * nu * gaussian_score(0.0, 2.0 * nu * dt, x_tilde)?;
    let rhs = -(2.0 * nu / dt).sqrt() * eps;
    Ok(CheckOutcome::new(
        "heat-kernel score identity",
        (lhs - rhs).abs() <= 1e-12 * rhs.abs(),
        format!("{lhs} vs {rhs}"),
    ))
}

/// Runs every check; Monte Carlo checks use `seed`.
pub fn oracle_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![moments(seed)?, divergence()?, kernel_mass()?, score_consistency()?, heat_kernel()?])
}
