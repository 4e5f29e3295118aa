//! Closed-form ground truth used to verify the pipeline.
//!
//! For the planar flow the forward recursion is linear in each component,
//! `x_{k+1} = c x_k + N(0, q)` with `c = 1 + beta dt` and `q = sigma^2 dt`.
//! Starting from a point mass every marginal is Gaussian, and the least-squares
//! minimizer of the backward-drift regression is the posterior mean
//! `(E[x_k | x_{k+1}] - x_{k+1}) / dt`, available by Gaussian conjugacy.
//!
//! The axisymmetric drift is nonlinear in `r`; there only the short-time
//! frozen-coefficient kernel is provided.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::forward::TimeGrid;
use crate::strain::{FlowKind, State, StrainConfig};

/// Linear-Gaussian recursion in one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearChain {
    /// Per-step multiplier.
    pub c: f64,
    /// Per-step noise variance.
    pub q: f64,
    pub x0: f64,
}

impl LinearChain {
    pub fn new(c: f64, q: f64, x0: f64) -> Self {
        Self { c, q, x0 }
    }

    /// Mean `x0 c^k` and variance `q sum_{j<k} c^{2j}`.
    pub fn marginal(&self, k: usize) -> (f64, f64) {
        let mut mean = self.x0;
        let mut var = 0.0;
        for _ in 0..k {
            mean *= self.c;
            var = self.c * self.c * var + self.q;
        }
        (mean, var)
    }

    /// Posterior mean `E[x_k | x_{k+1}]`.
    pub fn posterior_mean(&self, k: usize, x_next: f64) -> f64 {
        let (mean, var) = self.marginal(k);
        conjugate_posterior_mean(mean, var, self.c, self.q, x_next)
    }

    /// `d E[x_k | x_{k+1}] / d x_{k+1}`.
    pub fn posterior_gain(&self, k: usize) -> f64 {
        let (_, var) = self.marginal(k);
        if var == 0.0 {
            0.0
        } else {
            self.c * var / (self.c * self.c * var + self.q)
        }
    }
}

/// Posterior mean of `x ~ N(prior_mean, prior_var)` after observing
/// `y = c x + N(0, q)`.
pub fn conjugate_posterior_mean(prior_mean: f64, prior_var: f64, c: f64, q: f64, y: f64) -> f64 {
    if prior_var == 0.0 {
        return prior_mean;
    }
    let gain = c * prior_var / (c * c * prior_var + q);
    prior_mean + gain * (y - c * prior_mean)
}

/// Independent linear chains for the two components of the planar flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChain {
    pub r: LinearChain,
    pub z: LinearChain,
    pub dt: f64,
    pub points: usize,
}

impl GaussianChain {
    /// Exact chain of the planar Euler–Maruyama recursion on `grid`.
    pub fn planar(cfg: &StrainConfig, grid: &TimeGrid, x0: State) -> Result<Self> {
        if cfg.kind() != FlowKind::Planar2D {
            return Err(Error::InvalidArgument(
                "the exact Gaussian chain exists only for the planar flow".into(),
            ));
        }
        let dt = grid.dt();
        let q = cfg.sigma().powi(2) * dt;
        Ok(Self {
            r: LinearChain::new(1.0 - 2.0 * cfg.a() * dt, q, x0.r),
            z: LinearChain::new(1.0 + 2.0 * cfg.a() * dt, q, x0.z),
            dt,
            points: grid.points(),
        })
    }

    fn check_index(&self, k: usize, max: usize) -> Result<()> {
        if k > max {
            return Err(Error::IndexOutOfRange { index: k, max });
        }
        Ok(())
    }

    /// Per-component `(mean, variance)` of `x_k`.
    pub fn marginal(&self, k: usize) -> Result<([f64; 2], [f64; 2])> {
        self.check_index(k, self.points - 1)?;
        let (mr, vr) = self.r.marginal(k);
        let (mz, vz) = self.z.marginal(k);
        Ok(([mr, mz], [vr, vz]))
    }

    /// Exact conditional expectation of `(x_k - x_{k+1}) / dt` given `x_{k+1}`.
    pub fn posterior_mean_drift(&self, k: usize, x_next: State) -> Result<[f64; 2]> {
        self.check_index(k, self.points - 2)?;
        Ok([
            (self.r.posterior_mean(k, x_next.r) - x_next.r) / self.dt,
            (self.z.posterior_mean(k, x_next.z) - x_next.z) / self.dt,
        ])
    }

    /// Spatial derivative of each drift component with respect to its own
    /// coordinate. The drift is affine, so this is exact.
    pub fn posterior_drift_slope(&self, k: usize) -> Result<[f64; 2]> {
        self.check_index(k, self.points - 2)?;
        Ok([
            (self.r.posterior_gain(k) - 1.0) / self.dt,
            (self.z.posterior_gain(k) - 1.0) / self.dt,
        ])
    }

    /// Divergence of the posterior-mean backward drift at step `k`.
    pub fn posterior_drift_divergence(&self, k: usize) -> Result<f64> {
        let [sr, sz] = self.posterior_drift_slope(k)?;
        Ok(sr + sz)
    }
}

/// Score `-(x - mean) / variance` of a one-dimensional Gaussian.
pub fn gaussian_score(mean: f64, variance: f64, x: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::DegenerateVariance(variance));
    }
    Ok(-(x - mean) / variance)
}

pub fn gaussian_log_density(mean: f64, variance: f64, x: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::DegenerateVariance(variance));
    }
    Ok(-0.5 * (2.0 * PI * variance).ln() - (x - mean).powi(2) / (2.0 * variance))
}

/// Short-time frozen-coefficient kernel
/// `e^{S(x) dt} prod_i N(x~_i; x_i + b_i(x) dt, sigma^2 dt)`.
///
/// The reaction factor multiplies the two-dimensional density once.
pub fn frozen_transition_density(cfg: &StrainConfig, x: State, x_tilde: State, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let (br, bz) = cfg.drift(x)?;
    let s = cfg.reaction(x)?;
    let var = cfg.sigma().powi(2) * dt;
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance(var));
    }
    let dr = x_tilde.r - x.r - br * dt;
    let dz = x_tilde.z - x.z - bz * dt;
    Ok((s * dt).exp() / (2.0 * PI * var) * (-(dr * dr + dz * dz) / (2.0 * var)).exp())
}

/// Central-difference gradient of `f` at `x`.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
