//! Score-based reconstruction of initial particle positions in Burgers-type
//! strain fields.
//!
//! Forward noisy Lagrangian trajectories are simulated under the effective
//! Fokker–Planck drift of the vorticity equation, a small time-conditioned
//! MLP is fitted to the backward drift `(x_k - x_{k+1}) / dt`, and the learned
//! drift is integrated backwards from terminal states. The relative error of
//! the recovered initial positions measures how much information each
//! direction of the strain keeps.
//!
//! Modules:
//! - [`strain`]: velocity, drift and reaction of the axisymmetric and planar fields
//! - [`forward`]: Euler–Maruyama trajectory batches with rejection of `r <= 0`
//! - [`score`]: regression pairs, the score network, backprop, Adam, training
//! - [`backward`]: the backward recursion
//! - [`oracle`]: closed-form Gaussian-chain ground truth and kernels
//! - [`eval`]: relative MAE, repeated trials, stopping rule and sweeps
//! - [`io`] and [`plot`]: files and charts
//! - [`cli`]: the `vortex-score` command line, [`checks`]: the oracle self-check

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backward;
pub mod checks;
pub mod cli;
pub mod error;
pub mod eval;
pub mod forward;
pub mod io;
pub mod oracle;
pub mod plot;
pub mod score;
pub mod strain;

pub use error::{Error, Result};
pub use strain::{Component, FlowKind, State, StrainConfig};
