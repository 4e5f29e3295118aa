//! Learned backward recursion `x_k = x_{k+1} + v(x_{k+1}, k) dt`, run from
//! terminal states down to predicted initial positions. No noise is injected
//! and no domain projection is applied on the way back.

use crate::error::{Error, Result};
use crate::forward::TimeGrid;
use crate::oracle::GaussianChain;
use crate::score::ScoreModel;
use crate::strain::State;

/// Anything that can supply the backward drift `v(x_{k+1}, k)`.
pub trait BackwardDrift {
    fn grid(&self) -> TimeGrid;

    fn drift(&self, x_next: State, k: usize) -> Result<[f64; 2]>;

    /// Drift for many states at one step.
    fn drift_batch(&self, states: &[State], k: usize) -> Result<Vec<[f64; 2]>> {
        states.iter().map(|&s| self.drift(s, k)).collect()
    }
}

impl BackwardDrift for ScoreModel {
    fn grid(&self) -> TimeGrid {
        *ScoreModel::grid(self)
    }

    fn drift(&self, x_next: State, k: usize) -> Result<[f64; 2]> {
        self.forward(x_next, k)
    }

    fn drift_batch(&self, states: &[State], k: usize) -> Result<Vec<[f64; 2]>> {
        self.forward_batch(states, k)
    }
}

/// The exact posterior-mean drift of the planar Gaussian chain.
impl BackwardDrift for GaussianChain {
    fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.dt * (self.points - 1) as f64, self.points).expect("chain built from a valid grid")
    }

    fn drift(&self, x_next: State, k: usize) -> Result<[f64; 2]> {
        self.posterior_mean_drift(k, x_next)
    }
}

/// One backward step with the drift provider's grid spacing.
pub fn backward_step(drift: &impl BackwardDrift, x_next: State, k: usize) -> Result<State> {
    let v = drift.drift(x_next, k)?;
    Ok(apply_step(x_next, v, drift.grid().dt()))
}

fn apply_step(x_next: State, v: [f64; 2], dt: f64) -> State {
    State::new(x_next.r + v[0] * dt, x_next.z + v[1] * dt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub predicted_x0: Vec<State>,
    /// Index of each terminal in the evaluated batch.
    pub source_indices: Vec<usize>,
    /// Number of predicted positions that passed through `r <= 0` on the way
    /// back. Recorded only; nothing is clamped.
    pub radial_excursions: usize,
}

/// Runs steps `k = L-2, ..., 0` from every terminal state.
pub fn reconstruct(drift: &impl BackwardDrift, terminals: &[State]) -> Result<ReconstructionResult> {
    let grid = drift.grid();
    let dt = grid.dt();
    let mut xs = terminals.to_vec();
    let mut crossed = vec![false; xs.len()];
    for k in (0..grid.steps()).rev() {
        let v = drift.drift_batch(&xs, k).map_err(|e| locate(drift, &xs, k, e))?;
        for ((x, v), c) in xs.iter_mut().zip(v).zip(&mut crossed) {
            *x = apply_step(*x, v, dt);
            *c |= x.r <= 0.0;
        }
    }
    if let Some(index) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::Reconstruction {
            index,
            source: Box::new(Error::ModelDivergence("non-finite predicted initial state".into())),
        });
    }
    Ok(ReconstructionResult {
        predicted_x0: xs,
        source_indices: (0..terminals.len()).collect(),
        radial_excursions: crossed.iter().filter(|&&c| c).count(),
    })
}

/// Attributes a batched failure to the first terminal that fails on its own.
fn locate(drift: &impl BackwardDrift, xs: &[State], k: usize, err: Error) -> Error {
    let index = xs.iter().position(|&x| drift.drift(x, k).is_err()).unwrap_or(0);
    Error::Reconstruction {
        index,
        source: Box::new(err),
    }
}
