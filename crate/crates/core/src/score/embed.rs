use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::TimeGrid;

/// Sinusoidal embedding of physical time, laid out as interleaved
/// `[sin(w_1 t), cos(w_1 t), sin(w_2 t), cos(w_2 t), ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEmbedding {
    frequencies: Vec<f64>,
}

impl TimeEmbedding {
    pub fn from_frequencies(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("embedding frequencies must be positive and finite".into()));
        }
        Ok(Self { frequencies })
    }

    /// Geometric frequencies `10000^(-2j/dim) / dt`, i.e. the usual transformer
    /// embedding of the integer step index. The fastest period spans `2 pi`
    /// steps and the slowest is far longer than the whole grid.
    pub fn geometric(dim: usize, grid: &TimeGrid) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("embedding dimension must be even and positive, got {dim}")));
        }
        let half = dim / 2;
        let freqs = (0..half)
            .map(|j| 10000f64.powf(-2.0 * j as f64 / dim as f64) / grid.dt())
            .collect();
        Self::from_frequencies(freqs)
    }

    pub fn dim(&self) -> usize {
        2 * self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn embed_time(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        for (pair, w) in out.chunks_exact_mut(2).zip(&self.frequencies) {
            let (s, c) = (w * t).sin_cos();
            pair[0] = s;
            pair[1] = c;
        }
    }

    /// Embedding of step `k`, valid for `0 <= k <= L - 2`.
    pub fn embed(&self, k: usize, grid: &TimeGrid) -> Result<Vec<f64>> {
        let max = grid.points() - 2;
        if k > max {
            return Err(Error::IndexOutOfRange { index: k, max });
        }
        let mut out = vec![0.0; self.dim()];
        self.embed_time(grid.time(k), &mut out);
        Ok(out)
    }
}
