use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NormStats, TimeEmbedding, TrainingPair};
use crate::error::{Error, Result};
use crate::forward::TimeGrid;
use crate::strain::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `x * sigmoid(x)`
    Silu,
    Tanh,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Silu => "silu",
            Activation::Tanh => "tanh",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => x / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Silu => {
                let sig = 1.0 / (1.0 + (-x).exp());
                sig * (1.0 + x * (1.0 - sig))
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "silu" => Ok(Activation::Silu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidArgument(format!("unknown activation {other:?}"))),
        }
    }
}

/// Layer widths. The state `(r, z)` is encoded to `state_width` features,
/// concatenated with the `embed_dim` time features and passed through
/// `hidden_layers` fully connected layers of `hidden_width` before a linear
/// map to the two drift components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub state_width: usize,
    pub embed_dim: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            state_width: 64,
            embed_dim: 32,
            hidden_width: 128,
            hidden_layers: 3,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.state_width == 0 || self.hidden_width == 0 || self.hidden_layers == 0 {
            return Err(Error::InvalidArgument(format!("degenerate architecture {self:?}")));
        }
        if self.embed_dim == 0 || !self.embed_dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "embedding dimension must be even and positive, got {}",
                self.embed_dim
            )));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every dense layer in evaluation order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = vec![(2, self.state_width)];
        shapes.push((self.state_width + self.embed_dim, self.hidden_width));
        for _ in 1..self.hidden_layers {
            shapes.push((self.hidden_width, self.hidden_width));
        }
        shapes.push((self.hidden_width, 2));
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slot {
    offset: usize,
    fan_in: usize,
    fan_out: usize,
}

impl Slot {
    fn w_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    fn b_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }
}

fn layout(arch: &Architecture) -> Vec<Slot> {
    let mut offset = 0;
    arch.layer_shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let slot = Slot { offset, fan_in, fan_out };
            offset += fan_in * fan_out + fan_out;
            slot
        })
        .collect()
}

/// Time-conditioned MLP approximating the backward drift `v(x_{k+1}, k)`.
///
/// Parameters live in one flat vector; each layer stores its row-major
/// `fan_in x fan_out` weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel {
    arch: Architecture,
    activation: Activation,
    embedding: TimeEmbedding,
    norm: NormStats,
    grid: TimeGrid,
    slots: Vec<Slot>,
    params: Vec<f64>,
    /// Embedding of every valid step index, `(L - 1) x embed_dim`.
    embed_table: Array2<f64>,
}

/// Activations retained for backpropagation.
struct Trace {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each non-output layer.
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ScoreModel {
    /// Fan-in scaled uniform initialization: every weight and bias of a layer
    /// with fan-in `m` is drawn from `U(-1/sqrt(m), 1/sqrt(m))`.
    pub fn init(
        arch: Architecture,
        activation: Activation,
        norm: NormStats,
        grid: TimeGrid,
        seed: u64,
    ) -> Result<Self> {
        let mut model = Self::zeros(arch, activation, norm, grid)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for slot in model.slots.clone() {
            let bound = 1.0 / (slot.fan_in as f64).sqrt();
            for p in &mut model.params[slot.offset..slot.b_range().end] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(arch: Architecture, activation: Activation, norm: NormStats, grid: TimeGrid) -> Result<Self> {
        arch.validate()?;
        let embedding = TimeEmbedding::geometric(arch.embed_dim, &grid)?;
        Self::from_parts(arch, activation, embedding, norm, grid, vec![0.0; arch.parameter_count()])
    }

    pub fn from_parts(
        arch: Architecture,
        activation: Activation,
        embedding: TimeEmbedding,
        norm: NormStats,
        grid: TimeGrid,
        params: Vec<f64>,
    ) -> Result<Self> {
        arch.validate()?;
        if embedding.dim() != arch.embed_dim {
            return Err(Error::InvalidArgument(format!(
                "embedding has {} features, architecture expects {}",
                embedding.dim(),
                arch.embed_dim
            )));
        }
        if params.len() != arch.parameter_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                arch.parameter_count(),
                params.len()
            )));
        }
        if norm.input_std.iter().chain(&norm.target_std).any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("normalization scales must be positive".into()));
        }
        let steps = grid.steps();
        let mut embed_table = Array2::zeros((steps, arch.embed_dim));
        for (k, mut row) in embed_table.outer_iter_mut().enumerate() {
            embedding.embed_time(grid.time(k), row.as_slice_mut().expect("standard layout"));
        }
        Ok(Self {
            slots: layout(&arch),
            arch,
            activation,
            embedding,
            norm,
            grid,
            params,
            embed_table,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn embedding(&self) -> &TimeEmbedding {
        &self.embedding
    }

    pub fn norm(&self) -> &NormStats {
        &self.norm
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(fan_in, fan_out, weights, bias)` per layer.
    pub fn layers(&self) -> impl Iterator<Item = (usize, usize, &[f64], &[f64])> {
        self.slots
            .iter()
            .map(|s| (s.fan_in, s.fan_out, &self.params[s.w_range()], &self.params[s.b_range()]))
    }

    /// Range of the output-layer bias inside the flat parameter vector.
    pub fn output_bias_range(&self) -> std::ops::Range<usize> {
        self.slots.last().expect("at least one layer").b_range()
    }

    /// Ranges of all non-output weights and biases.
    pub fn hidden_parameter_range(&self) -> std::ops::Range<usize> {
        0..self.slots.last().expect("at least one layer").offset
    }

    fn weight(&self, slot: &Slot) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((slot.fan_in, slot.fan_out), &self.params[slot.w_range()]).expect("layout")
    }

    fn bias(&self, slot: &Slot) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[slot.b_range()])
    }

    fn check_step(&self, k: usize) -> Result<()> {
        let max = self.grid.steps() - 1;
        if k > max {
            return Err(Error::IndexOutOfRange { index: k, max });
        }
        Ok(())
    }

    fn input_matrix<'a>(&self, rows: impl ExactSizeIterator<Item = (State, usize)> + 'a) -> Result<(Array2<f64>, Array2<f64>)> {
        let n = rows.len();
        let mut x = Array2::zeros((n, 2));
        let mut e = Array2::zeros((n, self.arch.embed_dim));
        for (i, (state, k)) in rows.enumerate() {
            self.check_step(k)?;
            let v = self.norm.normalize_input(state);
            x[[i, 0]] = v[0];
            x[[i, 1]] = v[1];
            e.row_mut(i).assign(&self.embed_table.row(k));
        }
        Ok((x, e))
    }

    fn run(&self, x: Array2<f64>, emb: Array2<f64>, keep_trace: bool) -> Trace {
        let act = self.activation;
        let n = x.nrows();
        let mut inputs = Vec::with_capacity(self.slots.len());
        let mut pre = Vec::with_capacity(self.slots.len() - 1);

        let enc = &self.slots[0];
        let z = x.dot(&self.weight(enc)) + self.bias(enc);
        let h = z.mapv(|v| act.apply(v));
        let mut cat = Array2::zeros((n, enc.fan_out + emb.ncols()));
        cat.slice_mut(s![.., ..enc.fan_out]).assign(&h);
        cat.slice_mut(s![.., enc.fan_out..]).assign(&emb);
        if keep_trace {
            inputs.push(x);
            pre.push(z);
        }

        let mut a = cat;
        let last = self.slots.len() - 1;
        for slot in &self.slots[1..last] {
            let z = a.dot(&self.weight(slot)) + self.bias(slot);
            let h = z.mapv(|v| act.apply(v));
            if keep_trace {
                inputs.push(std::mem::replace(&mut a, h));
                pre.push(z);
            } else {
                a = h;
            }
        }
        let out_slot = &self.slots[last];
        let output = a.dot(&self.weight(out_slot)) + self.bias(out_slot);
        if keep_trace {
            inputs.push(a);
        }
        Trace { inputs, pre, output }
    }

    /// Network output in normalized target units.
    fn forward_normalized(&self, states: &[State], steps: &[usize]) -> Result<Array2<f64>> {
        let (x, e) = self.input_matrix(states.iter().copied().zip(steps.iter().copied()))?;
        Ok(self.run(x, e, false).output)
    }

    /// Backward drift in physical units for a single state.
    pub fn forward(&self, x_next: State, k: usize) -> Result<[f64; 2]> {
        Ok(self.forward_batch(&[x_next], k)?[0])
    }

    /// Backward drift for many states at the same step.
    pub fn forward_batch(&self, states: &[State], k: usize) -> Result<Vec<[f64; 2]>> {
        let steps = vec![k; states.len()];
        let out = self.forward_normalized(states, &steps)?;
        out.outer_iter()
            .map(|row| {
                let y = self.norm.denormalize_target([row[0], row[1]]);
                if y.iter().all(|v| v.is_finite()) {
                    Ok(y)
                } else {
                    Err(Error::ModelDivergence(format!("non-finite drift {y:?} at step {k}")))
                }
            })
            .collect()
    }

    /// Mean squared Euclidean distance between predicted and target drift,
    /// in physical units.
    pub fn loss(&self, pairs: &[TrainingPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("loss over an empty pair set".into()));
        }
        let out = self.pairs_output(pairs)?;
        let total: f64 = out
            .outer_iter()
            .zip(pairs)
            .map(|(row, p)| {
                let y = self.norm.denormalize_target([row[0], row[1]]);
                (y[0] - p.target[0]).powi(2) + (y[1] - p.target[1]).powi(2)
            })
            .sum();
        Ok(total / pairs.len() as f64)
    }

    fn pairs_output(&self, pairs: &[TrainingPair]) -> Result<Array2<f64>> {
        let (x, e) = self.input_matrix(pairs.iter().map(|p| (p.x_next, p.k)))?;
        Ok(self.run(x, e, false).output)
    }

    fn normalized_targets(&self, pairs: &[TrainingPair]) -> Array2<f64> {
        let mut t = Array2::zeros((pairs.len(), 2));
        for (mut row, p) in t.outer_iter_mut().zip(pairs) {
            let v = self.norm.normalize_target(p.target);
            row[0] = v[0];
            row[1] = v[1];
        }
        t
    }

    /// Training objective: mean squared residual in normalized target units.
    /// Coincides with [`ScoreModel::loss`] under identity normalization.
    pub fn normalized_loss(&self, pairs: &[TrainingPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("loss over an empty pair set".into()));
        }
        let out = self.pairs_output(pairs)?;
        let t = self.normalized_targets(pairs);
        Ok((out - t).mapv(|v| v * v).sum() / pairs.len() as f64)
    }

    /// Normalized loss and its exact gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, pairs: &[TrainingPair]) -> Result<(f64, Vec<f64>)> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("gradient over an empty pair set".into()));
        }
        let n = pairs.len() as f64;
        let (x, e) = self.input_matrix(pairs.iter().map(|p| (p.x_next, p.k)))?;
        let trace = self.run(x, e, true);
        let resid = &trace.output - &self.normalized_targets(pairs);
        let loss = resid.mapv(|v| v * v).sum() / n;
        if !loss.is_finite() {
            return Err(Error::ModelDivergence(format!("non-finite loss {loss}")));
        }

        let mut grad = vec![0.0; self.params.len()];
        let last = self.slots.len() - 1;
        let mut delta = resid * (2.0 / n);
        for li in (0..=last).rev() {
            let slot = self.slots[li];
            let input = &trace.inputs[li];
            if li < last {
                let z = &trace.pre[li];
                ndarray::Zip::from(&mut delta)
                    .and(z)
                    .for_each(|d, &zv| *d *= self.activation.derivative(zv));
            }
            {
                let mut gw = ArrayViewMut2::from_shape((slot.fan_in, slot.fan_out), &mut grad[slot.w_range()])
                    .expect("layout");
                gw.assign(&input.t().dot(&delta));
            }
            ArrayViewMut1::from(&mut grad[slot.b_range()]).assign(&delta.sum_axis(Axis(0)));
            if li > 0 {
                let back = delta.dot(&self.weight(&slot).t());
                delta = if li == 1 {
                    // only the encoder half of the concatenation has parameters upstream
                    back.slice(s![.., ..self.slots[0].fan_out]).to_owned()
                } else {
                    back
                };
            }
        }
        Ok((loss, grad))
    }
}
