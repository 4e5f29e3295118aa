//! Forward discrete Lagrangian flow: Euler–Maruyama particle trajectories
//! under the effective drift, used as training data.
//!
//! Every attempt `i` draws its noise from its own ChaCha substream keyed by
//! `(master_seed, i)`, so batches are reproducible regardless of the order in
//! which attempts are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strain::{FlowKind, State, StrainConfig};

/// Uniform grid on `[0, T]` with `L` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeGridRepr", into = "TimeGridRepr")]
pub struct TimeGrid {
    t_end: f64,
    points: usize,
    dt: f64,
}

#[derive(Serialize, Deserialize)]
struct TimeGridRepr {
    t_end: f64,
    points: usize,
}

impl TryFrom<TimeGridRepr> for TimeGrid {
    type Error = Error;

    fn try_from(r: TimeGridRepr) -> Result<Self> {
        TimeGrid::new(r.t_end, r.points)
    }
}

impl From<TimeGrid> for TimeGridRepr {
    fn from(g: TimeGrid) -> Self {
        Self {
            t_end: g.t_end,
            points: g.points,
        }
    }
}

impl TimeGrid {
    pub fn new(t_end: f64, points: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidArgument(format!("terminal time must be positive, got {t_end}")));
        }
        if points < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {points}")));
        }
        Ok(Self {
            t_end,
            points,
            dt: t_end / (points - 1) as f64,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of time points `L`.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.points - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn initial(&self) -> State {
        self.states[0]
    }

    pub fn terminal(&self) -> State {
        *self.states.last().expect("trajectory is never empty")
    }

    /// Total path length `sum_k |x_{k+1} - x_k|` in one component.
    pub fn displacement(&self, c: crate::strain::Component) -> f64 {
        self.states
            .windows(2)
            .map(|w| (w[1].component(c) - w[0].component(c)).abs())
            .sum()
    }
}

/// Source of the per-step standard normal pairs.
pub trait NoiseSource {
    fn next_pair(&mut self) -> (f64, f64);
}

impl NoiseSource for ChaCha8Rng {
    fn next_pair(&mut self) -> (f64, f64) {
        let er: f64 = StandardNormal.sample(self);
        let ez: f64 = StandardNormal.sample(self);
        (er, ez)
    }
}

impl<F: FnMut() -> (f64, f64)> NoiseSource for F {
    fn next_pair(&mut self) -> (f64, f64) {
        self()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Independent substream for one trajectory attempt.
    pub fn stream(&self, attempt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(attempt);
        rng
    }
}

/// One Euler–Maruyama step `x + b(x) dt + sigma sqrt(dt) eps`.
pub fn step_forward(cfg: &StrainConfig, grid: &TimeGrid, s: State, eps: (f64, f64)) -> Result<State> {
    let dt = grid.dt();
    let (br, bz) = cfg.drift(s)?;
    let amp = cfg.sigma() * dt.sqrt();
    Ok(State::new(s.r + br * dt + amp * eps.0, s.z + bz * dt + amp * eps.1))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimOutcome {
    Accepted(Trajectory),
    /// The radial coordinate reached `r <= 0` at this step index.
    Rejected { step: usize },
}

pub fn simulate_trajectory(
    cfg: &StrainConfig,
    grid: &TimeGrid,
    x0: State,
    noise: &mut impl NoiseSource,
) -> Result<SimOutcome> {
    let axisymmetric = cfg.kind() == FlowKind::Axisymmetric3D;
    if axisymmetric && !(x0.r > 0.0) {
        return Err(Error::Domain(format!("initial radius must be positive, got {}", x0.r)));
    }
    let mut states = Vec::with_capacity(grid.points());
    states.push(x0);
    let mut x = x0;
    for k in 1..grid.points() {
        x = step_forward(cfg, grid, x, noise.next_pair())?;
        if axisymmetric && !(x.r > 0.0) {
            return Ok(SimOutcome::Rejected { step: k });
        }
        states.push(x);
    }
    Ok(SimOutcome::Accepted(Trajectory { states }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub cfg: StrainConfig,
    pub grid: TimeGrid,
    pub scale_s: f64,
    pub seed: u64,
    /// Attempts consumed to fill the batch, including rejected ones.
    pub attempts: u64,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryBatch {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn initial_state(&self) -> State {
        initial_state(&self.cfg, &self.grid, self.scale_s)
    }

    pub fn terminals(&self) -> Vec<State> {
        self.trajectories.iter().map(Trajectory::terminal).collect()
    }
}

/// Shared starting point `(e^{2aT} s, s)`. The radial scale at `t = 0`
/// matches the axial scale at `t = T`.
pub fn initial_state(cfg: &StrainConfig, grid: &TimeGrid, s: f64) -> State {
    State::new((2.0 * cfg.a() * grid.t_end()).exp() * s, s)
}

const MAX_ATTEMPTS_PER_SAMPLE: u64 = 100;

/// Simulates attempts in order until `n` trajectories are retained.
pub fn generate_batch(cfg: &StrainConfig, grid: &TimeGrid, s: f64, n: usize, rng: RngSpec) -> Result<TrajectoryBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidArgument(format!("scale parameter must be positive, got {s}")));
    }
    let x0 = initial_state(cfg, grid, s);
    let max_attempts = MAX_ATTEMPTS_PER_SAMPLE * n as u64;
    let mut trajectories = Vec::with_capacity(n);
    let mut attempt = 0u64;
    while trajectories.len() < n {
        if attempt >= max_attempts {
            return Err(Error::ExcessiveRejection {
                attempts: attempt,
                retained: trajectories.len(),
                requested: n,
            });
        }
        let mut stream = rng.stream(attempt);
        attempt += 1;
        if let SimOutcome::Accepted(t) = simulate_trajectory(cfg, grid, x0, &mut stream)? {
            trajectories.push(t);
        }
    }
    Ok(TrajectoryBatch {
        cfg: *cfg,
        grid: *grid,
        scale_s: s,
        seed: rng.master_seed,
        attempts: attempt,
        trajectories,
    })
}

/// Splits by trajectory index: the first `floor(fraction * N)` go to training.
pub fn split_batch(batch: &TrajectoryBatch, train_fraction: f64) -> Result<(TrajectoryBatch, TrajectoryBatch)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = batch.len();
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "splitting {n} trajectories at {train_fraction} leaves an empty split"
        )));
    }
    let part = |trajectories: Vec<Trajectory>| TrajectoryBatch {
        trajectories,
        ..batch.clone_header()
    };
    Ok((
        part(batch.trajectories[..n_train].to_vec()),
        part(batch.trajectories[n_train..].to_vec()),
    ))
}

impl TrajectoryBatch {
    fn clone_header(&self) -> TrajectoryBatch {
        TrajectoryBatch {
            cfg: self.cfg,
            grid: self.grid,
            scale_s: self.scale_s,
            seed: self.seed,
            attempts: self.attempts,
            trajectories: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strain::FlowKind;

    fn axi(nu: f64) -> StrainConfig {
        StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, nu).unwrap()
    }

    #[test]
    fn grid_step() {
        let g = TimeGrid::new(2.0, 200).unwrap();
        assert_eq!(g.dt(), 2.0 / 199.0);
        assert_eq!(g.steps(), 199);
        assert!(TimeGrid::new(2.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 10).is_err());
    }

    #[test]
    fn step_forward_examples() {
        let g = TimeGrid::new(0.01, 2).unwrap();
        let s = step_forward(&axi(1.0), &g, State::new(1.0, 1.0), (0.0, 0.0)).unwrap();
        assert!((s.r - 0.98).abs() < 1e-15 && (s.z - 1.02).abs() < 1e-15);

        let p = StrainConfig::new(FlowKind::Planar2D, 1.0, 1.0).unwrap();
        let s = step_forward(&p, &g, State::new(1.0, 1.0), (0.0, 0.0)).unwrap();
        assert!((s.r - 0.98).abs() < 1e-15 && (s.z - 1.02).abs() < 1e-15);

        // sigma sqrt(dt) = sqrt(2 * 0.01)
        let s = step_forward(&axi(1.0), &g, State::new(1.0, 0.0), (1.0, 0.0)).unwrap();
        let expected = 0.98 + 0.02f64.sqrt();
        assert!((s.r - expected).abs() < 1e-15);
        assert!((s.r - 1.121_421_356_237_309_5).abs() < 1e-12);
        assert_eq!(s.z, 0.0);

        assert!(step_forward(&axi(1.0), &g, State::new(0.0, 0.0), (0.0, 0.0)).is_err());
    }

    #[test]
    fn noiseless_trajectory_follows_euler_recursion() {
        let cfg = axi(0.0);
        let g = TimeGrid::new(0.02, 3).unwrap();
        let mut noise = || (0.3, -0.7);
        let SimOutcome::Accepted(t) = simulate_trajectory(&cfg, &g, State::new(1.0, 1.0), &mut noise).unwrap() else {
            panic!("rejected");
        };
        let mut x = State::new(1.0, 1.0);
        for k in 0..3 {
            assert_eq!(t.states[k], x);
            x = State::new(x.r - x.r * 0.01, x.z + 2.0 * x.z * 0.01);
        }
    }

    #[test]
    fn forced_negative_radius_rejected() {
        let g = TimeGrid::new(2.0, 20).unwrap();
        let mut calls = 0;
        let mut noise = || {
            calls += 1;
            if calls == 1 {
                (-1e3, 0.0)
            } else {
                (0.0, 0.0)
            }
        };
        let out = simulate_trajectory(&axi(1.0), &g, State::new(1.0, 1.0), &mut noise).unwrap();
        assert_eq!(out, SimOutcome::Rejected { step: 1 });
    }

    #[test]
    fn planar_never_rejects() {
        let cfg = StrainConfig::new(FlowKind::Planar2D, 1.0, 1.0).unwrap();
        let g = TimeGrid::new(2.0, 20).unwrap();
        let mut noise = || (-1e3, 1e3);
        let out = simulate_trajectory(&cfg, &g, State::new(1.0, 1.0), &mut noise).unwrap();
        assert!(matches!(out, SimOutcome::Accepted(_)));
    }

    #[test]
    fn batch_starts_at_scaled_point() {
        let g = TimeGrid::new(2.0, 50).unwrap();
        for (s, r0) in [(1.0, 54.598_150_033_144_236), (12.0, 655.177_800_397_730_8)] {
            let b = generate_batch(&axi(1.0), &g, s, 5, RngSpec::new(3)).unwrap();
            for t in &b.trajectories {
                assert_eq!(t.states[0], State::new(4f64.exp() * s, s));
                assert!((t.states[0].r - r0).abs() < 1e-9);
                assert_eq!(t.states.len(), 50);
            }
        }
    }

    #[test]
    fn batch_is_deterministic_and_seed_sensitive() {
        let g = TimeGrid::new(2.0, 30).unwrap();
        let a = generate_batch(&axi(1.0), &g, 1.0, 20, RngSpec::new(11)).unwrap();
        let b = generate_batch(&axi(1.0), &g, 1.0, 20, RngSpec::new(11)).unwrap();
        let c = generate_batch(&axi(1.0), &g, 1.0, 20, RngSpec::new(12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trajectories, c.trajectories);
    }

    #[test]
    fn substreams_do_not_depend_on_evaluation_order() {
        let spec = RngSpec::new(99);
        let forward: Vec<_> = (0..4).map(|i| spec.stream(i).next_pair()).collect();
        let reverse: Vec<_> = (0..4).rev().map(|i| spec.stream(i).next_pair()).collect();
        let reverse: Vec<_> = reverse.into_iter().rev().collect();
        assert_eq!(forward, reverse);
        assert_ne!(forward[0], forward[1]);
    }

    #[test]
    fn pathological_rejection_fails() {
        // tiny radius with strong noise: most attempts die immediately
        let cfg = StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, 50.0).unwrap();
        let g = TimeGrid::new(2.0, 200).unwrap();
        let err = generate_batch(&cfg, &g, 1e-6, 3, RngSpec::new(0)).unwrap_err();
        assert!(matches!(err, Error::ExcessiveRejection { attempts: 300, .. }), "{err}");
    }

    #[test]
    fn split_sizes() {
        let g = TimeGrid::new(2.0, 3).unwrap();
        let b = generate_batch(&axi(1.0), &g, 1.0, 10, RngSpec::new(1)).unwrap();
        let (tr, va) = split_batch(&b, 0.8).unwrap();
        assert_eq!((tr.len(), va.len()), (8, 2));
        assert_eq!(tr.trajectories[..], b.trajectories[..8]);
        assert_eq!(va.seed, b.seed);
        assert_eq!(va.scale_s, b.scale_s);

        let one = generate_batch(&axi(1.0), &g, 1.0, 1, RngSpec::new(1)).unwrap();
        assert!(split_batch(&one, 0.8).is_err());
        assert!(split_batch(&b, 1.0).is_err());
        assert!(split_batch(&b, 0.0).is_err());
    }
}
