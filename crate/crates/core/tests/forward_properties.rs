use vortex_score::forward::{generate_batch, simulate_trajectory, RngSpec, SimOutcome, TimeGrid};
use vortex_score::oracle::GaussianChain;
use vortex_score::{FlowKind, State, StrainConfig};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[test]
fn planar_moments_match_gaussian_chain() {
    let cfg = StrainConfig::new(FlowKind::Planar2D, 1.0, 1.0).unwrap();
    let grid = TimeGrid::new(2.0, 200).unwrap();
    let n = 10_000;
    let batch = generate_batch(&cfg, &grid, 1.0, n, RngSpec::new(2024)).unwrap();
    let chain = GaussianChain::planar(&cfg, &grid, batch.initial_state()).unwrap();
    for k in [10, 100, 199] {
        let (mean, var) = chain.marginal(k).unwrap();
        for c in 0..2 {
            let xs: Vec<f64> = batch.trajectories.iter().map(|t| t.states[k].to_array()[c]).collect();
            let (m, v) = mean_var(&xs);
            let se_mean = (var[c] / n as f64).sqrt();
            let se_var = var[c] * (2.0 / (n as f64 - 1.0)).sqrt();
            assert!((m - mean[c]).abs() <= 3.0 * se_mean, "k={k} c={c}: mean {m} vs {}", mean[c]);
            assert!((v - var[c]).abs() <= 3.0 * se_var, "k={k} c={c}: var {v} vs {}", var[c]);
        }
    }
}

fn noiseless_error(steps: usize) -> f64 {
    let cfg = StrainConfig::new(FlowKind::Planar2D, 1.0, 0.0).unwrap();
    let grid = TimeGrid::new(2.0, steps + 1).unwrap();
    let mut zero = || (0.0, 0.0);
    let SimOutcome::Accepted(t) = simulate_trajectory(&cfg, &grid, State::new(1.0, 1.0), &mut zero).unwrap() else {
        unreachable!()
    };
    let exact = (2.0 * cfg.a() * grid.t_end()).exp();
    (t.terminal().z - exact).abs()
}

#[test]
fn noiseless_euler_is_first_order() {
    for steps in [50, 100, 200, 400] {
        let ratio = noiseless_error(2 * steps) / noiseless_error(steps);
        assert!((ratio - 0.5).abs() <= 0.1, "steps {steps}: ratio {ratio}");
    }
}

#[test]
fn retained_axisymmetric_trajectories_stay_off_axis() {
    // small s and strong noise make rejections common
    let cfg = StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, 1.0).unwrap();
    let grid = TimeGrid::new(2.0, 200).unwrap();
    let batch = generate_batch(&cfg, &grid, 0.05, 500, RngSpec::new(8)).unwrap();
    assert!(batch.attempts > 500, "expected some rejections, got {} attempts", batch.attempts);
    assert_eq!(batch.len(), 500);
    for t in &batch.trajectories {
        assert_eq!(t.states.len(), 200);
        assert!(t.states.iter().all(|s| s.r > 0.0));
    }
}

#[test]
fn retained_set_is_the_accepted_attempt_prefix() {
    let cfg = StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, 1.0).unwrap();
    let grid = TimeGrid::new(2.0, 100).unwrap();
    let spec = RngSpec::new(8);
    let batch = generate_batch(&cfg, &grid, 0.05, 50, spec).unwrap();
    let x0 = batch.initial_state();
    let mut expected = Vec::new();
    for attempt in 0..batch.attempts {
        if let SimOutcome::Accepted(t) = simulate_trajectory(&cfg, &grid, x0, &mut spec.stream(attempt)).unwrap() {
            expected.push(t);
        }
    }
    assert_eq!(expected, batch.trajectories);
}

#[test]
fn generation_is_bit_reproducible() {
    let cfg = StrainConfig::new(FlowKind::Axisymmetric3D, 1.0, 0.01).unwrap();
    let grid = TimeGrid::new(2.0, 200).unwrap();
    let a = generate_batch(&cfg, &grid, 3.0, 300, RngSpec::new(77)).unwrap();
    let b = generate_batch(&cfg, &grid, 3.0, 300, RngSpec::new(77)).unwrap();
    let bits = |x: &vortex_score::forward::TrajectoryBatch| -> Vec<u64> {
        x.trajectories
            .iter()
            .flat_map(|t| t.states.iter().flat_map(|s| [s.r.to_bits(), s.z.to_bits()]))
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
}
