use vortex_score::forward::{generate_batch, RngSpec, TimeGrid};
use vortex_score::oracle::{
    finite_diff_grad, frozen_transition_density, gaussian_log_density, gaussian_score, GaussianChain,
};
use vortex_score::{FlowKind, State, StrainConfig};

fn planar(nu: f64) -> StrainConfig {
    StrainConfig::new(FlowKind::Planar2D, 1.0, nu).unwrap()
}

/// Empirical conditional mean of the backward target in bins of `x_{k+1}`
/// against the closed-form posterior mean.
#[test]
fn tower_property_per_bin() {
    let cfg = planar(1.0);
    let grid = TimeGrid::new(2.0, 41).unwrap();
    let k = 20;
    let n = 100_000;
    let batch = generate_batch(&cfg, &grid, 1.0, n, RngSpec::new(31)).unwrap();
    let chain = GaussianChain::planar(&cfg, &grid, batch.initial_state()).unwrap();
    let (mean, var) = chain.marginal(k + 1).unwrap();
    let dt = grid.dt();
    for c in 0..2 {
        let sd = var[c].sqrt();
        let lo = mean[c] - 3.0 * sd;
        let width = 6.0 * sd / 20.0;
        let mut bins: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 20];
        for t in &batch.trajectories {
            let x = t.states[k].to_array()[c];
            let y = t.states[k + 1].to_array()[c];
            let b = ((y - lo) / width).floor();
            if (0.0..20.0).contains(&b) {
                bins[b as usize].push(((x - y) / dt, y));
            }
        }
        for (bi, bin) in bins.iter().enumerate() {
            if bin.len() < 30 {
                continue;
            }
            let m = bin.len() as f64;
            let emp = bin.iter().map(|p| p.0).sum::<f64>() / m;
            let sd_t = (bin.iter().map(|p| (p.0 - emp).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            // the oracle is affine in x_{k+1}, so its bin average is exact
            let oracle = bin
                .iter()
                .map(|p| {
                    let s = if c == 0 { State::new(p.1, 0.0) } else { State::new(0.0, p.1) };
                    chain.posterior_mean_drift(k, s).unwrap()[c]
                })
                .sum::<f64>()
                / m;
            assert!(
                (emp - oracle).abs() <= 3.0 * sd_t / m.sqrt(),
                "component {c} bin {bi}: empirical {emp} oracle {oracle}"
            );
        }
    }
}

/// Residual of `drift ~ -(c - 1)/dt x + sigma^2 score_{k+1}(x)` at a fixed
/// physical time shrinks linearly with the step.
#[test]
fn score_drift_identity_is_first_order() {
    let residual = |points: usize| {
        let cfg = planar(1.0);
        let grid = TimeGrid::new(1.0, points).unwrap();
        let chain = GaussianChain::planar(&cfg, &grid, State::new(3.0, 0.5)).unwrap();
        let k = (points - 1) / 2;
        let (mean, var) = chain.marginal(k + 1).unwrap();
        let x = State::new(mean[0] + var[0].sqrt(), mean[1] - 0.5 * var[1].sqrt());
        let drift = chain.posterior_mean_drift(k, x).unwrap();
        let cs = [chain.r.c, chain.z.c];
        let xs = x.to_array();
        (0..2)
            .map(|c| {
                let approx = -(cs[c] - 1.0) / grid.dt() * xs[c]
                    + cfg.sigma().powi(2) * gaussian_score(mean[c], var[c], xs[c]).unwrap();
                (drift[c] - approx).abs()
            })
            .fold(0.0, f64::max)
    };
    let coarse = residual(101);
    let fine = residual(201);
    let ratio = fine / coarse;
    assert!(coarse > 0.0);
    assert!((ratio - 0.5).abs() < 0.1, "residual ratio {ratio}");
}

#[test]
fn delta_prior_divergence_is_minus_d_over_dt() {
    for points in [11, 100, 200, 1001] {
        let grid = TimeGrid::new(2.0, points).unwrap();
        let chain = GaussianChain::planar(&planar(1.0), &grid, State::new(54.0, 1.0)).unwrap();
        let div = chain.posterior_drift_divergence(0).unwrap();
        assert_eq!(div, -2.0 / grid.dt());
        // finite differences of the affine field agree
        let x = [50.0, 1.3];
        let f = |c: usize| {
            move |p: &[f64]| chain.posterior_mean_drift(0, State::new(p[0], p[1])).unwrap()[c]
        };
        let fd = finite_diff_grad(f(0), &x, 1e-3)[0] + finite_diff_grad(f(1), &x, 1e-3)[1];
        assert!((fd - div).abs() <= 1e-6 * div.abs());
    }
}

fn trapezoid_2d(f: impl Fn(f64, f64) -> f64, cr: f64, cz: f64, half: f64, n: usize) -> f64 {
    let h = 2.0 * half / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
        let r = cr - half + i as f64 * h;
        for j in 0..=n {
            let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
            total += wi * wj * f(r, cz - half + j as f64 * h);
        }
    }
    total * h * h
}

#[test]
fn frozen_kernel_mass_is_reaction_factor() {
    let dt = 0.01;
    for (kind, x) in [
        (FlowKind::Axisymmetric3D, State::new(1.0, 0.5)),
        (FlowKind::Axisymmetric3D, State::new(0.3, -2.0)),
        (FlowKind::Planar2D, State::new(-0.7, 4.0)),
    ] {
        let cfg = StrainConfig::new(kind, 1.0, 1.0).unwrap();
        let (br, bz) = cfg.drift(x).unwrap();
        let sd = (cfg.sigma().powi(2) * dt).sqrt();
        let mass = trapezoid_2d(
            |r, z| frozen_transition_density(&cfg, x, State::new(r, z), dt).unwrap(),
            x.r + br * dt,
            x.z + bz * dt,
            10.0 * sd,
            400,
        );
        let expected = (cfg.reaction(x).unwrap() * dt).exp();
        assert!((mass - expected).abs() <= 1e-6, "{kind}: {mass} vs {expected}");
    }
}

#[test]
fn fd_of_marginal_log_density_matches_score() {
    let grid = TimeGrid::new(2.0, 200).unwrap();
    let chain = GaussianChain::planar(&planar(1.0), &grid, State::new(54.6, 1.0)).unwrap();
    for k in [1, 10, 150] {
        let (mean, var) = chain.marginal(k).unwrap();
        for c in 0..2 {
            for offset in [-1.5, 0.2, 2.0] {
                let x = mean[c] + offset * var[c].sqrt();
                let h = 1e-4 * var[c].sqrt();
                let fd = finite_diff_grad(|p| gaussian_log_density(mean[c], var[c], p[0]).unwrap(), &[x], h)[0];
                let exact = gaussian_score(mean[c], var[c], x).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "k={k} c={c}: {fd} vs {exact}");
            }
        }
    }
}
