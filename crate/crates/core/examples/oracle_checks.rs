//! The closed-form Gaussian chain of the planar flow: marginals, the exact
//! posterior-mean backward drift, and the self-check suite.

use vortex_score::checks::oracle_suite;
use vortex_score::forward::{initial_state, TimeGrid};
use vortex_score::oracle::GaussianChain;
use vortex_score::{FlowKind, StrainConfig};

fn main() -> vortex_score::Result<()> {
    let cfg = StrainConfig::new(FlowKind::Planar2D, 1.0, 1.0)?;
    let grid = TimeGrid::new(2.0, 200)?;
    let x0 = initial_state(&cfg, &grid, 1.0);
    let chain = GaussianChain::planar(&cfg, &grid, x0)?;

    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>12}", "k", "mean R", "var R", "mean Z", "var Z", "div drift");
    for k in [0, 1, 10, 50, 100, 198] {
        let (m, v) = chain.marginal(k)?;
        println!(
            "{k:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>12.3}",
            m[0],
            v[0],
            m[1],
            v[1],
            chain.posterior_drift_divergence(k)?
        );
    }

    let (m, _) = chain.marginal(150)?;
    let at_mean = vortex_score::State::new(m[0], m[1]);
    let d = chain.posterior_mean_drift(149, at_mean)?;
    println!("posterior-mean drift at the k=150 mean: ({:.4}, {:.4})", d[0], d[1]);

    println!();
    for check in oracle_suite(0)? {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    Ok(())
}
