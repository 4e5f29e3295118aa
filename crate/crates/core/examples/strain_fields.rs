//! Velocity, drift and reaction coefficient of both strain fields.

use vortex_score::{FlowKind, State, StrainConfig};

fn main() -> vortex_score::Result<()> {
    for kind in [FlowKind::Axisymmetric3D, FlowKind::Planar2D] {
        let cfg = StrainConfig::new(kind, 1.0, 1.0)?;
        println!("{} (a = {}, nu = {}, sigma = {:.4})", kind.as_str(), cfg.a(), cfg.nu(), cfg.sigma());
        for x in [State::new(0.5, 0.0), State::new(1.0, 1.0), State::new(4.0, -2.0)] {
            let u = cfg.velocity(x);
            let b = cfg.drift(x)?;
            println!(
                "  x = ({:>4}, {:>4})  u = ({:>6.2}, {:>6.2})  b = ({:>6.2}, {:>6.2})  S = {:.3}",
                x.r,
                x.z,
                u.0,
                u.1,
                b.0,
                b.1,
                cfg.reaction(x)?
            );
        }
    }
    Ok(())
}
