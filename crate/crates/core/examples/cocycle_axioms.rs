//! Checks the identity and composition laws of the random cocycle and the
//! agreement of the eps = 0 cocycle with the deterministic one.

use fhn_attractor::attractor::InitialBundle;
use fhn_attractor::cocycle::{check_cocycle_law, CocycleHandle};
use fhn_attractor::config::RunConfig;
use fhn_attractor::paths::sample_path;
use fhn_attractor::solver::SchemeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let path = sample_path(3, -10.0, 10.0, 1e-3)?;
    let handle = CocycleHandle::new(&spec, &grid, SchemeConfig::new(1e-3), path)?;
    let x = InitialBundle::new(5.0, 2).member(&grid, 1, 0.0);

    println!("phi(0) = id bitwise: {}", handle.phi(0.0, 0.7, &x)? == x);
    for (t, s, tau) in [
        (0.5, 0.25, 0.0),
        (1.0, 1.0, -2.0),
        (0.3, 1.7, 3.1),
        (0.4, 0.35, -0.5),
    ] {
        let c = check_cocycle_law(&handle, t, s, tau, &x)?;
        println!(
            "t = {t}, s = {s}, tau = {tau}: residual {:.3e} (aligned: {})",
            c.residual, c.aligned
        );
    }

    let zero = handle.with_epsilon(0.0)?;
    let det =
        CocycleHandle::deterministic(&spec.with_epsilon(0.0), &grid, SchemeConfig::new(1e-3))?;
    println!(
        "eps = 0 matches deterministic bitwise: {}",
        zero.phi(2.0, 0.0, &x)? == det.phi(2.0, 0.0, &x)?
    );
    Ok(())
}
