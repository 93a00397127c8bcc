//! Pullback limit of a whole bundle collapsing to one random equilibrium,
//! its contraction rate, and its invariance under the cocycle.

use fhn_attractor::attractor::{equilibrium, equilibrium_invariance, InitialBundle};
use fhn_attractor::cocycle::CocycleHandle;
use fhn_attractor::config::RunConfig;
use fhn_attractor::grid::norm_l2;
use fhn_attractor::paths::sample_path;
use fhn_attractor::solver::SchemeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let path = sample_path(cfg.experiment.seed, -40.0, 8.0, 1e-3)?;
    let handle = CocycleHandle::new(&spec, &grid, SchemeConfig::new(1e-3), path)?;
    let (b, b0) = cfg.ladder(&spec)?.rates(&spec)?;

    let bundle = InitialBundle::new(10.0, 10);
    let r = equilibrium(
        &handle,
        0.0,
        &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        &bundle,
        1e-6,
        2.0,
    )?;
    print!("{}", r.to_csv());
    println!(
        "fitted rate {:.4} (b = {b:.4}, b0 = {b0:.4}), error estimate {:.3e}, converged {}",
        r.b_fit, r.err_est, r.converged
    );
    println!(
        "||u*||, ||v*|| = {:.5}, {:.5}",
        norm_l2(&r.u_star.u),
        norm_l2(&r.u_star.v)
    );

    let inv = equilibrium_invariance(&handle, &r, &bundle, &[1.0, 2.0, 4.0])?;
    print!("{}", inv.to_csv());
    Ok(())
}
