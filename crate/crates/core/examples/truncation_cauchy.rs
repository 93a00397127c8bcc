//! Tail mass of pullback endpoints above a level M, and the Cauchy property
//! of endpoints along growing depths with intensities converging to 0.2.

use fhn_attractor::attractor::{
    geometric_grid, lp_cauchy_test, truncation_test, InitialBundle, PullbackMatrix,
};
use fhn_attractor::cocycle::CocycleHandle;
use fhn_attractor::config::RunConfig;
use fhn_attractor::paths::sample_path;
use fhn_attractor::solver::SchemeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let path = sample_path(cfg.experiment.seed, -40.0, 1.0, 1e-3)?;
    let handle = CocycleHandle::new(&spec, &grid, SchemeConfig::new(1e-3), path)?;

    let bundle = InitialBundle::new(10.0, 4);
    let m = PullbackMatrix::run(
        &handle,
        0.0,
        &[0.2],
        &[8.0, 16.0, 32.0],
        std::slice::from_ref(&bundle),
    )?;
    let levels = geometric_grid(0.01, 12);
    let tr = truncation_test(&m, &levels, spec.p(), 1e-6, 8.0);
    print!("{}", tr.to_csv());
    println!(
        "tail below 1e-6 from M = {:?}, monotone in M {}",
        tr.uniform_m, tr.monotone
    );

    let depths = [4.0, 8.0, 16.0, 32.0];
    let eps: Vec<f64> = depths
        .iter()
        .map(|t: &f64| 0.2 + 0.1 * (-t).exp())
        .collect();
    let c = lp_cauchy_test(&handle, 0.0, &depths, &eps, &bundle, 0.5)?;
    print!("{}", c.to_csv());
    let last = c.entries.last().unwrap();
    println!(
        "monotone {}, last pair {:.3e}, split of the last pair {:?} with bounds {:?}",
        c.monotone, c.last_pair, last.split.parts, last.split.bounds
    );
    Ok(())
}
