//! Pullback matrix over intensities, depths and two bundle radii, followed
//! by the absorption, Lp ceiling and bundle-forgetting checks.

use fhn_attractor::attractor::{
    absorption_test, lp_bound_test, AbsorptionSettings, InitialBundle, PullbackMatrix,
};
use fhn_attractor::cocycle::CocycleHandle;
use fhn_attractor::config::RunConfig;
use fhn_attractor::paths::sample_path;
use fhn_attractor::solver::SchemeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let path = sample_path(cfg.experiment.seed, -100.0, 1.0, 1e-3)?;
    let handle = CocycleHandle::new(&spec, &grid, SchemeConfig::new(1e-3), path.clone())?;

    let bundles = [InitialBundle::new(10.0, 4), InitialBundle::new(100.0, 4)];
    let depths = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let m = PullbackMatrix::run(&handle, 0.0, &[0.1, 0.2, 0.4], &depths, &bundles)?;
    let ladder = cfg.ladder(&spec)?;
    let settings = AbsorptionSettings {
        quad_horizon: 80.0,
        slack: 0.05,
        reference_depth: 16.0,
    };
    let a = absorption_test(&m, &path, &spec, &ladder, grid.dim, settings)?;
    print!("{}", a.to_csv());
    println!(
        "c_fit {:.4e}, L_0 {:.4}, L monotone in eps {}, absorbed from depth {:?}, radius 10 vs 100 spread {:.2e}",
        a.c_fit, a.l_zero, a.l_monotone, a.t_abs, a.bundle_spread
    );
    for f in &a.functionals {
        println!("L_{} = {:.4}", f.eps, f.value());
    }

    let lp = lp_bound_test(&m, 8.0);
    println!("sup ||u||_p^p over depths >= 8: {:.4e}", lp.ceiling);
    Ok(())
}
