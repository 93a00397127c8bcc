//! Integrates one transformed trajectory and checks the energy inequality on
//! a window after a burn-in, at two step sizes.

use fhn_attractor::attractor::InitialBundle;
use fhn_attractor::cocycle::CocycleHandle;
use fhn_attractor::config::RunConfig;
use fhn_attractor::energy::energy_inequality_check;
use fhn_attractor::paths::sample_path;
use fhn_attractor::solver::{Integrator, SchemeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let path = sample_path(cfg.experiment.seed, -40.0, 20.0, 1e-3)?;
    let noise = CocycleHandle::new(&spec, &grid, SchemeConfig::new(1e-3), path)?.noise_for(0.0)?;

    let mut x0 = InitialBundle::new(10.0, 1)
        .member(&grid, 0, 0.0)
        .to_transformed(noise.z(-16.0)?);
    x0.t = -16.0;
    let mut etas = Vec::new();
    for dt in [1e-3, 5e-4] {
        let integ = Integrator::new(&spec, &grid, SchemeConfig::new(dt))?;
        let c = energy_inequality_check(&integ, &noise, &x0, 0.0, 16.0, 0.05)?;
        println!(
            "dt {dt:e}: c_fit {:.4} (hand estimate {}), worst residual {:.3e}, defect {:.3e}, passed {}",
            c.c_fit,
            c.c_analytic,
            c.worst_residual,
            c.eta,
            c.passed()
        );
        etas.push(c.eta);
    }
    println!("defect ratio under halving: {:.3}", etas[0] / etas[1]);
    Ok(())
}
