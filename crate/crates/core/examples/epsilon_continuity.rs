//! Sup distance of trajectories at eps_n from the one at eps0 over a short
//! span. The distance should halve with the gap.

use fhn_attractor::attractor::{epsilon_continuity, InitialBundle};
use fhn_attractor::cocycle::CocycleHandle;
use fhn_attractor::config::RunConfig;
use fhn_attractor::paths::sample_path;
use fhn_attractor::solver::SchemeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let path = sample_path(cfg.experiment.seed, -1.0, 2.0, 1e-3)?;
    let handle = CocycleHandle::new(&spec, &grid, SchemeConfig::new(1e-3), path)?;
    let x0 = InitialBundle::new(0.0, 1).member(&grid, 0, 0.0);

    let gaps = [0.1, 0.05, 0.025, 0.0125];
    for eps0 in [0.2, 0.0] {
        let eps: Vec<f64> = gaps.iter().map(|g| eps0 + g).collect();
        let r = epsilon_continuity(&handle, 0.0, 1.0, eps0, &eps, &x0)?;
        println!("eps0 = {eps0}");
        for row in &r.rows {
            println!(
                "  eps {:<7.4} sup deviation {:.4e}",
                row.eps, row.sup_deviation
            );
        }
        println!(
            "  successive ratios {:?}, monotone {}",
            r.ratios, r.monotone
        );
    }
    Ok(())
}
