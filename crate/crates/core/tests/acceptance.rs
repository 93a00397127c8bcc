//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::fs;
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fhn_attractor::attractor::{
    absorption_test, epsilon_continuity, equilibrium, equilibrium_invariance, geometric_grid,
    lp_bound_test, lp_cauchy_test, truncation_test, AbsorptionSettings, InitialBundle,
    PullbackMatrix,
};
use fhn_attractor::cocycle::{check_cocycle_law, CocycleHandle};
use fhn_attractor::config::RunConfig;
use fhn_attractor::energy::energy_inequality_check;
use fhn_attractor::grid::{Frame, Grid};
use fhn_attractor::paths::{sample_path, WienerPath};
use fhn_attractor::problem::ProblemSpec;
use fhn_attractor::run::run;
use fhn_attractor::solver::{reference_integrate, Integrator, SchemeConfig};

struct Setup {
    spec: ProblemSpec,
    grid: Grid,
    path: WienerPath,
    handle: CocycleHandle,
    cfg: RunConfig,
}

fn setup() -> Setup {
    let cfg = RunConfig::default();
    let spec = cfg.problem_spec().unwrap();
    let grid = cfg.grid().unwrap();
    let p = cfg.path;
    let path = sample_path(cfg.experiment.seed, p.t_min, p.t_max, p.dt).unwrap();
    let handle = CocycleHandle::new(&spec, &grid, SchemeConfig::new(1e-3), path.clone()).unwrap();
    Setup {
        spec,
        grid,
        path,
        handle,
        cfg,
    }
}

type Outcome = Result<String, String>;

fn judge(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cocycle_axioms(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let x = InitialBundle::new(5.0, 1).member(&s.grid, 0, 0.0);
    let mut worst: f64 = 0.0;
    let mut identity = true;
    let cases = 20;
    for _ in 0..cases {
        let seed = rng.random_range(0..1000u64);
        let t = rng.random_range(1..=40) as f64 * 0.025;
        let r = rng.random_range(1..=40) as f64 * 0.025;
        let tau = rng.random_range(-200..=200) as f64 * 0.01;
        let path = sample_path(seed, -8.0, 8.0, 1e-3).map_err(|e| e.to_string())?;
        let h = CocycleHandle::new(&s.spec, &s.grid, SchemeConfig::new(1e-3), path)
            .map_err(|e| e.to_string())?;
        identity &= h.phi(0.0, tau, &x).map_err(|e| e.to_string())? == x;
        let c = check_cocycle_law(&h, t, r, tau, &x).map_err(|e| e.to_string())?;
        if !c.aligned {
            return Err(format!("case t={t} s={r} not aligned"));
        }
        worst = worst.max(c.residual);
    }
    judge(
        identity && worst <= 1e-10,
        format!("identity bitwise={identity}, worst law residual {worst:e} over {cases} cases (tol 1e-10)"),
    )
}

fn transform_exactness(s: &Setup) -> Outcome {
    let x = InitialBundle::new(10.0, 2).member(&s.grid, 1, 0.0);
    let random = s.handle.with_epsilon(0.0).map_err(|e| e.to_string())?;
    let det =
        CocycleHandle::deterministic(&s.spec.with_epsilon(0.0), &s.grid, SchemeConfig::new(1e-3))
            .map_err(|e| e.to_string())?;
    let a = random.phi(2.0, -1.0, &x).map_err(|e| e.to_string())?;
    let b = det.phi(2.0, -1.0, &x).map_err(|e| e.to_string())?;
    let bitwise = a == b;
    let mut worst: f64 = 0.0;
    for t in [-30.0, -3.3, 0.0, 1.7, 20.0] {
        let z = s
            .handle
            .noise_for(0.0)
            .unwrap()
            .z(t)
            .map_err(|e| e.to_string())?;
        let back = x.to_transformed(z).to_physical(z);
        worst = worst.max(back.dist2_sq(&x).sqrt() / x.norm2_sq().sqrt());
        let fwd = x
            .rescaled(1.0, Frame::Transformed)
            .to_physical(z)
            .to_transformed(z);
        worst = worst.max(fwd.dist2_sq(&x).sqrt() / x.norm2_sq().sqrt());
    }
    judge(
        bitwise && worst <= 1e-14,
        format!("eps=0 random vs deterministic bitwise={bitwise}, z round-trip error {worst:e} (tol 1e-14)"),
    )
}

fn energy_inequality(s: &Setup) -> Outcome {
    let sim = s.cfg.experiment.simulate;
    let noise = s.handle.noise_for(0.0).map_err(|e| e.to_string())?;
    let mut x0 = InitialBundle::new(sim.x0_radius, 1)
        .member(&s.grid, 0, 0.0)
        .to_transformed(noise.z(sim.t_start).map_err(|e| e.to_string())?);
    x0.t = sim.t_start;
    let check = |dt: f64| {
        let integ =
            Integrator::new(&s.spec, &s.grid, SchemeConfig::new(dt)).map_err(|e| e.to_string())?;
        energy_inequality_check(&integ, &noise, &x0, sim.window_start, sim.t_end, sim.slack)
            .map_err(|e| e.to_string())
    };
    let a = check(1e-3)?;
    let b = check(5e-4)?;
    let gain = a.eta / b.eta;
    judge(
        a.passed() && b.passed() && gain >= 1.5,
        format!(
            "span {}: worst residual {:e} <= defect {:e} (c_fit {:.4}); defect shrinks {gain:.3}x under dt halving (need 1.5)",
            sim.t_end - sim.window_start,
            a.worst_residual,
            a.eta,
            a.c_fit
        ),
    )
}

fn matrix(s: &Setup) -> Result<PullbackMatrix, String> {
    let bundles = [InitialBundle::new(10.0, 4), InitialBundle::new(100.0, 4)];
    PullbackMatrix::run(
        &s.handle,
        0.0,
        &[0.1, 0.2, 0.4],
        &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        &bundles,
    )
    .map_err(|e| e.to_string())
}

fn uniform_absorption(s: &Setup, m: &PullbackMatrix) -> Outcome {
    let ladder = s.cfg.ladder(&s.spec).map_err(|e| e.to_string())?;
    let r = absorption_test(
        m,
        &s.path,
        &s.spec,
        &ladder,
        1,
        AbsorptionSettings {
            quad_horizon: 80.0,
            slack: 0.05,
            reference_depth: 16.0,
        },
    )
    .map_err(|e| e.to_string())?;
    judge(
        r.passed(16.0) && r.bundle_spread <= 0.05,
        format!(
            "T_abs {:?} (need <= 16), one c_fit {:e}, L_eps monotone={}, L_0 {:.4}, radius 10 vs 100 spread {:.2e}",
            r.t_abs, r.c_fit, r.l_monotone, r.l_zero, r.bundle_spread
        ),
    )
}

fn lp_and_truncation(m: &PullbackMatrix) -> Outcome {
    let lp = lp_bound_test(m, 8.0);
    let tr = truncation_test(m, &geometric_grid(0.01, 12), 4.0, 1e-6, 8.0);
    judge(
        lp.passed() && tr.passed(),
        format!(
            "ceiling {:e} over eps and t_back >= 8; tail <= 1e-6 at M = {:?}; tail monotone in M at every cell={}",
            lp.ceiling, tr.uniform_m, tr.monotone
        ),
    )
}

fn lp_cauchy(s: &Setup) -> Outcome {
    let c = &s.cfg.experiment.cauchy;
    let r = lp_cauchy_test(
        &s.handle,
        0.0,
        &[4.0, 8.0, 16.0, 32.0],
        &c.eps_sequence(),
        &InitialBundle::new(10.0, 4),
        c.m,
    )
    .map_err(|e| e.to_string())?;
    judge(
        r.passed(1e-4, 1e-12),
        format!(
            "monotone={}, d(16,32) {:e} (tol 1e-4), partition error {:e} (tol 1e-12), split bounds hold={}",
            r.monotone, r.last_pair, r.max_partition_error, r.bounds_hold
        ),
    )
}

fn eps_continuity(s: &Setup) -> Outcome {
    let c = &s.cfg.experiment.continuity;
    let gaps = [0.1, 0.05, 0.025, 0.0125];
    let x0 = InitialBundle::new(c.x0_radius, 1).member(&s.grid, 0, 0.0);
    let near: Vec<f64> = gaps.iter().map(|g| 0.2 + g).collect();
    let r =
        epsilon_continuity(&s.handle, 0.0, c.t_span, 0.2, &near, &x0).map_err(|e| e.to_string())?;
    let r0 =
        epsilon_continuity(&s.handle, 0.0, c.t_span, 0.0, &gaps, &x0).map_err(|e| e.to_string())?;
    let last0 = r0.last().unwrap_or(f64::NAN);
    judge(
        r.monotone && r.ratios_within(1.6, 2.4) && r0.monotone && last0 <= 1e-3,
        format!(
            "ratios {:?} (need [1.6, 2.4]); eps->0 deviation monotone={} and {last0:e} at gap 0.0125 (tol 1e-3)",
            r.ratios.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            r0.monotone
        ),
    )
}

fn random_equilibrium(s: &Setup) -> Outcome {
    let tol = 1e-6;
    let bundle = InitialBundle::new(10.0, 10);
    let r = equilibrium(
        &s.handle,
        0.0,
        &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        &bundle,
        tol,
        2.0,
    )
    .map_err(|e| e.to_string())?;
    let ladder = s.cfg.ladder(&s.spec).map_err(|e| e.to_string())?;
    let (_, b0) = ladder.rates(&s.spec).map_err(|e| e.to_string())?;
    let inv = equilibrium_invariance(&s.handle, &r, &bundle, &[1.0, 2.0, 4.0])
        .map_err(|e| e.to_string())?;
    judge(
        r.final_spread() <= tol && r.b_fit >= 0.8 * b0 && inv.max_residual() <= 2.0 * tol,
        format!(
            "spread {:e} at t_back 32 (tol 1e-6), b_fit {:.4} >= 0.8 b0 = {:.4}, invariance residual {:e} (tol 2e-6)",
            r.final_spread(),
            r.b_fit,
            0.8 * b0,
            inv.max_residual()
        ),
    )
}

fn oracle(s: &Setup) -> Outcome {
    let grid = Grid::new(1, 8.0, 33).map_err(|e| e.to_string())?;
    let noise = s.handle.noise_for(0.0).map_err(|e| e.to_string())?;
    let x = InitialBundle::new(3.0, 1).member(&grid, 0, 0.0);
    let mut x0 = x.to_transformed(noise.z(0.0).map_err(|e| e.to_string())?);
    x0.t = 0.0;
    let reference =
        reference_integrate(&x0, 1.0, &s.spec, &noise, 1e-11).map_err(|e| e.to_string())?;
    let err = |dt: f64| -> Result<f64, String> {
        let integ =
            Integrator::new(&s.spec, &grid, SchemeConfig::new(dt)).map_err(|e| e.to_string())?;
        let end = integ
            .advance(&x0, 1.0, &noise, |_, _, _| {})
            .map_err(|e| e.to_string())?;
        Ok(end.dist2_sq(&reference).sqrt() / reference.norm2_sq().sqrt())
    };
    let (e1, e2) = (err(1e-3)?, err(5e-4)?);
    judge(
        e1 <= 5e-3 && e1 / e2 >= 1.5,
        format!("33 nodes, span 1: relative L2 gap {e1:e} at dt 1e-3 (tol 5e-3), {:.3}x smaller at dt 5e-4 (need 1.5)", e1 / e2),
    )
}

fn reproducibility(s: &Setup) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let mut cfg = s.cfg.clone();
        cfg.output = dir.path().join(format!("run{k}"));
        run(&cfg).map_err(|e| e.to_string())?;
        runs.push(cfg.output);
    }
    let mut names: Vec<String> = fs::read_dir(&runs[0])
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let same = names
        .iter()
        .all(|n| fs::read(runs[0].join(n)).ok() == fs::read(runs[1].join(n)).ok());
    judge(
        same && names.len() == 7,
        format!(
            "{} CSV files byte-identical across two runs={same}",
            names.len()
        ),
    )
}

fn main() -> ExitCode {
    let s = setup();
    let m = matrix(&s);
    let results: Vec<(&str, Outcome)> = vec![
        ("cocycle axioms", cocycle_axioms(&s)),
        ("transform exactness", transform_exactness(&s)),
        ("energy inequality", energy_inequality(&s)),
        (
            "uniform absorption",
            m.as_ref()
                .map_err(Clone::clone)
                .and_then(|m| uniform_absorption(&s, m)),
        ),
        (
            "Lp bound and truncation",
            m.as_ref().map_err(Clone::clone).and_then(lp_and_truncation),
        ),
        ("Lp Cauchy", lp_cauchy(&s)),
        ("eps-continuity", eps_continuity(&s)),
        ("random equilibrium", random_equilibrium(&s)),
        ("oracle equivalence", oracle(&s)),
        ("reproducibility", reproducibility(&s)),
    ];

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
