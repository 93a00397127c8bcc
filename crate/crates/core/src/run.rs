//! Experiment orchestration: builds the problem from a [`RunConfig`], runs
//! the requested experiments, writes one CSV per report and a
//! `summary.json` with every check.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::attractor::{
    absorption_test, epsilon_continuity, equilibrium, equilibrium_invariance, geometric_grid,
    lp_bound_test, lp_cauchy_test, truncation_test, AbsorptionSettings, EquilibriumReport,
    InitialBundle, PullbackMatrix,
};
use crate::cocycle::CocycleHandle;
use crate::config::{ExperimentName, RunConfig, Violation};
use crate::energy::energy_inequality_check;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::paths::{sample_path, WienerPath};
use crate::problem::{ExponentLadder, ProblemSpec};
use crate::solver::{Integrator, SchemeConfig};

/// One checked property with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
        }
    }

    fn finite(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            passed: value.is_finite(),
            value,
            threshold: f64::INFINITY,
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub experiment: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Failed(#[from] Error),
}

impl RunError {
    /// Process exit status: 2 for an invalid configuration, 3 for a
    /// numerical blow-up, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::Failed(e) if e.is_blow_up() => 3,
            RunError::Failed(_) => 1,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<ExperimentName>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(e) = self.experiment {
            cfg.experiment.name = e;
        }
        if let Some(s) = self.seed {
            cfg.experiment.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
    }
}

struct Context {
    spec: ProblemSpec,
    grid: Grid,
    scheme: SchemeConfig,
    ladder: ExponentLadder,
    path: WienerPath,
    handle: CocycleHandle,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Validates, runs and writes the reports. On a failure after validation
/// the reports written so far stay on disk and `summary.json` records the
/// error.
pub fn run(cfg: &RunConfig) -> std::result::Result<Summary, RunError> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(RunError::Invalid(violations));
    }
    let dir = cfg.output.as_path();
    fs::create_dir_all(dir).map_err(Error::from)?;
    let mut writer = Writer {
        dir,
        files: Vec::new(),
    };
    let mut checks = Vec::new();
    let result = execute(cfg, &mut writer, &mut checks);
    let summary = Summary {
        schema: cfg.schema,
        experiment: cfg.experiment.name.to_string(),
        seed: cfg.experiment.seed,
        passed: result.is_ok() && checks.iter().all(|c| c.passed),
        checks,
        files: writer.files.clone(),
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    fs::write(dir.join("summary.json"), json + "\n").map_err(Error::from)?;
    result?;
    Ok(summary)
}

fn context(cfg: &RunConfig) -> Result<Context> {
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let scheme = cfg.scheme();
    let ladder = cfg.ladder(&spec)?;
    let p = &cfg.path;
    let path = sample_path(cfg.experiment.seed, p.t_min, p.t_max, p.dt)?;
    let handle = CocycleHandle::new(&spec, &grid, scheme, path.clone())?;
    Ok(Context {
        spec,
        grid,
        scheme,
        ladder,
        path,
        handle,
    })
}

fn execute(cfg: &RunConfig, w: &mut Writer, checks: &mut Vec<Check>) -> Result<()> {
    let ctx = context(cfg)?;
    let x = &cfg.experiment;
    let runs = x.name.expand();
    let mut matrix: Option<PullbackMatrix> = None;
    let mut eq: Option<EquilibriumReport> = None;
    let bundles: Vec<InitialBundle> = x.bundles.iter().map(|b| b.bundle()).collect();

    for e in runs {
        match e {
            ExperimentName::Simulate => simulate(cfg, &ctx, w, checks)?,
            ExperimentName::Absorb | ExperimentName::Lp | ExperimentName::Truncate => {
                if matrix.is_none() {
                    matrix = Some(PullbackMatrix::run(
                        &ctx.handle,
                        x.tau,
                        &x.eps_grid,
                        &x.t_back_grid,
                        &bundles,
                    )?);
                }
                let m = matrix.as_ref().expect("matrix computed above");
                match e {
                    ExperimentName::Absorb => {
                        let a = &x.absorption;
                        let r = absorption_test(
                            m,
                            &ctx.path,
                            &ctx.spec,
                            &ctx.ladder,
                            ctx.grid.dim,
                            AbsorptionSettings {
                                quad_horizon: x.quad_horizon,
                                slack: a.slack,
                                reference_depth: a.reference_depth,
                            },
                        )?;
                        w.write("absorption.csv", &r.to_csv())?;
                        checks.push(Check::at_most(
                            "absorption_time",
                            r.t_abs.unwrap_or(f64::INFINITY),
                            a.t_abs_max,
                        ));
                        checks.push(Check::flag("absorbing_functional_monotone", r.l_monotone));
                        checks.push(Check::finite("absorbing_functional_zero_limit", r.l_zero));
                        if bundles.len() > 1 {
                            checks.push(Check::at_most(
                                "bundle_forgetting",
                                r.bundle_spread,
                                a.forgetting_tol,
                            ));
                        }
                    }
                    ExperimentName::Lp => {
                        let r = lp_bound_test(m, x.lp.t_min);
                        w.write("lp.csv", &r.to_csv())?;
                        checks.push(Check::finite("lp_ceiling", r.ceiling));
                        checks.push(Check::finite("lp_inequality_constant", r.c_lp));
                    }
                    _ => {
                        let t = &x.truncation;
                        let r = truncation_test(
                            m,
                            &geometric_grid(t.m0, t.m_count),
                            ctx.spec.p(),
                            t.eta,
                            t.t_min,
                        );
                        w.write("truncation.csv", &r.to_csv())?;
                        checks.push(Check::flag("tail_monotone_in_m", r.monotone));
                        checks.push(Check::at_most(
                            "uniform_truncation_level",
                            r.uniform_m.unwrap_or(f64::INFINITY),
                            t.m0 * 2f64.powi(t.m_count as i32 - 1),
                        ));
                    }
                }
            }
            ExperimentName::Cauchy => {
                let c = &x.cauchy;
                let r = lp_cauchy_test(
                    &ctx.handle,
                    x.tau,
                    &c.t_back,
                    &c.eps_sequence(),
                    &c.bundle.bundle(),
                    c.m,
                )?;
                w.write("cauchy.csv", &r.to_csv())?;
                checks.push(Check::flag("cauchy_monotone", r.monotone));
                checks.push(Check::at_most("cauchy_last_pair", r.last_pair, c.tol));
                checks.push(Check::at_most(
                    "cauchy_partition",
                    r.max_partition_error,
                    c.partition_tol,
                ));
                checks.push(Check::flag("cauchy_split_bounds", r.bounds_hold));
            }
            ExperimentName::Continuity => {
                let c = &x.continuity;
                let x0 = InitialBundle::new(c.x0_radius, 1).member(&ctx.grid, 0, 0.0);
                let near: Vec<f64> = c.gaps.iter().map(|g| c.eps0 + g).collect();
                let r = epsilon_continuity(&ctx.handle, x.tau, c.t_span, c.eps0, &near, &x0)?;
                let r0 = epsilon_continuity(&ctx.handle, x.tau, c.t_span, 0.0, &c.gaps, &x0)?;
                let mut csv = r.to_csv();
                csv.push_str(r0.to_csv().split_once('\n').map_or("", |(_, rest)| rest));
                w.write("continuity.csv", &csv)?;
                let worst = |lo: bool| {
                    r.ratios
                        .iter()
                        .copied()
                        .reduce(if lo { f64::min } else { f64::max })
                        .unwrap_or(f64::NAN)
                };
                checks.push(Check::flag("continuity_monotone", r.monotone));
                checks.push(Check::at_least(
                    "continuity_ratio_min",
                    worst(true),
                    c.ratio_min,
                ));
                checks.push(Check::at_most(
                    "continuity_ratio_max",
                    worst(false),
                    c.ratio_max,
                ));
                checks.push(Check::flag("zero_limit_monotone", r0.monotone));
                checks.push(Check::at_most(
                    "zero_limit_deviation",
                    r0.last().unwrap_or(f64::NAN),
                    c.zero_limit_tol,
                ));
            }
            ExperimentName::Equilibrium | ExperimentName::Invariance => {
                let q = &x.equilibrium;
                let bundle = q.bundle.bundle();
                if eq.is_none() {
                    eq = Some(equilibrium(
                        &ctx.handle,
                        x.tau,
                        &q.t_back,
                        &bundle,
                        q.tol,
                        q.fit_from,
                    )?);
                }
                let r = eq.as_ref().expect("equilibrium computed above");
                if e == ExperimentName::Equilibrium {
                    w.write("equilibrium.csv", &r.to_csv())?;
                    let (_, b0) = ctx.ladder.rates(&ctx.spec)?;
                    checks.push(Check::at_most(
                        "equilibrium_spread",
                        r.final_spread(),
                        q.tol,
                    ));
                    checks.push(Check::at_least(
                        "equilibrium_rate",
                        r.b_fit,
                        q.rate_factor * b0,
                    ));
                    checks.push(Check::at_most(
                        "equilibrium_error_estimate",
                        r.err_est,
                        q.tol,
                    ));
                } else {
                    let inv = equilibrium_invariance(&ctx.handle, r, &bundle, &x.invariance.t)?;
                    w.write("invariance.csv", &inv.to_csv())?;
                    checks.push(Check::at_most(
                        "invariance_residual",
                        inv.max_residual(),
                        x.invariance.factor * q.tol,
                    ));
                }
            }
            ExperimentName::All => unreachable!("expanded"),
        }
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, ctx: &Context, w: &mut Writer, checks: &mut Vec<Check>) -> Result<()> {
    let s = &cfg.experiment.simulate;
    let noise = ctx.handle.noise_for(0.0)?;
    let mut x0 = InitialBundle::new(s.x0_radius, 1)
        .member(&ctx.grid, 0, 0.0)
        .to_transformed(noise.z(s.t_start)?);
    x0.t = s.t_start;
    let run_with = |dt: f64| {
        let scheme = SchemeConfig { dt, ..ctx.scheme };
        let integ = Integrator::new(&ctx.spec, &ctx.grid, scheme)?;
        energy_inequality_check(&integ, &noise, &x0, s.window_start, s.t_end, s.slack)
    };
    let full = run_with(ctx.scheme.dt)?;
    let half = run_with(0.5 * ctx.scheme.dt)?;
    w.write("energy.csv", &full.to_csv())?;
    checks.push(Check::at_most(
        "energy_inequality",
        full.worst_residual,
        full.eta,
    ));
    let gain = if half.eta > 0.0 {
        full.eta / half.eta
    } else if full.eta == 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    };
    checks.push(Check::at_least(
        "energy_defect_halving",
        gain,
        s.min_halving_gain,
    ));
    Ok(())
}
