//! JSON run configuration and its validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attractor::InitialBundle;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::problem::{
    build_ladder, default_cubic, ExponentLadder, ForcingSpec, Nonlinearity, ProblemSpec, Wave,
};
use crate::solver::SchemeConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub scheme: SchemeSection,
    pub path: PathConfig,
    pub experiment: ExperimentConfig,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub a: f64,
    pub nonlinearity: NonlinearityConfig,
    pub g: ForcingConfig,
    pub h: ForcingConfig,
    /// Replaces entries of the default exponent ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Cubic { a0: f64 },
    Linear { c: f64, alpha1: f64 },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveConfig {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub amplitude: f64,
    pub frequency: f64,
    pub width: f64,
    pub wave: WaveConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub delta0: Option<f64>,
    pub delta01: Option<f64>,
    pub delta1: Option<f64>,
    pub b0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    #[serde(rename = "l")]
    pub half_width: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub dt: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub dt: f64,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Simulate,
    Absorb,
    Lp,
    Truncate,
    Cauchy,
    Continuity,
    Equilibrium,
    Invariance,
    All,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 9] = [
        Self::Simulate,
        Self::Absorb,
        Self::Lp,
        Self::Truncate,
        Self::Cauchy,
        Self::Continuity,
        Self::Equilibrium,
        Self::Invariance,
        Self::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Absorb => "absorb",
            Self::Lp => "lp",
            Self::Truncate => "truncate",
            Self::Cauchy => "cauchy",
            Self::Continuity => "continuity",
            Self::Equilibrium => "equilibrium",
            Self::Invariance => "invariance",
            Self::All => "all",
        }
    }

    /// The single experiments this name stands for, in run order.
    pub fn expand(self) -> Vec<ExperimentName> {
        match self {
            Self::All => vec![
                Self::Absorb,
                Self::Lp,
                Self::Truncate,
                Self::Cauchy,
                Self::Continuity,
                Self::Equilibrium,
                Self::Invariance,
            ],
            one => vec![one],
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::param("experiment.name", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    pub radius: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_rate: Option<f64>,
}

impl BundleConfig {
    pub fn bundle(&self) -> InitialBundle {
        InitialBundle {
            radius: self.radius,
            count: self.count,
            growth_rate: self.growth_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub tau: f64,
    pub seed: u64,
    pub eps_grid: Vec<f64>,
    pub t_back_grid: Vec<f64>,
    pub bundles: Vec<BundleConfig>,
    pub quad_horizon: f64,
    pub simulate: SimulateConfig,
    pub absorption: AbsorptionConfig,
    pub lp: LpConfig,
    pub truncation: TruncationConfig,
    pub cauchy: CauchyConfig,
    pub continuity: ContinuityConfig,
    pub equilibrium: EquilibriumConfig,
    pub invariance: InvarianceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub t_start: f64,
    pub window_start: f64,
    pub t_end: f64,
    pub x0_radius: f64,
    pub slack: f64,
    /// Smallest accepted shrink factor of the discretization defect when
    /// `dt` is halved.
    pub min_halving_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionConfig {
    pub slack: f64,
    pub reference_depth: f64,
    pub t_abs_max: f64,
    pub forgetting_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpConfig {
    pub t_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub m0: f64,
    pub m_count: usize,
    pub eta: f64,
    pub t_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyConfig {
    pub t_back: Vec<f64>,
    /// Intensities follow `eps0 + eps_amplitude exp(-t_back)`.
    pub eps0: f64,
    pub eps_amplitude: f64,
    pub bundle: BundleConfig,
    pub m: f64,
    pub tol: f64,
    pub partition_tol: f64,
}

impl CauchyConfig {
    pub fn eps_sequence(&self) -> Vec<f64> {
        self.t_back
            .iter()
            .map(|t| self.eps0 + self.eps_amplitude * (-t).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityConfig {
    pub eps0: f64,
    pub gaps: Vec<f64>,
    pub t_span: f64,
    pub x0_radius: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Bound on the deviation from the noise-free solution at the smallest gap.
    pub zero_limit_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub t_back: Vec<f64>,
    pub bundle: BundleConfig,
    pub tol: f64,
    pub fit_from: f64,
    /// `b_fit` must reach `rate_factor * b0`.
    pub rate_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub t: Vec<f64>,
    /// Residuals must stay below `factor * equilibrium.tol`.
    pub factor: f64,
}

/// One failed precondition, named by its dotted config key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn forcing(c: &ForcingConfig) -> ForcingSpec {
    ForcingSpec {
        amplitude: c.amplitude,
        frequency: c.frequency,
        width: c.width,
        wave: match c.wave {
            WaveConfig::Cos => Wave::Cos,
            WaveConfig::Sin => Wave::Sin,
        },
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let bump = |amplitude, wave| ForcingConfig {
            amplitude,
            frequency: 1.0,
            width: 1.0,
            wave,
        };
        Self {
            schema: SCHEMA_VERSION,
            problem: ProblemConfig {
                lambda: 1.0,
                alpha: 1.0,
                beta: 1.0,
                sigma: 1.0,
                epsilon: 0.2,
                a: 0.5,
                nonlinearity: NonlinearityConfig::Cubic { a0: 0.1 },
                g: bump(0.1, WaveConfig::Cos),
                h: bump(0.05, WaveConfig::Sin),
                ladder: None,
            },
            grid: GridConfig {
                dim: 1,
                half_width: 8.0,
                n: 129,
            },
            scheme: SchemeSection {
                dt: 1e-3,
                record_every: 1,
            },
            path: PathConfig {
                dt: 1e-3,
                t_min: -100.0,
                t_max: 40.0,
            },
            experiment: ExperimentConfig {
                name: ExperimentName::All,
                tau: 0.0,
                seed: 7,
                eps_grid: vec![0.1, 0.2, 0.4],
                t_back_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
                bundles: vec![
                    BundleConfig {
                        radius: 10.0,
                        count: 4,
                        growth_rate: None,
                    },
                    BundleConfig {
                        radius: 100.0,
                        count: 4,
                        growth_rate: None,
                    },
                ],
                quad_horizon: 80.0,
                simulate: SimulateConfig {
                    t_start: -32.0,
                    window_start: 0.0,
                    t_end: 32.0,
                    x0_radius: 10.0,
                    slack: 0.05,
                    min_halving_gain: 1.5,
                },
                absorption: AbsorptionConfig {
                    slack: 0.05,
                    reference_depth: 16.0,
                    t_abs_max: 16.0,
                    forgetting_tol: 0.05,
                },
                lp: LpConfig { t_min: 8.0 },
                truncation: TruncationConfig {
                    m0: 0.01,
                    m_count: 12,
                    eta: 1e-6,
                    t_min: 8.0,
                },
                cauchy: CauchyConfig {
                    t_back: vec![4.0, 8.0, 16.0, 32.0],
                    eps0: 0.2,
                    eps_amplitude: 0.1,
                    bundle: BundleConfig {
                        radius: 10.0,
                        count: 4,
                        growth_rate: None,
                    },
                    m: 0.5,
                    tol: 1e-4,
                    partition_tol: 1e-12,
                },
                continuity: ContinuityConfig {
                    eps0: 0.2,
                    gaps: vec![0.1, 0.05, 0.025, 0.0125],
                    t_span: 1.0,
                    x0_radius: 0.0,
                    ratio_min: 1.6,
                    ratio_max: 2.4,
                    zero_limit_tol: 1e-3,
                },
                equilibrium: EquilibriumConfig {
                    t_back: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
                    bundle: BundleConfig {
                        radius: 10.0,
                        count: 10,
                        growth_rate: None,
                    },
                    tol: 1e-6,
                    fit_from: 2.0,
                    rate_factor: 0.8,
                },
                invariance: InvarianceConfig {
                    t: vec![1.0, 2.0, 4.0],
                    factor: 2.0,
                },
            },
            output: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let p = &self.problem;
        let nonlinearity = match p.nonlinearity {
            NonlinearityConfig::Cubic { a0 } => default_cubic(a0)?,
            NonlinearityConfig::Linear { c, alpha1 } => Nonlinearity::linear(c, alpha1),
            NonlinearityConfig::Zero => Nonlinearity::zero(),
        };
        Ok(ProblemSpec {
            lambda: p.lambda,
            alpha: p.alpha,
            beta: p.beta,
            sigma: p.sigma,
            epsilon: p.epsilon,
            a: p.a,
            nonlinearity,
            g: forcing(&p.g),
            h: forcing(&p.h),
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.half_width, self.grid.n)
    }

    pub fn scheme(&self) -> SchemeConfig {
        SchemeConfig {
            dt: self.scheme.dt,
            record_every: self.scheme.record_every,
        }
    }

    /// Default ladder with the configured overrides, checked for ordering.
    pub fn ladder(&self, spec: &ProblemSpec) -> Result<ExponentLadder> {
        let mut ladder = build_ladder(spec)?;
        if let Some(o) = self.problem.ladder {
            ladder.delta0 = o.delta0.unwrap_or(ladder.delta0);
            ladder.delta01 = o.delta01.unwrap_or(ladder.delta01);
            ladder.delta1 = o.delta1.unwrap_or(ladder.delta1);
            if ladder.b0.is_some() {
                ladder.b0 = o.b0.or(ladder.b0);
            }
        }
        ladder.check()?;
        Ok(ladder)
    }

    fn needs_equilibrium(&self) -> bool {
        self.experiment
            .name
            .expand()
            .iter()
            .any(|e| matches!(e, ExperimentName::Equilibrium | ExperimentName::Invariance))
    }

    /// The path window `[t_min, t_max]` the enabled experiments read.
    pub fn required_window(&self) -> (f64, f64) {
        let x = &self.experiment;
        let deepest = |g: &[f64]| g.iter().copied().fold(0.0, f64::max);
        let mut lo: f64 = (-x.tau).min(0.0);
        let mut hi: f64 = (-x.tau).max(0.0);
        for e in x.name.expand() {
            match e {
                ExperimentName::Simulate => {
                    lo = lo.min(x.simulate.t_start);
                    hi = hi.max(x.simulate.t_end);
                }
                ExperimentName::Absorb => {
                    lo = lo.min(-deepest(&x.t_back_grid)).min(-x.quad_horizon)
                }
                ExperimentName::Lp | ExperimentName::Truncate => {
                    lo = lo.min(-deepest(&x.t_back_grid))
                }
                ExperimentName::Cauchy => lo = lo.min(-deepest(&x.cauchy.t_back)),
                ExperimentName::Continuity => hi = hi.max(x.continuity.t_span),
                ExperimentName::Equilibrium => lo = lo.min(-deepest(&x.equilibrium.t_back)),
                ExperimentName::Invariance => {
                    let t = deepest(&x.invariance.t);
                    lo = lo.min(-deepest(&x.equilibrium.t_back));
                    hi = hi.max(t);
                }
                ExperimentName::All => {}
            }
        }
        (lo, hi)
    }

    /// Every precondition of the enabled experiments, checked without
    /// running anything.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |field: &str, message: String| {
            out.push(Violation {
                field: field.to_string(),
                message,
            })
        };
        let from_error = |e: &Error| match e {
            Error::InvalidParameter { field, reason } => {
                (format!("problem.{field}"), reason.clone())
            }
            other => ("problem".to_string(), other.to_string()),
        };

        if self.schema != SCHEMA_VERSION {
            bad(
                "schema",
                format!(
                    "unsupported schema {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            );
        }

        let spec = match self.problem_spec() {
            Ok(s) => match s.validate() {
                Ok(()) => Some(s),
                Err(e) => {
                    let (f, m) = from_error(&e);
                    bad(&f, m);
                    None
                }
            },
            Err(e) => {
                let (f, m) = from_error(&e);
                bad(&f, m);
                None
            }
        };
        let mut delta1 = None;
        if let Some(spec) = &spec {
            match self.ladder(spec) {
                Ok(l) => delta1 = Some(l.delta1),
                Err(e) => bad("problem.ladder", e.to_string()),
            }
            if self.needs_equilibrium() {
                if let Err(e) = spec.equilibrium_condition() {
                    bad("problem", e.to_string());
                }
            }
        }

        if let Err(e) = self.grid() {
            bad("grid", e.to_string());
        }

        let p = &self.path;
        if !(p.dt > 0.0) || !p.dt.is_finite() {
            bad("path.dt", format!("must be positive, got {}", p.dt));
        }
        if !(self.scheme.dt > 0.0) || !self.scheme.dt.is_finite() {
            bad(
                "scheme.dt",
                format!("must be positive, got {}", self.scheme.dt),
            );
        } else if self.scheme.dt > p.dt * (1.0 + 1e-9) {
            bad(
                "scheme.dt",
                format!("scheme.dt = {} exceeds path.dt = {}", self.scheme.dt, p.dt),
            );
        }
        if self.scheme.record_every == 0 {
            bad("scheme.record_every", "must be at least 1".into());
        }
        let (lo, hi) = self.required_window();
        if p.t_min > lo {
            bad(
                "path.t_min",
                format!(
                    "path.t_min = {} does not reach {lo} needed by the experiments",
                    p.t_min
                ),
            );
        }
        if p.t_max < hi {
            bad(
                "path.t_max",
                format!(
                    "path.t_max = {} does not reach {hi} needed by the experiments",
                    p.t_max
                ),
            );
        }

        let x = &self.experiment;
        let a = self.problem.a;
        let in_range = |e: f64| e > 0.0 && e <= a;
        let increasing_positive =
            |g: &[f64]| !g.is_empty() && g[0] > 0.0 && g.windows(2).all(|w| w[0] < w[1]);
        if !x.tau.is_finite() {
            bad("experiment.tau", "must be finite".into());
        }
        let runs = x.name.expand();
        let uses = |e: ExperimentName| runs.contains(&e);
        let matrix = uses(ExperimentName::Absorb)
            || uses(ExperimentName::Lp)
            || uses(ExperimentName::Truncate);
        if matrix {
            if x.eps_grid.is_empty() || !x.eps_grid.iter().all(|&e| in_range(e)) {
                bad(
                    "experiment.eps_grid",
                    format!("needs values in (0, a] = (0, {a}]"),
                );
            }
            if !increasing_positive(&x.t_back_grid) {
                bad(
                    "experiment.t_back_grid",
                    "must be positive and strictly increasing".into(),
                );
            }
            if x.bundles.is_empty() {
                bad("experiment.bundles", "needs at least one bundle".into());
            }
            for (i, b) in x.bundles.iter().enumerate() {
                if let Some(d1) = delta1 {
                    if let Err(e) = b.bundle().validate(d1) {
                        bad(&format!("experiment.bundles[{i}]"), e.to_string());
                    }
                }
            }
        }
        if uses(ExperimentName::Absorb) && !(x.quad_horizon > 0.0) {
            bad("experiment.quad_horizon", "must be positive".into());
        }
        if uses(ExperimentName::Truncate) {
            let t = &x.truncation;
            if !(t.m0 > 0.0) || t.m_count == 0 {
                bad(
                    "experiment.truncation",
                    "needs m0 > 0 and m_count >= 1".into(),
                );
            }
            if !(t.eta > 0.0) {
                bad("experiment.truncation.eta", "must be positive".into());
            }
        }
        if uses(ExperimentName::Simulate) {
            let s = &x.simulate;
            if !(s.t_start < s.window_start && s.window_start < s.t_end) {
                bad(
                    "experiment.simulate",
                    "needs t_start < window_start < t_end".into(),
                );
            }
            if !(s.x0_radius >= 0.0) {
                bad(
                    "experiment.simulate.x0_radius",
                    "must be nonnegative".into(),
                );
            }
        }
        if uses(ExperimentName::Cauchy) {
            let c = &x.cauchy;
            if c.t_back.len() < 2 || !increasing_positive(&c.t_back) {
                bad(
                    "experiment.cauchy.t_back",
                    "needs at least two positive, strictly increasing depths".into(),
                );
            }
            if !c.eps_sequence().iter().all(|&e| in_range(e)) {
                bad(
                    "experiment.cauchy.eps0",
                    format!("intensities must lie in (0, {a}]"),
                );
            }
            if let Some(d1) = delta1 {
                if let Err(e) = c.bundle.bundle().validate(d1) {
                    bad("experiment.cauchy.bundle", e.to_string());
                }
            }
            if !(c.m > 0.0) {
                bad("experiment.cauchy.m", "must be positive".into());
            }
        }
        if uses(ExperimentName::Continuity) {
            let c = &x.continuity;
            if !(c.t_span > 0.0) {
                bad("experiment.continuity.t_span", "must be positive".into());
            }
            if c.gaps.is_empty() || !c.gaps.iter().all(|&g| g > 0.0) {
                bad("experiment.continuity.gaps", "needs positive gaps".into());
            }
            if !in_range(c.eps0) || !c.gaps.iter().all(|&g| in_range(c.eps0 + g) && in_range(g)) {
                bad(
                    "experiment.continuity.eps0",
                    format!("eps0, eps0 + gap and gap must lie in (0, {a}]"),
                );
            }
        }
        if uses(ExperimentName::Equilibrium) || uses(ExperimentName::Invariance) {
            let e = &x.equilibrium;
            if !increasing_positive(&e.t_back) {
                bad(
                    "experiment.equilibrium.t_back",
                    "must be positive and strictly increasing".into(),
                );
            }
            if let Some(d1) = delta1 {
                if let Err(err) = e.bundle.bundle().validate(d1) {
                    bad("experiment.equilibrium.bundle", err.to_string());
                }
            }
            if !(e.tol > 0.0) {
                bad("experiment.equilibrium.tol", "must be positive".into());
            }
        }
        if uses(ExperimentName::Invariance) && !x.invariance.t.iter().all(|&t| t >= 0.0) {
            bad(
                "experiment.invariance.t",
                "forward times must be nonnegative".into(),
            );
        }
        out
    }
}
