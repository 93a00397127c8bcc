//! Physical parameters, the reaction term with its growth majorants, the
//! time-dependent forcings and the exponent ladder used by the estimates.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reaction term `f(x, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reaction {
    /// `f(x, s) = -s^3 + a0 exp(-|x|^2) s`.
    Cubic { a0: f64 },
    /// `f(x, s) = c s`. Not dissipative; used to exercise the condition checker.
    Linear { c: f64 },
    /// `f = 0`.
    Zero,
}

/// The reaction term together with its declared majorant constants.
///
/// The profiles `psi1..psi4` are fixed by the reaction kind. For the cubic
/// they come from completing the square; the other kinds declare zero
/// profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    pub reaction: Reaction,
    pub p: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
}

/// Bound on `|s|` under which the spatial-derivative profile `psi3` of the
/// cubic holds. The derivative in `x` grows linearly in `s`, so no bound
/// uniform in `s` exists.
pub const PSI3_STATE_BOUND: f64 = 10.0;

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// Cubic with majorants `p = 4`, `alpha1 = 1/2`, `alpha2 = 2`, `alpha3 = a0`,
/// `alpha4 = 3`.
pub fn default_cubic(a0: f64) -> Result<Nonlinearity> {
    if !(a0 > 0.0) || !a0.is_finite() {
        return Err(Error::param("a0", "must be positive"));
    }
    Ok(Nonlinearity {
        reaction: Reaction::Cubic { a0 },
        p: 4.0,
        alpha1: 0.5,
        alpha2: 2.0,
        alpha3: a0,
        alpha4: 3.0,
    })
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self {
            reaction: Reaction::Zero,
            p: 2.0,
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            alpha4: 0.0,
        }
    }

    /// `f(x, s) = c s` with a claimed `alpha1` and all other majorants taken
    /// as the exact Lipschitz data of the line.
    pub fn linear(c: f64, claimed_alpha1: f64) -> Self {
        Self {
            reaction: Reaction::Linear { c },
            p: 2.0,
            alpha1: claimed_alpha1,
            alpha2: c.abs(),
            alpha3: c.max(0.0),
            alpha4: c.abs(),
        }
    }

    /// Spatial weight `exp(-|x|^2)` shared by the cubic and its profiles.
    pub fn weight(x: &[f64]) -> f64 {
        (-sq_norm(x)).exp()
    }

    /// `f` at a node with precomputed weight `w = exp(-|x|^2)`.
    #[inline]
    pub fn eval_weighted(&self, w: f64, s: f64) -> f64 {
        match self.reaction {
            Reaction::Cubic { a0 } => -s * s * s + a0 * w * s,
            Reaction::Linear { c } => c * s,
            Reaction::Zero => 0.0,
        }
    }

    pub fn f(&self, x: &[f64], s: f64) -> f64 {
        self.eval_weighted(Self::weight(x), s)
    }

    pub fn psi1(&self, x: &[f64]) -> f64 {
        match self.reaction {
            Reaction::Cubic { a0 } => 0.5 * a0 * a0 * (-2.0 * sq_norm(x)).exp(),
            _ => 0.0,
        }
    }

    pub fn psi2(&self, x: &[f64]) -> f64 {
        match self.reaction {
            Reaction::Cubic { a0 } => {
                let c = a0 * Self::weight(x);
                2.0 * c.powf(1.5) / (3.0 * 3f64.sqrt())
            }
            _ => 0.0,
        }
    }

    pub fn psi3(&self, x: &[f64]) -> f64 {
        match self.reaction {
            Reaction::Cubic { a0 } => {
                2.0 * a0 * PSI3_STATE_BOUND * sq_norm(x).sqrt() * Self::weight(x)
            }
            _ => 0.0,
        }
    }

    pub fn psi4(&self, x: &[f64]) -> f64 {
        match self.reaction {
            Reaction::Cubic { a0 } => a0 * Self::weight(x),
            _ => 0.0,
        }
    }

    /// `||psi1||_{L^1(R^dim)}` in closed form.
    pub fn psi1_l1(&self, dim: usize) -> f64 {
        match self.reaction {
            Reaction::Cubic { a0 } => 0.5 * a0 * a0 * (PI / 2.0).powf(dim as f64 / 2.0),
            _ => 0.0,
        }
    }
}

/// Rectangular sample box for [`check_growth_conditions`].
#[derive(Debug, Clone, Copy)]
pub struct SampleBox {
    pub x: (f64, f64),
    pub s: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        Self {
            x: (-5.0, 5.0),
            s: (-10.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEntry {
    pub name: &'static str,
    /// Smallest `rhs - lhs` over the box.
    pub margin: f64,
    pub worst_x: f64,
    pub worst_s: f64,
    /// Round-off allowance at the worst sample.
    pub allowance: f64,
    pub passed: bool,
    /// Informational entries do not count towards [`ConditionReport::all_passed`].
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.entries
            .iter()
            .filter(|e| !e.informational)
            .all(|e| e.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

const FD_REL_STEP: f64 = 1e-6;
/// Relative round-off allowance for finite-difference derivatives.
const FD_ALLOWANCE: f64 = 1e-7;
const EXACT_ALLOWANCE: f64 = 1e-12;

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        0.0
    };
    (0..n).map(move |i| {
        if i + 1 == n && n > 1 {
            hi
        } else {
            lo + i as f64 * step
        }
    })
}

fn central(f: impl Fn(f64) -> f64, at: f64) -> f64 {
    let h = FD_REL_STEP * at.abs().max(1.0);
    (f(at + h) - f(at - h)) / (2.0 * h)
}

/// Spot-checks the structural conditions on `n_samples x n_samples` points
/// of a 1-D box. Derivatives use central differences with a relative step of
/// `1e-6`. Margins may dip below zero by a round-off allowance proportional
/// to the size of the compared terms (`1e-7` relative for derivative
/// conditions, `1e-12` otherwise).
pub fn check_growth_conditions(
    nl: &Nonlinearity,
    bx: SampleBox,
    n_samples: usize,
) -> ConditionReport {
    let p = nl.p;
    struct Acc {
        margin: f64,
        x: f64,
        s: f64,
        allowance: f64,
        ok: bool,
    }
    let mut acc: Vec<Acc> = (0..6)
        .map(|_| Acc {
            margin: f64::INFINITY,
            x: 0.0,
            s: 0.0,
            allowance: 0.0,
            ok: true,
        })
        .collect();

    for x in linspace(bx.x.0, bx.x.1, n_samples) {
        let xs = [x];
        let (p1, p2, p3, p4) = (nl.psi1(&xs), nl.psi2(&xs), nl.psi3(&xs), nl.psi4(&xs));
        for s in linspace(bx.s.0, bx.s.1, n_samples) {
            let f = nl.f(&xs, s);
            let fs = central(|t| nl.f(&xs, t), s);
            let fx = central(|y| nl.f(&[y], s), x);
            let abs_s = s.abs();
            // (rhs, lhs, derivative-based)
            let checks = [
                (-nl.alpha1 * abs_s.powf(p) + p1, f * s, false),
                (nl.alpha2 * abs_s.powf(p - 1.0) + p2, f.abs(), false),
                (nl.alpha3, fs, true),
                (p3, fx.abs(), true),
                (nl.alpha4 * abs_s.powf(p - 2.0) + p4, fs.abs(), true),
                (nl.alpha3, fs * f, true),
            ];
            for (a, (rhs, lhs, fd)) in acc.iter_mut().zip(checks) {
                let m = rhs - lhs;
                let scale = 1.0 + rhs.abs().max(lhs.abs());
                let allow = if fd { FD_ALLOWANCE } else { EXACT_ALLOWANCE } * scale;
                if m < -allow {
                    a.ok = false;
                }
                if m < a.margin {
                    a.margin = m;
                    a.x = x;
                    a.s = s;
                    a.allowance = allow;
                }
            }
        }
    }

    const NAMES: [&str; 6] = [
        "dissipativity",
        "growth",
        "one_sided_lipschitz",
        "spatial_derivative",
        "derivative_growth",
        "one_sided_lipschitz_product",
    ];
    let entries = acc
        .into_iter()
        .zip(NAMES)
        .enumerate()
        .map(|(i, (a, name))| ConditionEntry {
            name,
            margin: a.margin,
            worst_x: a.x,
            worst_s: a.s,
            allowance: a.allowance,
            passed: a.ok,
            informational: i == 5,
        })
        .collect();
    ConditionReport { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Cos,
    Sin,
}

/// `A wave(w t) exp(-|x|^2 / r^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingSpec {
    pub amplitude: f64,
    pub frequency: f64,
    pub width: f64,
    pub wave: Wave,
}

impl ForcingSpec {
    pub fn zero() -> Self {
        Self {
            amplitude: 0.0,
            frequency: 0.0,
            width: 1.0,
            wave: Wave::Cos,
        }
    }

    /// Time-independent bump `A exp(-|x|^2 / r^2)`.
    pub fn constant(amplitude: f64, width: f64) -> Self {
        Self {
            amplitude,
            frequency: 0.0,
            width,
            wave: Wave::Cos,
        }
    }

    pub fn temporal(&self, t: f64) -> f64 {
        let phase = self.frequency * t;
        self.amplitude
            * match self.wave {
                Wave::Cos => phase.cos(),
                Wave::Sin => phase.sin(),
            }
    }

    pub fn spatial(&self, x: &[f64]) -> f64 {
        (-sq_norm(x) / (self.width * self.width)).exp()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.temporal(t) * self.spatial(x)
    }

    /// `||exp(-|x|^2/r^2)||^2` over `R^dim`.
    pub fn profile_norm2(&self, dim: usize) -> f64 {
        (PI * self.width * self.width / 2.0).powf(dim as f64 / 2.0)
    }

    /// `||g(t, .)||^2` over `R^dim` in closed form.
    pub fn norm2(&self, t: f64, dim: usize) -> f64 {
        self.temporal(t).powi(2) * self.profile_norm2(dim)
    }

    /// `sup_t ||g(t, .)||^2`.
    pub fn sup_norm2(&self, dim: usize) -> f64 {
        self.amplitude * self.amplitude * self.profile_norm2(dim)
    }
}

pub fn default_forcings(a_g: f64, a_h: f64, w: f64, r: f64) -> Result<(ForcingSpec, ForcingSpec)> {
    if !(r > 0.0) {
        return Err(Error::param("r", "bump width must be positive"));
    }
    let g = ForcingSpec {
        amplitude: a_g,
        frequency: w,
        width: r,
        wave: Wave::Cos,
    };
    let h = ForcingSpec {
        amplitude: a_h,
        wave: Wave::Sin,
        ..g
    };
    Ok((g, h))
}

/// Value and tail bound of `int_{-inf}^{tau} e^{delta0 s} (||g(s)||^2 + ||h(s)||^2) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingIntegral {
    pub value: f64,
    pub tail_bound: f64,
}

/// Composite Simpson on `[tau - horizon, tau]` plus the bound
/// `sup(||g||^2 + ||h||^2) e^{delta0 (tau - horizon)} / delta0` for the rest.
pub fn forcing_integral(
    g: &ForcingSpec,
    h: &ForcingSpec,
    dim: usize,
    delta0: f64,
    tau: f64,
    horizon: f64,
) -> Result<ForcingIntegral> {
    if !(delta0 > 0.0) {
        return Err(Error::param("delta0", "must be positive"));
    }
    if !(horizon > 0.0) {
        return Err(Error::param("horizon", "must be positive"));
    }
    let integrand = |s: f64| (delta0 * s).exp() * (g.norm2(s, dim) + h.norm2(s, dim));
    let w = g.frequency.abs().max(h.frequency.abs()).max(1.0);
    let mut n = ((horizon * w * 20.0).ceil() as usize).max(64);
    n += n % 2;
    let a = tau - horizon;
    let step = horizon / n as f64;
    let mut sum = integrand(a) + integrand(tau);
    for i in 1..n {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += c * integrand(a + i as f64 * step);
    }
    let sup = g.sup_norm2(dim) + h.sup_norm2(dim);
    Ok(ForcingIntegral {
        value: sum * step / 3.0,
        tail_bound: sup * (delta0 * a).exp() / delta0,
    })
}

/// The chain of exponents `0 < delta0 < delta01 < delta1 < delta` and, when
/// `delta > alpha3`, the contraction rates `delta0 < b0 < b = delta - alpha3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentLadder {
    pub delta: f64,
    pub delta0: f64,
    pub delta01: f64,
    pub delta1: f64,
    pub b: Option<f64>,
    pub b0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// Largest admissible noise intensity.
    pub a: f64,
    pub nonlinearity: Nonlinearity,
    pub g: ForcingSpec,
    pub h: ForcingSpec,
}

impl ProblemSpec {
    pub fn p(&self) -> f64 {
        self.nonlinearity.p
    }

    pub fn delta(&self) -> f64 {
        self.lambda.min(self.sigma)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("a", self.a),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= self.a) {
            return Err(Error::param(
                "epsilon",
                format!("must lie in [0, a] = [0, {}], got {}", self.a, self.epsilon),
            ));
        }
        if !(self.p() >= 2.0) {
            return Err(Error::param("p", "must be at least 2"));
        }
        for (name, f) in [("g", &self.g), ("h", &self.h)] {
            if !(f.width > 0.0) || !f.amplitude.is_finite() || !f.frequency.is_finite() {
                return Err(Error::param(
                    name,
                    "needs finite amplitude and frequency and positive width",
                ));
            }
        }
        Ok(())
    }

    /// Whether `min(lambda, sigma) > alpha3` and `beta >= 1`.
    pub fn equilibrium_condition(&self) -> Result<()> {
        let delta = self.delta();
        let alpha3 = self.nonlinearity.alpha3;
        if delta > alpha3 && self.beta >= 1.0 {
            Ok(())
        } else {
            Err(Error::EquilibriumCondition {
                delta,
                alpha3,
                beta: self.beta,
            })
        }
    }
}

/// Default ladder: `delta0 = delta/4`, `delta01 = delta/2`, `delta1 = 3 delta/4`,
/// and when `delta > alpha3`, `b0 = min(0.9 b, 1.01 max(delta1, delta0))`
/// clipped into `(delta0, b)`. If `b <= delta/4` then `delta0` is lowered to `b/2`.
pub fn build_ladder(spec: &ProblemSpec) -> Result<ExponentLadder> {
    let delta = spec.delta();
    if !(delta > 0.0) {
        return Err(Error::param("lambda", "lambda and sigma must be positive"));
    }
    let (mut delta0, delta01, delta1) = (delta / 4.0, delta / 2.0, 0.75 * delta);
    let alpha3 = spec.nonlinearity.alpha3;
    let (b, b0) = if delta > alpha3 {
        let b = delta - alpha3;
        // Contraction slower than delta/4: lower delta0 so that delta0 < b.
        if b <= delta0 {
            delta0 = 0.5 * b;
        }
        let target = (0.9 * b).min((1.01 * delta1).max(1.01 * delta0));
        let b0 = if target > delta0 && target < b {
            target
        } else {
            0.5 * (delta0 + b)
        };
        (Some(b), Some(b0))
    } else {
        (None, None)
    };
    let ladder = ExponentLadder {
        delta,
        delta0,
        delta01,
        delta1,
        b,
        b0,
    };
    ladder.check()?;
    Ok(ladder)
}

impl ExponentLadder {
    /// Strict ordering of the chain and of the contraction rates.
    pub fn check(&self) -> Result<()> {
        let chain = [0.0, self.delta0, self.delta01, self.delta1, self.delta];
        let names = ["0", "delta0", "delta01", "delta1", "delta"];
        for i in 0..4 {
            if !(chain[i] < chain[i + 1]) {
                return Err(Error::LadderOrdering(format!(
                    "{} = {} must be below {} = {}",
                    names[i],
                    chain[i],
                    names[i + 1],
                    chain[i + 1]
                )));
            }
        }
        match (self.b, self.b0) {
            (Some(b), Some(b0)) => {
                if !(self.delta0 < b0 && b0 < b) {
                    return Err(Error::LadderOrdering(format!(
                        "need delta0 < b0 < b, got delta0 = {}, b0 = {b0}, b = {b}",
                        self.delta0
                    )));
                }
            }
            (None, None) => {}
            _ => {
                return Err(Error::LadderOrdering(
                    "b and b0 must be set together".into(),
                ))
            }
        }
        Ok(())
    }

    /// Contraction rates, failing when the equilibrium condition does not hold.
    pub fn rates(&self, spec: &ProblemSpec) -> Result<(f64, f64)> {
        spec.equilibrium_condition()?;
        match (self.b, self.b0) {
            (Some(b), Some(b0)) => Ok((b, b0)),
            _ => Err(Error::EquilibriumCondition {
                delta: self.delta,
                alpha3: spec.nonlinearity.alpha3,
                beta: spec.beta,
            }),
        }
    }
}
