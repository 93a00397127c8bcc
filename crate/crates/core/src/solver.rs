//! Time stepping for the transformed system
//!
//! ```text
//! du/dt + lambda u - Delta u + alpha v = z f(x, u / z) + z g(t, x)
//! dv/dt + sigma v - beta u             = z h(t, x)
//! ```
//!
//! The production scheme is a first-order IMEX step: diffusion and the
//! linear decay are implicit, coupling, reaction and forcing are explicit
//! and frozen at the left end of the step. A Dormand-Prince integrator of
//! the same semi-discrete right-hand side serves as a reference in tests.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{lp_pow, Field, Frame, Grid, StatePair};
use crate::paths::NoiseFactor;
use crate::problem::{Nonlinearity, ProblemSpec};

/// Relative tolerance under which a span counts as a whole number of steps.
const STEP_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub record_every: usize,
}

impl SchemeConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            record_every: 1,
        }
    }

    pub fn validate(&self, path_dt: Option<f64>) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("scheme.dt", "must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::param("scheme.record_every", "must be at least 1"));
        }
        if let Some(pdt) = path_dt {
            if self.dt > pdt * (1.0 + STEP_SNAP) {
                return Err(Error::param(
                    "scheme.dt",
                    format!("scheme.dt = {} exceeds path.dt = {pdt}", self.dt),
                ));
            }
        }
        Ok(())
    }
}

/// Cholesky factor of a symmetric positive definite band matrix, stored
/// row by row with `bw + 1` entries per row.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factors the matrix whose lower band entry `(i, j)`, `i - bw <= j <= i`,
    /// is `entry(i, j)`.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = entry(i, j);
                for k in k0..j {
                    sum -= l[i * w + k + bw - i] * l[j * w + k + bw - j];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::param(
                            "scheme",
                            "implicit operator is not positive definite",
                        ));
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + j + bw - i] = sum / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + k + bw - i] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + i + bw - k] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}

/// `(1 + dt lambda) I - dt Delta_h` with Dirichlet ghosts.
fn implicit_operator(grid: &Grid, lambda: f64, dt: f64) -> Result<BandCholesky> {
    let n = grid.n;
    let c = dt / (grid.dx * grid.dx);
    let (bw, diag) = match grid.dim {
        1 => (1, 1.0 + dt * lambda + 2.0 * c),
        _ => (n, 1.0 + dt * lambda + 4.0 * c),
    };
    BandCholesky::factor(grid.len(), bw, |i, j| {
        if i == j {
            diag
        } else if grid.dim == 1 || i - j == n || (i - j == 1 && i % n != 0) {
            -c
        } else {
            0.0
        }
    })
}

/// One record of the energy balance, taken at the left end of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// `beta ||u||^2 + alpha ||v||^2` at `t`.
    pub energy: f64,
    /// Energy at the other end of the step used for `rate_fd`.
    pub energy_next: f64,
    /// Difference quotient of the energy across the step.
    pub rate_fd: f64,
    /// `2 beta (u, F_u) + 2 alpha (v, F_v)` of the semi-discrete system at `t`.
    pub rate_exact: f64,
    /// `z^{2-p} ||u||_p^p`.
    pub lp_term: f64,
    pub z: f64,
    pub g_norm2: f64,
    pub h_norm2: f64,
    pub psi1_l1: f64,
}

impl EnergyRecord {
    /// `z^2 (||g||^2 + ||h||^2 + ||psi1||_1)`.
    pub fn rhs_base(&self) -> f64 {
        self.z * self.z * (self.g_norm2 + self.h_norm2 + self.psi1_l1)
    }

    /// Left side with the difference quotient and the energy at the step end.
    pub fn lhs_fd(&self, delta: f64, dissipation: f64) -> f64 {
        self.rate_fd + delta * self.energy_next + dissipation * self.lp_term
    }

    /// Left side of the semi-discrete inequality at `t`.
    pub fn lhs_exact(&self, delta: f64, dissipation: f64) -> f64 {
        self.rate_exact + delta * self.energy + dissipation * self.lp_term
    }

    pub fn residual(&self, c_fit: f64, delta: f64, dissipation: f64) -> f64 {
        self.lhs_fd(delta, dissipation) - c_fit * self.rhs_base()
    }
}

pub const ENERGY_CSV_HEADER: &str = "t,energy,lp_term,z,g_norm2,h_norm2,residual";

/// Writes records with the residual taken against `c_fit`.
pub fn energy_csv(records: &[EnergyRecord], c_fit: f64, delta: f64, dissipation: f64) -> String {
    let mut out = format!("{ENERGY_CSV_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            r.energy,
            r.lp_term,
            r.z,
            r.g_norm2,
            r.h_norm2,
            r.residual(c_fit, delta, dissipation)
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<StatePair>,
    pub records: Vec<EnergyRecord>,
}

impl Trajectory {
    pub fn last(&self) -> &StatePair {
        self.snapshots
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Splits `[t0, t1]` into whole steps of `dt` plus a possible short last step.
pub fn step_plan(t0: f64, t1: f64, dt: f64) -> (usize, Option<f64>) {
    let span = t1 - t0;
    if span <= 0.0 {
        return (0, None);
    }
    let ratio = span / dt;
    let whole = ratio.round();
    if (ratio - whole).abs() <= STEP_SNAP * whole.max(1.0) {
        return (whole as usize, None);
    }
    let n = ratio.floor() as usize;
    (n, Some(span - n as f64 * dt))
}

/// IMEX stepper for one problem, grid and step size. The implicit operator
/// is factored once on construction.
#[derive(Debug, Clone)]
pub struct Integrator {
    spec: ProblemSpec,
    grid: Grid,
    cfg: SchemeConfig,
    chol: BandCholesky,
    weight: Vec<f64>,
    g_profile: Vec<f64>,
    h_profile: Vec<f64>,
    g_profile_norm2: f64,
    h_profile_norm2: f64,
    psi1_l1: f64,
}

impl Integrator {
    pub fn new(spec: &ProblemSpec, grid: &Grid, cfg: SchemeConfig) -> Result<Self> {
        spec.validate()?;
        cfg.validate(None)?;
        let chol = implicit_operator(grid, spec.lambda, cfg.dt)?;
        let weight = grid.sample(Nonlinearity::weight).values;
        let g_profile = grid.sample(|x| spec.g.spatial(x));
        let h_profile = grid.sample(|x| spec.h.spatial(x));
        let psi1 = grid.sample(|x| spec.nonlinearity.psi1(x));
        Ok(Self {
            spec: spec.clone(),
            grid: *grid,
            cfg,
            chol,
            weight,
            g_profile_norm2: g_profile.norm2_sq(),
            h_profile_norm2: h_profile.norm2_sq(),
            g_profile: g_profile.values,
            h_profile: h_profile.values,
            psi1_l1: grid.weight() * crate::grid::pairwise_sum(&psi1.values),
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> SchemeConfig {
        self.cfg
    }

    /// One step of size `dt` with the factor `chol` and left-end noise `z`.
    fn step_raw(&self, chol: &BandCholesky, dt: f64, s: &StatePair, z: f64) -> StatePair {
        let sp = &self.spec;
        let nl = &sp.nonlinearity;
        let (gt, ht) = (sp.g.temporal(s.t), sp.h.temporal(s.t));
        let u = &s.u.values;
        let v = &s.v.values;
        let mut un: Vec<f64> = (0..u.len())
            .map(|k| {
                let react = z * nl.eval_weighted(self.weight[k], u[k] / z);
                u[k] + dt * (-sp.alpha * v[k] + react + z * gt * self.g_profile[k])
            })
            .collect();
        chol.solve(&mut un);
        let denom = 1.0 + dt * sp.sigma;
        let vn: Vec<f64> = (0..v.len())
            .map(|k| (v[k] + dt * (sp.beta * u[k] + z * ht * self.h_profile[k])) / denom)
            .collect();
        StatePair {
            u: Field {
                grid: self.grid,
                values: un,
            },
            v: Field {
                grid: self.grid,
                values: vn,
            },
            t: s.t + dt,
            frame: Frame::Transformed,
        }
    }

    fn checked(&self, prev: &StatePair, next: StatePair) -> Result<StatePair> {
        if next.is_finite() {
            Ok(next)
        } else {
            Err(Error::BlowUp {
                t: prev.t,
                max_norm: prev.max_abs(),
            })
        }
    }

    /// One full step from `s.t`.
    pub fn step(&self, s: &StatePair, noise: &NoiseFactor) -> Result<StatePair> {
        let z = noise.z(s.t)?;
        let next = self.step_raw(&self.chol, self.cfg.dt, s, z);
        self.checked(s, next)
    }

    /// Steps from `s0.t` to `t1`, calling `on_step(before, after, z_before)`
    /// after every step. Step times are `t0 + n dt`, not accumulated sums.
    pub fn advance(
        &self,
        s0: &StatePair,
        t1: f64,
        noise: &NoiseFactor,
        mut on_step: impl FnMut(&StatePair, &StatePair, f64),
    ) -> Result<StatePair> {
        if s0.frame != Frame::Transformed {
            return Err(Error::param(
                "state",
                "solver works on the transformed frame",
            ));
        }
        if s0.grid() != &self.grid {
            return Err(Error::GridMismatch(
                "state grid differs from integrator grid".into(),
            ));
        }
        let t0 = s0.t;
        let dt = self.cfg.dt;
        let (n, partial) = step_plan(t0, t1, dt);
        let mut cur = s0.clone();
        for i in 0..n {
            let z = noise.z(cur.t)?;
            let mut next = self.step_raw(&self.chol, dt, &cur, z);
            next.t = if i + 1 == n && partial.is_none() {
                t1
            } else {
                t0 + (i + 1) as f64 * dt
            };
            let next = self.checked(&cur, next)?;
            on_step(&cur, &next, z);
            cur = next;
        }
        if let Some(h) = partial {
            let chol = implicit_operator(&self.grid, self.spec.lambda, h)?;
            let z = noise.z(cur.t)?;
            let mut next = self.step_raw(&chol, h, &cur, z);
            next.t = t1;
            let next = self.checked(&cur, next)?;
            on_step(&cur, &next, z);
            cur = next;
        }
        Ok(cur)
    }

    /// Semi-discrete right-hand side `(F_u, F_v)` at time `t` with factor `z`.
    pub fn rhs(&self, t: f64, z: f64, u: &[f64], v: &[f64], du: &mut [f64], dv: &mut [f64]) {
        let sp = &self.spec;
        let nl = &sp.nonlinearity;
        let (gt, ht) = (sp.g.temporal(t), sp.h.temporal(t));
        crate::grid::laplacian_into(u, &self.grid, du);
        for k in 0..u.len() {
            let react = z * nl.eval_weighted(self.weight[k], u[k] / z);
            du[k] += -sp.lambda * u[k] - sp.alpha * v[k] + react + z * gt * self.g_profile[k];
            dv[k] = -sp.sigma * v[k] + sp.beta * u[k] + z * ht * self.h_profile[k];
        }
    }

    /// Energy record at `before.t` using the step to `after`.
    pub fn energy_record(&self, before: &StatePair, after: &StatePair, z: f64) -> EnergyRecord {
        let sp = &self.spec;
        let e0 = crate::grid::energy(before, sp.alpha, sp.beta);
        let e1 = crate::grid::energy(after, sp.alpha, sp.beta);
        let dt = after.t - before.t;
        EnergyRecord {
            t: before.t,
            energy: e0,
            energy_next: e1,
            rate_fd: (e1 - e0) / dt,
            rate_exact: self.exact_rate(before, z),
            lp_term: z.powf(2.0 - sp.p()) * lp_pow(&before.u, sp.p()),
            z,
            g_norm2: sp.g.temporal(before.t).powi(2) * self.g_profile_norm2,
            h_norm2: sp.h.temporal(before.t).powi(2) * self.h_profile_norm2,
            psi1_l1: self.psi1_l1,
        }
    }

    fn exact_rate(&self, s: &StatePair, z: f64) -> f64 {
        let n = s.u.values.len();
        let mut du = vec![0.0; n];
        let mut dv = vec![0.0; n];
        self.rhs(s.t, z, &s.u.values, &s.v.values, &mut du, &mut dv);
        let fu = Field {
            grid: self.grid,
            values: du,
        };
        let fv = Field {
            grid: self.grid,
            values: dv,
        };
        2.0 * self.spec.beta * s.u.dot(&fu) + 2.0 * self.spec.alpha * s.v.dot(&fv)
    }

    /// Integrates on `[s0.t, t1]`, keeping a snapshot and an energy record
    /// every `record_every` steps and at both endpoints.
    pub fn integrate(&self, s0: &StatePair, t1: f64, noise: &NoiseFactor) -> Result<Trajectory> {
        let every = self.cfg.record_every;
        let mut snapshots = vec![s0.clone()];
        let mut records = Vec::new();
        let mut count = 0usize;
        let mut last: Option<(StatePair, StatePair, f64)> = None;
        let end = self.advance(s0, t1, noise, |before, after, z| {
            if count.is_multiple_of(every) {
                records.push(self.energy_record(before, after, z));
                if count > 0 {
                    snapshots.push(before.clone());
                }
            }
            count += 1;
            last = Some((before.clone(), after.clone(), z));
        })?;
        if let Some((before, after, _)) = last {
            let z_end = noise.z(after.t)?;
            let mut rec = self.energy_record(&before, &after, z_end);
            let tail = self.energy_record(&after, &after, z_end);
            rec = EnergyRecord {
                t: after.t,
                energy: rec.energy_next,
                energy_next: rec.energy_next,
                rate_exact: tail.rate_exact,
                lp_term: tail.lp_term,
                z: z_end,
                g_norm2: tail.g_norm2,
                h_norm2: tail.h_norm2,
                ..rec
            };
            records.push(rec);
            snapshots.push(end);
        }
        Ok(Trajectory { snapshots, records })
    }
}

/// Convenience single step.
pub fn step(
    s: &StatePair,
    cfg: SchemeConfig,
    spec: &ProblemSpec,
    noise: &NoiseFactor,
) -> Result<StatePair> {
    Integrator::new(spec, s.grid(), cfg)?.step(s, noise)
}

pub fn integrate(
    s0: &StatePair,
    t1: f64,
    cfg: SchemeConfig,
    spec: &ProblemSpec,
    noise: &NoiseFactor,
) -> Result<Trajectory> {
    Integrator::new(spec, s0.grid(), cfg)?.integrate(s0, t1, noise)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_ORACLE_STEPS: usize = 2_000_000;

/// Adaptive Dormand-Prince integration of the semi-discrete system with a
/// continuous (piecewise-linear in time) noise factor. Integration restarts
/// at every kink of `z` so each piece is smooth.
pub fn reference_integrate(
    s0: &StatePair,
    t1: f64,
    spec: &ProblemSpec,
    noise: &NoiseFactor,
    tol: f64,
) -> Result<StatePair> {
    let grid = *s0.grid();
    if grid.len() > 65 * 65 {
        return Err(Error::OracleFailure(format!(
            "grid of {} nodes is too large",
            grid.len()
        )));
    }
    if s0.frame != Frame::Transformed {
        return Err(Error::param(
            "state",
            "solver works on the transformed frame",
        ));
    }
    // dt only sizes the unused implicit factor
    let integ = Integrator::new(spec, &grid, SchemeConfig::new(1.0))?;
    let n = grid.len();
    let mut y: Vec<f64> = s0.u.values.iter().chain(&s0.v.values).copied().collect();

    let mut breaks = noise.kinks(s0.t, t1);
    breaks.push(t1);
    let f = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        let z = noise.z(t)?;
        let (du, dv) = out.split_at_mut(n);
        integ.rhs(t, z, &y[..n], &y[n..], du, dv);
        Ok(())
    };

    let mut t = s0.t;
    let mut h = (t1 - t).clamp(1e-12, 1e-3);
    let mut k = vec![vec![0.0; 2 * n]; 7];
    let mut tmp = vec![0.0; 2 * n];
    let mut steps = 0usize;
    for &tb in &breaks {
        if tb <= t {
            continue;
        }
        while t < tb {
            steps += 1;
            if steps > MAX_ORACLE_STEPS {
                return Err(Error::OracleFailure(format!(
                    "step budget exhausted at t = {t}"
                )));
            }
            let last = h >= tb - t;
            let hh = if last { tb - t } else { h };
            f(t, &y, &mut k[0])?;
            for s in 1..7 {
                for i in 0..2 * n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += hh * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                f(t + C[s] * hh, &tmp, &mut tail[0])?;
            }
            let mut err = 0.0f64;
            let mut y5 = vec![0.0; 2 * n];
            for i in 0..2 * n {
                let mut s5 = 0.0;
                let mut s4 = 0.0;
                for j in 0..7 {
                    s5 += B5[j] * k[j][i];
                    s4 += B4[j] * k[j][i];
                }
                y5[i] = y[i] + hh * s5;
                let sc = tol + tol * y[i].abs().max(y5[i].abs());
                err = err.max((hh * (s5 - s4)).abs() / sc);
            }
            if !err.is_finite() {
                return Err(Error::OracleFailure(format!(
                    "non-finite error estimate at t = {t}"
                )));
            }
            if err <= 1.0 {
                t = if last { tb } else { t + hh };
                y = y5;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = hh * fac;
            if h < 1e-14 {
                return Err(Error::OracleFailure(format!(
                    "step size underflow at t = {t}"
                )));
            }
        }
    }
    let (u, v) = y.split_at(n);
    Ok(StatePair {
        u: Field {
            grid,
            values: u.to_vec(),
        },
        v: Field {
            grid,
            values: v.to_vec(),
        },
        t: t1,
        frame: Frame::Transformed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{default_cubic, ForcingSpec};

    fn linear_spec() -> ProblemSpec {
        ProblemSpec {
            lambda: 1.0,
            alpha: 1.0,
            beta: 1.0,
            sigma: 1.0,
            epsilon: 0.0,
            a: 1.0,
            nonlinearity: Nonlinearity::zero(),
            g: ForcingSpec::zero(),
            h: ForcingSpec::zero(),
        }
    }

    #[test]
    fn band_cholesky_solves_dense_check() {
        // 2-D operator on a 9x9 grid, compared against a dense matvec.
        let grid = Grid::new(2, 1.0, 9).unwrap();
        let dt = 0.01;
        let chol = implicit_operator(&grid, 1.3, dt).unwrap();
        let x_true: Vec<f64> = (0..grid.len())
            .map(|k| ((k * 7) % 11) as f64 - 5.0)
            .collect();
        let field = Field::new(grid, x_true.clone()).unwrap();
        let lap = crate::grid::laplacian(&field);
        let mut b: Vec<f64> = (0..grid.len())
            .map(|k| (1.0 + dt * 1.3) * x_true[k] - dt * lap.values[k])
            .collect();
        chol.solve(&mut b);
        for (a, e) in b.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = Grid::new(1, 4.0, 33).unwrap();
        let mut spec = linear_spec();
        spec.nonlinearity = default_cubic(0.1).unwrap();
        let s0 = StatePair::zeros(&grid, 0.0, Frame::Transformed);
        let traj = integrate(
            &s0,
            1.0,
            SchemeConfig::new(1e-2),
            &spec,
            &NoiseFactor::deterministic(),
        )
        .unwrap();
        assert!(traj.last().u.values.iter().all(|&x| x == 0.0));
        assert!(traj.last().v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_span_returns_initial_snapshot() {
        let grid = Grid::new(1, 4.0, 33).unwrap();
        let s0 = StatePair::zeros(&grid, 0.5, Frame::Transformed);
        let traj = integrate(
            &s0,
            0.5,
            SchemeConfig::new(1e-2),
            &linear_spec(),
            &NoiseFactor::deterministic(),
        )
        .unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0], s0);
        assert!(traj.records.is_empty());
    }

    #[test]
    fn partial_last_step_lands_on_end() {
        let grid = Grid::new(1, 4.0, 17).unwrap();
        let u = grid.sample(|x| (-x[0] * x[0]).exp());
        let s0 = StatePair::new(u, grid.zeros(), 0.0, Frame::Transformed).unwrap();
        let cfg = SchemeConfig {
            dt: 0.1,
            record_every: 3,
        };
        let traj = integrate(
            &s0,
            0.55,
            cfg,
            &linear_spec(),
            &NoiseFactor::deterministic(),
        )
        .unwrap();
        assert_eq!(traj.last().t, 0.55);
        assert_eq!(traj.records.first().unwrap().t, 0.0);
        assert_eq!(traj.records.last().unwrap().t, 0.55);
    }

    #[test]
    fn linear_decay_bounded_by_exponential() {
        let grid = Grid::new(1, 8.0, 65).unwrap();
        let u = grid.sample(|x| (std::f64::consts::PI * x[0] / 16.0).cos());
        let s0 = StatePair::new(u, grid.zeros(), 0.0, Frame::Transformed).unwrap();
        let mut spec = linear_spec();
        spec.beta = 1e-9;
        let integ = Integrator::new(&spec, &grid, SchemeConfig::new(1e-2)).unwrap();
        let n0 = s0.u.norm2_sq().sqrt();
        let mut ok = true;
        integ
            .advance(&s0, 3.0, &NoiseFactor::deterministic(), |_, after, _| {
                ok &= after.u.norm2_sq().sqrt() <= (-after.t).exp() * n0 * (1.0 + 1e-12);
            })
            .unwrap();
        assert!(ok);
    }

    #[test]
    fn decoupled_v_matches_scalar_closed_form() {
        let grid = Grid::new(1, 4.0, 33).unwrap();
        let mut spec = linear_spec();
        spec.alpha = 1e-300;
        spec.beta = 1e-300;
        spec.sigma = 0.7;
        spec.h = ForcingSpec::constant(0.5, 1.0);
        let v0 = grid.sample(|x| x[0].cos());
        let s0 = StatePair::new(grid.zeros(), v0.clone(), 0.0, Frame::Transformed).unwrap();
        let t1 = 1.5;
        let out =
            reference_integrate(&s0, t1, &spec, &NoiseFactor::deterministic(), 1e-12).unwrap();
        let e = (-0.7f64 * t1).exp();
        for k in 0..grid.len() {
            let hk = spec.h.eval(0.0, &grid.coords(k));
            let expect = v0.values[k] * e + (1.0 - e) * hk / 0.7;
            assert!((out.v.values[k] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_of_zero_is_zero() {
        let grid = Grid::new(1, 4.0, 33).unwrap();
        let s0 = StatePair::zeros(&grid, 0.0, Frame::Transformed);
        let mut spec = linear_spec();
        spec.nonlinearity = default_cubic(0.1).unwrap();
        let out =
            reference_integrate(&s0, 1.0, &spec, &NoiseFactor::deterministic(), 1e-10).unwrap();
        assert_eq!(out.norm2_sq(), 0.0);
    }

    #[test]
    fn blow_up_is_reported() {
        let grid = Grid::new(1, 4.0, 17).unwrap();
        let mut spec = linear_spec();
        spec.nonlinearity = default_cubic(0.1).unwrap();
        let u = grid.sample(|_| 1e3);
        let s0 = StatePair::new(u, grid.zeros(), 0.0, Frame::Transformed).unwrap();
        let err = integrate(
            &s0,
            1.0,
            SchemeConfig::new(0.1),
            &spec,
            &NoiseFactor::deterministic(),
        )
        .unwrap_err();
        assert!(err.is_blow_up(), "{err}");
    }

    #[test]
    fn step_plan_cases() {
        assert_eq!(step_plan(0.0, 1.0, 0.25), (4, None));
        assert_eq!(step_plan(0.0, 0.0, 0.25), (0, None));
        let (n, p) = step_plan(0.0, 1.1, 0.25);
        assert_eq!(n, 4);
        assert!((p.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(step_plan(-3.0, 29.0, 1e-3), (32000, None));
    }
}
