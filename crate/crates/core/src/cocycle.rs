//! The random cocycle
//!
//! `phi(t, tau, omega, x) = u~(t + tau; tau, theta_{-tau} omega, x)`
//!
//! computed by transforming the physical state with `z(., theta_{-tau} omega)`,
//! running the IMEX solver, and transforming back. Every evaluation of the
//! noise factor goes through the same shifted path, so
//! `z(s, theta_{-tau} omega) = exp(-eps (omega(s - tau) - omega(-tau)))`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Frame, Grid, StatePair};
use crate::paths::{NoiseFactor, WienerPath};
use crate::problem::ProblemSpec;
use crate::solver::{step_plan, Integrator, SchemeConfig};

#[derive(Debug, Clone)]
pub struct CocycleHandle {
    integrator: Arc<Integrator>,
    /// `None` gives the deterministic cocycle with `z = 1`.
    path: Option<WienerPath>,
}

impl CocycleHandle {
    pub fn new(
        spec: &ProblemSpec,
        grid: &Grid,
        cfg: SchemeConfig,
        path: WienerPath,
    ) -> Result<Self> {
        cfg.validate(Some(path.dt()))?;
        Ok(Self {
            integrator: Arc::new(Integrator::new(spec, grid, cfg)?),
            path: Some(path),
        })
    }

    /// Cocycle of the noise-free problem (`z = 1`).
    pub fn deterministic(spec: &ProblemSpec, grid: &Grid, cfg: SchemeConfig) -> Result<Self> {
        Ok(Self {
            integrator: Arc::new(Integrator::new(spec, grid, cfg)?),
            path: None,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.integrator.spec()
    }

    pub fn grid(&self) -> &Grid {
        self.integrator.grid()
    }

    pub fn config(&self) -> SchemeConfig {
        self.integrator.config()
    }

    pub fn path(&self) -> Option<&WienerPath> {
        self.path.as_ref()
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    /// Same path and grid, different noise intensity.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let spec = self.spec().with_epsilon(epsilon);
        Ok(Self {
            integrator: Arc::new(Integrator::new(&spec, self.grid(), self.config())?),
            path: self.path.clone(),
        })
    }

    /// Same problem on the path `theta_s omega`.
    pub fn shifted(&self, s: f64) -> Result<Self> {
        Ok(Self {
            integrator: Arc::clone(&self.integrator),
            path: self.path.as_ref().map(|p| p.shift(s)).transpose()?,
        })
    }

    /// The noise factor `z(., theta_{-tau} omega)` used for initial time `tau`.
    pub fn noise_for(&self, tau: f64) -> Result<NoiseFactor> {
        Ok(match &self.path {
            Some(p) => NoiseFactor::new(self.spec().epsilon, p.shift(-tau)?),
            None => NoiseFactor::deterministic(),
        })
    }

    /// `phi(t, tau, omega, tilde0)`, calling `observe(state, z)` with the
    /// transformed state after every step.
    pub fn phi_observed(
        &self,
        t: f64,
        tau: f64,
        tilde0: &StatePair,
        mut observe: impl FnMut(&StatePair, f64),
    ) -> Result<StatePair> {
        if !(t >= 0.0) {
            return Err(Error::param("t", "cocycle time must be nonnegative"));
        }
        if tilde0.frame != Frame::Physical {
            return Err(Error::param("state", "cocycle acts on physical states"));
        }
        if t == 0.0 {
            return Ok(tilde0.clone());
        }
        let noise = self.noise_for(tau)?;
        let z0 = noise.z(tau)?;
        let z1 = noise.z(tau + t)?;
        let mut start = tilde0.to_transformed(z0);
        start.t = tau;
        let end = self
            .integrator
            .advance(&start, tau + t, &noise, |_, after, _| {
                if let Ok(z) = noise.z(after.t) {
                    observe(after, z);
                }
            })?;
        Ok(end.to_physical(z1))
    }

    pub fn phi(&self, t: f64, tau: f64, tilde0: &StatePair) -> Result<StatePair> {
        self.phi_observed(t, tau, tilde0, |_, _| {})
    }

    /// `phi(t_back, tau - t_back, theta_{-t_back} omega, tilde0)`: the state
    /// at `tau` of the solution started from `tilde0` at `tau - t_back`.
    pub fn pullback_endpoint(
        &self,
        t_back: f64,
        tau: f64,
        tilde0: &StatePair,
    ) -> Result<StatePair> {
        self.pullback_observed(t_back, tau, tilde0, |_, _| {})
    }

    pub fn pullback_observed(
        &self,
        t_back: f64,
        tau: f64,
        tilde0: &StatePair,
        observe: impl FnMut(&StatePair, f64),
    ) -> Result<StatePair> {
        self.shifted(-t_back)?
            .phi_observed(t_back, tau - t_back, tilde0, observe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleCheck {
    /// `||phi(t+s) - phi(t) o phi(s)|| / ||phi(t+s)||` in `L^2 x L^2`.
    pub residual: f64,
    /// Whether `s` and `t` are whole multiples of the step, so that both
    /// sides take identical steps.
    pub aligned: bool,
}

/// Compares `phi(t + s, tau, omega, x)` with
/// `phi(t, tau + s, theta_s omega, phi(s, tau, omega, x))`.
pub fn check_cocycle_law(
    handle: &CocycleHandle,
    t: f64,
    s: f64,
    tau: f64,
    x: &StatePair,
) -> Result<CocycleCheck> {
    let dt = handle.config().dt;
    let aligned = step_plan(0.0, t, dt).1.is_none() && step_plan(0.0, s, dt).1.is_none();
    let direct = handle.phi(t + s, tau, x)?;
    let mid = handle.phi(s, tau, x)?;
    let composed = handle.shifted(s)?.phi(t, tau + s, &mid)?;
    let scale = direct.norm2_sq().sqrt();
    let diff = direct.dist2_sq(&composed).sqrt();
    let residual = if scale > 0.0 { diff / scale } else { diff };
    Ok(CocycleCheck { residual, aligned })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_path;
    use crate::problem::{default_cubic, default_forcings};

    fn setup(eps: f64) -> (CocycleHandle, StatePair) {
        let (g, h) = default_forcings(0.2, 0.1, 1.0, 1.0).unwrap();
        let spec = ProblemSpec {
            lambda: 1.0,
            alpha: 1.0,
            beta: 1.0,
            sigma: 1.0,
            epsilon: eps,
            a: 0.5,
            nonlinearity: default_cubic(0.1).unwrap(),
            g,
            h,
        };
        let grid = Grid::new(1, 8.0, 33).unwrap();
        let path = sample_path(4, -20.0, 20.0, 1.0 / 256.0).unwrap();
        let handle =
            CocycleHandle::new(&spec, &grid, SchemeConfig::new(1.0 / 256.0), path).unwrap();
        let x = StatePair::new(
            grid.sample(|x| (-x[0] * x[0] / 4.0).exp()),
            grid.sample(|x| 0.5 * x[0].sin()),
            0.0,
            Frame::Physical,
        )
        .unwrap();
        (handle, x)
    }

    #[test]
    fn identity_is_bitwise() {
        let (h, x) = setup(0.3);
        assert_eq!(h.phi(0.0, 1.7, &x).unwrap(), x);
    }

    #[test]
    fn initial_noise_factor_uses_shifted_path() {
        let (h, _) = setup(0.3);
        let omega = h.path().unwrap();
        for tau in [-2.5, 0.0, 3.25] {
            let z = h.noise_for(tau).unwrap().z(tau).unwrap();
            let expect = (-0.3 * (omega.eval(0.0).unwrap() - omega.eval(-tau).unwrap())).exp();
            assert_eq!(z, expect);
        }
    }

    #[test]
    fn law_holds_on_aligned_grid() {
        let (h, x) = setup(0.3);
        let c = check_cocycle_law(&h, 0.5, 0.5, 1.0, &x).unwrap();
        assert!(c.aligned);
        assert!(c.residual <= 1e-10, "{}", c.residual);
        let c = check_cocycle_law(&h, 0.5, 0.0, 1.0, &x).unwrap();
        assert_eq!(c.residual, 0.0);
    }

    #[test]
    fn pullback_depth_zero_is_identity() {
        let (h, x) = setup(0.3);
        assert_eq!(h.pullback_endpoint(0.0, 2.0, &x).unwrap(), x);
    }

    #[test]
    fn pullback_ignores_future_noise() {
        let (h, x) = setup(0.3);
        let tau = 1.0;
        let a = h.pullback_endpoint(3.0, tau, &x).unwrap();
        let p = h
            .path()
            .unwrap()
            .modified_after(tau, |t, w| w + (5.0 * t).sin() + 2.0)
            .unwrap();
        let h2 = CocycleHandle::new(h.spec(), h.grid(), h.config(), p).unwrap();
        let b = h2.pullback_endpoint(3.0, tau, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_negative_time_and_wrong_frame() {
        let (h, x) = setup(0.3);
        assert!(h.phi(-1.0, 0.0, &x).is_err());
        let tr = x.to_transformed(1.0);
        assert!(h.phi(1.0, 0.0, &tr).is_err());
        assert!(matches!(
            h.phi(1.0, 30.0, &x).unwrap_err(),
            Error::OutOfWindow { .. }
        ));
    }
}
