use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, Frame, Grid, StatePair};

/// Deterministic family of `count` physical initial states of squared
/// `L^2 x L^2` norm `radius^2`.
///
/// With `growth_rate = Some(r)` the squared radius grows like `e^{r t_back}`
/// in the pullback depth, which keeps the family in the attraction universe
/// as long as `r < delta1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialBundle {
    pub radius: f64,
    pub count: usize,
    pub growth_rate: Option<f64>,
}

/// Share of the squared norm carried by the `u` component.
const U_SHARE: f64 = 0.4;

impl InitialBundle {
    pub fn new(radius: f64, count: usize) -> Self {
        Self {
            radius,
            count,
            growth_rate: None,
        }
    }

    pub fn validate(&self, delta1: f64) -> Result<()> {
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(Error::param(
                "bundle.radius",
                "must be finite and nonnegative",
            ));
        }
        if self.count == 0 {
            return Err(Error::param("bundle.count", "must be at least 1"));
        }
        if let Some(r) = self.growth_rate {
            if !(r >= 0.0 && r < delta1) {
                return Err(Error::param(
                    "bundle.growth_rate",
                    format!("must lie in [0, delta1) = [0, {delta1}), got {r}"),
                ));
            }
        }
        Ok(())
    }

    pub fn radius_at(&self, t_back: f64) -> f64 {
        match self.growth_rate {
            Some(r) => self.radius * (0.5 * r * t_back).exp(),
            None => self.radius,
        }
    }

    /// Member `j` for pullback depth `t_back`: smooth profiles vanishing at
    /// the boundary, a member-dependent modulation and alternating sign.
    pub fn member(&self, grid: &Grid, j: usize, t_back: f64) -> StatePair {
        let l = grid.l;
        let k = (j + 1) as f64;
        let envelope = |x: &[f64]| {
            x.iter()
                .map(|c| (PI * c / (2.0 * l)).cos())
                .product::<f64>()
        };
        let phase = |x: &[f64]| x.iter().sum::<f64>() / l;
        let u = grid.sample(|x| envelope(x) * (1.0 + 0.25 * (k * PI * phase(x)).sin()));
        let v = grid.sample(|x| envelope(x) * (1.0 + 0.25 * (k * PI * phase(x) + 1.0).cos()));
        let r = self.radius_at(t_back);
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let scale = |f: &Field, share: f64| {
            let n = f.norm2_sq().sqrt();
            f.scaled(sign * r * share.sqrt() / n)
        };
        StatePair {
            u: scale(&u, U_SHARE),
            v: scale(&v, 1.0 - U_SHARE),
            t: 0.0,
            frame: Frame::Physical,
        }
    }

    pub fn members(&self, grid: &Grid, t_back: f64) -> Vec<StatePair> {
        (0..self.count)
            .map(|j| self.member(grid, j, t_back))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_have_requested_radius() {
        let g = Grid::new(1, 8.0, 129).unwrap();
        let b = InitialBundle::new(10.0, 4);
        for (j, m) in b.members(&g, 3.0).iter().enumerate() {
            assert!((m.norm2_sq() - 100.0).abs() < 1e-9);
            assert!(
                m.u.values[0].abs() < 1e-12,
                "member {j} must vanish at the edge"
            );
        }
        let zero = InitialBundle::new(0.0, 2).members(&g, 1.0);
        assert!(zero.iter().all(|m| m.norm2_sq() == 0.0));
    }

    #[test]
    fn growing_bundle() {
        let b = InitialBundle {
            radius: 1.0,
            count: 1,
            growth_rate: Some(0.5),
        };
        assert!((b.radius_at(4.0) - 1f64.exp()).abs() < 1e-12);
        assert!(b.validate(0.75).is_ok());
        assert!(b.validate(0.4).is_err());
    }
}
