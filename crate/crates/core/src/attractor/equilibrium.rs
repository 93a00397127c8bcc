use rayon::prelude::*;

use super::bundle::InitialBundle;
use super::matrix::cell_label;
use crate::cocycle::CocycleHandle;
use crate::error::{Error, Result};
use crate::grid::StatePair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumRow {
    pub t_back: f64,
    /// `max_j ||e_{t, j} - e_{t_max, j}||` over bundle members `j`.
    pub distance_to_final: f64,
    /// Largest pairwise distance between the endpoints at this depth.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub tau: f64,
    /// Endpoint of member 0 at the deepest depth.
    pub u_star: StatePair,
    pub rows: Vec<EquilibriumRow>,
    /// Minus the least-squares slope of `ln distance_to_final` against depth,
    /// over depths in `[fit_from, t_max)`.
    pub b_fit: f64,
    pub intercept: f64,
    /// Extrapolated distance of `u_star` from the limit,
    /// `exp(intercept - b_fit t_max)`.
    pub err_est: f64,
    pub tol: f64,
    pub converged: bool,
}

impl EquilibriumReport {
    pub const CSV_HEADER: &'static str = "t_back,distance_to_final,spread";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.t_back, r.distance_to_final, r.spread
            ));
        }
        out
    }

    pub fn t_max(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t_back)
    }

    pub fn final_spread(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.spread)
    }
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept)`.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Pullback endpoints of every bundle member over the depth grid, the
/// candidate `u*` at the deepest depth and the fitted contraction rate.
/// Depths below `fit_from` are left out of the fit.
pub fn equilibrium(
    handle: &CocycleHandle,
    tau: f64,
    t_back_grid: &[f64],
    bundle: &InitialBundle,
    tol: f64,
    fit_from: f64,
) -> Result<EquilibriumReport> {
    handle.spec().equilibrium_condition()?;
    if t_back_grid.is_empty() || t_back_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param(
            "t_back_grid",
            "must be nonempty and strictly increasing",
        ));
    }
    let grid = *handle.grid();
    let eps = handle.spec().epsilon;
    let jobs: Vec<(f64, usize)> = t_back_grid
        .iter()
        .flat_map(|&t| (0..bundle.count).map(move |j| (t, j)))
        .collect();
    let ends = jobs
        .into_par_iter()
        .map(|(t, j)| {
            handle
                .pullback_endpoint(t, tau, &bundle.member(&grid, j, t))
                .map_err(|e| e.in_cell(cell_label(eps, t, bundle, j)))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = bundle.count;
    let at = |i: usize, j: usize| &ends[i * m + j];
    let last = t_back_grid.len() - 1;

    let rows: Vec<EquilibriumRow> = t_back_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let distance_to_final = (0..m)
                .map(|j| at(i, j).dist2_sq(at(last, j)).sqrt())
                .fold(0.0, f64::max);
            let mut spread: f64 = 0.0;
            for a in 0..m {
                for b in a + 1..m {
                    spread = spread.max(at(i, a).dist2_sq(at(i, b)).sqrt());
                }
            }
            EquilibriumRow {
                t_back: t,
                distance_to_final,
                spread,
            }
        })
        .collect();

    let t_max = t_back_grid[last];
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.t_back >= fit_from && r.t_back < t_max && r.distance_to_final > 0.0)
        .map(|r| (r.t_back, r.distance_to_final.ln()))
        .collect();
    let (b_fit, intercept, err_est) = match fit_line(&pts) {
        Some((slope, c)) => (-slope, c, (c + slope * t_max).exp()),
        None => (f64::NAN, f64::NAN, f64::INFINITY),
    };
    let spread = rows[last].spread;
    Ok(EquilibriumReport {
        tau,
        u_star: at(last, 0).clone(),
        rows,
        b_fit,
        intercept,
        err_est,
        tol,
        converged: spread <= tol && err_est <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceRow {
    pub t: f64,
    /// `||phi(t, tau, omega, u*) - u*(tau + t, theta_t omega)||`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
}

impl InvarianceReport {
    pub const CSV_HEADER: &'static str = "t,residual";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!("{},{}\n", r.t, r.residual));
        }
        out
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// Pushes `u*` forward by the cocycle and compares it with the equilibrium
/// recomputed at `tau + t` on `theta_t omega`, using the same pullback depth
/// and the same initial member as `report.u_star`.
pub fn equilibrium_invariance(
    handle: &CocycleHandle,
    report: &EquilibriumReport,
    bundle: &InitialBundle,
    t_grid: &[f64],
) -> Result<InvarianceReport> {
    let depth = report.t_max();
    let grid = *handle.grid();
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let pushed = handle.phi(t, report.tau, &report.u_star)?;
            let shifted = handle.shifted(t)?.pullback_endpoint(
                depth,
                report.tau + t,
                &bundle.member(&grid, 0, depth),
            )?;
            Ok(InvarianceRow {
                t,
                residual: pushed.dist2_sq(&shifted).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::problem::{ForcingSpec, Nonlinearity, ProblemSpec};
    use crate::solver::SchemeConfig;

    #[test]
    fn line_fit_recovers_slope() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, 3.0 - 0.7 * x))
            .collect();
        let (s, c) = fit_line(&pts).unwrap();
        assert!((s + 0.7).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
        assert!(fit_line(&pts[..1]).is_none());
    }

    #[test]
    fn linear_unforced_decays_at_delta() {
        let spec = ProblemSpec {
            lambda: 1.0,
            alpha: 1.0,
            beta: 1.0,
            sigma: 1.0,
            epsilon: 0.0,
            a: 0.5,
            nonlinearity: Nonlinearity::zero(),
            g: ForcingSpec::zero(),
            h: ForcingSpec::zero(),
        };
        let grid = Grid::new(1, 8.0, 65).unwrap();
        let h = CocycleHandle::deterministic(&spec, &grid, SchemeConfig::new(1e-2)).unwrap();
        let b = InitialBundle::new(1.0, 2);
        let r = equilibrium(&h, 0.0, &[1.0, 2.0, 4.0, 8.0, 16.0], &b, 1e-6, 2.0).unwrap();
        assert!((r.b_fit - 1.0).abs() <= 0.1, "{}", r.b_fit);
        assert!(r.u_star.max_abs() < 1e-5);
        let inv = equilibrium_invariance(&h, &r, &b, &[0.0, 1.0]).unwrap();
        assert_eq!(inv.rows[0].residual, 0.0);
        assert!(inv.max_residual() < 1e-5);
    }
}
