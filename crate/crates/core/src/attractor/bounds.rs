//! `L^p` ceilings on `[tau - 1, tau]` and tail masses of the pullback endpoints.

use super::matrix::PullbackMatrix;
use crate::grid::{tail_mass, Field};

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub eps: f64,
    pub t_back: f64,
    /// `sup ||u||_p^p` over `[tau - 1, tau]`, all bundles and members.
    pub sup_lp_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpReport {
    pub rows: Vec<LpRow>,
    pub t_min: f64,
    /// `sup` over `eps` and depths `>= t_min`.
    pub ceiling: f64,
    /// Same supremum restricted to the deepest depth.
    pub deepest_level: f64,
    /// Largest ratio of the `L^p` differential inequality sides over the
    /// same cells; a finite value is a constant that makes it hold.
    pub c_lp: f64,
}

impl LpReport {
    pub const CSV_HEADER: &'static str = "eps,t_back,sup_lp_p";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.eps, r.t_back, r.sup_lp_p));
        }
        out
    }

    /// One finite ceiling for every `eps` and every depth from `t_min` on.
    pub fn passed(&self) -> bool {
        self.ceiling.is_finite() && self.c_lp.is_finite() && !self.rows.is_empty()
    }
}

/// Collects the `L^p` suprema recorded by the matrix and the ceiling over
/// depths `>= t_min`.
pub fn lp_bound_test(matrix: &PullbackMatrix, t_min: f64) -> LpReport {
    let mut rows = Vec::new();
    for &e in &matrix.eps_grid {
        for &t in &matrix.t_back_grid {
            let sup = matrix.cells_at(e, t).map(|c| c.sup_lp).fold(0.0, f64::max);
            rows.push(LpRow {
                eps: e,
                t_back: t,
                sup_lp_p: sup,
            });
        }
    }
    let deepest = matrix
        .t_back_grid
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let fold = |pred: &dyn Fn(f64) -> bool| {
        rows.iter()
            .filter(|r| pred(r.t_back))
            .map(|r| r.sup_lp_p)
            .fold(0.0, f64::max)
    };
    let ceiling = fold(&|t| t >= t_min);
    let deepest_level = fold(&|t| t == deepest);
    let c_lp = matrix
        .cells
        .iter()
        .filter(|c| c.t_back >= t_min)
        .map(|c| c.lp_ratio)
        .fold(0.0, f64::max);
    LpReport {
        rows,
        t_min,
        ceiling,
        deepest_level,
        c_lp,
    }
}

/// `(M, tail_mass(f, M, p))` for each `M` of an increasing grid.
pub fn truncation_profile(u: &Field, m_grid: &[f64], p: f64) -> Vec<(f64, f64)> {
    m_grid.iter().map(|&m| (m, tail_mass(u, m, p))).collect()
}

/// `M_0 2^k` for `k = 0..count`.
pub fn geometric_grid(m0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| m0 * 2f64.powi(k as i32)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub eps: f64,
    pub t_back: f64,
    pub m: f64,
    /// Largest tail mass over bundles and members.
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    pub eta: f64,
    pub t_min: f64,
    /// Smallest `M` of the grid whose tail is at most `eta` in every cell
    /// with depth `>= t_min`.
    pub uniform_m: Option<f64>,
    /// Every cell's tail is nonincreasing along the `M` grid.
    pub monotone: bool,
}

impl TruncationReport {
    pub const CSV_HEADER: &'static str = "eps,t_back,M,tail_mass";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.eps, r.t_back, r.m, r.tail_mass));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.monotone && self.uniform_m.is_some()
    }
}

/// Tail masses of the physical endpoints `u~(tau)` over the whole matrix.
pub fn truncation_test(
    matrix: &PullbackMatrix,
    m_grid: &[f64],
    p: f64,
    eta: f64,
    t_min: f64,
) -> TruncationReport {
    let profiles: Vec<Vec<(f64, f64)>> = matrix
        .cells
        .iter()
        .map(|c| truncation_profile(&c.endpoint.u, m_grid, p))
        .collect();
    let monotone = profiles
        .iter()
        .all(|pr| pr.windows(2).all(|w| w[1].1 <= w[0].1));

    let mut rows = Vec::new();
    for &e in &matrix.eps_grid {
        for &t in &matrix.t_back_grid {
            for (k, &m) in m_grid.iter().enumerate() {
                let tail = matrix
                    .cells
                    .iter()
                    .zip(&profiles)
                    .filter(|(c, _)| c.eps == e && c.t_back == t)
                    .map(|(_, pr)| pr[k].1)
                    .fold(0.0, f64::max);
                rows.push(TruncationRow {
                    eps: e,
                    t_back: t,
                    m,
                    tail_mass: tail,
                });
            }
        }
    }

    let sup_tail: Vec<f64> = (0..m_grid.len())
        .map(|k| {
            rows.iter()
                .filter(|r| r.t_back >= t_min && r.m == m_grid[k])
                .map(|r| r.tail_mass)
                .fold(0.0, f64::max)
        })
        .collect();
    let uniform_m = m_grid
        .iter()
        .zip(&sup_tail)
        .find(|(_, &s)| s <= eta)
        .map(|(&m, _)| m);

    TruncationReport {
        rows,
        eta,
        t_min,
        uniform_m,
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn profile_is_monotone_and_vanishes_above_max() {
        let g = Grid::new(1, 4.0, 65).unwrap();
        let u = g.sample(|x| 2.0 * (-x[0] * x[0]).exp());
        let pr = truncation_profile(&u, &geometric_grid(0.01, 10), 4.0);
        assert!(pr.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(pr.last().unwrap().1, 0.0);
        assert_eq!(truncation_profile(&u, &[2.5], 4.0)[0].1, 0.0);
    }
}
