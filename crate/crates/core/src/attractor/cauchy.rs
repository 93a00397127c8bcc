//! `L^p` distances between pullback endpoints along an increasing depth
//! sequence, with the four-set split `|u_n|, |u_m|` below or above `M`.

use rayon::prelude::*;

use super::bundle::InitialBundle;
use super::matrix::cell_label;
use crate::cocycle::CocycleHandle;
use crate::error::{Error, Result};
use crate::grid::{pairwise, tail_mass, Field};

/// Integrals of `|u_n - u_m|^p` over the four sets
/// `O1 = {|u_n| < M, |u_m| < M}`, `O2 = {|u_n| >= M, |u_m| < M}`,
/// `O3 = {|u_n| < M, |u_m| >= M}`, `O4 = {|u_n| >= M, |u_m| >= M}`,
/// each with the bound used to control it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub m: f64,
    pub parts: [f64; 4],
    pub bounds: [f64; 4],
    /// `||u_n - u_m||_p^p` summed over the whole grid.
    pub total: f64,
}

impl Split {
    pub fn sum(&self) -> f64 {
        self.parts.iter().sum()
    }

    pub fn partition_error(&self) -> f64 {
        let d = (self.sum() - self.total).abs();
        if self.total > 0.0 {
            d / self.total
        } else {
            d
        }
    }

    pub fn bounds_hold(&self) -> bool {
        self.parts
            .iter()
            .zip(&self.bounds)
            .all(|(a, b)| *a <= *b * (1.0 + 1e-12) + f64::MIN_POSITIVE)
    }
}

/// Splits `||a - b||_p^p` at level `M`. Each part is summed on its own.
pub fn split_distance(a: &Field, b: &Field, m: f64, p: f64) -> Result<Split> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(
            "endpoints live on different grids".into(),
        ));
    }
    let w = a.grid.weight();
    let n = a.values.len();
    let class =
        |k: usize| (a.values[k].abs() >= m) as usize + 2 * (b.values[k].abs() >= m) as usize;
    let diff_p = |k: usize| (a.values[k] - b.values[k]).abs().powf(p);
    // class 0 -> O1, 1 -> O2, 2 -> O3, 3 -> O4
    let part = |c: usize| w * pairwise(n, |k| if class(k) == c { diff_p(k) } else { 0.0 });
    let parts = [part(0), part(1), part(2), part(3)];
    let l2_inner = w * pairwise(n, |k| {
        if class(k) == 0 {
            let d = a.values[k] - b.values[k];
            d * d
        } else {
            0.0
        }
    });
    let (ta, tb) = (tail_mass(a, m, p), tail_mass(b, m, p));
    let bounds = [
        (2.0 * m).powf(p - 2.0) * l2_inner,
        2f64.powf(p) * ta,
        2f64.powf(p) * tb,
        2f64.powf(p - 1.0) * (ta + tb),
    ];
    let total = w * pairwise(n, diff_p);
    Ok(Split {
        m,
        parts,
        bounds,
        total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyEntry {
    pub i: usize,
    pub j: usize,
    pub t_i: f64,
    pub t_j: f64,
    pub lp_distance: f64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyReport {
    pub t_back: Vec<f64>,
    pub eps: Vec<f64>,
    /// All pairs `i < j`.
    pub entries: Vec<CauchyEntry>,
    /// Distances between neighbours and towards the deepest endpoint both
    /// decrease along the sequence.
    pub monotone: bool,
    /// Distance of the two deepest endpoints.
    pub last_pair: f64,
    pub max_partition_error: f64,
    pub bounds_hold: bool,
}

impl CauchyReport {
    pub const CSV_HEADER: &'static str = "i,j,t_i,t_j,lp_distance";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.i, e.j, e.t_i, e.t_j, e.lp_distance
            ));
        }
        out
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        let (i, j) = (i.min(j), i.max(j));
        self.entries
            .iter()
            .find(|e| e.i == i && e.j == j)
            .map(|e| e.lp_distance)
    }

    pub fn passed(&self, tol: f64, partition_tol: f64) -> bool {
        self.monotone
            && self.last_pair <= tol
            && self.max_partition_error <= partition_tol
            && self.bounds_hold
    }
}

/// Endpoint `n` is the pullback over depth `t_back[n]` at intensity `eps[n]`
/// from bundle member `n % count`. `m` is the level of the split.
pub fn lp_cauchy_test(
    handle: &CocycleHandle,
    tau: f64,
    t_back: &[f64],
    eps: &[f64],
    bundle: &InitialBundle,
    m: f64,
) -> Result<CauchyReport> {
    if t_back.len() != eps.len() || t_back.len() < 2 {
        return Err(Error::param(
            "t_back_grid",
            "needs at least two depths, one intensity each",
        ));
    }
    if t_back.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("t_back_grid", "must be strictly increasing"));
    }
    let p = handle.spec().p();
    let grid = *handle.grid();
    let endpoints = (0..t_back.len())
        .into_par_iter()
        .map(|n| {
            let j = n % bundle.count;
            let h = handle.with_epsilon(eps[n])?;
            h.pullback_endpoint(t_back[n], tau, &bundle.member(&grid, j, t_back[n]))
                .map(|s| s.u)
                .map_err(|e| e.in_cell(cell_label(eps[n], t_back[n], bundle, j)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::new();
    for i in 0..endpoints.len() {
        for j in i + 1..endpoints.len() {
            let split = split_distance(&endpoints[i], &endpoints[j], m, p)?;
            entries.push(CauchyEntry {
                i,
                j,
                t_i: t_back[i],
                t_j: t_back[j],
                lp_distance: split.total.powf(1.0 / p),
                split,
            });
        }
    }
    let last = endpoints.len() - 1;
    let d = |i: usize, j: usize| {
        entries
            .iter()
            .find(|e| e.i == i && e.j == j)
            .map_or(f64::NAN, |e| e.lp_distance)
    };
    let neighbours: Vec<f64> = (0..last).map(|k| d(k, k + 1)).collect();
    let to_last: Vec<f64> = (0..last).map(|k| d(k, last)).collect();
    let decreasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] < w[0]);
    Ok(CauchyReport {
        t_back: t_back.to_vec(),
        eps: eps.to_vec(),
        monotone: decreasing(&neighbours) && decreasing(&to_last),
        last_pair: d(last - 1, last),
        max_partition_error: entries
            .iter()
            .map(|e| e.split.partition_error())
            .fold(0.0, f64::max),
        bounds_hold: entries.iter().all(|e| e.split.bounds_hold()),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn split_is_exact_and_bounded() {
        let g = Grid::new(1, 4.0, 129).unwrap();
        let a = g.sample(|x| 2.0 * (-x[0] * x[0]).exp());
        let b = g.sample(|x| 1.5 * (-(x[0] - 0.7).powi(2)).exp() * (3.0 * x[0]).cos());
        for m in [0.05, 0.3, 1.0, 1.8, 5.0] {
            let s = split_distance(&a, &b, m, 4.0).unwrap();
            assert!(s.partition_error() <= 1e-12, "{m}: {}", s.partition_error());
            assert!(s.bounds_hold(), "{m}: {s:?}");
        }
        let s = split_distance(&a, &a, 0.5, 4.0).unwrap();
        assert_eq!(s.total, 0.0);
    }
}
