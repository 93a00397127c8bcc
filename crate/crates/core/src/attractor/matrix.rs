use rayon::prelude::*;

use super::bundle::InitialBundle;
use crate::cocycle::CocycleHandle;
use crate::error::Result;
use crate::grid::{lp_pow, StatePair};

/// One pullback run of the experiment matrix.
#[derive(Debug, Clone)]
pub struct MatrixCell {
    pub eps: f64,
    pub t_back: f64,
    pub bundle: usize,
    pub member: usize,
    /// Physical state at `tau`.
    pub endpoint: StatePair,
    /// `sup ||u||_p^p` of the transformed `u` over recorded times in `[tau - 1, tau]`.
    pub sup_lp: f64,
    /// Largest observed ratio on `[tau - 1, tau]` of
    /// `d/dt ||u||_p^p + delta ||u||_p^p` (backward difference) to
    /// `z^{p-2} ||v||^2 + z^p (||g||^2 + ||psi1||_{p/2}^{p/2})`.
    pub lp_ratio: f64,
}

/// Endpoints of `eps x t_back x bundle x member` pullback runs on one path.
#[derive(Debug, Clone)]
pub struct PullbackMatrix {
    pub tau: f64,
    pub eps_grid: Vec<f64>,
    pub t_back_grid: Vec<f64>,
    pub bundles: Vec<InitialBundle>,
    pub cells: Vec<MatrixCell>,
}

pub(crate) fn cell_label(eps: f64, t_back: f64, bundle: &InitialBundle, member: usize) -> String {
    format!(
        "cell eps={eps} t_back={t_back} radius={} member={member}",
        bundle.radius
    )
}

impl PullbackMatrix {
    pub fn run(
        handle: &CocycleHandle,
        tau: f64,
        eps_grid: &[f64],
        t_back_grid: &[f64],
        bundles: &[InitialBundle],
    ) -> Result<Self> {
        let handles = eps_grid
            .iter()
            .map(|&e| handle.with_epsilon(e))
            .collect::<Result<Vec<_>>>()?;
        let mut jobs = Vec::new();
        for (ei, &eps) in eps_grid.iter().enumerate() {
            for &t_back in t_back_grid {
                for (bi, b) in bundles.iter().enumerate() {
                    for j in 0..b.count {
                        jobs.push((ei, eps, t_back, bi, j));
                    }
                }
            }
        }
        let grid = *handle.grid();
        let spec = handle.spec();
        let p = spec.p();
        let delta = spec.delta();
        let psi = grid.sample(|x| spec.nonlinearity.psi1(x).powf(p / 2.0));
        let psi_half = grid.weight() * crate::grid::pairwise_sum(&psi.values);
        let dim = grid.dim;
        let cells = jobs
            .into_par_iter()
            .map(|(ei, eps, t_back, bi, j)| {
                let b = &bundles[bi];
                let x0 = b.member(&grid, j, t_back);
                let h = &handles[ei];
                let window = tau - 1.0 - 1e-9 * tau.abs().max(1.0);
                let mut sup_lp: f64 = 0.0;
                let mut ratio: f64 = 0.0;
                let mut prev: Option<(f64, f64)> = None;
                let endpoint = h
                    .pullback_observed(t_back, tau, &x0, |s, z| {
                        if s.t < window {
                            return;
                        }
                        let lp = lp_pow(&s.u, p);
                        sup_lp = sup_lp.max(lp);
                        if let Some((t_prev, lp_prev)) = prev {
                            let rate = (lp - lp_prev) / (s.t - t_prev);
                            let g2 = spec.g.norm2(s.t, dim);
                            let denom =
                                z.powf(p - 2.0) * s.v.norm2_sq() + z.powf(p) * (g2 + psi_half);
                            if denom > 0.0 {
                                ratio = ratio.max((rate + delta * lp) / denom);
                            }
                        }
                        prev = Some((s.t, lp));
                    })
                    .map_err(|e| e.in_cell(cell_label(eps, t_back, b, j)))?;
                Ok(MatrixCell {
                    eps,
                    t_back,
                    bundle: bi,
                    member: j,
                    endpoint,
                    sup_lp,
                    lp_ratio: ratio,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tau,
            eps_grid: eps_grid.to_vec(),
            t_back_grid: t_back_grid.to_vec(),
            bundles: bundles.to_vec(),
            cells,
        })
    }

    pub fn cells_at(&self, eps: f64, t_back: f64) -> impl Iterator<Item = &MatrixCell> {
        self.cells
            .iter()
            .filter(move |c| c.eps == eps && c.t_back == t_back)
    }
}
