use rayon::prelude::*;

use crate::cocycle::CocycleHandle;
use crate::error::{Error, Result};
use crate::grid::StatePair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityRow {
    pub eps: f64,
    /// `sup_{t in [tau, tau + T]} ||(u~, v~)_eps(t) - (u~, v~)_eps0(t)||` in `L^2 x L^2`.
    pub sup_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub eps0: f64,
    pub t_span: f64,
    /// In the order of the requested sequence.
    pub rows: Vec<ContinuityRow>,
    /// `rows[k] / rows[k + 1]`.
    pub ratios: Vec<f64>,
    pub monotone: bool,
}

impl ContinuityReport {
    pub const CSV_HEADER: &'static str = "eps,sup_deviation";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!("{},{}\n", r.eps, r.sup_deviation));
        }
        out
    }

    pub fn ratios_within(&self, lo: f64, hi: f64) -> bool {
        self.ratios.iter().all(|r| (lo..=hi).contains(r))
    }

    pub fn last(&self) -> Option<f64> {
        self.rows.last().map(|r| r.sup_deviation)
    }
}

fn physical_trajectory(
    handle: &CocycleHandle,
    tau: f64,
    t_span: f64,
    x0: &StatePair,
) -> Result<Vec<StatePair>> {
    let mut out = vec![x0.clone()];
    handle.phi_observed(t_span, tau, x0, |s, z| out.push(s.to_physical(z)))?;
    Ok(out)
}

/// Deviation of the solutions for each `eps` in `eps_seq` from the one at
/// `eps0`, all started from the physical state `x0` at `tau` on the same
/// path. `eps0 = 0` compares with the deterministic cocycle.
pub fn epsilon_continuity(
    handle: &CocycleHandle,
    tau: f64,
    t_span: f64,
    eps0: f64,
    eps_seq: &[f64],
    x0: &StatePair,
) -> Result<ContinuityReport> {
    if !(t_span > 0.0) {
        return Err(Error::param("t_span", "must be positive"));
    }
    let reference = if eps0 == 0.0 {
        CocycleHandle::deterministic(
            &handle.spec().with_epsilon(0.0),
            handle.grid(),
            handle.config(),
        )?
    } else {
        handle.with_epsilon(eps0)?
    };
    let base = physical_trajectory(&reference, tau, t_span, x0)?;
    let rows = eps_seq
        .par_iter()
        .map(|&e| {
            let traj = physical_trajectory(&handle.with_epsilon(e)?, tau, t_span, x0)?;
            let sup = traj
                .iter()
                .zip(&base)
                .map(|(a, b)| a.dist2_sq(b).sqrt())
                .fold(0.0, f64::max);
            Ok(ContinuityRow {
                eps: e,
                sup_deviation: sup,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios = rows
        .windows(2)
        .map(|w| w[0].sup_deviation / w[1].sup_deviation)
        .collect();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].sup_deviation < w[0].sup_deviation);
    Ok(ContinuityReport {
        eps0,
        t_span,
        rows,
        ratios,
        monotone,
    })
}
