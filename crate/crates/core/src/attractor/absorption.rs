use super::matrix::PullbackMatrix;
use crate::error::{Error, Result};
use crate::paths::WienerPath;
use crate::problem::{ExponentLadder, ProblemSpec};

/// Quadrature of
/// `L_eps(tau, omega) = int_{-inf}^0 e^{delta01 s + 2 eps |omega(s)|} (||g(s+tau)||^2 + ||h(s+tau)||^2 + 1) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingFunctional {
    pub eps: f64,
    /// Trapezoid rule on the path nodes of `[-horizon, 0]`.
    pub body: f64,
    /// Estimate of the integral beyond the horizon.
    pub tail: f64,
}

impl AbsorbingFunctional {
    pub fn value(&self) -> f64 {
        self.body + self.tail
    }
}

fn integrand(
    spec: &ProblemSpec,
    dim: usize,
    delta01: f64,
    eps: f64,
    tau: f64,
    s: f64,
    w: f64,
) -> f64 {
    (delta01 * s + 2.0 * eps * w.abs()).exp()
        * (spec.g.norm2(s + tau, dim) + spec.h.norm2(s + tau, dim) + 1.0)
}

/// The tail beyond `-horizon` is bounded by assuming `|omega(s)| <= kappa |s|`
/// there, with `kappa` the largest `|omega(s) / s|` seen on
/// `[-horizon, -horizon / 2]`. The forcing norms enter through their
/// suprema. A tail above 10% of the body is an error.
pub fn absorbing_functional(
    spec: &ProblemSpec,
    path: &WienerPath,
    dim: usize,
    tau: f64,
    ladder: &ExponentLadder,
    eps: f64,
    horizon: f64,
) -> Result<AbsorbingFunctional> {
    if !(horizon > 0.0) {
        return Err(Error::param("quad_horizon", "must be positive"));
    }
    path.eval(-horizon)?;
    let dt = path.dt();
    let n = (horizon / dt).round().max(1.0) as usize;
    let step = horizon / n as f64;
    let d01 = ladder.delta01;
    let mut body = 0.0;
    let mut kappa: f64 = 0.0;
    let mut prev = integrand(spec, dim, d01, eps, tau, 0.0, 0.0);
    for i in 1..=n {
        let s = -(i as f64) * step;
        let w = path.eval(s)?;
        let cur = integrand(spec, dim, d01, eps, tau, s, w);
        body += 0.5 * step * (prev + cur);
        prev = cur;
        if 2 * i >= n {
            kappa = kappa.max((w / s).abs());
        }
    }
    let rate = d01 - 2.0 * eps * kappa;
    let sup = spec.g.sup_norm2(dim) + spec.h.sup_norm2(dim) + 1.0;
    let tail = if rate > 0.0 {
        sup * (-rate * horizon).exp() / rate
    } else {
        f64::INFINITY
    };
    if !(tail <= 0.1 * body) {
        return Err(Error::HorizonTooShort { tail, body });
    }
    Ok(AbsorbingFunctional { eps, body, tail })
}

/// `L_eps(tau, omega)` for the intensity in `spec`.
pub fn absorption_radius(
    spec: &ProblemSpec,
    path: &WienerPath,
    dim: usize,
    tau: f64,
    ladder: &ExponentLadder,
    quad_horizon: f64,
) -> Result<f64> {
    absorbing_functional(spec, path, dim, tau, ladder, spec.epsilon, quad_horizon)
        .map(|a| a.value())
}

/// Whether the integrand of `L_eps` is nondecreasing along `eps_grid`
/// (sorted ascending) at every path node of `[-horizon, 0]`.
pub fn integrand_monotone_in_eps(
    path: &WienerPath,
    eps_grid: &[f64],
    horizon: f64,
) -> Result<bool> {
    let mut eps = eps_grid.to_vec();
    eps.sort_by(f64::total_cmp);
    let n = (horizon / path.dt()).round() as usize;
    for i in 0..=n {
        let w = path.eval(-(i as f64) * path.dt())?.abs();
        // common factors cancel; compare the noise weight only
        if eps
            .windows(2)
            .any(|e| (2.0 * e[0] * w).exp() > (2.0 * e[1] * w).exp())
        {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionRow {
    pub eps: f64,
    pub t_back: f64,
    /// Largest `||u~(tau)||^2 + ||v~(tau)||^2` over all bundles and members.
    pub max_endpoint_norm2: f64,
    /// `c_fit (1 + L_eps)`.
    pub radius: f64,
    pub absorbed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionReport {
    pub rows: Vec<AbsorptionRow>,
    pub functionals: Vec<AbsorbingFunctional>,
    /// `L_0`, the noise-free limit of the functional.
    pub l_zero: f64,
    /// Single constant for the whole `eps` grid.
    pub c_fit: f64,
    pub calibration_depth: f64,
    /// Smallest depth in the grid from which every row is absorbed.
    pub t_abs: Option<f64>,
    pub l_monotone: bool,
    /// Largest relative spread, across bundles, of the per-bundle maximum
    /// endpoint norm at `reference_depth`.
    pub bundle_spread: f64,
    pub reference_depth: f64,
}

impl AbsorptionReport {
    pub const CSV_HEADER: &'static str = "eps,t_back,max_endpoint_norm2,radius,absorbed";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.eps, r.t_back, r.max_endpoint_norm2, r.radius, r.absorbed
            ));
        }
        out
    }

    pub fn passed(&self, t_abs_max: f64) -> bool {
        self.l_monotone && self.l_zero.is_finite() && self.t_abs.is_some_and(|t| t <= t_abs_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionSettings {
    pub quad_horizon: f64,
    /// Relative headroom added to the calibrated constant.
    pub slack: f64,
    /// Depth at which bundles of different radii are compared.
    pub reference_depth: f64,
}

/// Calibrates one `c_fit` from the deepest pullback depth over the whole
/// `eps` grid and finds the depth after which every endpoint lies inside
/// `c_fit (1 + L_eps)`.
pub fn absorption_test(
    matrix: &PullbackMatrix,
    path: &WienerPath,
    spec: &ProblemSpec,
    ladder: &ExponentLadder,
    dim: usize,
    settings: AbsorptionSettings,
) -> Result<AbsorptionReport> {
    let functionals = matrix
        .eps_grid
        .iter()
        .map(|&e| {
            absorbing_functional(
                spec,
                path,
                dim,
                matrix.tau,
                ladder,
                e,
                settings.quad_horizon,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let l_zero = absorbing_functional(
        spec,
        path,
        dim,
        matrix.tau,
        ladder,
        0.0,
        settings.quad_horizon,
    )?
    .value();
    let deepest = matrix
        .t_back_grid
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    let max_norm = |eps: f64, t_back: f64| {
        matrix
            .cells_at(eps, t_back)
            .map(|c| c.endpoint.norm2_sq())
            .fold(0.0, f64::max)
    };
    let mut ratio: f64 = 0.0;
    for (e, l) in matrix.eps_grid.iter().zip(&functionals) {
        ratio = ratio.max(max_norm(*e, deepest) / (1.0 + l.value()));
    }
    let c_fit = (1.0 + settings.slack) * ratio;

    let mut rows = Vec::new();
    for (e, l) in matrix.eps_grid.iter().zip(&functionals) {
        for &t in &matrix.t_back_grid {
            let m = max_norm(*e, t);
            let radius = c_fit * (1.0 + l.value());
            rows.push(AbsorptionRow {
                eps: *e,
                t_back: t,
                max_endpoint_norm2: m,
                radius,
                absorbed: m <= radius,
            });
        }
    }

    let mut depths = matrix.t_back_grid.clone();
    depths.sort_by(f64::total_cmp);
    let t_abs = depths
        .iter()
        .copied()
        .find(|&t0| rows.iter().filter(|r| r.t_back >= t0).all(|r| r.absorbed));

    let mut bundle_spread: f64 = 0.0;
    let reference_depth = if matrix.t_back_grid.contains(&settings.reference_depth) {
        settings.reference_depth
    } else {
        deepest
    };
    for &e in &matrix.eps_grid {
        let per_bundle: Vec<f64> = (0..matrix.bundles.len())
            .map(|b| {
                matrix
                    .cells_at(e, reference_depth)
                    .filter(|c| c.bundle == b)
                    .map(|c| c.endpoint.norm2_sq())
                    .fold(0.0, f64::max)
            })
            .collect();
        let hi = per_bundle.iter().copied().fold(0.0, f64::max);
        let lo = per_bundle.iter().copied().fold(f64::INFINITY, f64::min);
        if hi > 0.0 {
            bundle_spread = bundle_spread.max((hi - lo) / hi);
        }
    }

    let l_monotone = integrand_monotone_in_eps(path, &matrix.eps_grid, settings.quad_horizon)? && {
        let mut pairs: Vec<(f64, f64)> = functionals.iter().map(|f| (f.eps, f.value())).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.windows(2).all(|w| w[0].1 <= w[1].1) && pairs.first().is_none_or(|p| l_zero <= p.1)
    };

    Ok(AbsorptionReport {
        rows,
        functionals,
        l_zero,
        c_fit,
        calibration_depth: deepest,
        t_abs,
        l_monotone,
        bundle_spread,
        reference_depth,
    })
}
