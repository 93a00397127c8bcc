//! Two-sided Wiener paths, the shift group acting on them, and the noise
//! factor `z(t) = exp(-eps * omega(t))` that turns the multiplicative
//! Stratonovich noise into a random coefficient.
//!
//! A [`WienerPath`] is an immutable view onto sampled data. Shifting never
//! regenerates samples: the shifted path evaluates the same data at
//! `t + s` and subtracts the anchor value `omega(s)`, so the group law
//! holds exactly on grid times.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Relative distance (in units of the path step) under which a time is
/// treated as lying exactly on a grid node.
const NODE_SNAP: f64 = 1e-9;

#[derive(Debug)]
struct PathData {
    t_min: f64,
    dt: f64,
    values: Vec<f64>,
    seed: Option<u64>,
}

impl PathData {
    fn t_max(&self) -> f64 {
        self.t_min + (self.values.len() - 1) as f64 * self.dt
    }

    /// Piecewise-linear evaluation, snapping to nodes.
    fn eval(&self, x: f64) -> Option<f64> {
        let last = (self.values.len() - 1) as f64;
        let pos = (x - self.t_min) / self.dt;
        if !(pos >= -NODE_SNAP && pos <= last + NODE_SNAP) {
            return None;
        }
        let nearest = pos.round();
        if (pos - nearest).abs() <= NODE_SNAP {
            return Some(self.values[nearest.clamp(0.0, last) as usize]);
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        Some(a + frac * (b - a))
    }
}

/// A sampled two-sided Brownian trajectory, possibly viewed through a shift.
#[derive(Debug, Clone)]
pub struct WienerPath {
    data: Arc<PathData>,
    offset: f64,
    anchor: f64,
}

impl WienerPath {
    /// Wraps already-sampled values on the uniform grid `t_min + i * dt`.
    /// The grid must contain `t = 0` and the value there must be exactly 0.
    pub fn from_values(t_min: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::build(t_min, dt, values, None)
    }

    fn build(t_min: f64, dt: f64, values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        let t_max = t_min + values.len().saturating_sub(1) as f64 * dt;
        let invalid = |reason| Error::InvalidWindow {
            t_min,
            t_max,
            dt,
            reason,
        };
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("step must be positive"));
        }
        if values.len() < 2 {
            return Err(invalid("need at least two samples"));
        }
        let origin =
            origin_index(t_min, dt).ok_or_else(|| invalid("grid does not contain t = 0"))?;
        if origin >= values.len() {
            return Err(invalid("grid does not contain t = 0"));
        }
        if values[origin] != 0.0 {
            return Err(invalid("omega(0) must be exactly 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite sample"));
        }
        Ok(Self {
            data: Arc::new(PathData {
                t_min,
                dt,
                values,
                seed,
            }),
            offset: 0.0,
            anchor: 0.0,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.data.t_min - self.offset
    }

    pub fn t_max(&self) -> f64 {
        self.data.t_max() - self.offset
    }

    pub fn dt(&self) -> f64 {
        self.data.dt
    }

    pub fn seed(&self) -> Option<u64> {
        self.data.seed
    }

    /// Accumulated shift relative to the sampled data.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.data.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.values.is_empty()
    }

    fn out_of_window(&self, t: f64) -> Error {
        Error::OutOfWindow {
            t,
            t_min: self.t_min(),
            t_max: self.t_max(),
        }
    }

    /// `omega(t)` for this view.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.data
            .eval(t + self.offset)
            .map(|w| w - self.anchor)
            .ok_or_else(|| self.out_of_window(t))
    }

    /// `theta_s omega`, i.e. `t -> omega(t + s) - omega(s)`.
    pub fn shift(&self, s: f64) -> Result<Self> {
        let offset = self.offset + s;
        let anchor = self
            .data
            .eval(offset)
            .ok_or_else(|| self.out_of_window(s))?;
        Ok(Self {
            data: Arc::clone(&self.data),
            offset,
            anchor,
        })
    }

    /// Node times of this view, in increasing order.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let d = &self.data;
        (0..d.values.len()).map(move |i| d.t_min + i as f64 * d.dt - self.offset)
    }

    /// Node values of this view, aligned with [`times`](Self::times).
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.values.iter().map(move |w| w - self.anchor)
    }

    /// Node times strictly inside `(t0, t1)`. These are the kinks of the
    /// piecewise-linear interpolant.
    pub fn nodes_between(&self, t0: f64, t1: f64) -> Vec<f64> {
        let d = &self.data;
        let lo = ((t0 + self.offset - d.t_min) / d.dt).floor() as i64 + 1;
        let hi = ((t1 + self.offset - d.t_min) / d.dt).ceil() as i64 - 1;
        let snap = NODE_SNAP * d.dt;
        (lo.max(0)..=hi.min(d.values.len() as i64 - 1))
            .map(|i| d.t_min + i as f64 * d.dt - self.offset)
            .filter(|&t| t > t0 + snap && t < t1 - snap)
            .collect()
    }

    /// Copy of the sampled data with values at times `t > after` (in this
    /// view's coordinates) replaced by `f(t, omega)`. The result is an
    /// unshifted path in this view's coordinates.
    pub fn modified_after(&self, after: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .times()
            .zip(self.values())
            .map(|(t, w)| if t > after { f(t, w) } else { w })
            .collect();
        Self::from_values(self.t_min(), self.dt(), values)
    }

    /// Writes `t,omega` rows with 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,omega\n");
        for (t, w) in self.times().zip(self.values()) {
            let _ = writeln!(out, "{:.16e},{:.16e}", t, w);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::Parse {
            what: "path csv".into(),
            reason,
        };
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("t,omega") => {}
            other => return Err(bad(format!("expected header `t,omega`, found {other:?}"))),
        }
        let mut ts = Vec::new();
        let mut ws = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("line {}: expected two columns", k + 2)))?;
            let t: f64 = a
                .trim()
                .parse()
                .map_err(|e| bad(format!("line {}: {e}", k + 2)))?;
            let w: f64 = b
                .trim()
                .parse()
                .map_err(|e| bad(format!("line {}: {e}", k + 2)))?;
            if let Some(&prev) = ts.last() {
                if !(t > prev) {
                    return Err(bad(format!(
                        "line {}: times must be strictly increasing",
                        k + 2
                    )));
                }
            }
            ts.push(t);
            ws.push(w);
        }
        if ts.len() < 2 {
            return Err(bad("need at least two rows".into()));
        }
        let n = ts.len();
        let dt = (ts[n - 1] - ts[0]) / (n - 1) as f64;
        for (i, &t) in ts.iter().enumerate() {
            if (t - (ts[0] + i as f64 * dt)).abs() > 1e-6 * dt {
                return Err(bad(format!("row {} is off the uniform grid", i + 1)));
            }
        }
        Self::from_values(ts[0], dt, ws)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

fn origin_index(t_min: f64, dt: f64) -> Option<usize> {
    if t_min > 0.0 {
        return None;
    }
    let k = -t_min / dt;
    let r = k.round();
    ((k - r).abs() <= NODE_SNAP * k.max(1.0)).then_some(r as usize)
}

/// Samples a two-sided path on `[t_min, t_max]` with step `dt_path`.
///
/// The forward and backward halves are independent cumulative Gaussian
/// walks started from `omega(0) = 0`, each drawn from its own ChaCha stream,
/// so the same seed always yields the same path.
pub fn sample_path(seed: u64, t_min: f64, t_max: f64, dt_path: f64) -> Result<WienerPath> {
    let invalid = |reason| Error::InvalidWindow {
        t_min,
        t_max,
        dt: dt_path,
        reason,
    };
    if !(dt_path > 0.0) || !dt_path.is_finite() {
        return Err(invalid("step must be positive"));
    }
    if !(t_min <= 0.0 && 0.0 <= t_max) {
        return Err(invalid("window must contain t = 0"));
    }
    let n_neg =
        origin_index(t_min, dt_path).ok_or_else(|| invalid("grid does not contain t = 0"))?;
    let n_pos = (t_max / dt_path + NODE_SNAP).floor() as usize;
    if n_neg + n_pos == 0 {
        return Err(invalid("window has a single node"));
    }

    let normal = Normal::new(0.0, dt_path.sqrt()).expect("positive std");
    let mut values = vec![0.0; n_neg + n_pos + 1];

    let mut forward = ChaCha8Rng::seed_from_u64(seed);
    forward.set_stream(0);
    for i in 1..=n_pos {
        values[n_neg + i] = values[n_neg + i - 1] + normal.sample(&mut forward);
    }
    let mut backward = ChaCha8Rng::seed_from_u64(seed);
    backward.set_stream(1);
    for i in 1..=n_neg {
        values[n_neg - i] = values[n_neg - i + 1] + normal.sample(&mut backward);
    }

    WienerPath::build(t_min, dt_path, values, Some(seed))
}

/// Shift operator `theta_s`.
pub fn shift(path: &WienerPath, s: f64) -> Result<WienerPath> {
    path.shift(s)
}

/// `z_eps(t) = exp(-eps * omega(t))`.
pub fn noise_factor(path: &WienerPath, epsilon: f64, t: f64) -> Result<f64> {
    Ok((-epsilon * path.eval(t)?).exp())
}

/// `sup |omega(t) / t|` over grid times with `|t| >= t0`.
pub fn lil_statistic(path: &WienerPath, t0: f64) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::param("t0", "must be positive"));
    }
    if !(t0 < (-path.t_min()).min(path.t_max())) {
        return Err(path.out_of_window(t0));
    }
    let snap = NODE_SNAP * path.dt();
    Ok(path
        .times()
        .zip(path.values())
        .filter(|(t, _)| t.abs() >= t0 - snap)
        .map(|(t, w)| (w / t).abs())
        .fold(0.0, f64::max))
}

/// The noise factor attached to one path and one intensity. A missing path
/// gives the deterministic factor `z = 1`.
#[derive(Debug, Clone)]
pub struct NoiseFactor {
    pub epsilon: f64,
    pub path: Option<WienerPath>,
}

impl NoiseFactor {
    pub fn new(epsilon: f64, path: WienerPath) -> Self {
        Self {
            epsilon,
            path: Some(path),
        }
    }

    pub fn deterministic() -> Self {
        Self {
            epsilon: 0.0,
            path: None,
        }
    }

    pub fn z(&self, t: f64) -> Result<f64> {
        match &self.path {
            Some(p) => noise_factor(p, self.epsilon, t),
            None => Ok(1.0),
        }
    }

    /// Kinks of `z` inside `(t0, t1)`.
    pub fn kinks(&self, t0: f64, t1: f64) -> Vec<f64> {
        match &self.path {
            Some(p) if self.epsilon != 0.0 => p.nodes_between(t0, t1),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchored_at_zero() {
        let p = sample_path(1, -1.0, 1.0, 0.5).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert_eq!(p.len(), 5);
        for seed in 0..20 {
            let p = sample_path(seed, -3.0, 2.0, 0.01).unwrap();
            assert_eq!(p.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_window_without_origin() {
        assert!(matches!(
            sample_path(1, 0.5, 1.0, 0.1),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(matches!(
            sample_path(1, -0.25, 1.0, 0.1),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(sample_path(1, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = sample_path(9, -2.0, 2.0, 1e-3).unwrap();
        let b = sample_path(9, -2.0, 2.0, 1e-3).unwrap();
        let c = sample_path(10, -2.0, 2.0, 1e-3).unwrap();
        assert!(a
            .values()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.values().zip(c.values()).any(|(x, y)| x != y));
    }

    #[test]
    fn increment_statistics() {
        let p = sample_path(7, -10.0, 10.0, 1e-3).unwrap();
        let v: Vec<f64> = p.values().collect();
        let inc: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(inc.len(), 20000);
        let n = inc.len() as f64;
        let mean = inc.iter().sum::<f64>() / n;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1e-3).abs() <= 0.05 * 1e-3, "variance {var}");
        let sigma_mean = (1e-3 / n).sqrt();
        assert!(mean.abs() <= 3.0 * sigma_mean, "mean {mean}");
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let p = WienerPath::from_values(-1.0, 1.0, vec![2.0, 0.0, -4.0]).unwrap();
        assert_eq!(p.eval(0.5).unwrap(), -2.0);
        assert_eq!(p.eval(-0.25).unwrap(), 0.5);
        assert!(matches!(p.eval(1.5), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn shift_identity_and_anchor() {
        let p = sample_path(3, -5.0, 5.0, 0.01).unwrap();
        let q = p.shift(0.0).unwrap();
        for t in [-4.0, -1.23, 0.0, 2.5, 4.99] {
            assert_eq!(p.eval(t).unwrap().to_bits(), q.eval(t).unwrap().to_bits());
        }
        let r = p.shift(1.7).unwrap();
        assert_eq!(r.eval(0.0).unwrap(), 0.0);
        assert_eq!(
            r.eval(1.0).unwrap(),
            p.eval(2.7).unwrap() - p.eval(1.7).unwrap()
        );
    }

    #[test]
    fn shift_group_law_is_exact_on_nodes() {
        let p = sample_path(11, -10.0, 10.0, 1e-3).unwrap();
        let composed = p.shift(1.0).unwrap().shift(2.0).unwrap();
        let direct = p.shift(3.0).unwrap();
        let mut t = -12.0;
        while t <= 6.0 {
            assert_eq!(
                composed.eval(t).unwrap().to_bits(),
                direct.eval(t).unwrap().to_bits()
            );
            t += 0.125;
        }
        assert!(p.shift(11.0).is_err());
        assert!(matches!(direct.eval(7.5), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn noise_factor_examples() {
        let p = sample_path(5, -2.0, 2.0, 0.01).unwrap();
        for t in [-1.5, 0.3, 1.99] {
            assert_eq!(noise_factor(&p, 0.0, t).unwrap(), 1.0);
        }
        for eps in [0.1, 0.5, 2.0] {
            assert_eq!(noise_factor(&p, eps, 0.0).unwrap(), 1.0);
        }
        let q = WienerPath::from_values(-1.0, 1.0, vec![-1.2, 0.0, 0.4]).unwrap();
        let z = noise_factor(&q, 0.5, -1.0).unwrap();
        assert!((z - 0.6f64.exp()).abs() < 1e-15);
        assert!(noise_factor(&q, 0.5, 3.0).is_err());
    }

    #[test]
    fn lil_examples() {
        let zero = WienerPath::from_values(-20.0, 1.0, vec![0.0; 41]).unwrap();
        assert_eq!(lil_statistic(&zero, 5.0).unwrap(), 0.0);

        let c = 3.0;
        let vals = (0..41)
            .map(|i| {
                let t = -20.0 + i as f64;
                if t.abs() >= 5.0 {
                    c
                } else {
                    0.0
                }
            })
            .collect();
        let p = WienerPath::from_values(-20.0, 1.0, vals).unwrap();
        assert!((lil_statistic(&p, 5.0).unwrap() - c / 5.0).abs() < 1e-15);
        assert!(lil_statistic(&p, 25.0).is_err());
    }

    #[test]
    fn lil_decreases_in_threshold() {
        let mut hits = 0;
        for seed in 0..100 {
            let p = sample_path(seed, -100.0, 100.0, 1e-2).unwrap();
            if lil_statistic(&p, 50.0).unwrap() <= lil_statistic(&p, 10.0).unwrap() {
                hits += 1;
            }
        }
        assert!(hits >= 90);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let p = sample_path(21, -1.0, 1.5, 0.01).unwrap();
        let q = WienerPath::from_csv_str(&p.to_csv_string()).unwrap();
        assert_eq!(p.len(), q.len());
        assert!(p
            .values()
            .zip(q.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!((p.t_min() - q.t_min()).abs() < 1e-12);
        assert!((p.dt() - q.dt()).abs() < 1e-15);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(WienerPath::from_csv_str("time,w\n0,0\n").is_err());
        assert!(WienerPath::from_csv_str("t,omega\n0,0\n-1,1\n").is_err());
        assert!(WienerPath::from_csv_str("t,omega\n-1,1\n0,0\n3,0\n").is_err());
    }

    #[test]
    fn modification_after_time_leaves_past_untouched() {
        let p = sample_path(2, -3.0, 3.0, 0.01).unwrap();
        let q = p.modified_after(0.0, |_, w| w + 10.0).unwrap();
        assert_eq!(p.eval(-2.0).unwrap(), q.eval(-2.0).unwrap());
        assert_eq!(p.eval(1.0).unwrap() + 10.0, q.eval(1.0).unwrap());
    }
}
