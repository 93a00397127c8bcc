//! Uniform grids on `[-L, L]^dim`, finite-difference Laplacian with
//! homogeneous Dirichlet ghosts, and rectangle-rule norms.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub l: f64,
    pub n: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(dim: usize, l: f64, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::param("grid.dim", "must be 1 or 2"));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::param("grid.l", "half-width must be positive"));
        }
        if n < 8 {
            return Err(Error::param("grid.n", "need at least 8 nodes per axis"));
        }
        Ok(Self {
            dim,
            l,
            n,
            dx: 2.0 * l / (n - 1) as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `dx^dim`.
    pub fn weight(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    pub fn axis(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.l
        } else {
            -self.l + i as f64 * self.dx
        }
    }

    /// Coordinates of node `k`; 2-D nodes are ordered row-major in x then y.
    pub fn point(&self, k: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.axis(k), 0.0],
            _ => [self.axis(k / self.n), self.axis(k % self.n)],
        }
    }

    pub fn coords(&self, k: usize) -> Vec<f64> {
        self.point(k)[..self.dim].to_vec()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Field {
        let values = (0..self.len())
            .map(|k| f(&self.point(k)[..self.dim]))
            .collect();
        Field {
            grid: *self,
            values,
        }
    }

    pub fn zeros(&self) -> Field {
        Field {
            grid: *self,
            values: vec![0.0; self.len()],
        }
    }

    fn in_outer_shell(&self, k: usize) -> bool {
        let inner = 0.9 * self.l;
        self.point(k)[..self.dim].iter().any(|c| c.abs() > inner)
    }
}

/// Pairwise summation; the split points depend only on the length, so the
/// result is reproducible across runs.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn pairwise_map(n: usize, f: &impl Fn(usize) -> f64, lo: usize) -> f64 {
    if n <= 32 {
        return (lo..lo + n).map(f).sum();
    }
    let mid = n / 2;
    pairwise_map(mid, f, lo) + pairwise_map(n - mid, f, lo + mid)
}

/// `sum_k f(k)` for `k < n` with pairwise splitting, without allocating.
pub fn pairwise(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    pairwise_map(n, &f, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.grid.weight() * pairwise(self.values.len(), |k| self.values[k] * other.values[k])
    }

    pub fn norm2_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(if self.grid.dim == 1 {
            "x,value\n"
        } else {
            "x,y,value\n"
        });
        for (k, v) in self.values.iter().enumerate() {
            let pt = self.grid.point(k);
            match self.grid.dim {
                1 => writeln!(out, "{},{}", pt[0], v),
                _ => writeln!(out, "{},{},{}", pt[0], pt[1], v),
            }
            .expect("writing to a String");
        }
        out
    }

    /// Fraction of `||f||^2` carried by nodes with some `|x_i| > 0.9 L`.
    pub fn boundary_leak(&self) -> f64 {
        let total = self.norm2_sq();
        if total == 0.0 {
            return 0.0;
        }
        let g = self.grid;
        g.weight()
            * pairwise(self.values.len(), |k| {
                if g.in_outer_shell(k) {
                    self.values[k] * self.values[k]
                } else {
                    0.0
                }
            })
            / total
    }
}

/// Writes `Delta f` into `out` (second-order central differences, zero
/// values outside the grid).
pub fn laplacian_into(f: &[f64], grid: &Grid, out: &mut [f64]) {
    let n = grid.n;
    let inv = 1.0 / (grid.dx * grid.dx);
    let at = |i: isize| {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            f[i as usize]
        }
    };
    match grid.dim {
        1 => {
            for i in 0..n {
                let ii = i as isize;
                out[i] = (at(ii - 1) - 2.0 * f[i] + at(ii + 1)) * inv;
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    let west = if i > 0 { f[k - n] } else { 0.0 };
                    let east = if i + 1 < n { f[k + n] } else { 0.0 };
                    let south = if j > 0 { f[k - 1] } else { 0.0 };
                    let north = if j + 1 < n { f[k + 1] } else { 0.0 };
                    out[k] = (west + east + south + north - 4.0 * f[k]) * inv;
                }
            }
        }
    }
}

pub fn laplacian(f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    laplacian_into(&f.values, &f.grid, &mut out);
    Field {
        grid: f.grid,
        values: out,
    }
}

/// `(sum |f_k|^p dx^dim)^{1/p}`.
pub fn norm_lp(f: &Field, p: f64) -> f64 {
    lp_pow(f, p).powf(1.0 / p)
}

/// `||f||_p^p`.
pub fn lp_pow(f: &Field, p: f64) -> f64 {
    let w = f.grid.weight();
    if p == 2.0 {
        return f.norm2_sq();
    }
    if p == 4.0 {
        return w * pairwise(f.values.len(), |k| {
            let s = f.values[k] * f.values[k];
            s * s
        });
    }
    w * pairwise(f.values.len(), |k| f.values[k].abs().powf(p))
}

pub fn norm_l2(f: &Field) -> f64 {
    f.norm2_sq().sqrt()
}

/// `sum over |f_k| >= M of |f_k|^p dx^dim`.
pub fn tail_mass(f: &Field, m: f64, p: f64) -> f64 {
    f.grid.weight()
        * pairwise(f.values.len(), |k| {
            let a = f.values[k].abs();
            if a >= m {
                a.powf(p)
            } else {
                0.0
            }
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// `(u, v) = z (u~, v~)`.
    Transformed,
    /// `(u~, v~)`.
    Physical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub u: Field,
    pub v: Field,
    pub t: f64,
    pub frame: Frame,
}

impl StatePair {
    pub fn new(u: Field, v: Field, t: f64, frame: Frame) -> Result<Self> {
        if u.grid != v.grid {
            return Err(Error::GridMismatch(
                "u and v live on different grids".into(),
            ));
        }
        Ok(Self { u, v, t, frame })
    }

    pub fn zeros(grid: &Grid, t: f64, frame: Frame) -> Self {
        Self {
            u: grid.zeros(),
            v: grid.zeros(),
            t,
            frame,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.u.grid
    }

    /// `||u||^2 + ||v||^2`.
    pub fn norm2_sq(&self) -> f64 {
        self.u.norm2_sq() + self.v.norm2_sq()
    }

    /// `||u_a - u_b||^2 + ||v_a - v_b||^2`.
    pub fn dist2_sq(&self, other: &StatePair) -> f64 {
        let w = self.u.grid.weight();
        let n = self.u.values.len();
        let du = pairwise(n, |k| (self.u.values[k] - other.u.values[k]).powi(2));
        let dv = pairwise(n, |k| (self.v.values[k] - other.v.values[k]).powi(2));
        w * (du + dv)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    /// Multiplies both components by `c` and retags the frame.
    pub fn rescaled(&self, c: f64, frame: Frame) -> StatePair {
        StatePair {
            u: self.u.scaled(c),
            v: self.v.scaled(c),
            t: self.t,
            frame,
        }
    }

    /// `(u, v) = z (u~, v~)`.
    pub fn to_transformed(&self, z: f64) -> StatePair {
        debug_assert_eq!(self.frame, Frame::Physical);
        self.rescaled(z, Frame::Transformed)
    }

    /// `(u~, v~) = (u, v) / z`.
    pub fn to_physical(&self, z: f64) -> StatePair {
        debug_assert_eq!(self.frame, Frame::Transformed);
        self.rescaled(1.0 / z, Frame::Physical)
    }
}

/// `beta ||u||^2 + alpha ||v||^2`.
pub fn energy(s: &StatePair, alpha: f64, beta: f64) -> f64 {
    beta * s.u.norm2_sq() + alpha * s.v.norm2_sq()
}
