//! Uniform box discretization of R^d.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Zero ghost cells outside the box.
    Dirichlet,
    /// Wraparound.
    Periodic,
}

/// Tensor grid on the box `[-r, r]^d` with `n` points per axis.
///
/// Dirichlet nodes sit at `-r + (k+1) h` with `h = 2r/(n+1)`, so both walls
/// are ghost nodes. Periodic nodes sit at `-r + k h` with `h = 2r/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub d: usize,
    pub r: f64,
    pub n: usize,
    pub bc: Boundary,
}

impl Grid {
    pub fn new(d: usize, r: f64, n: usize, bc: Boundary) -> Result<Self> {
        let g = Grid { d, r, n, bc };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("grid dimension must be positive".into()));
        }
        if self.n < 4 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 4, got {}", self.n)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid half-width must be positive, got {}", self.r)));
        }
        let total = (self.n as f64).powi(self.d as i32);
        if total > 2e8 {
            return Err(Error::TooLarge(format!("grid with {total} cells")));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        match self.bc {
            Boundary::Dirichlet => 2.0 * self.r / (self.n as f64 + 1.0),
            Boundary::Periodic => 2.0 * self.r / self.n as f64,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `k` along any axis.
    pub fn node(&self, k: usize) -> f64 {
        let h = self.spacing();
        match self.bc {
            Boundary::Dirichlet => -self.r + (k as f64 + 1.0) * h,
            Boundary::Periodic => -self.r + k as f64 * h,
        }
    }

    /// Stride of `axis` in row-major flat indexing (axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.d).rev() {
            out[a] = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.n + k)
    }

    pub fn position(&self, flat: usize, out: &mut [f64]) {
        let mut f = flat;
        for a in (0..self.d).rev() {
            out[a] = self.node(f % self.n);
            f /= self.n;
        }
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        let mut buf = vec![0.0; self.d];
        (0..self.len())
            .map(|i| {
                self.position(i, &mut buf);
                buf.clone()
            })
            .collect()
    }

    /// Index of the node nearest to `x` along one axis (cells are centred at
    /// the nodes). Dirichlet grids return `None` outside the box; periodic
    /// grids wrap.
    pub fn axis_cell(&self, x: f64) -> Option<usize> {
        let h = self.spacing();
        match self.bc {
            Boundary::Dirichlet => {
                let k = ((x + self.r) / h - 0.5).floor();
                if k < 0.0 || k >= self.n as f64 {
                    None
                } else {
                    Some(k as usize)
                }
            }
            Boundary::Periodic => {
                if !x.is_finite() {
                    return None;
                }
                let k = ((x + self.r) / h + 0.5).floor() as i64;
                Some(k.rem_euclid(self.n as i64) as usize)
            }
        }
    }

    /// Flat index of the cell containing `x`, if any.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for &xa in x.iter().take(self.d) {
            flat = flat * self.n + self.axis_cell(xa)?;
        }
        Some(flat)
    }

    /// Grid on R^{d m} made of `m` copies of this grid.
    pub fn product(&self, m: usize) -> Grid {
        Grid { d: self.d * m, ..*self }
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.d == other.d
            && self.n == other.n
            && self.bc == other.bc
            && (self.r - other.r).abs() <= 1e-12 * self.r.abs().max(1.0)
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}
