//! `-Laplacian + U` on the finite cells of a grid, with infinite cells removed
//! (Dirichlet conditions on `{U = inf}`).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::linalg::SymOp;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct GridHamiltonian {
    pub grid: Grid,
    active: Vec<usize>,
    index: Vec<usize>,
    rowptr: Vec<usize>,
    cols: Vec<u32>,
    inv_h2: f64,
    base: f64,
    diag: Vec<f64>,
}

impl GridHamiltonian {
    /// `potential` is sampled on every cell of `grid`; infinite cells are excluded.
    pub fn new(grid: Grid, potential: &[f64]) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::GridMismatch("potential length".into()));
        }
        if potential.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::Domain("potential must be a number or +inf".into()));
        }
        let mut index = vec![NONE; grid.len()];
        let mut active = Vec::new();
        for (i, u) in potential.iter().enumerate() {
            if u.is_finite() {
                index[i] = active.len();
                active.push(i);
            }
        }
        if active.is_empty() {
            return Err(Error::Domain("every cell is excluded".into()));
        }
        if active.len() > u32::MAX as usize {
            return Err(Error::TooLarge("too many active cells".into()));
        }
        let n = grid.n;
        let periodic = grid.bc == Boundary::Periodic;
        let mut rowptr = Vec::with_capacity(active.len() + 1);
        let mut cols = Vec::with_capacity(active.len() * 2 * grid.d);
        rowptr.push(0);
        let mut idx = vec![0usize; grid.d];
        for &cell in &active {
            grid.multi_index(cell, &mut idx);
            for axis in 0..grid.d {
                let s = grid.stride(axis);
                let k = idx[axis];
                let up = if k + 1 < n {
                    Some(cell + s)
                } else if periodic {
                    Some(cell + s - n * s)
                } else {
                    None
                };
                let down = if k > 0 {
                    Some(cell - s)
                } else if periodic {
                    Some(cell + (n - 1) * s)
                } else {
                    None
                };
                for nb in [down, up].into_iter().flatten() {
                    if index[nb] != NONE {
                        cols.push(index[nb] as u32);
                    }
                }
            }
            rowptr.push(cols.len());
        }
        let h = grid.spacing();
        let inv_h2 = 1.0 / (h * h);
        let diag = active.iter().map(|&c| potential[c]).collect();
        Ok(GridHamiltonian { grid, active, index, rowptr, cols, inv_h2, base: 2.0 * grid.d as f64 * inv_h2, diag })
    }

    /// Replaces the potential; the excluded set must not change.
    pub fn set_potential(&mut self, potential: &[f64]) -> Result<()> {
        if potential.len() != self.grid.len() {
            return Err(Error::GridMismatch("potential length".into()));
        }
        for (d, &c) in self.diag.iter_mut().zip(&self.active) {
            *d = potential[c];
            if !d.is_finite() {
                return Err(Error::Domain("potential became infinite on an active cell".into()));
            }
        }
        Ok(())
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn excluded(&self) -> Vec<bool> {
        self.index.iter().map(|i| *i == NONE).collect()
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.index[cell] != NONE
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.active.iter().map(|&c| full[c]).collect()
    }

    pub fn extend(&self, act: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (&c, v) in self.active.iter().zip(act) {
            out[c] = *v;
        }
        out
    }

    /// Upper bound on the spectrum (Gershgorin).
    pub fn spectral_bound(&self) -> f64 {
        self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * self.base
    }

    pub fn lower_bound(&self) -> f64 {
        self.diag.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `-Laplacian` only, on active coefficients.
    pub fn apply_kinetic(&self, x: &[f64], y: &mut [f64]) {
        self.apply_with(x, y, false);
    }

    fn apply_with(&self, x: &[f64], y: &mut [f64], potential: bool) {
        let rows = |(i, yi): (usize, &mut f64)| {
            let mut acc = 0.0;
            for &c in &self.cols[self.rowptr[i]..self.rowptr[i + 1]] {
                acc += x[c as usize];
            }
            let d = if potential { self.base + self.diag[i] } else { self.base };
            *yi = d * x[i] - self.inv_h2 * acc;
        };
        if y.len() >= 1 << 15 {
            y.par_iter_mut().enumerate().with_min_len(1 << 12).for_each(rows);
        } else {
            y.iter_mut().enumerate().for_each(rows);
        }
    }
}

impl SymOp for GridHamiltonian {
    fn dim(&self) -> usize {
        self.active.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_with(x, y, true);
    }
}

/// `A = -H`, the Feynman–Kac generator.
pub struct Negated<'a>(pub &'a GridHamiltonian);

impl SymOp for Negated<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }
}
