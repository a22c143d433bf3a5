//! N-body ground state of `-Lap + sum W(x_i) + sum_{i<j} v(x_i - x_j) - sum f(x_i)`
//! on the product grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::GridHamiltonian;
use crate::error::{Error, Result};
use crate::fields::{InteractionKernel, ScalarField};
use crate::grid::{Boundary, Grid};
use crate::linalg::{lowest_eigenpair, EigenOptions, SymOp};
use crate::potentials::{PairPotential, TrapPotential};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanonicalOptions {
    pub max_dims: usize,
    pub max_states: usize,
    pub tol: f64,
    pub max_matvecs: usize,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        CanonicalOptions { max_dims: 6, max_states: 4_000_000, tol: 1e-9, max_matvecs: 400_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalGroundState {
    /// on the `d N`-dimensional product grid
    pub h_star: ScalarField,
    pub chi_n: f64,
    pub eigenvalue: f64,
    pub excluded_mask: Vec<bool>,
    pub residual: f64,
    pub matvecs: usize,
    pub n: usize,
}

impl CanonicalGroundState {
    /// One-particle marginal density `(1/N) sum_i` of the `i`-th marginals.
    pub fn one_particle_density(&self, single: &Grid) -> Vec<f64> {
        let gp = self.h_star.grid;
        let mut out = vec![0.0; single.len()];
        let per = single.len();
        let dv_rest = single.cell_volume().powi(self.n as i32 - 1);
        for (flat, v) in self.h_star.values.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let w = v * v * dv_rest / self.n as f64;
            let mut f = flat;
            for _ in 0..self.n {
                out[f % per] += w;
                f /= per;
            }
        }
        debug_assert_eq!(gp.len(), per.pow(self.n as u32));
        out
    }
}

fn min_image(grid: &Grid, a: f64, b: f64) -> f64 {
    let d = a - b;
    match grid.bc {
        Boundary::Dirichlet => d,
        Boundary::Periodic => {
            let l = 2.0 * grid.r;
            d - l * (d / l).round()
        }
    }
}

/// Potential on every cell of the product grid, `+inf` on excluded cells.
pub fn canonical_potential(
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    grid: &Grid,
    tilt: Option<&[ScalarField]>,
    opts: &CanonicalOptions,
) -> Result<(Grid, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    grid.validate()?;
    w.validate()?;
    v.validate_for_solver()?;
    if n * grid.d > opts.max_dims {
        return Err(Error::TooLarge(format!("N d = {} exceeds max_dims = {}", n * grid.d, opts.max_dims)));
    }
    let states = (grid.len() as f64).powi(n as i32);
    if states > opts.max_states as f64 {
        return Err(Error::TooLarge(format!("{states} product states exceed the budget {}", opts.max_states)));
    }
    if let Some(f) = tilt {
        if f.len() != n {
            return Err(Error::InvalidParameter(format!("{} tilt fields for N = {n}", f.len())));
        }
        for fi in f {
            grid.check_same(&fi.grid)?;
            if fi.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain("tilt must be bounded".into()));
            }
        }
    }
    let product = grid.product(n);
    let wv = w.sample(grid);
    let hard = v.core_radius() > 0.0 && v.cap.is_none();
    let a = v.core_radius();
    let kernel = if hard || n == 1 { None } else { Some(InteractionKernel::new(v, *grid)?) };
    let per = grid.len();
    let d = grid.d;
    let nodes: Vec<Vec<f64>> = grid.positions();
    let idx: Vec<Vec<usize>> = (0..per)
        .map(|c| {
            let mut m = vec![0; d];
            grid.multi_index(c, &mut m);
            m
        })
        .collect();
    let values: Vec<f64> = (0..product.len())
        .into_par_iter()
        .map_init(
            || vec![0usize; n],
            |cells, flat| {
                let mut f = flat;
                for i in (0..n).rev() {
                    cells[i] = f % per;
                    f /= per;
                }
                let mut u = 0.0;
                for (i, &c) in cells.iter().enumerate() {
                    u += wv[c];
                    if let Some(t) = tilt {
                        u -= t[i].values[c];
                    }
                }
                if !u.is_finite() {
                    return f64::INFINITY;
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        let (ci, cj) = (cells[i], cells[j]);
                        if hard {
                            let r2: f64 = (0..d).map(|k| min_image(grid, nodes[ci][k], nodes[cj][k]).powi(2)).sum();
                            let r = r2.sqrt();
                            if r <= a {
                                return f64::INFINITY;
                            }
                            u += v.eval(r);
                        } else if let Some(k) = &kernel {
                            u += k.between(&idx[ci], &idx[cj]);
                        }
                    }
                }
                u
            },
        )
        .collect();
    Ok((product, values))
}

pub fn canonical_ground(
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    grid: &Grid,
    opts: &CanonicalOptions,
    tilt: Option<&[ScalarField]>,
) -> Result<CanonicalGroundState> {
    let (product, pot) = canonical_potential(w, v, n, grid, tilt, opts)?;
    let ham = GridHamiltonian::new(product, &pot)?;
    let eopts = EigenOptions { tol: opts.tol, max_matvecs: opts.max_matvecs, basis: 60, keep: 12 };
    let start: Vec<f64> = {
        let lo = ham.restrict(&pot).iter().cloned().fold(f64::INFINITY, f64::min);
        ham.restrict(&pot).iter().map(|u| (-(u - lo).min(60.0) / 2.0).exp()).collect()
    };
    let pair = lowest_eigenpair(&ham, Some(&start), eopts)?;
    let dv = product.cell_volume();
    let sign = if pair.vector.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / dv.sqrt();
    let act: Vec<f64> = pair.vector.iter().map(|x| (x * scale).max(0.0)).collect();
    let norm = (act.iter().map(|x| x * x).sum::<f64>() * dv).sqrt();
    let act: Vec<f64> = act.iter().map(|x| x / norm).collect();
    let excluded_mask = ham.excluded();
    Ok(CanonicalGroundState {
        h_star: ScalarField { grid: product, values: ham.extend(&act) },
        chi_n: pair.value / n as f64,
        eigenvalue: pair.value,
        excluded_mask,
        residual: pair.residual,
        matvecs: pair.matvecs,
        n,
    })
}

/// Rayleigh quotient of a field for the product-grid operator.
pub fn canonical_rayleigh(
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    grid: &Grid,
    field: &ScalarField,
    opts: &CanonicalOptions,
) -> Result<f64> {
    let (product, pot) = canonical_potential(w, v, n, grid, None, opts)?;
    product.check_same(&field.grid)?;
    let ham = GridHamiltonian::new(product, &pot)?;
    let x = ham.restrict(&field.values);
    let mut y = vec![0.0; x.len()];
    ham.apply(&x, &mut y);
    let num: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let den: f64 = field.values.iter().map(|a| a * a).sum();
    Ok(num / den)
}
