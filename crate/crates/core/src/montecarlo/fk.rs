//! Exact Feynman–Kac expectations on the product lattice via Krylov
//! exponentials of `Lap_h - U`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::expm_log_sums;
use crate::potentials::{PairPotential, TrapPotential};
use crate::variational::{canonical_potential, CanonicalOptions, GridHamiltonian, Negated};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkResult {
    pub beta: f64,
    /// `log E_nu[exp(-int_0^beta U(X_t) dt)]`
    pub log_e: f64,
    /// same at `2 beta`
    pub log_e_double: f64,
    /// `(log_e_double - log_e) / beta`
    pub slope: f64,
    pub matvecs: usize,
}

/// `nu` is a probability vector on the product lattice; `None` is uniform.
#[allow(clippy::too_many_arguments)]
pub fn fk_oracle(
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    grid: &Grid,
    beta: f64,
    nu: Option<&[f64]>,
    max_states: usize,
    tol: f64,
) -> Result<FkResult> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    let opts = CanonicalOptions { max_dims: usize::MAX, max_states, ..Default::default() };
    let (product, pot) = canonical_potential(w, v, n, grid, None, &opts)?;
    let start: Vec<f64> = match nu {
        Some(p) => {
            if p.len() != product.len() {
                return Err(Error::GridMismatch("start distribution length".into()));
            }
            if p.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::Domain("start distribution must be nonnegative".into()));
            }
            let s: f64 = p.iter().sum();
            p.iter().map(|x| x / s).collect()
        }
        None => vec![1.0 / product.len() as f64; product.len()],
    };
    let ham = GridHamiltonian::new(product, &pot)?;
    let w0 = ham.restrict(&start);
    if beta == 0.0 {
        let kept: f64 = w0.iter().sum();
        let l = kept.ln();
        return Ok(FkResult { beta, log_e: l, log_e_double: l, slope: 0.0, matvecs: 0 });
    }
    let trace = expm_log_sums(&Negated(&ham), &w0, &[beta, 2.0 * beta], tol)?;
    let (a, b) = (trace.log_sums[0], trace.log_sums[1]);
    Ok(FkResult { beta, log_e: a, log_e_double: b, slope: (b - a) / beta, matvecs: trace.matvecs })
}
