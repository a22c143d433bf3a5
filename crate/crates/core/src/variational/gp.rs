//! Gross–Pitaevskii minimization by normalized gradient flow.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::hamiltonian::GridHamiltonian;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::grid::Grid;
use crate::linalg::SymOp;
use crate::potentials::TrapPotential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpOptions {
    /// relative energy change per step, held over `window` steps
    pub tol: f64,
    pub window: usize,
    /// L² norm of the projected gradient at convergence
    pub el_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions { tol: 1e-9, window: 20, el_tol: 1e-6, max_iter: 500_000, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpResult {
    pub phi: ScalarField,
    pub chi_gp: f64,
    pub alpha: f64,
    pub iterations: usize,
    /// energy after every accepted step, starting with the initial field
    pub energy_trace: Vec<f64>,
    pub residual: f64,
}

struct Problem<'a> {
    ham: &'a GridHamiltonian,
    coupling: f64,
    dv: f64,
}

impl Problem<'_> {
    fn energy(&self, phi: &[f64], scratch: &mut [f64]) -> f64 {
        self.ham.apply(phi, scratch);
        let mut e = 0.0;
        for (s, p) in scratch.iter().zip(phi) {
            e += p * s + self.coupling * p * p * p * p;
        }
        e * self.dv
    }

    /// `E(phi + delta) - E(phi)` expanded in `delta`, given `hphi = H phi`.
    fn energy_change(&self, phi: &[f64], hphi: &[f64], delta: &[f64], scratch: &mut [f64]) -> f64 {
        self.ham.apply(delta, scratch);
        let mut acc = 0.0;
        for i in 0..phi.len() {
            let (p, d) = (phi[i], delta[i]);
            let quart = d * (4.0 * p * p * p + d * (6.0 * p * p + d * (4.0 * p + d)));
            acc += d * (2.0 * hphi[i] + scratch[i]) + self.coupling * quart;
        }
        acc * self.dv
    }
}

fn normalize(x: &mut [f64], dv: f64) -> Result<()> {
    let n = (x.iter().map(|v| v * v).sum::<f64>() * dv).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain("field cannot be normalized".into()));
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

/// Positive start shaped by the trap, `exp(-(W - min W)/2)` clipped.
pub(crate) fn trap_start(ham: &GridHamiltonian, w: &[f64]) -> Vec<f64> {
    let act = ham.restrict(w);
    let wmin = act.iter().cloned().fold(f64::INFINITY, f64::min);
    act.iter().map(|v| (-((v - wmin).min(60.0)) / 2.0).exp()).collect()
}

pub fn gp_minimize(w: &TrapPotential, alpha: f64, grid: &Grid, opts: &GpOptions) -> Result<GpResult> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("GP parameter must be >= 0, got {alpha}")));
    }
    grid.validate()?;
    w.validate()?;
    let wv = w.sample(grid);
    let ham = GridHamiltonian::new(*grid, &wv)?;
    let start = trap_start(&ham, &wv);
    gp_minimize_from(&ham, alpha, start, opts)
}

/// Flow from an explicit start on the active cells of `ham`.
pub fn gp_minimize_from(ham: &GridHamiltonian, alpha: f64, mut phi: Vec<f64>, opts: &GpOptions) -> Result<GpResult> {
    let grid = ham.grid;
    let dv = grid.cell_volume();
    let prob = Problem { ham, coupling: 4.0 * PI * alpha, dv };
    let n = phi.len();
    phi.iter_mut().for_each(|v| *v = v.abs());
    normalize(&mut phi, dv)?;
    let mut hphi = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut energy = prob.energy(&phi, &mut hphi);
    let mut trace = vec![energy];
    let mut tau = 1.0 / ham.spectral_bound().max(1e-300);
    let mut quiet = 0usize;
    let mut residual = f64::INFINITY;
    for iter in 0..opts.max_iter {
        for i in 0..n {
            g[i] = hphi[i] + 2.0 * prob.coupling * phi[i] * phi[i] * phi[i];
        }
        let mu = phi.iter().zip(&g).map(|(p, q)| p * q).sum::<f64>() / phi.iter().map(|p| p * p).sum::<f64>();
        residual = (phi.iter().zip(&g).map(|(p, q)| (q - mu * p).powi(2)).sum::<f64>() * dv).sqrt();
        if quiet >= opts.window && residual <= opts.el_tol {
            return finish(&prob, phi, alpha, iter, trace, residual);
        }
        let mut accepted = false;
        let rr = residual * residual / dv;
        for _ in 0..opts.max_backtracks {
            // phi + delta = (phi - tau r) / nu with r orthogonal to phi
            let s2 = tau * tau * rr * dv;
            let nu = (1.0 + s2).sqrt();
            let a = -s2 / (nu * (1.0 + nu));
            let b = -tau / nu;
            for i in 0..n {
                delta[i] = a * phi[i] + b * (g[i] - mu * phi[i]);
                trial[i] = phi[i] + delta[i];
            }
            let change = prob.energy_change(&phi, &hphi, &delta, &mut scratch);
            if change <= 0.0 {
                let rel = -change / energy.abs().max(1e-300);
                quiet = if rel < opts.tol { quiet + 1 } else { 0 };
                std::mem::swap(&mut phi, &mut trial);
                let norm = (phi.iter().map(|p| p * p).sum::<f64>() * dv).sqrt();
                for i in 0..n {
                    phi[i] /= norm;
                    hphi[i] = (hphi[i] + scratch[i]) / norm;
                }
                if iter % 64 == 63 {
                    ham.apply(&phi, &mut hphi);
                }
                energy += change;
                trace.push(energy);
                tau *= 1.1;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if !accepted {
            if residual <= opts.el_tol {
                return finish(&prob, phi, alpha, iter, trace, residual);
            }
            return Err(Error::Stalled(format!("no energy decrease after {} backtracks (residual {residual:e})", opts.max_backtracks)));
        }
    }
    Err(Error::NotConverged(format!("gradient flow reached {} steps, residual {residual:e}", opts.max_iter)))
}

fn finish(prob: &Problem, mut phi: Vec<f64>, alpha: f64, iterations: usize, energy_trace: Vec<f64>, residual: f64) -> Result<GpResult> {
    phi.iter_mut().for_each(|v| *v = v.abs());
    normalize(&mut phi, prob.dv)?;
    let mut s = vec![0.0; phi.len()];
    let chi_gp = prob.energy(&phi, &mut s);
    let full = ScalarField { grid: prob.ham.grid, values: prob.ham.extend(&phi) };
    Ok(GpResult { phi: full, chi_gp, alpha, iterations, energy_trace, residual })
}

fn gp_energy_of(ham: &GridHamiltonian, full: &[f64], coupling: f64) -> f64 {
    let act = ham.restrict(full);
    let mut s = vec![0.0; act.len()];
    Problem { ham, coupling, dv: ham.grid.cell_volume() }.energy(&act, &mut s)
}

/// `||grad phi||^2 + <W, phi^2> + 4 pi alpha ||phi||_4^4` with the discrete operators.
pub fn gp_energy(w: &TrapPotential, alpha: f64, phi: &ScalarField) -> Result<f64> {
    let wv = w.sample(&phi.grid);
    let ham = GridHamiltonian::new(phi.grid, &wv)?;
    if phi.values.iter().enumerate().any(|(i, v)| *v != 0.0 && !ham.is_active(i)) {
        return Ok(f64::INFINITY);
    }
    Ok(gp_energy_of(&ham, &phi.values, 4.0 * PI * alpha))
}
