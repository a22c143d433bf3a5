//! Large-deviation rate functions evaluated on grid densities.

use serde::{Deserialize, Serialize};

use super::canonical::{canonical_potential, CanonicalOptions};
use super::hartree::{Coupling, Setup};
use crate::error::{Error, Result};
use crate::fields::{kinetic_energy, DensityField};
use crate::grid::Grid;
use crate::potentials::{PairPotential, TrapPotential};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub value: f64,
    pub kinetic: f64,
    pub trap: f64,
    pub interaction: f64,
    pub normalizer: f64,
}

impl RateReport {
    fn infinite() -> Self {
        RateReport { value: f64::INFINITY, kinetic: f64::INFINITY, trap: 0.0, interaction: 0.0, normalizer: 0.0 }
    }
}

/// An occupation measure: a grid density or an atom.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Density(DensityField),
    PointMass { x: Vec<f64> },
}

fn pairing(a: &[f64], b: &[f64], dv: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| if *x == 0.0 { 0.0 } else { x * y }).sum::<f64>() * dv
}

fn sqrt_of(mu: &[f64]) -> Vec<f64> {
    mu.iter().map(|v| v.sqrt()).collect()
}

fn check_grids(grid: &Grid, mus: &[DensityField]) -> Result<()> {
    if mus.is_empty() {
        return Err(Error::InvalidParameter("no densities".into()));
    }
    mus.iter().try_for_each(|m| grid.check_same(&m.grid))
}

/// `I(mu) + <W-sum, mu> + <v-sum, mu> - N chi_N` on the product grid of `n` copies of `grid`.
pub fn rate_canonical(
    mu: &DensityField,
    chi_n: f64,
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    grid: &Grid,
) -> Result<RateReport> {
    let opts = CanonicalOptions { max_dims: usize::MAX, max_states: usize::MAX, ..Default::default() };
    let (product, pot) = canonical_potential(w, v, n, grid, None, &opts)?;
    product.check_same(&mu.grid)?;
    let dv = product.cell_volume();
    let kinetic = kinetic_energy(&product, &sqrt_of(&mu.values));
    let (_, wsum) = canonical_potential(w, &PairPotential::zero(), n, grid, None, &opts)?;
    let trap = pairing(&mu.values, &wsum, dv);
    let total = pairing(&mu.values, &pot, dv);
    let interaction = total - trap;
    let normalizer = n as f64 * chi_n;
    let value = kinetic + total - normalizer;
    Ok(RateReport { value, kinetic, trap, interaction, normalizer })
}

fn product_rate(mus: &[DensityField], chi: f64, w: &TrapPotential, coupling: &Coupling) -> Result<RateReport> {
    let grid = mus[0].grid;
    check_grids(&grid, mus)?;
    let n = mus.len();
    let setup = Setup::new(w, coupling, n, &grid, None)?;
    let dv = setup.dv();
    for m in mus {
        if m.values.iter().enumerate().any(|(c, x)| *x > 0.0 && !setup.ham.is_active(c)) {
            return Ok(RateReport { trap: f64::INFINITY, value: f64::INFINITY, ..RateReport::infinite() });
        }
    }
    let act: Vec<Vec<f64>> = mus.iter().map(|m| setup.ham.restrict(&m.values)).collect();
    let kinetic: f64 = mus.iter().map(|m| kinetic_energy(&grid, &sqrt_of(&m.values))).sum();
    let trap: f64 = act.iter().map(|a| pairing(a, &setup.w_act, dv)).sum();
    let mut interaction = 0.0;
    for j in 1..n {
        let vj = setup.interact(&act[j])?;
        for a in act.iter().take(j) {
            interaction += pairing(a, &vj, dv);
        }
    }
    let normalizer = n as f64 * chi;
    Ok(RateReport { value: kinetic + trap + interaction - normalizer, kinetic, trap, interaction, normalizer })
}

/// `sum I_1(mu_i) + sum <W, mu_i> + sum_{i<j} <mu_i, V mu_j> - N chi`
pub fn rate_hartree(mus: &[DensityField], chi_product: f64, w: &TrapPotential, v: &PairPotential) -> Result<RateReport> {
    product_rate(mus, chi_product, w, &Coupling::Pair(*v))
}

/// Dirac analogue; infinite when some measure has no density.
pub fn rate_dirac(mus: &[Measure], lambda: f64, chi_dirac: f64, w: &TrapPotential) -> Result<RateReport> {
    let mut dens = Vec::with_capacity(mus.len());
    for m in mus {
        match m {
            Measure::Density(d) => dens.push(d.clone()),
            Measure::PointMass { .. } => return Ok(RateReport::infinite()),
        }
    }
    product_rate(&dens, chi_dirac, w, &Coupling::Dirac { lambda })
}

/// Bracket of the mean's rate at the supplied decomposition `mu = (1/N) sum mu_i`.
pub fn rate_mean_given_decomposition(
    mu: &DensityField,
    parts: &[DensityField],
    chi_product: f64,
    w: &TrapPotential,
    v: &PairPotential,
) -> Result<RateReport> {
    let grid = mu.grid;
    check_grids(&grid, parts)?;
    let n = parts.len();
    let nf = n as f64;
    let dv = grid.cell_volume();
    let gap = (0..grid.len())
        .map(|c| (parts.iter().map(|p| p.values[c]).sum::<f64>() / nf - mu.values[c]).abs())
        .sum::<f64>()
        * dv;
    if gap > 1e-9 {
        return Err(Error::InvalidParameter(format!("decomposition does not average to the mean (L1 gap {gap:e})")));
    }
    let setup = Setup::new(w, &Coupling::Pair(*v), n.max(1), &grid, None)?;
    if mu.values.iter().enumerate().any(|(c, x)| *x > 0.0 && !setup.ham.is_active(c)) {
        return Ok(RateReport { trap: f64::INFINITY, value: f64::INFINITY, ..RateReport::infinite() });
    }
    let mu_act = setup.ham.restrict(&mu.values);
    let trap = pairing(&mu_act, &setup.w_act, dv);
    let vmu = setup.interact(&mu_act)?;
    let mut interaction = 0.5 * nf * pairing(&mu_act, &vmu, dv);
    let mut kinetic = 0.0;
    for p in parts {
        kinetic += kinetic_energy(&grid, &sqrt_of(&p.values)) / nf;
        let a = setup.ham.restrict(&p.values);
        interaction -= pairing(&a, &setup.interact(&a)?, dv) / (2.0 * nf);
    }
    Ok(RateReport {
        value: trap + interaction + kinetic - chi_product,
        kinetic,
        trap,
        interaction,
        normalizer: chi_product,
    })
}
