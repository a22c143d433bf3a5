//! Hartree product states: Gauss–Seidel over single-particle ground states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gp::trap_start;
use super::hamiltonian::GridHamiltonian;
use crate::error::{Error, Result};
use crate::fields::{InteractionKernel, ScalarField};
use crate::grid::Grid;
use crate::linalg::{lowest_eigenpair, EigenOptions, SymOp};
use crate::potentials::{PairPotential, TrapPotential};

/// How distinct particles interact in a product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `sum_{i<j} <h_i^2, V h_j^2>` with the cell-averaged kernel of `v`
    Pair(PairPotential),
    /// `lambda sum_{i<j} <h_i^2, h_j^2>`
    Dirac { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HartreeOptions {
    /// sweep energy change (relative) at convergence
    pub tol: f64,
    /// Euler–Lagrange residual bound at convergence
    pub el_tol: f64,
    pub max_sweeps: usize,
    pub multistart: usize,
    pub seed: u64,
    /// relative spread of the initial bump centres
    pub spread: f64,
    pub inner_max_matvecs: usize,
}

impl Default for HartreeOptions {
    fn default() -> Self {
        HartreeOptions {
            tol: 1e-11,
            el_tol: 1e-5,
            max_sweeps: 2000,
            multistart: 4,
            seed: 0,
            spread: 0.3,
            inner_max_matvecs: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub trap: TrapPotential,
    pub coupling: Coupling,
    pub h: Vec<ScalarField>,
    pub lambda: Vec<f64>,
    pub chi_product: f64,
    pub tilt: Option<Vec<ScalarField>>,
    pub sweeps: usize,
    /// total energy `N chi` after every single-particle update
    pub energy_trace: Vec<f64>,
    /// final energy per particle for every start
    pub seed_energies: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ProductState {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn grid(&self) -> Grid {
        self.h[0].grid
    }

    pub fn densities(&self) -> Vec<Vec<f64>> {
        self.h.iter().map(|f| f.values.iter().map(|v| v * v).collect()).collect()
    }

    /// Mean one-particle density `(1/N) sum h_i^2`.
    pub fn mean_density(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut m = vec![0.0; self.grid().len()];
        for f in &self.h {
            for (a, v) in m.iter_mut().zip(&f.values) {
                *a += v * v / n;
            }
        }
        m
    }
}

/// Discretized problem on the active cells of one grid.
pub(crate) struct Setup {
    pub grid: Grid,
    pub ham: GridHamiltonian,
    pub w_act: Vec<f64>,
    pub tilt_act: Vec<Vec<f64>>,
    pub kernel: Option<InteractionKernel>,
    pub dirac: f64,
    pub n: usize,
}

impl Setup {
    pub fn new(
        w: &TrapPotential,
        coupling: &Coupling,
        n: usize,
        grid: &Grid,
        tilt: Option<&[ScalarField]>,
    ) -> Result<Setup> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        grid.validate()?;
        w.validate()?;
        let wv = w.sample(grid);
        let ham = GridHamiltonian::new(*grid, &wv)?;
        let w_act = ham.restrict(&wv);
        let tilt_act = match tilt {
            None => vec![vec![0.0; ham.active_len()]; n],
            Some(f) => {
                if f.len() != n {
                    return Err(Error::InvalidParameter(format!("{} tilt fields for N = {n}", f.len())));
                }
                f.iter()
                    .map(|fi| {
                        grid.check_same(&fi.grid)?;
                        if fi.values.iter().any(|v| !v.is_finite()) {
                            return Err(Error::Domain("tilt must be bounded".into()));
                        }
                        Ok(ham.restrict(&fi.values))
                    })
                    .collect::<Result<_>>()?
            }
        };
        let (kernel, dirac) = match coupling {
            Coupling::Pair(v) => {
                v.validate_for_solver()?;
                if v.core_radius() > 0.0 && v.cap.is_none() {
                    return Err(Error::Precondition("hard-core pair potentials must be capped for product states".into()));
                }
                (Some(InteractionKernel::new(v, *grid)?), 0.0)
            }
            Coupling::Dirac { lambda } => {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidParameter(format!("Dirac coupling must be >= 0, got {lambda}")));
                }
                (None, *lambda)
            }
        };
        Ok(Setup { grid: *grid, ham, w_act, tilt_act, kernel, dirac, n })
    }

    pub fn dv(&self) -> f64 {
        self.grid.cell_volume()
    }

    /// `V rho` (or `lambda rho`) on the active cells.
    pub fn interact(&self, rho: &[f64]) -> Result<Vec<f64>> {
        match &self.kernel {
            Some(k) => {
                let full = self.ham.extend(rho);
                Ok(self.ham.restrict(&k.apply_raw(&self.grid, &full)?.values))
            }
            None => Ok(rho.iter().map(|r| self.dirac * r).collect()),
        }
    }

    /// `<h, (-Lap + W - f_i) h>`
    pub fn one_body(&self, i: usize, h: &[f64], scratch: &mut [f64]) -> f64 {
        self.ham.apply(h, scratch);
        let dv = self.dv();
        let mut e = 0.0;
        for k in 0..h.len() {
            e += h[k] * (scratch[k] - self.tilt_act[i][k] * h[k]);
        }
        e * dv
    }

    /// Total `N chi` of a product state on active cells.
    pub fn energy(&self, h: &[Vec<f64>]) -> Result<f64> {
        let dv = self.dv();
        let mut scratch = vec![0.0; self.ham.active_len()];
        let mut e = 0.0;
        let rho: Vec<Vec<f64>> = h.iter().map(|x| x.iter().map(|v| v * v).collect()).collect();
        for (i, hi) in h.iter().enumerate() {
            e += self.one_body(i, hi, &mut scratch);
        }
        for j in 1..h.len() {
            let vj = self.interact(&rho[j])?;
            for ri in rho.iter().take(j) {
                e += ri.iter().zip(&vj).map(|(a, b)| a * b).sum::<f64>() * dv;
            }
        }
        Ok(e)
    }
}

/// `-Lap + W - f_i + phi` on active cells.
struct Effective<'a> {
    ham: &'a GridHamiltonian,
    extra: Vec<f64>,
}

impl SymOp for Effective<'_> {
    fn dim(&self) -> usize {
        self.ham.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.ham.apply(x, y);
        for ((yi, xi), e) in y.iter_mut().zip(x).zip(&self.extra) {
            *yi += e * xi;
        }
    }
}

fn rayleigh(op: &dyn SymOp, x: &[f64], scratch: &mut [f64]) -> f64 {
    op.apply(x, scratch);
    let num: f64 = x.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().map(|a| a * a).sum();
    num / den
}

fn normalize(x: &mut [f64], dv: f64) {
    let n = (x.iter().map(|v| v * v).sum::<f64>() * dv).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

/// Distinct Gaussian bumps around the trap-adapted profile.
fn initial_states(setup: &Setup, wv: &[f64], seed: u64, spread: f64) -> Vec<Vec<f64>> {
    let g = setup.grid;
    let base = trap_start(&setup.ham, wv);
    let dv = setup.dv();
    let mass: f64 = base.iter().map(|b| b * b).sum();
    let mut centre = vec![0.0; g.d];
    let mut width2 = 0.0;
    let mut x = vec![0.0; g.d];
    let act: Vec<usize> = (0..g.len()).filter(|c| setup.ham.is_active(*c)).collect();
    for (k, &c) in act.iter().enumerate() {
        g.position(c, &mut x);
        let w = base[k] * base[k] / mass;
        for a in 0..g.d {
            centre[a] += w * x[a];
        }
    }
    for (k, &c) in act.iter().enumerate() {
        g.position(c, &mut x);
        let w = base[k] * base[k] / mass;
        width2 += w * x.iter().zip(&centre).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / g.d as f64;
    }
    let width = width2.sqrt().max(g.spacing());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..setup.n)
        .map(|_| {
            let c: Vec<f64> = centre.iter().map(|m| m + spread * width * rng.random_range(-1.0..1.0)).collect();
            let mut h: Vec<f64> = act
                .iter()
                .map(|&cell| {
                    g.position(cell, &mut x);
                    let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
                    (-r2 / (2.0 * width * width)).exp().max(1e-300)
                })
                .collect();
            normalize(&mut h, dv);
            h
        })
        .collect()
}

pub fn hartree_minimize(
    w: &TrapPotential,
    coupling: &Coupling,
    n: usize,
    grid: &Grid,
    opts: &HartreeOptions,
    tilt: Option<&[ScalarField]>,
) -> Result<ProductState> {
    let setup = Setup::new(w, coupling, n, grid, tilt)?;
    let wv = w.sample(grid);
    let mut best: Option<ProductState> = None;
    let mut energies = Vec::new();
    for s in 0..opts.multistart.max(1) {
        let start = initial_states(&setup, &wv, opts.seed.wrapping_add(s as u64), opts.spread);
        let st = run(&setup, w, coupling, start, opts, tilt)?;
        energies.push(st.chi_product);
        let better = match &best {
            None => true,
            Some(b) => {
                let tie = (st.chi_product - b.chi_product).abs() <= 1e-12 * b.chi_product.abs().max(1.0);
                if tie {
                    st.lambda.iter().sum::<f64>() < b.lambda.iter().sum::<f64>()
                } else {
                    st.chi_product < b.chi_product
                }
            }
        };
        if better {
            best = Some(st);
        }
    }
    let mut b = best.expect("at least one start");
    b.seed_energies = energies;
    Ok(b)
}

/// Continues the sweeps from the given wavefunctions.
pub fn minimize_from(
    w: &TrapPotential,
    coupling: &Coupling,
    start: &[ScalarField],
    opts: &HartreeOptions,
    tilt: Option<&[ScalarField]>,
) -> Result<ProductState> {
    let grid = start.first().ok_or_else(|| Error::InvalidParameter("empty start".into()))?.grid;
    let setup = Setup::new(w, coupling, start.len(), &grid, tilt)?;
    let dv = setup.dv();
    let h0 = start
        .iter()
        .map(|f| {
            grid.check_same(&f.grid)?;
            let mut a = setup.ham.restrict(&f.values);
            a.iter_mut().for_each(|v| *v = v.abs());
            if a.iter().all(|v| *v == 0.0) {
                return Err(Error::Domain("start vanishes on the active cells".into()));
            }
            normalize(&mut a, dv);
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut st = run(&setup, w, coupling, h0, opts, tilt)?;
    st.seed_energies = vec![st.chi_product];
    Ok(st)
}

fn run(
    setup: &Setup,
    w: &TrapPotential,
    coupling: &Coupling,
    mut h: Vec<Vec<f64>>,
    opts: &HartreeOptions,
    tilt: Option<&[ScalarField]>,
) -> Result<ProductState> {
    let n = setup.n;
    let dv = setup.dv();
    let m = setup.ham.active_len();
    let inner = EigenOptions { tol: 1e-2 * opts.el_tol, max_matvecs: opts.inner_max_matvecs, ..EigenOptions::default() };
    let mut rho: Vec<Vec<f64>> = h.iter().map(|x| x.iter().map(|v| v * v).collect()).collect();
    let mut vrho: Vec<Vec<f64>> = rho.iter().map(|r| setup.interact(r)).collect::<Result<_>>()?;
    let mut total = vec![0.0; m];
    for v in &vrho {
        total.iter_mut().zip(v).for_each(|(t, x)| *t += x);
    }
    let mut scratch = vec![0.0; m];
    let mut energy = setup.energy(&h)?;
    let mut trace = vec![energy];
    let slack = 10.0 * f64::EPSILON * setup.ham.spectral_bound().abs().max(1.0);
    let effective = |i: usize, total: &[f64], vrho: &[Vec<f64>]| -> Vec<f64> {
        (0..m).map(|k| -setup.tilt_act[i][k] + total[k] - vrho[i][k]).collect()
    };
    for sweep in 1..=opts.max_sweeps {
        let before = energy;
        for i in 0..n {
            let op = Effective { ham: &setup.ham, extra: effective(i, &total, &vrho) };
            let old = rayleigh(&op, &h[i], &mut scratch);
            let pair = lowest_eigenpair(&op, Some(&h[i]), inner)
                .map_err(|e| Error::InnerSolver(format!("particle {i}, sweep {sweep}: {e}")))?;
            if pair.value > old + slack {
                return Err(Error::MonotonicityViolation(format!(
                    "particle {i}, sweep {sweep}: {old} -> {}",
                    pair.value
                )));
            }
            let sign = if pair.vector.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let mut hi: Vec<f64> = pair.vector.iter().map(|v| (sign * v).max(0.0)).collect();
            normalize(&mut hi, dv);
            let new_rq = rayleigh(&op, &hi, &mut scratch);
            let (hi, gain) = if new_rq <= old + slack { (hi, old - new_rq) } else { (h[i].clone(), 0.0) };
            energy -= gain;
            h[i] = hi;
            rho[i] = h[i].iter().map(|v| v * v).collect();
            let nv = setup.interact(&rho[i])?;
            for k in 0..m {
                total[k] += nv[k] - vrho[i][k];
            }
            vrho[i] = nv;
            trace.push(energy);
        }
        let change = (before - energy).abs() / energy.abs().max(1.0);
        if change < opts.tol {
            let residuals = residuals_act(setup, &h, &total, &vrho);
            if residuals.iter().all(|r| *r <= opts.el_tol) {
                return assemble(setup, w, coupling, h, &total, &vrho, sweep, trace, residuals, tilt);
            }
        }
    }
    let residuals = residuals_act(setup, &h, &total, &vrho);
    Err(Error::NotConverged(format!(
        "Hartree sweeps did not converge in {} sweeps (residuals {residuals:?})",
        opts.max_sweeps
    )))
}

fn residuals_act(setup: &Setup, h: &[Vec<f64>], total: &[f64], vrho: &[Vec<f64>]) -> Vec<f64> {
    let m = setup.ham.active_len();
    let dv = setup.dv();
    let mut y = vec![0.0; m];
    (0..setup.n)
        .map(|i| {
            let extra: Vec<f64> = (0..m).map(|k| -setup.tilt_act[i][k] + total[k] - vrho[i][k]).collect();
            let op = Effective { ham: &setup.ham, extra };
            let lam = rayleigh(&op, &h[i], &mut y);
            (h[i].iter().zip(&y).map(|(a, b)| (b - lam * a).powi(2)).sum::<f64>() * dv).sqrt()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    setup: &Setup,
    w: &TrapPotential,
    coupling: &Coupling,
    h: Vec<Vec<f64>>,
    total: &[f64],
    vrho: &[Vec<f64>],
    sweeps: usize,
    energy_trace: Vec<f64>,
    residuals: Vec<f64>,
    tilt: Option<&[ScalarField]>,
) -> Result<ProductState> {
    let m = setup.ham.active_len();
    let mut y = vec![0.0; m];
    let lambda: Vec<f64> = (0..setup.n)
        .map(|i| {
            let extra: Vec<f64> = (0..m).map(|k| -setup.tilt_act[i][k] + total[k] - vrho[i][k]).collect();
            rayleigh(&Effective { ham: &setup.ham, extra }, &h[i], &mut y)
        })
        .collect();
    let chi = setup.energy(&h)? / setup.n as f64;
    Ok(ProductState {
        trap: w.clone(),
        coupling: coupling.clone(),
        h: h.iter().map(|x| ScalarField { grid: setup.grid, values: setup.ham.extend(x) }).collect(),
        lambda,
        chi_product: chi,
        tilt: tilt.map(|t| t.to_vec()),
        sweeps,
        energy_trace,
        seed_energies: Vec::new(),
        residuals,
    })
}

/// Energy per particle of arbitrary normalized wavefunctions under the
/// state's trap, coupling and tilt.
pub fn product_energy(
    w: &TrapPotential,
    coupling: &Coupling,
    h: &[ScalarField],
    tilt: Option<&[ScalarField]>,
) -> Result<f64> {
    let grid = h.first().ok_or_else(|| Error::InvalidParameter("empty state".into()))?.grid;
    let setup = Setup::new(w, coupling, h.len(), &grid, tilt)?;
    let act = h
        .iter()
        .map(|f| {
            grid.check_same(&f.grid)?;
            if f.values.iter().enumerate().any(|(c, v)| *v != 0.0 && !setup.ham.is_active(c)) {
                return Err(Error::Domain("wavefunction charges an excluded cell".into()));
            }
            Ok(setup.ham.restrict(&f.values))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(setup.energy(&act)? / h.len() as f64)
}

/// `lambda_i` recomputed from the wavefunctions: kinetic, trap, tilt and
/// interaction with the other particles.
pub fn recompute_lambda(state: &ProductState) -> Result<Vec<f64>> {
    let (setup, act) = state_setup(state)?;
    let m = setup.ham.active_len();
    let dv = setup.dv();
    let mut scratch = vec![0.0; m];
    let rho: Vec<Vec<f64>> = act.iter().map(|x| x.iter().map(|v| v * v).collect()).collect();
    let pots: Vec<Vec<f64>> = rho.iter().map(|r| setup.interact(r)).collect::<Result<_>>()?;
    Ok((0..setup.n)
        .map(|i| {
            let mut l = setup.one_body(i, &act[i], &mut scratch);
            for (j, pj) in pots.iter().enumerate() {
                if j != i {
                    l += rho[i].iter().zip(pj).map(|(a, b)| a * b).sum::<f64>() * dv;
                }
            }
            l
        })
        .collect())
}

fn state_setup(state: &ProductState) -> Result<(Setup, Vec<Vec<f64>>)> {
    let setup = Setup::new(&state.trap, &state.coupling, state.n(), &state.grid(), state.tilt.as_deref())?;
    let act = state.h.iter().map(|f| setup.ham.restrict(&f.values)).collect();
    Ok((setup, act))
}

/// `||Lap h_i + lambda_i h_i - W h_i + f_i h_i - h_i sum_{j != i} V h_j^2||_2` per particle.
pub fn el_residual(state: &ProductState) -> Result<Vec<f64>> {
    let (setup, act) = state_setup(state)?;
    let m = setup.ham.active_len();
    let dv = setup.dv();
    let rho: Vec<Vec<f64>> = act.iter().map(|x| x.iter().map(|v| v * v).collect()).collect();
    let vrho: Vec<Vec<f64>> = rho.iter().map(|r| setup.interact(r)).collect::<Result<_>>()?;
    let mut total = vec![0.0; m];
    for v in &vrho {
        total.iter_mut().zip(v).for_each(|(t, x)| *t += x);
    }
    let mut y = vec![0.0; m];
    Ok((0..setup.n)
        .map(|i| {
            let extra: Vec<f64> = (0..m).map(|k| -setup.tilt_act[i][k] + total[k] - vrho[i][k]).collect();
            Effective { ham: &setup.ham, extra }.apply(&act[i], &mut y);
            (act[i].iter().zip(&y).map(|(a, b)| (b - state.lambda[i] * a).powi(2)).sum::<f64>() * dv).sqrt()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltReport {
    /// finite differences of `t -> -N chi(f + t g)` at steps 1e-3 and 1e-4
    pub differences: [f64; 2],
    pub richardson: f64,
    /// `sum_i <g_i, h_i^2>` at the minimizer for `f`
    pub predicted: f64,
    pub gap: f64,
    pub nonsmooth: bool,
}

/// Compares the derivative of the tilted log-moment functional with the
/// pairing of `g` against the minimizer densities.
pub fn tilt_derivative_check(
    w: &TrapPotential,
    coupling: &Coupling,
    n: usize,
    grid: &Grid,
    f: Option<&[ScalarField]>,
    g: &[ScalarField],
    opts: &HartreeOptions,
) -> Result<TiltReport> {
    if g.len() != n {
        return Err(Error::InvalidParameter(format!("{} directions for N = {n}", g.len())));
    }
    let zero: Vec<ScalarField> = (0..n).map(|_| ScalarField::zeros(*grid)).collect();
    let f: Vec<ScalarField> = f.map(|x| x.to_vec()).unwrap_or(zero);
    let base = hartree_minimize(w, coupling, n, grid, opts, Some(&f))?;
    let predicted: f64 = g.iter().zip(&base.h).map(|(gi, hi)| {
        gi.values.iter().zip(&hi.values).map(|(a, b)| a * b * b).sum::<f64>() * grid.cell_volume()
    }).sum();
    let lmgf = |t: f64| -> Result<f64> {
        let ft: Vec<ScalarField> = f
            .iter()
            .zip(g)
            .map(|(a, b)| ScalarField {
                grid: *grid,
                values: a.values.iter().zip(&b.values).map(|(x, y)| x + t * y).collect(),
            })
            .collect();
        let st = minimize_from(w, coupling, &base.h, opts, Some(&ft))?;
        Ok(-(n as f64) * st.chi_product)
    };
    let mut differences = [0.0; 2];
    for (k, delta) in [1e-3, 1e-4].into_iter().enumerate() {
        differences[k] = (lmgf(delta)? - lmgf(-delta)?) / (2.0 * delta);
    }
    let richardson = (100.0 * differences[1] - differences[0]) / 99.0;
    let gap = if predicted != 0.0 {
        (richardson - predicted).abs() / predicted.abs()
    } else {
        richardson.abs()
    };
    let step_gap = (differences[1] - differences[0]).abs() / differences[1].abs().max(1e-300);
    let nonsmooth = gap > 1e-3 && step_gap > 1e-3;
    Ok(TiltReport { differences, richardson, predicted, gap, nonsmooth })
}

/// Capped-ladder extrapolation of the product energy for a hard-core pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapLadderReport {
    pub caps: Vec<f64>,
    pub chi: Vec<f64>,
    pub extrapolated: f64,
}

pub fn hartree_cap_ladder(
    w: &TrapPotential,
    v: &PairPotential,
    n: usize,
    grid: &Grid,
    opts: &HartreeOptions,
) -> Result<CapLadderReport> {
    use crate::potentials::{extrapolate_to_zero, CutoffSpec};
    let mut caps = Vec::new();
    let mut chi = Vec::new();
    for level in CutoffSpec::LADDER {
        let capped = v.capped(CutoffSpec::new(level, v)?);
        let st = hartree_minimize(w, &Coupling::Pair(capped), n, grid, opts, None)?;
        caps.push(level);
        chi.push(st.chi_product);
    }
    let s: Vec<f64> = caps.iter().map(|m| 1.0 / m.sqrt()).collect();
    let extrapolated = extrapolate_to_zero(&s, &chi);
    Ok(CapLadderReport { caps, chi, extrapolated })
}
