//! N walks on a grid lattice (jump rate `1/h^2` per direction) weighted by
//! `exp(-s int_0^beta U(X_t) dt)` with `U` the canonical product-grid potential.

use rand::Rng;

use super::rng::{metropolis, Stream};
use super::thermo::Sampler;
use super::walk::{bridge_jumps, free_jumps, to_ticks, to_time, CoordWalk};
use crate::error::{Error, Result};
use crate::fields::{DensityField, ScalarField};
use crate::grid::{Boundary, Grid};
use crate::potentials::{PairPotential, TrapPotential};
use crate::variational::{canonical_potential, CanonicalOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeMove {
    Bridge,
    Tail,
    Head,
    Shift,
}

#[derive(Debug, Clone)]
pub struct LatticeModel {
    pub grid: Grid,
    pub n: usize,
    pub beta: f64,
    pub potential: Vec<f64>,
    rate: f64,
    horizon: u64,
    strides: Vec<usize>,
    /// longest resampled stretch as a fraction of the horizon
    pub max_fraction: f64,
    /// moves per sampler step
    pub moves_per_step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    /// `n * d` coordinates, particle-major
    pub walks: Vec<CoordWalk>,
    pub action: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl LatticeModel {
    pub fn new(
        w: &TrapPotential,
        v: &PairPotential,
        n: usize,
        grid: &Grid,
        beta: f64,
        tilt: Option<&[ScalarField]>,
    ) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
        }
        let opts = CanonicalOptions { max_dims: 12, max_states: 50_000_000, ..Default::default() };
        let (product, potential) = canonical_potential(w, v, n, grid, tilt, &opts)?;
        let h = grid.spacing();
        let strides = (0..product.d).map(|c| product.stride(c)).collect();
        Ok(LatticeModel {
            grid: *grid,
            n,
            beta,
            potential,
            rate: 1.0 / (h * h),
            horizon: to_ticks(beta),
            strides,
            max_fraction: 0.3,
            moves_per_step: 1,
        })
    }

    fn coords(&self) -> usize {
        self.n * self.grid.d
    }

    fn site(&self, x: i64) -> Option<usize> {
        let n = self.grid.n as i64;
        match self.grid.bc {
            Boundary::Periodic => Some(x.rem_euclid(n) as usize),
            Boundary::Dirichlet => (0..n).contains(&x).then_some(x as usize),
        }
    }

    /// `int_0^beta U(X_t) dt` and, if requested, per-site time of every coordinate block.
    pub fn integral(&self, walks: &[CoordWalk], mut occupation: Option<&mut [f64]>) -> f64 {
        let nc = self.coords();
        let mut events: Vec<(u64, usize, i8)> = Vec::new();
        for (c, w) in walks.iter().enumerate() {
            for (t, s) in w.times.iter().zip(&w.steps) {
                if *t < self.horizon {
                    events.push((*t, c, *s));
                }
            }
        }
        events.sort_unstable();
        let mut pos: Vec<i64> = walks.iter().map(|w| w.start).collect();
        let mut sites = vec![0usize; nc];
        let mut flat = 0usize;
        for c in 0..nc {
            match self.site(pos[c]) {
                Some(s) => sites[c] = s,
                None => return f64::INFINITY,
            }
            flat += sites[c] * self.strides[c];
        }
        let per = self.grid.len();
        let mut last = 0u64;
        let mut total = 0.0;
        let credit = |flat: usize, dt: u64, total: &mut f64, occ: &mut Option<&mut [f64]>| {
            let t = to_time(dt);
            *total += self.potential[flat] * t;
            if let Some(o) = occ.as_deref_mut() {
                let mut f = flat;
                for _ in 0..self.n {
                    o[f % per] += t;
                    f /= per;
                }
            }
        };
        for (t, c, s) in events {
            if t > last {
                credit(flat, t - last, &mut total, &mut occupation);
                if total.is_infinite() {
                    return f64::INFINITY;
                }
                last = t;
            }
            pos[c] += s as i64;
            match self.site(pos[c]) {
                Some(new) => {
                    flat = flat + new * self.strides[c] - sites[c] * self.strides[c];
                    sites[c] = new;
                }
                None => return f64::INFINITY,
            }
        }
        if self.horizon > last {
            credit(flat, self.horizon - last, &mut total, &mut occupation);
        }
        if self.horizon == 0 {
            return 0.0;
        }
        total
    }

    /// Free walks from the uniform start distribution.
    pub fn free_walks(&self, rng: &mut Stream) -> Vec<CoordWalk> {
        (0..self.coords())
            .map(|_| {
                let (times, steps) = free_jumps(rng, self.rate, 0, self.horizon);
                CoordWalk { start: rng.random_range(0..self.grid.n as i64), times, steps }
            })
            .collect()
    }

    pub fn propose(&self, walks: &mut [CoordWalk], mv: LatticeMove, particle: usize, rng: &mut Stream) {
        let d = self.grid.d;
        let t = self.horizon;
        if t < 2 {
            return;
        }
        let span = ((self.max_fraction * t as f64) as u64).clamp(1, t);
        match mv {
            LatticeMove::Bridge => {
                let a = rng.random_range(0..t - 1);
                let b = (a + rng.random_range(1..=span)).min(t);
                for ax in 0..d {
                    let w = &mut walks[particle * d + ax];
                    let k = w.at(b - 1) - w.at(a);
                    let (times, steps) = bridge_jumps(rng, self.rate, a, b, k);
                    w.splice(a, b - 1, times, steps);
                }
            }
            LatticeMove::Tail => {
                let a = t - rng.random_range(1..=span);
                for ax in 0..d {
                    let w = &mut walks[particle * d + ax];
                    let (times, steps) = free_jumps(rng, self.rate, a, t);
                    w.splice(a, t, times, steps);
                }
            }
            LatticeMove::Head => {
                let b = rng.random_range(1..=span);
                for ax in 0..d {
                    let w = &mut walks[particle * d + ax];
                    let anchor = w.at(b - 1);
                    let (times, steps) = free_jumps(rng, self.rate, 0, b);
                    let moved: i64 = steps.iter().map(|s| *s as i64).sum();
                    w.splice(0, b - 1, times, steps);
                    w.start = anchor - moved;
                }
            }
            LatticeMove::Shift => {
                let n = self.grid.n as i64;
                for ax in 0..d {
                    let by = match self.grid.bc {
                        Boundary::Periodic => rng.random_range(0..n),
                        Boundary::Dirichlet => rng.random_range(-(n - 1)..n),
                    };
                    walks[particle * d + ax].shift(by);
                }
            }
        }
    }

    /// Mean one-particle occupation density on the grid.
    pub fn occupation(&self, state: &LatticeState) -> DensityField {
        let mut occ = vec![0.0; self.grid.len()];
        self.integral(&state.walks, Some(&mut occ));
        let scale = 1.0 / (self.beta * self.n as f64 * self.grid.cell_volume());
        DensityField { grid: self.grid, values: occ.iter().map(|v| v * scale).collect() }
    }
}

impl Sampler for LatticeModel {
    type State = LatticeState;

    fn init(&self, rng: &mut Stream) -> Result<LatticeState> {
        for _ in 0..10_000 {
            let walks = self.free_walks(rng);
            let action = self.integral(&walks, None);
            if action.is_finite() {
                return Ok(LatticeState { walks, action, accepted: 0, proposed: 0 });
            }
        }
        Err(Error::Precondition("no finite-weight starting walk found".into()))
    }

    fn step(&self, st: &mut LatticeState, s: f64, rng: &mut Stream) {
        for _ in 0..self.moves_per_step {
            let particle = rng.random_range(0..self.n);
            let mv = match rng.random_range(0..4) {
                0 | 1 => LatticeMove::Bridge,
                2 => {
                    if rng.random::<bool>() {
                        LatticeMove::Tail
                    } else {
                        LatticeMove::Head
                    }
                }
                _ => LatticeMove::Shift,
            };
            let d = self.grid.d;
            let saved: Vec<CoordWalk> = st.walks[particle * d..(particle + 1) * d].to_vec();
            self.propose(&mut st.walks, mv, particle, rng);
            let action = self.integral(&st.walks, None);
            st.proposed += 1;
            if metropolis(s * (action - st.action), rng) {
                st.action = action;
                st.accepted += 1;
            } else {
                st.walks[particle * d..(particle + 1) * d].clone_from_slice(&saved);
            }
        }
    }

    fn potential(&self, st: &LatticeState) -> f64 {
        st.action
    }

    fn acceptance(&self, st: &LatticeState) -> (u64, u64) {
        (st.accepted, st.proposed)
    }

    fn particles(&self) -> usize {
        self.n
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}
