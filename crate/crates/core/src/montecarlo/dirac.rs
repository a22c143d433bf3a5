//! Continuous-time simple random walks on Z^d, their local times, the
//! rescaled local-time densities and the Dirac-interaction walk model.

use std::collections::BTreeMap;

use rand::Rng;

use super::rng::{metropolis, stream, Stream};
use super::thermo::Sampler;
use super::walk::{bridge_jumps, free_jumps, to_ticks, CoordWalk, TICKS};
use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::grid::Grid;

/// Site -> time spent there, in ticks.
pub type LocalTimes = BTreeMap<Vec<i64>, u64>;

/// One walk started at the origin, one event list per coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkTrajectory {
    pub coords: Vec<CoordWalk>,
    /// horizon in ticks
    pub horizon: u64,
}

impl WalkTrajectory {
    pub fn frozen(site: &[i64], beta: f64) -> Self {
        WalkTrajectory { coords: site.iter().map(|z| CoordWalk::constant(*z)).collect(), horizon: to_ticks(beta) }
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn beta(&self) -> f64 {
        self.horizon as f64 / TICKS
    }

    /// Holding intervals as `(site, ticks)` in time order.
    pub fn holding(&self) -> Vec<(Vec<i64>, u64)> {
        let mut events: Vec<(u64, usize, i8)> = Vec::new();
        for (c, w) in self.coords.iter().enumerate() {
            for (t, s) in w.times.iter().zip(&w.steps) {
                if *t < self.horizon {
                    events.push((*t, c, *s));
                }
            }
        }
        events.sort_unstable();
        let mut pos: Vec<i64> = self.coords.iter().map(|w| w.start).collect();
        let mut out = Vec::with_capacity(events.len() + 1);
        let mut last = 0u64;
        for (t, c, s) in events {
            if t > last {
                out.push((pos.clone(), t - last));
                last = t;
            }
            pos[c] += s as i64;
        }
        if self.horizon > last {
            out.push((pos, self.horizon - last));
        }
        out
    }
}

fn check_horizon(beta: f64) -> Result<u64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("need beta > 0, got {beta}")));
    }
    let t = to_ticks(beta);
    if t < 2 {
        return Err(Error::InvalidParameter(format!("beta = {beta} is below the time resolution")));
    }
    Ok(t)
}

fn check_exponent(p: f64, d: usize) -> Result<()> {
    if !(p.is_finite() && p > d as f64 - 2.0 && p > 0.0) {
        return Err(Error::Precondition(format!("need p > d - 2 and p > 0, got p = {p}, d = {d}")));
    }
    Ok(())
}

fn free_walk(d: usize, horizon: u64, rng: &mut Stream) -> WalkTrajectory {
    let coords = (0..d)
        .map(|_| {
            let (times, steps) = free_jumps(rng, 1.0, 0, horizon);
            CoordWalk { start: 0, times, steps }
        })
        .collect();
    WalkTrajectory { coords, horizon }
}

/// `n` independent walks from the origin with rate 1 per neighbour.
pub fn ctrw_simulate(n: usize, beta: f64, d: usize, seed: u64) -> Result<Vec<WalkTrajectory>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let horizon = check_horizon(beta)?;
    Ok((0..n).map(|i| free_walk(d, horizon, &mut stream(seed, i as u64))).collect())
}

pub fn local_times(traj: &WalkTrajectory) -> LocalTimes {
    let mut out = LocalTimes::new();
    for (z, dt) in traj.holding() {
        *out.entry(z).or_insert(0) += dt;
    }
    out
}

/// `sum_z l_i(z) l_j(z)` in ticks squared.
fn overlap(a: &LocalTimes, b: &LocalTimes) -> u128 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter_map(|(z, t)| large.get(z).map(|u| *t as u128 * *u as u128)).sum()
}

/// `beta^-2 sum_z l_i(z) l_j(z)`.
pub fn intersection_alpha(a: &WalkTrajectory, b: &WalkTrajectory) -> f64 {
    let (la, lb) = (local_times(a), local_times(b));
    alpha_from(&la, &lb, a.horizon)
}

fn alpha_from(a: &LocalTimes, b: &LocalTimes, horizon: u64) -> f64 {
    let h = horizon as f64;
    overlap(a, b) as f64 / (h * h)
}

/// `int_0^beta |S_t|^p dt`, exact over holding intervals.
pub fn trap_integral(traj: &WalkTrajectory, p: f64) -> f64 {
    traj.holding().iter().map(|(z, dt)| site_trap(z, p) * (*dt as f64 / TICKS)).sum()
}

fn site_trap(z: &[i64], p: f64) -> f64 {
    let r2: f64 = z.iter().map(|x| (*x as f64).powi(2)).sum();
    r2.powf(0.5 * p)
}

/// Piecewise-constant density `x -> (xi^d / beta) l(floor(x xi))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledLocalTime {
    pub xi: f64,
    pub d: usize,
    pub values: BTreeMap<Vec<i64>, f64>,
}

impl RescaledLocalTime {
    pub fn integral(&self) -> f64 {
        self.values.values().sum::<f64>() / self.xi.powi(self.d as i32)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let z: Vec<i64> = x.iter().map(|v| (v * self.xi).floor() as i64).collect();
        self.values.get(&z).copied().unwrap_or(0.0)
    }

    pub fn inner(&self, other: &RescaledLocalTime) -> f64 {
        let s: f64 = self.values.iter().filter_map(|(z, v)| other.values.get(z).map(|u| v * u)).sum();
        s / self.xi.powi(self.d as i32)
    }

    /// Values at the cell centres of `grid`; returns the density and the
    /// mass it does not capture.
    pub fn on_grid(&self, grid: &Grid) -> Result<(DensityField, f64)> {
        if grid.d != self.d {
            return Err(Error::GridMismatch("rescaled local time and grid differ in dimension".into()));
        }
        let mut x = vec![0.0; grid.d];
        let values: Vec<f64> = (0..grid.len())
            .map(|c| {
                grid.position(c, &mut x);
                self.eval(&x)
            })
            .collect();
        let mass: f64 = values.iter().sum::<f64>() * grid.cell_volume();
        Ok((DensityField { grid: *grid, values }, (1.0 - mass).max(0.0)))
    }
}

pub fn rescaled_l(traj: &WalkTrajectory, p: f64) -> Result<RescaledLocalTime> {
    let d = traj.d();
    check_exponent(p, d)?;
    let beta = traj.beta();
    let xi = beta.powf(1.0 / (2.0 + p));
    let scale = xi.powi(d as i32) / traj.horizon as f64;
    let values = local_times(traj).into_iter().map(|(z, t)| (z, t as f64 * scale)).collect();
    Ok(RescaledLocalTime { xi, d, values })
}

/// Mean rescaled local-time density on `grid` and the mean uncaptured mass.
pub fn mean_rescaled_density(trajs: &[WalkTrajectory], p: f64, grid: &Grid) -> Result<(DensityField, f64)> {
    let mut acc = DensityField { grid: *grid, values: vec![0.0; grid.len()] };
    let mut out = 0.0;
    for t in trajs {
        let (rho, e) = rescaled_l(t, p)?.on_grid(grid)?;
        acc.values.iter_mut().zip(&rho.values).for_each(|(a, b)| *a += b);
        out += e;
    }
    let n = trajs.len() as f64;
    acc.values.iter_mut().for_each(|v| *v /= n);
    Ok((acc, out / n))
}

fn coupling_scale(beta: f64, d: usize, p: f64) -> f64 {
    beta.powf((d as f64 + p) / (2.0 + p))
}

/// Log-weight `-(1/beta) sum int |S|^p - lambda beta^((d+p)/(2+p)) sum_{i<j} alpha`.
pub fn dirac_weight(trajs: &[WalkTrajectory], p: f64, lambda: f64, beta: f64) -> Result<f64> {
    let Some(first) = trajs.first() else {
        return Ok(0.0);
    };
    let d = first.d();
    check_exponent(p, d)?;
    if trajs.iter().any(|t| t.horizon != to_ticks(beta) || t.d() != d) {
        return Err(Error::InvalidParameter("trajectories do not share beta and the dimension".into()));
    }
    let trap: f64 = trajs.iter().map(|t| trap_integral(t, p)).sum();
    let lt: Vec<LocalTimes> = trajs.iter().map(local_times).collect();
    let mut alpha = 0.0;
    for i in 0..lt.len() {
        for j in i + 1..lt.len() {
            alpha += alpha_from(&lt[i], &lt[j], first.horizon);
        }
    }
    let mut w = -trap / beta;
    if lambda != 0.0 {
        w -= lambda * coupling_scale(beta, d, p) * alpha;
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkMove {
    Bridge,
    Tail,
}

/// Metropolis sampler of the Dirac walk model; the potential is minus the log-weight.
#[derive(Debug, Clone)]
pub struct DiracSampler {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub lambda: f64,
    pub beta: f64,
    pub horizon: u64,
    pub max_fraction: f64,
    pub moves_per_step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracState {
    pub trajs: Vec<WalkTrajectory>,
    local: Vec<LocalTimes>,
    trap: Vec<f64>,
    /// pair overlaps in ticks squared; `overlaps[i][j]` for `i != j`
    overlaps: Vec<Vec<u128>>,
    pub accepted: u64,
    pub proposed: u64,
}

impl DiracSampler {
    pub fn new(n: usize, d: usize, p: f64, lambda: f64, beta: f64) -> Result<Self> {
        check_exponent(p, d)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("need lambda >= 0, got {lambda}")));
        }
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("N and d must be positive".into()));
        }
        let horizon = check_horizon(beta)?;
        Ok(DiracSampler { n, d, p, lambda, beta, horizon, max_fraction: 0.3, moves_per_step: 1 })
    }

    pub fn xi(&self) -> f64 {
        self.beta.powf(1.0 / (2.0 + self.p))
    }

    pub fn state(&self, trajs: Vec<WalkTrajectory>) -> Result<DiracState> {
        if trajs.len() != self.n || trajs.iter().any(|t| t.d() != self.d || t.horizon != self.horizon) {
            return Err(Error::InvalidParameter("trajectories do not match the sampler".into()));
        }
        let local: Vec<LocalTimes> = trajs.iter().map(local_times).collect();
        let trap = trajs.iter().map(|t| trap_integral(t, self.p)).collect();
        let mut overlaps = vec![vec![0u128; self.n]; self.n];
        for i in 0..self.n {
            for j in i + 1..self.n {
                let o = overlap(&local[i], &local[j]);
                overlaps[i][j] = o;
                overlaps[j][i] = o;
            }
        }
        Ok(DiracState { trajs, local, trap, overlaps, accepted: 0, proposed: 0 })
    }

    fn energy(&self, trap: f64, overlap_sum: u128) -> f64 {
        let h = self.horizon as f64;
        let mut u = trap / self.beta;
        if self.lambda != 0.0 {
            u += self.lambda * coupling_scale(self.beta, self.d, self.p) * (overlap_sum as f64 / (h * h));
        }
        u
    }

    fn propose(&self, traj: &mut WalkTrajectory, mv: WalkMove, rng: &mut Stream) {
        let t = self.horizon;
        let span = ((self.max_fraction * t as f64) as u64).clamp(1, t);
        match mv {
            WalkMove::Bridge => {
                let a = rng.random_range(0..t - 1);
                let b = (a + rng.random_range(1..=span)).min(t);
                for w in traj.coords.iter_mut() {
                    let k = w.at(b - 1) - w.at(a);
                    let (times, steps) = bridge_jumps(rng, 1.0, a, b, k);
                    w.splice(a, b - 1, times, steps);
                }
            }
            WalkMove::Tail => {
                let a = t - rng.random_range(1..=span);
                for w in traj.coords.iter_mut() {
                    let (times, steps) = free_jumps(rng, 1.0, a, t);
                    w.splice(a, t, times, steps);
                }
            }
        }
    }

    /// One Metropolis update of walk `i`.
    pub fn mcmc_step(&self, st: &mut DiracState, mv: WalkMove, i: usize, s: f64, rng: &mut Stream) -> bool {
        st.proposed += 1;
        let mut traj = st.trajs[i].clone();
        self.propose(&mut traj, mv, rng);
        let local = local_times(&traj);
        let trap = trap_integral(&traj, self.p);
        let new_row: Vec<u128> =
            (0..self.n).map(|j| if j == i { 0 } else { overlap(&local, &st.local[j]) }).collect();
        let old_sum: u128 = st.overlaps[i].iter().sum();
        let new_sum: u128 = new_row.iter().sum();
        let du = (trap - st.trap[i]) / self.beta
            + self.energy(0.0, new_sum)
            - self.energy(0.0, old_sum);
        if !metropolis(s * du, rng) {
            return false;
        }
        for (j, o) in new_row.iter().enumerate() {
            st.overlaps[i][j] = *o;
            st.overlaps[j][i] = *o;
        }
        st.trajs[i] = traj;
        st.local[i] = local;
        st.trap[i] = trap;
        st.accepted += 1;
        true
    }

    /// Mean of the rescaled local-time densities on `grid`, plus uncaptured mass.
    pub fn occupation(&self, st: &DiracState, grid: &Grid) -> Result<(DensityField, f64)> {
        mean_rescaled_density(&st.trajs, self.p, grid)
    }
}

impl Sampler for DiracSampler {
    type State = DiracState;

    fn init(&self, rng: &mut Stream) -> Result<DiracState> {
        let trajs = (0..self.n).map(|_| free_walk(self.d, self.horizon, rng)).collect();
        self.state(trajs)
    }

    fn step(&self, st: &mut DiracState, s: f64, rng: &mut Stream) {
        for _ in 0..self.moves_per_step {
            let i = rng.random_range(0..self.n);
            let mv = if rng.random_range(0..3) < 2 { WalkMove::Bridge } else { WalkMove::Tail };
            self.mcmc_step(st, mv, i, s, rng);
        }
    }

    fn potential(&self, st: &DiracState) -> f64 {
        let pairs: u128 = (0..self.n).flat_map(|i| (i + 1..self.n).map(move |j| (i, j))).map(|(i, j)| st.overlaps[i][j]).sum();
        self.energy(st.trap.iter().sum(), pairs)
    }

    fn acceptance(&self, st: &DiracState) -> (u64, u64) {
        (st.accepted, st.proposed)
    }

    fn particles(&self) -> usize {
        self.n
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}
