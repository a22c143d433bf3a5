//! Time-discretized Brownian paths (per-axis increment variance `2 dt`),
//! the trap and interaction Hamiltonians, and path-space Metropolis moves.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{metropolis, stream, Stream};
use super::thermo::Sampler;
use crate::error::{Error, Result};
use crate::fields::{DensityField, InteractionKernel};
use crate::grid::Grid;
use crate::potentials::{PairPotential, TrapPotential};

/// Uniform start distribution on a closed ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartBall {
    pub centre: Vec<f64>,
    pub radius: f64,
}

impl StartBall {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.centre).map(|(a, c)| (a - c).powi(2)).sum::<f64>() <= self.radius * self.radius
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.centre.len();
        loop {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
            if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                return x.iter().zip(&self.centre).map(|(v, c)| c + self.radius * v).collect();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub dt: f64,
    /// number of time steps; each path has `slices + 1` points
    pub slices: usize,
    /// `positions[((i * (slices + 1)) + k) * d + a]`
    pub positions: Vec<f64>,
    pub seed: u64,
}

fn slice_count(beta: f64, dt: f64) -> Result<usize> {
    if !(beta > 0.0 && dt > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("need beta > 0 and dt > 0, got {beta}, {dt}")));
    }
    let m = (beta / dt).round();
    if m < 1.0 || (m * dt - beta).abs() > 1e-9 * beta {
        return Err(Error::InvalidParameter(format!("beta = {beta} is not a multiple of dt = {dt}")));
    }
    Ok(m as usize)
}

impl PathEnsemble {
    /// Free Brownian paths started from the ball.
    pub fn free(n: usize, beta: f64, dt: f64, start: &StartBall, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, u64::MAX);
        let mut e = Self::static_at(n, &start.centre, beta, dt)?;
        e.seed = seed;
        for i in 0..n {
            let x0 = start.sample(&mut rng);
            e.fill_free(i, &x0, &mut rng);
        }
        Ok(e)
    }

    /// Every path constant at `x` (zero increments).
    pub fn static_at(n: usize, x: &[f64], beta: f64, dt: f64) -> Result<Self> {
        let slices = slice_count(beta, dt)?;
        let d = x.len();
        let mut positions = Vec::with_capacity(n * (slices + 1) * d);
        for _ in 0..n * (slices + 1) {
            positions.extend_from_slice(x);
        }
        Ok(PathEnsemble { n, d, beta, dt, slices, positions, seed: 0 })
    }

    fn fill_free<R: Rng>(&mut self, i: usize, x0: &[f64], rng: &mut R) {
        let sd = (2.0 * self.dt).sqrt();
        let d = self.d;
        for a in 0..d {
            let mut x = x0[a];
            for k in 0..=self.slices {
                if k > 0 {
                    x += sd * rng.sample::<f64, _>(StandardNormal);
                }
                let idx = self.index(i, k) + a;
                self.positions[idx] = x;
            }
        }
    }

    fn index(&self, i: usize, k: usize) -> usize {
        (i * (self.slices + 1) + k) * self.d
    }

    pub fn point(&self, i: usize, k: usize) -> &[f64] {
        let s = self.index(i, k);
        &self.positions[s..s + self.d]
    }

    /// Trapezoid weight of slice `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.slices {
            0.5 * self.dt
        } else {
            self.dt
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `sum_i int_0^beta W(B^i_s) ds`, trapezoid in time.
pub fn hamiltonian_h(ens: &PathEnsemble, w: &TrapPotential) -> f64 {
    let mut e = 0.0;
    for i in 0..ens.n {
        for k in 0..=ens.slices {
            e += ens.weight(k) * w.eval(ens.point(i, k));
        }
    }
    e
}

/// `sum_{i<j} int_0^beta v(|B^i_s - B^j_s|) ds`, trapezoid in time.
pub fn hamiltonian_g(ens: &PathEnsemble, v: &PairPotential) -> f64 {
    let mut e = 0.0;
    for i in 0..ens.n {
        for j in i + 1..ens.n {
            for k in 0..=ens.slices {
                e += ens.weight(k) * v.eval(distance(ens.point(i, k), ens.point(j, k)));
            }
        }
    }
    e
}

/// Time spent by path `i` in each cell of `bins`, and the time outside.
pub fn path_masses(ens: &PathEnsemble, i: usize, bins: &Grid) -> (Vec<f64>, f64) {
    let mut m = vec![0.0; bins.len()];
    let mut out = 0.0;
    for k in 0..=ens.slices {
        match bins.cell_of(ens.point(i, k)) {
            Some(c) => m[c] += ens.weight(k),
            None => out += ens.weight(k),
        }
    }
    (m, out)
}

/// `beta sum_{i<j} <mu_i, V mu_j>` from binned occupation measures.
pub fn hamiltonian_k(ens: &PathEnsemble, kernel: &InteractionKernel) -> Result<f64> {
    let bins = kernel.grid;
    let dv = bins.cell_volume();
    let masses: Vec<Vec<f64>> = (0..ens.n).map(|i| path_masses(ens, i, &bins).0).collect();
    let mut e = 0.0;
    for j in 1..ens.n {
        let dens: Vec<f64> = masses[j].iter().map(|m| m / dv).collect();
        let vj = kernel.apply_raw(&bins, &dens)?;
        for mi in masses.iter().take(j) {
            e += mi.iter().zip(&vj.values).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(e / ens.beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationHistogram {
    pub density: DensityField,
    /// mass outside the histogram box
    pub escaped: f64,
}

/// Normalized occupation measure of one path, or the mean over all paths.
pub fn occupation(ens: &PathEnsemble, grid: &Grid, particle: Option<usize>) -> OccupationHistogram {
    let which: Vec<usize> = match particle {
        Some(i) => vec![i],
        None => (0..ens.n).collect(),
    };
    let mut m = vec![0.0; grid.len()];
    let mut out = 0.0;
    for &i in &which {
        let (mi, oi) = path_masses(ens, i, grid);
        m.iter_mut().zip(&mi).for_each(|(a, b)| *a += b);
        out += oi;
    }
    let total = ens.beta * which.len() as f64;
    let dv = grid.cell_volume();
    OccupationHistogram {
        density: DensityField { grid: *grid, values: m.iter().map(|x| x / (total * dv)).collect() },
        escaped: out / total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathModel {
    /// `exp(-H - G)`
    Canonical,
    /// `exp(-H - K)`
    Hartree,
    /// `exp(-H - K)` with the `i = j` terms of `K` included
    HartreeSelf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMove {
    BridgeSegment,
    Endpoint,
    WholePathShift,
}

#[derive(Debug, Clone)]
pub struct PathSampler {
    pub model: PathModel,
    pub trap: TrapPotential,
    pub pair: PairPotential,
    kernel: Option<InteractionKernel>,
    bins: Grid,
    cell_index: Vec<Vec<usize>>,
    pub start: StartBall,
    pub n: usize,
    pub beta: f64,
    pub dt: f64,
    pub max_segment: usize,
    pub shift_width: f64,
    pub moves_per_step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub ens: PathEnsemble,
    cells: Vec<Vec<Option<usize>>>,
    /// time per bin, per particle
    pub masses: Vec<Vec<f64>>,
    pub escaped: Vec<f64>,
    /// `sum_{j != i} K m_j`
    field: Vec<Vec<f64>>,
    /// `K m_i`
    own: Vec<Vec<f64>>,
    pub trap_part: f64,
    pub pair_part: f64,
    pub accepted: u64,
    pub proposed: u64,
}

struct Proposal {
    particle: usize,
    first: usize,
    points: Vec<f64>,
}

impl PathSampler {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: PathModel,
        trap: TrapPotential,
        pair: PairPotential,
        n: usize,
        beta: f64,
        dt: f64,
        dt_max: f64,
        start: StartBall,
        bins: Grid,
    ) -> Result<Self> {
        slice_count(beta, dt)?;
        if dt > dt_max {
            return Err(Error::InvalidParameter(format!("dt = {dt} exceeds dt_max = {dt_max}")));
        }
        if start.centre.len() != bins.d {
            return Err(Error::GridMismatch("start ball and bins differ in dimension".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        trap.validate()?;
        pair.validate()?;
        let kernel = match model {
            PathModel::Canonical => None,
            _ => Some(InteractionKernel::new(&pair, bins)?),
        };
        let cell_index = (0..bins.len())
            .map(|c| {
                let mut m = vec![0; bins.d];
                bins.multi_index(c, &mut m);
                m
            })
            .collect();
        let m = (beta / dt).round() as usize;
        Ok(PathSampler {
            model,
            trap,
            pair,
            kernel,
            bins,
            cell_index,
            start,
            n,
            beta,
            dt,
            max_segment: (m / 4).clamp(2, 64),
            shift_width: 0.5,
            moves_per_step: 1,
        })
    }

    pub fn bins(&self) -> &Grid {
        &self.bins
    }

    fn kernel_row_add(&self, c: usize, amount: f64, out: &mut [f64]) {
        let k = self.kernel.as_ref().expect("kernel present");
        let ic = &self.cell_index[c];
        for (o, idx) in out.iter_mut().zip(&self.cell_index) {
            *o += amount * k.between(ic, idx);
        }
    }

    /// Builds the cached state of an ensemble.
    pub fn state(&self, ens: PathEnsemble) -> Result<PathState> {
        if ens.n != self.n || ens.d != self.bins.d || ens.slices != (self.beta / self.dt).round() as usize {
            return Err(Error::GridMismatch("ensemble shape does not match the sampler".into()));
        }
        let cells: Vec<Vec<Option<usize>>> =
            (0..ens.n).map(|i| (0..=ens.slices).map(|k| self.bins.cell_of(ens.point(i, k))).collect()).collect();
        let mut masses = vec![vec![0.0; self.bins.len()]; ens.n];
        let mut escaped = vec![0.0; ens.n];
        for i in 0..ens.n {
            for k in 0..=ens.slices {
                match cells[i][k] {
                    Some(c) => masses[i][c] += ens.weight(k),
                    None => escaped[i] += ens.weight(k),
                }
            }
        }
        let mut own = vec![vec![0.0; self.bins.len()]; ens.n];
        let mut field = vec![vec![0.0; self.bins.len()]; ens.n];
        if self.kernel.is_some() {
            for i in 0..ens.n {
                for (c, m) in masses[i].iter().enumerate() {
                    if *m != 0.0 {
                        self.kernel_row_add(c, *m, &mut own[i]);
                    }
                }
            }
            for i in 0..ens.n {
                for j in 0..ens.n {
                    if j != i {
                        for (f, o) in field[i].iter_mut().zip(&own[j]) {
                            *f += o;
                        }
                    }
                }
            }
        }
        let trap_part = hamiltonian_h(&ens, &self.trap);
        let pair_part = match self.model {
            PathModel::Canonical => hamiltonian_g(&ens, &self.pair),
            PathModel::Hartree | PathModel::HartreeSelf => {
                let mut e = 0.0;
                for i in 0..ens.n {
                    let with: f64 = masses[i].iter().zip(&field[i]).map(|(a, b)| a * b).sum();
                    e += 0.5 * with;
                    if self.model == PathModel::HartreeSelf {
                        e += masses[i].iter().zip(&own[i]).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
                e / self.beta
            }
        };
        Ok(PathState { ens, cells, masses, escaped, field, own, trap_part, pair_part, accepted: 0, proposed: 0 })
    }

    fn propose(&self, st: &PathState, mv: PathMove, i: usize, rng: &mut Stream) -> Option<Proposal> {
        let ens = &st.ens;
        let (m, d) = (ens.slices, ens.d);
        let sd = (2.0 * ens.dt).sqrt();
        match mv {
            PathMove::BridgeSegment => {
                if m < 2 {
                    return None;
                }
                let len = rng.random_range(2..=self.max_segment.min(m).max(2));
                let a = rng.random_range(0..=m - len);
                let b = a + len;
                let end = ens.point(i, b).to_vec();
                let mut x = ens.point(i, a).to_vec();
                let mut points = Vec::with_capacity((len - 1) * d);
                for k in a + 1..b {
                    let rem = (b - k + 1) as f64;
                    for ax in 0..d {
                        let mean = x[ax] + (end[ax] - x[ax]) / rem;
                        let var = 2.0 * ens.dt * (rem - 1.0) / rem;
                        x[ax] = mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
                    }
                    points.extend_from_slice(&x);
                }
                Some(Proposal { particle: i, first: a + 1, points })
            }
            PathMove::Endpoint => {
                let len = rng.random_range(1..=self.max_segment.min(m).max(1));
                if rng.random::<bool>() {
                    let mut x = ens.point(i, m - len).to_vec();
                    let mut points = Vec::with_capacity(len * d);
                    for _ in 0..len {
                        x.iter_mut().for_each(|v| *v += sd * rng.sample::<f64, _>(StandardNormal));
                        points.extend_from_slice(&x);
                    }
                    Some(Proposal { particle: i, first: m - len + 1, points })
                } else {
                    let mut x = ens.point(i, len).to_vec();
                    let mut rev = Vec::with_capacity(len);
                    for _ in 0..len {
                        x.iter_mut().for_each(|v| *v += sd * rng.sample::<f64, _>(StandardNormal));
                        rev.push(x.clone());
                    }
                    rev.reverse();
                    Some(Proposal { particle: i, first: 0, points: rev.concat() })
                }
            }
            PathMove::WholePathShift => {
                let by: Vec<f64> = (0..d).map(|_| rng.random_range(-self.shift_width..=self.shift_width)).collect();
                let mut points = Vec::with_capacity((m + 1) * d);
                for k in 0..=m {
                    for (ax, b) in by.iter().enumerate() {
                        points.push(ens.point(i, k)[ax] + b);
                    }
                }
                Some(Proposal { particle: i, first: 0, points })
            }
        }
    }

    /// Potential change of a proposal and the bin-mass changes it implies.
    fn delta(&self, st: &PathState, p: &Proposal) -> (f64, f64, Vec<(usize, f64)>, Vec<Option<usize>>) {
        let ens = &st.ens;
        let d = ens.d;
        let i = p.particle;
        let count = p.points.len() / d;
        if p.first == 0 && !self.start.contains(&p.points[..d]) {
            return (f64::INFINITY, 0.0, Vec::new(), Vec::new());
        }
        let mut dh = 0.0;
        for q in 0..count {
            let k = p.first + q;
            let wk = ens.weight(k);
            dh += wk * (self.trap.eval(&p.points[q * d..(q + 1) * d]) - self.trap.eval(ens.point(i, k)));
        }
        if !dh.is_finite() {
            return (f64::INFINITY, 0.0, Vec::new(), Vec::new());
        }
        let mut changes: Vec<(usize, f64)> = Vec::new();
        let mut cells = Vec::with_capacity(count);
        let dp = match self.model {
            PathModel::Canonical => {
                let mut g = 0.0;
                for j in (0..ens.n).filter(|j| *j != i) {
                    for q in 0..count {
                        let k = p.first + q;
                        let other = ens.point(j, k);
                        g += ens.weight(k)
                            * (self.pair.eval(distance(&p.points[q * d..(q + 1) * d], other))
                                - self.pair.eval(distance(ens.point(i, k), other)));
                    }
                }
                g
            }
            PathModel::Hartree | PathModel::HartreeSelf => {
                for q in 0..count {
                    let k = p.first + q;
                    let wk = ens.weight(k);
                    let new = self.bins.cell_of(&p.points[q * d..(q + 1) * d]);
                    let old = st.cells[i][k];
                    cells.push(new);
                    if new == old {
                        continue;
                    }
                    if let Some(c) = old {
                        changes.push((c, -wk));
                    }
                    if let Some(c) = new {
                        changes.push((c, wk));
                    }
                }
                changes.sort_by_key(|c| c.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(changes.len());
                for (c, x) in changes {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += x,
                        _ => merged.push((c, x)),
                    }
                }
                merged.retain(|c| c.1 != 0.0);
                changes = merged;
                let mut e: f64 = changes.iter().map(|(c, x)| x * st.field[i][*c]).sum();
                if self.model == PathModel::HartreeSelf {
                    let k = self.kernel.as_ref().expect("kernel present");
                    e += 2.0 * changes.iter().map(|(c, x)| x * st.own[i][*c]).sum::<f64>();
                    for (a, xa) in &changes {
                        for (b, xb) in &changes {
                            e += xa * xb * k.between(&self.cell_index[*a], &self.cell_index[*b]);
                        }
                    }
                }
                e / self.beta
            }
        };
        (dh, dp, changes, cells)
    }

    /// One Metropolis–Hastings update of path `particle` with the given move.
    pub fn mcmc_step(&self, st: &mut PathState, mv: PathMove, particle: usize, s: f64, rng: &mut Stream) -> bool {
        st.proposed += 1;
        let Some(p) = self.propose(st, mv, particle, rng) else {
            return false;
        };
        let (dh, dp, changes, cells) = self.delta(st, &p);
        if !metropolis(s * (dh + dp), rng) {
            return false;
        }
        let i = p.particle;
        let at = st.ens.index(i, p.first);
        st.ens.positions[at..at + p.points.len()].copy_from_slice(&p.points);
        st.trap_part += dh;
        st.pair_part += dp;
        if self.kernel.is_some() {
            for (q, c) in cells.iter().enumerate() {
                let k = p.first + q;
                let wk = st.ens.weight(k);
                if st.cells[i][k].is_none() {
                    st.escaped[i] -= wk;
                }
                if c.is_none() {
                    st.escaped[i] += wk;
                }
                st.cells[i][k] = *c;
            }
            let mut row = vec![0.0; self.bins.len()];
            for (c, x) in &changes {
                st.masses[i][*c] += x;
                self.kernel_row_add(*c, *x, &mut row);
            }
            for j in 0..st.ens.n {
                let target = if j == i { &mut st.own[j] } else { &mut st.field[j] };
                target.iter_mut().zip(&row).for_each(|(a, b)| *a += b);
            }
        }
        st.accepted += 1;
        true
    }

    /// Recomputes `H + G` or `H + K` from scratch.
    pub fn recompute(&self, st: &PathState) -> Result<f64> {
        let h = hamiltonian_h(&st.ens, &self.trap);
        let p = match self.model {
            PathModel::Canonical => hamiltonian_g(&st.ens, &self.pair),
            PathModel::Hartree => hamiltonian_k(&st.ens, self.kernel.as_ref().expect("kernel present"))?,
            PathModel::HartreeSelf => {
                let k = self.kernel.as_ref().expect("kernel present");
                let mut e = hamiltonian_k(&st.ens, k)?;
                let dv = self.bins.cell_volume();
                for i in 0..st.ens.n {
                    let (m, _) = path_masses(&st.ens, i, &self.bins);
                    let dens: Vec<f64> = m.iter().map(|x| x / dv).collect();
                    let vm = k.apply_raw(&self.bins, &dens)?;
                    e += m.iter().zip(&vm.values).map(|(a, b)| a * b).sum::<f64>() / self.beta;
                }
                e
            }
        };
        Ok(h + p)
    }
}

impl Sampler for PathSampler {
    type State = PathState;

    fn init(&self, rng: &mut Stream) -> Result<PathState> {
        for _ in 0..1000 {
            let seed: u64 = rng.random();
            let ens = PathEnsemble::free(self.n, self.beta, self.dt, &self.start, seed)?;
            let st = self.state(ens)?;
            if (st.trap_part + st.pair_part).is_finite() {
                return Ok(st);
            }
        }
        let st = self.state(PathEnsemble::static_at(self.n, &self.start.centre, self.beta, self.dt)?)?;
        if (st.trap_part + st.pair_part).is_finite() {
            Ok(st)
        } else {
            Err(Error::Precondition("no finite-weight starting ensemble found".into()))
        }
    }

    fn step(&self, st: &mut PathState, s: f64, rng: &mut Stream) {
        for _ in 0..self.moves_per_step {
            let i = rng.random_range(0..self.n);
            let mv = match rng.random_range(0..8) {
                0..=4 => PathMove::BridgeSegment,
                5 | 6 => PathMove::Endpoint,
                _ => PathMove::WholePathShift,
            };
            self.mcmc_step(st, mv, i, s, rng);
        }
    }

    fn potential(&self, st: &PathState) -> f64 {
        st.trap_part + st.pair_part
    }

    fn acceptance(&self, st: &PathState) -> (u64, u64) {
        (st.accepted, st.proposed)
    }

    fn particles(&self) -> usize {
        self.n
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}
