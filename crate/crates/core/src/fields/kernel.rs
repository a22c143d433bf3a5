use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{DensityField, ScalarField};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::potentials::PairPotential;
use crate::quadrature::{gauss_legendre, integrate_from_origin, unit_sphere_area, RadialOutcome};

/// Cell-averaged pair kernel `K(o) = mean of v(|x|) over the cell at offset o`.
///
/// Values are stored by per-axis absolute offset, so `K(-o) = K(o)` holds
/// bitwise. Periodic grids use the minimum-image offset.
#[derive(Debug, Clone)]
pub struct InteractionKernel {
    pub grid: Grid,
    table: Vec<f64>,
    lower: f64,
    zero: bool,
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl InteractionKernel {
    pub fn new(v: &PairPotential, grid: Grid) -> Result<Self> {
        v.validate()?;
        grid.validate()?;
        let d = grid.d;
        let n = grid.n;
        let h = grid.spacing();
        let zero = v.is_zero();
        let (nodes, weights) = gauss_legendre(3);
        let mut subs: Vec<(Vec<f64>, f64)> = Vec::new();
        let total = 3usize.pow(d as u32);
        for s in 0..total {
            let mut off = vec![0.0; d];
            let mut w = 1.0;
            let mut t = s;
            for o in off.iter_mut() {
                let k = t % 3;
                t /= 3;
                *o = 0.5 * h * nodes[k];
                w *= 0.5 * weights[k];
            }
            subs.push((off, w));
        }
        let max_off = match grid.bc {
            Boundary::Dirichlet => n,
            Boundary::Periodic => n / 2 + 1,
        };
        let cells = max_off.pow(d as u32);
        let table: Vec<f64> = (0..cells)
            .into_par_iter()
            .map(|c| {
                if zero {
                    return 0.0;
                }
                let mut centre = vec![0.0; d];
                let mut t = c;
                for a in (0..d).rev() {
                    centre[a] = (t % max_off) as f64 * h;
                    t /= max_off;
                }
                let mut acc = 0.0;
                for (off, w) in &subs {
                    let r2: f64 = centre.iter().zip(off).map(|(c, o)| (c + o) * (c + o)).sum();
                    acc += w * v.eval(r2.sqrt());
                }
                acc
            })
            .collect();
        let mut table = table;
        if !table[0].is_finite() {
            table[0] = centre_cell_average(v, d, h)?;
        }
        if let Some(bad) = table.iter().position(|x| !x.is_finite()) {
            return Err(Error::Precondition(format!(
                "pair potential is infinite on kernel cell {bad}; hard cores must be capped first"
            )));
        }
        let lower = table.iter().cloned().fold(f64::INFINITY, f64::min);
        // reindex to a full n^d table by absolute offset
        let full = if max_off == n {
            table
        } else {
            let mut out = vec![0.0; n.pow(d as u32)];
            let mut idx = vec![0usize; d];
            for (i, o) in out.iter_mut().enumerate() {
                grid.multi_index(i, &mut idx);
                let flat = idx.iter().fold(0usize, |acc, &k| acc * max_off + k.min(n - k));
                *o = table[flat];
            }
            out
        };
        Ok(InteractionKernel { grid, table: full, lower, zero, spectrum: OnceLock::new() })
    }

    /// Kernel value at a per-axis index difference.
    pub fn at_offset(&self, off: &[i64]) -> f64 {
        let n = self.grid.n as i64;
        let mut flat = 0usize;
        for &o in off {
            let m = self.abs_offset(o);
            if m >= n {
                return 0.0;
            }
            flat = flat * self.grid.n + m as usize;
        }
        self.table[flat]
    }

    fn abs_offset(&self, o: i64) -> i64 {
        let n = self.grid.n as i64;
        match self.grid.bc {
            Boundary::Dirichlet => o.abs(),
            Boundary::Periodic => {
                let m = o.rem_euclid(n);
                m.min(n - m)
            }
        }
    }

    /// Kernel value between the cells `a` and `b` of this grid.
    pub fn between(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut flat = 0usize;
        for (x, y) in a.iter().zip(b) {
            let m = self.abs_offset(*x as i64 - *y as i64);
            flat = flat * self.grid.n + m as usize;
        }
        self.table[flat]
    }

    /// Lower bound of the sampled kernel.
    pub fn infimum(&self) -> f64 {
        self.lower
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// `(V rho)(x) = sum_y K(x - y) rho(y) h^d`, choosing the route by size.
    pub fn apply(&self, rho: &DensityField) -> Result<ScalarField> {
        if rho.grid.len() >= 512 {
            self.apply_fft(rho)
        } else {
            self.apply_direct(rho)
        }
    }

    pub(crate) fn apply_raw(&self, grid: &Grid, rho: &[f64]) -> Result<ScalarField> {
        if rho.len() >= 512 {
            self.apply_fft_raw(grid, rho)
        } else {
            self.apply_direct_raw(grid, rho)
        }
    }

    pub fn apply_direct(&self, rho: &DensityField) -> Result<ScalarField> {
        self.apply_direct_raw(&rho.grid, &rho.values)
    }

    pub(crate) fn apply_direct_raw(&self, grid: &Grid, rho: &[f64]) -> Result<ScalarField> {
        self.grid.check_same(grid)?;
        let g = self.grid;
        if self.zero {
            return Ok(ScalarField::zeros(g));
        }
        let d = g.d;
        let dv = g.cell_volume();
        let idx: Vec<Vec<usize>> = (0..g.len())
            .map(|i| {
                let mut m = vec![0; d];
                g.multi_index(i, &mut m);
                m
            })
            .collect();
        let values = (0..g.len())
            .into_par_iter()
            .map(|x| {
                let mut acc = 0.0;
                for (y, r) in rho.iter().enumerate() {
                    if *r != 0.0 {
                        acc += self.between(&idx[x], &idx[y]) * r;
                    }
                }
                acc * dv
            })
            .collect();
        Ok(ScalarField { grid: g, values })
    }

    pub fn apply_fft(&self, rho: &DensityField) -> Result<ScalarField> {
        self.apply_fft_raw(&rho.grid, &rho.values)
    }

    pub(crate) fn apply_fft_raw(&self, grid: &Grid, rho: &[f64]) -> Result<ScalarField> {
        self.grid.check_same(grid)?;
        let g = self.grid;
        if self.zero {
            return Ok(ScalarField::zeros(g));
        }
        let (p, d, n) = (self.padded(), g.d, g.n);
        let spec = self.spectrum.get_or_init(|| Arc::new(self.kernel_spectrum()));
        let mut buf = vec![Complex64::new(0.0, 0.0); p.pow(d as u32)];
        let mut idx = vec![0usize; d];
        for (i, r) in rho.iter().enumerate() {
            g.multi_index(i, &mut idx);
            let flat = idx.iter().fold(0usize, |acc, &k| acc * p + k);
            buf[flat] = Complex64::new(*r, 0.0);
        }
        fft_nd(&mut buf, p, d, false);
        buf.iter_mut().zip(spec.iter()).for_each(|(a, b)| *a *= b);
        fft_nd(&mut buf, p, d, true);
        let scale = g.cell_volume() / p.pow(d as u32) as f64;
        let mut values = vec![0.0; g.len()];
        for (i, out) in values.iter_mut().enumerate() {
            g.multi_index(i, &mut idx);
            let flat = idx.iter().fold(0usize, |acc, &k| acc * p + k);
            *out = buf[flat].re * scale;
        }
        debug_assert_eq!(values.len(), n.pow(d as u32));
        Ok(ScalarField { grid: g, values })
    }

    fn padded(&self) -> usize {
        match self.grid.bc {
            Boundary::Dirichlet => 2 * self.grid.n,
            Boundary::Periodic => self.grid.n,
        }
    }

    fn kernel_spectrum(&self) -> Vec<Complex64> {
        let (p, d, n) = (self.padded(), self.grid.d, self.grid.n as i64);
        let mut buf = vec![Complex64::new(0.0, 0.0); p.pow(d as u32)];
        let mut off = vec![0i64; d];
        for (i, b) in buf.iter_mut().enumerate() {
            let mut t = i;
            let mut skip = false;
            for a in (0..d).rev() {
                let q = (t % p) as i64;
                t /= p;
                off[a] = if q < n { q } else { q - p as i64 };
                if self.grid.bc == Boundary::Dirichlet && q == n {
                    skip = true;
                }
            }
            if !skip {
                *b = Complex64::new(self.at_offset(&off), 0.0);
            }
        }
        fft_nd(&mut buf, p, d, false);
        buf
    }
}

/// Mean of `v` over the ball with the volume of one cell.
fn centre_cell_average(v: &PairPotential, d: usize, h: f64) -> Result<f64> {
    let vol_ball = unit_sphere_area(d) / d as f64;
    let radius = h / vol_ball.powf(1.0 / d as f64);
    let g = |r: f64| v.eval(r) * r.powi(d as i32 - 1);
    match integrate_from_origin(&g, radius, &v.breakpoints(), 1e-10) {
        RadialOutcome::Converged(x) => Ok(unit_sphere_area(d) * x / h.powi(d as i32)),
        _ => Err(Error::Precondition(format!("pair potential {v:?} is not locally integrable at the origin"))),
    }
}

/// In-place d-dimensional FFT of a cube with side `p`.
fn fft_nd(buf: &mut [Complex64], p: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(p) } else { planner.plan_fft_forward(p) };
    let mut line = vec![Complex64::new(0.0, 0.0); p];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = p.pow((d - 1 - axis) as u32);
        let block = stride * p;
        for base in (0..buf.len()).step_by(block) {
            for j in 0..stride {
                for (k, l) in line.iter_mut().enumerate() {
                    *l = buf[base + k * stride + j];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, l) in line.iter().enumerate() {
                    buf[base + k * stride + j] = *l;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(g: Grid, seed: u64) -> DensityField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DensityField::new(g, (0..g.len()).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap().normalized().unwrap()
    }

    #[test]
    fn zero_potential_gives_zero_field() {
        let g = Grid::new(2, 2.0, 9, Boundary::Dirichlet).unwrap();
        let k = InteractionKernel::new(&PairPotential::zero(), g).unwrap();
        let out = k.apply(&random_density(g, 2)).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn point_mass_reproduces_the_kernel() {
        let g = Grid::new(2, 2.0, 9, Boundary::Dirichlet).unwrap();
        let v = PairPotential::gaussian(1.5, 0.7);
        let k = InteractionKernel::new(&v, g).unwrap();
        let centre = g.cell_of(&[0.0, 0.0]).unwrap();
        let out = k.apply_direct(&DensityField::point_mass(g, centre)).unwrap();
        let mut a = vec![0; 2];
        let mut b = vec![0; 2];
        g.multi_index(centre, &mut b);
        for i in 0..g.len() {
            g.multi_index(i, &mut a);
            assert!((out.values[i] - k.between(&a, &b)).abs() < 1e-14);
        }
        // cell average against a fine midpoint rule over the neighbouring cell
        let mut x = vec![0.0; 2];
        g.position(centre + 1, &mut x);
        let h = g.spacing();
        let m = 200;
        let mut avg = 0.0;
        for i in 0..m {
            for j in 0..m {
                let px = x[0] - 0.5 * h + (i as f64 + 0.5) * h / m as f64;
                let py = x[1] - 0.5 * h + (j as f64 + 0.5) * h / m as f64;
                avg += v.eval((px * px + py * py).sqrt());
            }
        }
        avg /= (m * m) as f64;
        assert!((out.values[centre + 1] - avg).abs() < 1e-5, "{} vs {avg}", out.values[centre + 1]);
    }

    #[test]
    fn singular_centre_cell_is_averaged() {
        let g = Grid::new(3, 1.0, 7, Boundary::Dirichlet).unwrap();
        let k = InteractionKernel::new(&PairPotential::inverse_power(1.0, 1.0), g).unwrap();
        assert!(k.at_offset(&[0, 0, 0]).is_finite());
        assert!(k.at_offset(&[0, 0, 0]) > k.at_offset(&[1, 0, 0]));
        assert!(InteractionKernel::new(&PairPotential::hard_core(0.5), g).is_err());
    }

    #[test]
    fn fft_matches_direct_sum() {
        for bc in [Boundary::Dirichlet, Boundary::Periodic] {
            for d in [1usize, 2, 3] {
                let n = if d == 3 { 6 } else { 10 };
                let g = Grid::new(d, 1.5, n, bc).unwrap();
                let k = InteractionKernel::new(&PairPotential::gaussian(2.0, 0.6), g).unwrap();
                let rho = random_density(g, d as u64);
                let a = k.apply_direct(&rho).unwrap();
                let b = k.apply_fft(&rho).unwrap();
                for (x, y) in a.values.iter().zip(&b.values) {
                    assert!((x - y).abs() < 1e-10 * x.abs().max(1.0), "{bc:?} d={d}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g = Grid::new(2, 1.0, 8, Boundary::Periodic).unwrap();
        let other = Grid::new(2, 1.0, 9, Boundary::Periodic).unwrap();
        let k = InteractionKernel::new(&PairPotential::gaussian(1.0, 1.0), g).unwrap();
        assert!(matches!(k.apply(&DensityField::uniform(other)), Err(Error::GridMismatch(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn pairing_is_symmetric(seed in 0u64..500, periodic in any::<bool>()) {
            let bc = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
            let g = Grid::new(2, 1.0, 7, bc).unwrap();
            let k = InteractionKernel::new(&PairPotential::square_well(3.0, 0.8), g).unwrap();
            let r1 = random_density(g, seed);
            let r2 = random_density(g, seed + 1000);
            // direct double sum
            let mut a = vec![0; 2];
            let mut b = vec![0; 2];
            let dv = g.cell_volume();
            let mut s12 = 0.0;
            let mut s21 = 0.0;
            for i in 0..g.len() {
                g.multi_index(i, &mut a);
                for j in 0..g.len() {
                    g.multi_index(j, &mut b);
                    s12 += r1.values[i] * k.between(&a, &b) * r2.values[j];
                    s21 += r2.values[i] * k.between(&a, &b) * r1.values[j];
                }
            }
            prop_assert!((s12 - s21).abs() <= 1e-12 * s12.abs());
            let v2 = k.apply(&r2).unwrap();
            prop_assert!((r1.pair(&v2.values) - s12 * dv * dv).abs() <= 1e-10 * s12.abs() * dv * dv);
        }

        #[test]
        fn nonnegative_kernel_is_bounded_below(seed in 0u64..500) {
            let g = Grid::new(2, 1.0, 8, Boundary::Periodic).unwrap();
            let k = InteractionKernel::new(&PairPotential::gaussian(1.0, 0.5), g).unwrap();
            let out = k.apply(&random_density(g, seed)).unwrap();
            prop_assert!(k.infimum() >= 0.0);
            prop_assert!(out.values.iter().all(|v| *v >= k.infimum() - 1e-12));
        }
    }
}
