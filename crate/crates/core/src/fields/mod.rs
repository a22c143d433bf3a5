//! Scalar fields and densities on a [`Grid`], the discrete Laplacian, the
//! Dirichlet energy, the Donsker–Varadhan rate and periodization.

mod io;
mod kernel;

pub use io::{format_field, parse_field, read_field, write_field, FieldKind};
pub use kernel::InteractionKernel;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Nonnegative cell densities; cell masses are `values[i] * h^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { values: vec![0.0; grid.len()], grid }
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: Grid, mut f: F) -> Self {
        let mut x = vec![0.0; grid.d];
        let values = (0..grid.len())
            .map(|i| {
                grid.position(i, &mut x);
                f(&x)
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} cells", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("scalar field values must be finite".into()));
        }
        Ok(ScalarField { grid, values })
    }

    /// `sum f g h^d`
    pub fn dot(&self, other: &ScalarField) -> f64 {
        dot(&self.values, &other.values) * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Degenerate("cannot normalize a zero field".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| a * v).collect() }
    }

    /// `h^2` as a density.
    pub fn square_density(&self) -> DensityField {
        DensityField { grid: self.grid, values: self.values.iter().map(|v| v * v).collect() }
    }

    pub fn laplacian(&self) -> ScalarField {
        let mut out = vec![0.0; self.values.len()];
        laplacian_into(&self.grid, &self.values, &mut out);
        ScalarField { grid: self.grid, values: out }
    }

    pub fn kinetic_energy(&self) -> f64 {
        kinetic_energy(&self.grid, &self.values)
    }
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} cells", values.len(), grid.len())));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("density value {v} is not a finite nonnegative number")));
        }
        Ok(DensityField { grid, values })
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let s = ScalarField::from_fn(grid, f);
        DensityField::new(grid, s.values)
    }

    pub fn uniform(grid: Grid) -> Self {
        let v = 1.0 / (grid.len() as f64 * grid.cell_volume());
        DensityField { values: vec![v; grid.len()], grid }
    }

    /// Unit mass concentrated in one cell.
    pub fn point_mass(grid: Grid, cell: usize) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[cell] = 1.0 / grid.cell_volume();
        DensityField { grid, values }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn is_normalized(&self) -> bool {
        (self.mass() - 1.0).abs() <= 1e-10
    }

    pub fn normalized(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Degenerate("density has no mass".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(self)
    }

    /// `sum f rho h^d`
    pub fn pair(&self, f: &[f64]) -> f64 {
        dot(&self.values, f) * self.grid.cell_volume()
    }

    pub fn sqrt_field(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| v.sqrt()).collect() }
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        let dv = self.grid.cell_volume();
        self.values.iter().map(|v| v * dv).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = sum_axes (f(x+e) - 2 f(x) + f(x-e)) / h^2` with zero ghosts
/// (Dirichlet) or wraparound (periodic).
pub fn laplacian_into(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let n = grid.n;
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let periodic = grid.bc == Boundary::Periodic;
    let diag = -2.0 * grid.d as f64 * inv;
    for (o, v) in out.iter_mut().zip(f) {
        *o = diag * v;
    }
    for axis in 0..grid.d {
        let s = grid.stride(axis);
        let block = s * n;
        for base in (0..f.len()).step_by(block) {
            for k in 0..n {
                let row = base + k * s;
                let up = if k + 1 < n {
                    Some(row + s)
                } else if periodic {
                    Some(base)
                } else {
                    None
                };
                let down = if k > 0 {
                    Some(row - s)
                } else if periodic {
                    Some(base + (n - 1) * s)
                } else {
                    None
                };
                if let Some(u) = up {
                    for j in 0..s {
                        out[row + j] += inv * f[u + j];
                    }
                }
                if let Some(dn) = down {
                    for j in 0..s {
                        out[row + j] += inv * f[dn + j];
                    }
                }
            }
        }
    }
}

/// Forward-difference Dirichlet energy `sum_edges ((f(x+he)-f(x))/h)^2 h^d`.
/// Equals `-<f, laplacian f> h^d` for both boundary conventions.
pub fn kinetic_energy(grid: &Grid, f: &[f64]) -> f64 {
    let n = grid.n;
    let h = grid.spacing();
    let periodic = grid.bc == Boundary::Periodic;
    let mut acc = 0.0;
    for axis in 0..grid.d {
        let s = grid.stride(axis);
        let block = s * n;
        for base in (0..f.len()).step_by(block) {
            for j in 0..s {
                let at = |k: usize| f[base + k * s + j];
                for k in 0..n - 1 {
                    let df = at(k + 1) - at(k);
                    acc += df * df;
                }
                if periodic {
                    let df = at(0) - at(n - 1);
                    acc += df * df;
                } else {
                    acc += at(0) * at(0) + at(n - 1) * at(n - 1);
                }
            }
        }
    }
    acc / (h * h) * grid.cell_volume()
}

/// Donsker–Varadhan rate `||grad sqrt(rho)||^2` of a density.
pub fn dv_rate(rho: &DensityField) -> Result<f64> {
    if let Some(v) = rho.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("negative density cell {v}")));
    }
    let root: Vec<f64> = rho.values.iter().map(|v| v.sqrt()).collect();
    Ok(kinetic_energy(&rho.grid, &root))
}

/// Folds a density on a large box into the torus `[-r_target, r_target]^d`.
pub fn periodize(rho: &DensityField, r_target: f64) -> Result<DensityField> {
    let src = rho.grid;
    let h = src.spacing();
    if r_target > src.r + 1e-12 {
        return Err(Error::GridMismatch(format!("target box {r_target} is larger than source box {}", src.r)));
    }
    let cells = 2.0 * r_target / h;
    let nt = cells.round();
    if (cells - nt).abs() > 1e-8 * cells.max(1.0) || nt < 4.0 {
        return Err(Error::GridMismatch(format!("spacing {h} does not divide the target box 2*{r_target}")));
    }
    let target = Grid::new(src.d, r_target, nt as usize, Boundary::Periodic)?;
    let nt = target.n as i64;
    // map every source node to a target node along one axis
    let mut axis_map = Vec::with_capacity(src.n);
    for k in 0..src.n {
        let t = (src.node(k) + r_target) / h;
        let tr = t.round();
        if (t - tr).abs() > 1e-6 {
            return Err(Error::GridMismatch(format!("source node {} is not aligned with the target lattice", src.node(k))));
        }
        axis_map.push((tr as i64).rem_euclid(nt) as usize);
    }
    let mut out = vec![0.0; target.len()];
    let mut idx = vec![0usize; src.d];
    for (i, v) in rho.values.iter().enumerate() {
        src.multi_index(i, &mut idx);
        let flat = idx.iter().fold(0usize, |acc, &k| acc * target.n + axis_map[k]);
        out[flat] += v;
    }
    Ok(DensityField { grid: target, values: out })
}

/// Total-variation distance `1/2 sum |p - q|` between cell masses, where `p`
/// additionally carries `escaped` mass that lies outside the grid.
pub fn tv_distance(p: &DensityField, q: &DensityField, escaped: f64) -> Result<f64> {
    p.grid.check_same(&q.grid)?;
    let dv = p.grid.cell_volume();
    let s: f64 = p.values.iter().zip(&q.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * dv;
    Ok((0.5 * (s + escaped)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField { grid, values: (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect() }
    }

    #[test]
    fn constants_are_harmonic_on_the_torus() {
        let g = Grid::new(3, 1.5, 6, Boundary::Periodic).unwrap();
        let f = ScalarField { grid: g, values: vec![2.5; g.len()] };
        assert!(f.laplacian().values.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(f.kinetic_energy(), 0.0);
    }

    #[test]
    fn dirichlet_sine_modes_are_eigenfields() {
        let g = Grid::new(2, 2.0, 15, Boundary::Dirichlet).unwrap();
        let h = g.spacing();
        let r = g.r;
        for k in [1usize, 3] {
            let f = ScalarField::from_fn(g, |x| {
                (k as f64 * std::f64::consts::PI * (x[0] + r) / (2.0 * r)).sin()
                    * (std::f64::consts::PI * (x[1] + r) / (2.0 * r)).sin()
            });
            let lam = |m: usize| -(2.0 / (h * h)) * (1.0 - (m as f64 * std::f64::consts::PI * h / (2.0 * r)).cos());
            let expected = lam(k) + lam(1);
            let lf = f.laplacian();
            for (a, b) in lf.values.iter().zip(&f.values) {
                assert!((a - expected * b).abs() < 1e-10 * expected.abs());
            }
        }
    }

    #[test]
    fn kinetic_energy_matches_minus_laplacian_pairing() {
        for bc in [Boundary::Dirichlet, Boundary::Periodic] {
            let g = Grid::new(2, 1.0, 9, bc).unwrap();
            let f = random_field(g, 1);
            let lhs = f.kinetic_energy();
            let rhs = -f.dot(&f.laplacian());
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs());
            assert!((f.scaled(3.0).kinetic_energy() - 9.0 * lhs).abs() < 1e-10 * lhs);
        }
    }

    #[test]
    fn gaussian_kinetic_energy_is_half_dimension() {
        let g = Grid::new(2, 8.0, 160, Boundary::Dirichlet).unwrap();
        let mut f = ScalarField::from_fn(g, |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp());
        f.normalize().unwrap();
        let e = f.kinetic_energy();
        assert!((e - 1.0).abs() < 2e-3, "{e}");
    }

    #[test]
    fn kinetic_energy_converges_at_second_order() {
        let err = |n: usize| {
            let g = Grid::new(2, 8.0, n, Boundary::Dirichlet).unwrap();
            let mut f = ScalarField::from_fn(g, |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp());
            f.normalize().unwrap();
            (f.kinetic_energy() - 1.0).abs()
        };
        let (e1, e2, e3) = (err(39), err(79), err(159));
        let o1 = (e1 / e2).log2();
        let o2 = (e2 / e3).log2();
        assert!(o1 >= 1.8 && o2 >= 1.8, "orders {o1} {o2}");
    }

    #[test]
    fn dv_rate_examples() {
        let g = Grid::new(2, 6.0, 96, Boundary::Dirichlet).unwrap();
        let mut h = ScalarField::from_fn(g, |x| (1.0 + x[0]).powi(2) * (-(x[0] * x[0] + x[1] * x[1])).exp());
        h.normalize().unwrap();
        let rho = h.square_density();
        // a nonnegative h is recovered exactly by the cellwise root
        assert!((dv_rate(&rho).unwrap() - h.kinetic_energy()).abs() < 1e-12);

        let p = Grid::new(2, 1.0, 8, Boundary::Periodic).unwrap();
        assert!(dv_rate(&DensityField::uniform(p)).unwrap().abs() < 1e-20);

        let gauss = DensityField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap().normalized().unwrap();
        let r = dv_rate(&gauss).unwrap();
        assert!((r - 1.0).abs() < 2e-3, "{r}");

        let bad = DensityField { grid: p, values: vec![-1.0; p.len()] };
        assert!(matches!(dv_rate(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn periodize_examples() {
        let src = Grid::new(1, 4.0, 16, Boundary::Periodic).unwrap();
        // inside the target box: unchanged masses
        let mut rho = DensityField { grid: src, values: vec![0.0; 16] };
        rho.values[7] = 2.0;
        let out = periodize(&rho, 2.0).unwrap();
        assert_eq!(out.grid.n, 8);
        assert_eq!(out.values.iter().sum::<f64>(), 2.0);
        assert_eq!(out.values[3], 2.0);
        // first node at +r_target lands on the -r_target edge
        let at = src.axis_cell(2.0).unwrap();
        let pm = DensityField::point_mass(src, at);
        let out = periodize(&pm, 2.0).unwrap();
        assert_eq!(out.values[0] * out.grid.cell_volume(), 1.0);
        assert!(periodize(&pm, 1.3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn laplacian_is_symmetric(seed in 0u64..1000, periodic in any::<bool>()) {
            let bc = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
            let g = Grid::new(2, 1.0, 7, bc).unwrap();
            let f = random_field(g, seed);
            let h = random_field(g, seed + 17);
            let a = f.dot(&h.laplacian());
            let b = f.laplacian().dot(&h);
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0));
            // linearity
            let comb = ScalarField { grid: g, values: f.values.iter().zip(&h.values).map(|(x, y)| 2.0 * x - 0.5 * y).collect() };
            let lc = comb.laplacian();
            let (lf, lh) = (f.laplacian(), h.laplacian());
            for i in 0..g.len() {
                prop_assert!((lc.values[i] - (2.0 * lf.values[i] - 0.5 * lh.values[i])).abs() < 1e-9);
            }
        }

        #[test]
        fn dv_rate_nonnegative_and_translation_invariant(seed in 0u64..1000, shift in 0usize..8) {
            let g = Grid::new(2, 1.0, 8, Boundary::Periodic).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            let rho = DensityField::new(g, vals.clone()).unwrap().normalized().unwrap();
            let r = dv_rate(&rho).unwrap();
            prop_assert!(r >= 0.0);
            let mut shifted = vec![0.0; g.len()];
            for i in 0..8 { for j in 0..8 { shifted[((i + shift) % 8) * 8 + j] = rho.values[i * 8 + j]; } }
            let rs = dv_rate(&DensityField::new(g, shifted).unwrap()).unwrap();
            prop_assert!((r - rs).abs() <= 1e-12 * r.max(1.0));
        }

        #[test]
        fn periodize_preserves_mass(seed in 0u64..1000) {
            let g = Grid::new(2, 3.0, 12, Boundary::Periodic).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            let rho = DensityField::new(g, vals).unwrap();
            let out = periodize(&rho, 1.0).unwrap();
            prop_assert!((out.mass() - rho.mass()).abs() <= 1e-12 * rho.mass());
        }
    }

    #[test]
    fn tv_distance_basics() {
        let g = Grid::new(1, 1.0, 8, Boundary::Periodic).unwrap();
        let u = DensityField::uniform(g);
        assert_eq!(tv_distance(&u, &u, 0.0).unwrap(), 0.0);
        let p = DensityField::point_mass(g, 0);
        let q = DensityField::point_mass(g, 3);
        assert!((tv_distance(&p, &q, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }
}
