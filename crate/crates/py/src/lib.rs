//! Python module `pybosepath`.

use bosepath::potentials::alpha_tilde as core_alpha_tilde;
use bosepath::scattering::{alpha_d2_general, alpha_d3};
use bosepath::variational::{self, CanonicalOptions, Coupling, GpOptions, HartreeOptions};
use bosepath::{Boundary, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Precondition(_) | Error::GridMismatch(_) | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Grid(bosepath::Grid);

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (d, r, n, bc = "dirichlet"))]
    fn new(d: usize, r: f64, n: usize, bc: &str) -> PyResult<Self> {
        let bc = match bc {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            _ => return Err(PyValueError::new_err(format!("unknown boundary {bc:?}"))),
        };
        bosepath::Grid::new(d, r, n, bc).map(Grid).map_err(err)
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid(d={}, r={}, n={}, bc={:?})", self.0.d, self.0.r, self.0.n, self.0.bc)
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Trap(bosepath::TrapPotential);

#[pymethods]
impl Trap {
    #[staticmethod]
    fn harmonic() -> Self {
        Trap(bosepath::TrapPotential::harmonic())
    }

    #[staticmethod]
    fn power(p: f64) -> PyResult<Self> {
        let t = bosepath::TrapPotential::power(p);
        t.validate().map_err(err)?;
        Ok(Trap(t))
    }

    #[staticmethod]
    fn hard_box(r_wall: f64) -> PyResult<Self> {
        let t = bosepath::TrapPotential::hard_box(r_wall);
        t.validate().map_err(err)?;
        Ok(Trap(t))
    }

    fn __call__(&self, x: Vec<f64>) -> f64 {
        self.0.eval(&x)
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
struct Pair(bosepath::PairPotential);

fn checked(v: bosepath::PairPotential) -> PyResult<Pair> {
    v.validate().map_err(err)?;
    Ok(Pair(v))
}

#[pymethods]
impl Pair {
    #[staticmethod]
    fn gaussian(c: f64, sigma: f64) -> PyResult<Self> {
        checked(bosepath::PairPotential::gaussian(c, sigma))
    }

    #[staticmethod]
    fn square_well(c: f64, r0: f64) -> PyResult<Self> {
        checked(bosepath::PairPotential::square_well(c, r0))
    }

    #[staticmethod]
    fn inverse_power(c: f64, gamma: f64) -> PyResult<Self> {
        checked(bosepath::PairPotential::inverse_power(c, gamma))
    }

    #[staticmethod]
    fn hard_core(a: f64) -> PyResult<Self> {
        checked(bosepath::PairPotential::hard_core(a))
    }

    #[staticmethod]
    fn plateau(m: f64, a: f64) -> PyResult<Self> {
        checked(bosepath::PairPotential::plateau(m, a))
    }

    #[staticmethod]
    fn zero() -> Self {
        Pair(bosepath::PairPotential::zero())
    }

    fn __call__(&self, r: f64) -> f64 {
        self.0.eval(r)
    }
}

/// Scattering length in `dimension` 2 or 3.
#[pyfunction]
#[pyo3(signature = (pair, dimension = 3, r_max = None))]
fn scattering_length(pair: Pair, dimension: usize, r_max: Option<f64>) -> PyResult<f64> {
    let sol = match dimension {
        3 => alpha_d3(&pair.0, r_max),
        2 => alpha_d2_general(&pair.0),
        _ => return Err(PyValueError::new_err(format!("dimension must be 2 or 3, got {dimension}"))),
    };
    Ok(sol.map_err(err)?.alpha)
}

/// `(8 pi)^-1 int v(|y|) dy` over R^d.
#[pyfunction]
fn alpha_tilde(pair: Pair, d: usize) -> PyResult<f64> {
    core_alpha_tilde(&pair.0, d).map_err(err)
}

#[pyfunction]
fn gp_minimize<'py>(py: Python<'py>, trap: &Trap, alpha: f64, grid: &Grid) -> PyResult<Bound<'py, PyDict>> {
    let r = py.detach(|| variational::gp_minimize(&trap.0, alpha, &grid.0, &GpOptions::default())).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("chi_gp", r.chi_gp)?;
    out.set_item("iterations", r.iterations)?;
    out.set_item("residual", r.residual)?;
    out.set_item("phi", r.phi.values)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (trap, pair, n, grid, multistart = 1, seed = 0))]
fn hartree_minimize<'py>(
    py: Python<'py>,
    trap: &Trap,
    pair: Pair,
    n: usize,
    grid: &Grid,
    multistart: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = HartreeOptions { multistart, seed, ..Default::default() };
    let st = py
        .detach(|| variational::hartree_minimize(&trap.0, &Coupling::Pair(pair.0), n, &grid.0, &opts, None))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("chi_product", st.chi_product)?;
    out.set_item("lambda", st.lambda.clone())?;
    out.set_item("residuals", st.residuals.clone())?;
    out.set_item("density", st.mean_density())?;
    out.set_item("h", st.h.into_iter().map(|f| f.values).collect::<Vec<_>>())?;
    Ok(out)
}

#[pyfunction]
fn canonical_ground<'py>(
    py: Python<'py>,
    trap: &Trap,
    pair: Pair,
    n: usize,
    grid: &Grid,
) -> PyResult<Bound<'py, PyDict>> {
    let gs = py
        .detach(|| variational::canonical_ground(&trap.0, &pair.0, n, &grid.0, &CanonicalOptions::default(), None))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("chi_n", gs.chi_n)?;
    out.set_item("eigenvalue", gs.eigenvalue)?;
    out.set_item("residual", gs.residual)?;
    out.set_item("density", gs.one_particle_density(&grid.0))?;
    Ok(out)
}

#[pymodule]
fn pybosepath(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Grid>()?;
    m.add_class::<Trap>()?;
    m.add_class::<Pair>()?;
    m.add_function(wrap_pyfunction!(scattering_length, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_tilde, m)?)?;
    m.add_function(wrap_pyfunction!(gp_minimize, m)?)?;
    m.add_function(wrap_pyfunction!(hartree_minimize, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_ground, m)?)?;
    Ok(())
}
