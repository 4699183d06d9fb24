use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ncbiharm::assembly::Form;
use ncbiharm::basis::{BasisSet, BoundaryCondition};
use ncbiharm::harness::{self, Case, Method};
use ncbiharm::operators::{check_complex as certify, Complex};
use ncbiharm::{Error, Pattern, Rect, Triangulation};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parse { .. } | Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn bc_or(case: &Case, bc: Option<&str>) -> PyResult<BoundaryCondition> {
    bc.map_or(Ok(case.bc), parse)
}

/// A conforming triangulation of a simply connected polygon.
#[pyclass(frozen, name = "Mesh")]
struct PyMesh {
    tri: Arc<Triangulation>,
}

#[pymethods]
impl PyMesh {
    #[staticmethod]
    #[pyo3(signature = (n, pattern = "three-directional", xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0))]
    fn structured(n: usize, pattern: &str, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> PyResult<Self> {
        if n == 0 || !(xmin < xmax && ymin < ymax) {
            return Err(PyValueError::new_err("need n >= 1 and a nonempty rectangle"));
        }
        let pattern: Pattern = parse(pattern)?;
        Ok(Self { tri: Arc::new(Triangulation::structured(n, pattern, Rect { xmin, xmax, ymin, ymax })) })
    }

    #[staticmethod]
    #[pyo3(signature = (n, jitter = 0.2, seed = 0))]
    fn lshape(n: usize, jitter: f64, seed: u64) -> PyResult<Self> {
        if n < 2 || !n.is_multiple_of(2) || !(0.0..0.3).contains(&jitter) {
            return Err(PyValueError::new_err("L-shape needs an even n >= 2 and jitter in [0, 0.3)"));
        }
        Ok(Self { tri: Arc::new(Triangulation::lshape(n, jitter, seed)) })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let tri = Triangulation::load(std::io::BufReader::new(text.as_bytes())).map_err(to_py)?;
        Ok(Self { tri: Arc::new(tri) })
    }

    fn to_text(&self) -> String {
        self.tri.to_mesh_string()
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 2]> {
        self.tri.vertices.clone()
    }

    #[getter]
    fn cells(&self) -> Vec<[usize; 3]> {
        self.tri.cells.clone()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.tri.n_edges()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.tri.h_max
    }

    fn __repr__(&self) -> String {
        format!("Mesh({} vertices, {} cells, {} edges)", self.tri.n_vertices(), self.tri.n_cells(), self.tri.n_edges())
    }
}

/// Exactness certificate for one of the discrete complexes `a`, `dirichlet`, `navier`.
#[pyfunction]
fn check_complex<'py>(py: Python<'py>, mesh: &PyMesh, which: &str) -> PyResult<Bound<'py, PyDict>> {
    let which: Complex = parse(which)?;
    let r = certify(&mesh.tri, which).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed())?;
    d.set_item("spaces", r.spaces.iter().map(|(n, k)| (n.clone(), *k)).collect::<Vec<_>>())?;
    d.set_item("rank_grad", r.rank_grad)?;
    d.set_item("rank_rot", r.rank_rot)?;
    d.set_item("kernel_rot", r.kernel_rot)?;
    d.set_item("composition_max", r.composition_max)?;
    Ok(d)
}

/// Number of local basis functions per tag.
#[pyfunction]
fn basis_counts(mesh: &PyMesh, bc: &str) -> PyResult<Vec<(String, usize)>> {
    let basis = BasisSet::build(&mesh.tri, parse(bc)?).map_err(to_py)?;
    Ok(basis.count_by_tag().into_iter().map(|(t, c)| (t.name().to_string(), c)).collect())
}

/// Solve a builtin case; returns the number of unknowns, the errors and the
/// A30 coefficients of the discrete solution.
#[pyfunction]
#[pyo3(signature = (mesh, case, bc = None, form = "hessian", method = "basis"))]
fn solve<'py>(py: Python<'py>, mesh: &PyMesh, case: &str, bc: Option<&str>, form: &str, method: &str) -> PyResult<Bound<'py, PyDict>> {
    let case = Case::builtin(case).map_err(to_py)?;
    let bc = bc_or(&case, bc)?;
    let form: Form = parse(form)?;
    let method: Method = parse(method)?;
    let (uh, dofs) = harness::solve_case(&mesh.tri, &case, bc, form, method).map_err(to_py)?;
    let e = harness::compute_errors(&uh, &case).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("dofs", dofs)?;
    d.set_item("errH2", e.h2)?;
    d.set_item("errH1", e.h1)?;
    d.set_item("errL2", e.l2)?;
    d.set_item("coefficients", uh.coeffs)?;
    Ok(d)
}

/// Convergence study on the unit square; returns the CSV text.
#[pyfunction]
#[pyo3(signature = (case, levels, pattern = "three-directional", bc = None, form = "hessian"))]
fn study(case: &str, levels: Vec<usize>, pattern: &str, bc: Option<&str>, form: &str) -> PyResult<String> {
    let case = Case::builtin(case).map_err(to_py)?;
    let bc = bc_or(&case, bc)?;
    let table = harness::convergence_study(&case, parse(pattern)?, &levels, bc, parse(form)?).map_err(|(e, _)| to_py(e))?;
    Ok(table.to_csv())
}

/// Discrete inf-sup constant of the Stokes pair with rot as constraint.
#[pyfunction]
fn inf_sup(mesh: &PyMesh, bc: &str) -> PyResult<f64> {
    harness::inf_sup_constant(&mesh.tri, parse(bc)?).map_err(to_py)
}

#[pyfunction]
fn case_names() -> Vec<&'static str> {
    harness::CASE_NAMES.to_vec()
}

#[pymodule]
fn ncbiharm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(check_complex, m)?)?;
    m.add_function(wrap_pyfunction!(basis_counts, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(study, m)?)?;
    m.add_function(wrap_pyfunction!(inf_sup, m)?)?;
    m.add_function(wrap_pyfunction!(case_names, m)?)?;
    Ok(())
}
