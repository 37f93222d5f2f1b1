//! Python bindings: fans, b-divisors and the main computations.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;
use serde_json::Value;

use torib::bdiv::{self, BDivisorJson};
use torib::cli::{self, JobSpec};
use torib::convex::{self, RationalPolytope};
use torib::error::Error;
use torib::fan;
use torib::lattice::{self, LatticeVector};
use torib::okounkov;
use torib::rational::{format_rational, parse_rational, Q};
use torib::sections;
use torib::surface::{self, SeriesConfig};

create_exception!(pytorib, ToribError, PyException);
create_exception!(pytorib, NotConvergedError, ToribError);

fn err(e: Error) -> PyErr {
    match e {
        Error::NotConverged(r) => NotConvergedError::new_err(format!(
            "not converged at height {} (bracket width {:.3e})",
            r.final_height, r.bracket_width_f64
        )),
        other => ToribError::new_err(other.to_string()),
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?,
        },
        Value::String(s) => s.into_py_any(py)?,
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_py_any(py)?
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_py_any(py)?
        }
    })
}

fn serialized<T: Serialize>(py: Python<'_>, x: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| ToribError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Accepts Python ints and strings such as "3/4".
fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Q> {
    if let Ok(i) = obj.extract::<i64>() {
        return Ok(Q::from_integer(i.into()));
    }
    let s: String = obj.extract().map_err(|_| PyValueError::new_err("expected an int or a rational string"))?;
    parse_rational(&s).ok_or_else(|| PyValueError::new_err(format!("not a rational: {s:?}")))
}

fn vector(v: &[i64]) -> LatticeVector {
    LatticeVector::from_i64(v)
}

fn coords(v: &LatticeVector) -> PyResult<Vec<i64>> {
    v.to_i64().ok_or_else(|| PyValueError::new_err("coordinates exceed 64 bits"))
}

/// A smooth simplicial fan.
#[pyclass(name = "Fan", module = "pytorib", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFan {
    inner: fan::Fan,
}

#[pymethods]
impl PyFan {
    #[new]
    fn new(rays: Vec<Vec<i64>>, max_cones: Vec<Vec<usize>>) -> PyResult<Self> {
        let dim = rays.first().map_or(0, Vec::len);
        let inner = fan::Fan::new(dim, rays.iter().map(|r| vector(r)).collect(), max_cones).map_err(err)?;
        Ok(PyFan { inner })
    }

    #[staticmethod]
    fn projective_plane() -> Self {
        PyFan { inner: fan::Fan::projective_plane() }
    }

    #[staticmethod]
    fn p1xp1() -> Self {
        PyFan { inner: fan::Fan::p1xp1() }
    }

    #[staticmethod]
    fn projective_space(n: usize) -> Self {
        PyFan { inner: fan::Fan::projective_space(n) }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn rays(&self) -> PyResult<Vec<Vec<i64>>> {
        self.inner.rays().iter().map(coords).collect()
    }

    #[getter]
    fn max_cones(&self) -> Vec<Vec<usize>> {
        self.inner.max_cones().to_vec()
    }

    fn is_smooth(&self) -> bool {
        self.inner.is_smooth()
    }

    fn is_complete(&self) -> PyResult<bool> {
        self.inner.is_complete().map_err(err)
    }

    /// Star subdivision at the face spanned by the given rays.
    fn star_subdivide(&self, face: Vec<usize>) -> PyResult<Self> {
        Ok(PyFan { inner: self.inner.star_subdivide(&face).map_err(err)? })
    }

    /// Refinement containing every primitive vector of sup-norm at most `h`.
    fn refine(&self, h: u64) -> PyResult<Self> {
        Ok(PyFan { inner: fan::refine_fan(&self.inner, h).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("Fan(dim={}, rays={}, cones={})", self.inner.dim(), self.inner.rays().len(), self.inner.max_cones().len())
    }
}

/// A toric b-divisor given by a conical function on a base fan.
#[pyclass(name = "BDivisor", module = "pytorib", frozen, from_py_object)]
#[derive(Clone)]
struct PyBDivisor {
    inner: bdiv::BDivisor,
}

#[pymethods]
impl PyBDivisor {
    /// Builtin names: exa1, sqrt_cusp, power_eps(e), min_quadrant, p2_h,
    /// p1xp1_o11, p1xp1_o10, p1xp1_o01, p3_h.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(PyBDivisor { inner: cli::builtin_divisor(name).map_err(err)? })
    }

    /// The Cartier divisor `sum a_r D_r` on `fan`.
    #[staticmethod]
    fn from_coefficients(fan: &PyFan, coefficients: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let a = coefficients.iter().map(rational).collect::<PyResult<Vec<_>>>()?;
        Ok(PyBDivisor { inner: bdiv::BDivisor::from_coefficients(fan.inner.clone(), &a).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(src: &str) -> PyResult<Self> {
        let j: BDivisorJson = serde_json::from_str(src).map_err(|e| ToribError::new_err(e.to_string()))?;
        Ok(PyBDivisor { inner: bdiv::BDivisor::from_json(&j).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_json()).map_err(|e| ToribError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode() {
            bdiv::Mode::Exact => "exact",
            bdiv::Mode::Numeric => "numeric",
        }
    }

    #[getter]
    fn base(&self) -> PyFan {
        PyFan { inner: self.inner.base().clone() }
    }

    fn with_mode(&self, mode: &str) -> PyResult<Self> {
        let m = match mode {
            "exact" => bdiv::Mode::Exact,
            "numeric" => bdiv::Mode::Numeric,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        Ok(PyBDivisor { inner: self.inner.with_mode(m).map_err(err)? })
    }

    /// Value of the conical function at a lattice point, as "p/q".
    fn value(&self, v: Vec<i64>) -> PyResult<String> {
        Ok(format_rational(&self.inner.value(&vector(&v)).map_err(err)?))
    }

    fn __add__(&self, other: &PyBDivisor) -> PyResult<Self> {
        Ok(PyBDivisor { inner: self.inner.sum(&other.inner).map_err(err)? })
    }

    fn scaled(&self, k: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyBDivisor { inner: self.inner.scaled(&rational(k)?) })
    }

    #[pyo3(signature = (tol = bdiv::DEFAULT_TOL, hmax = None))]
    fn degree(&self, py: Python<'_>, tol: f64, hmax: Option<u64>) -> PyResult<Py<PyAny>> {
        let h = hmax.unwrap_or(bdiv::default_hmax(self.inner.dim()));
        let r = py.detach(|| bdiv::degree_nef(&self.inner, tol, h)).map_err(err)?;
        serialized(py, &r)
    }

    #[pyo3(signature = (depth = surface::DEFAULT_DEPTH, tol = surface::DEFAULT_SERIES_TOL))]
    fn surface_series(&self, py: Python<'_>, depth: u32, tol: f64) -> PyResult<Py<PyAny>> {
        let cfg = SeriesConfig { tol, ..SeriesConfig::default() };
        let r = py.detach(|| surface::degree_surface(&self.inner, depth, &cfg)).map_err(err)?;
        serialized(py, &r)
    }

    /// Exponents of the monomial sections of `level * D`.
    #[pyo3(signature = (level, height = sections::DEFAULT_SECTION_HEIGHT))]
    fn sections(&self, level: u64, height: u64) -> PyResult<Vec<Vec<i64>>> {
        let s = sections::global_sections(&self.inner, level, height).map_err(err)?;
        s.points.iter().map(coords).collect()
    }

    #[pyo3(signature = (lmax, height = sections::DEFAULT_SECTION_HEIGHT))]
    fn hs_table(&self, py: Python<'_>, lmax: u64, height: u64) -> PyResult<Py<PyAny>> {
        let rows = sections::hilbert_samuel_table(&self.inner, lmax, height).map_err(err)?;
        serialized(py, &rows)
    }

    #[pyo3(signature = (height = 16))]
    fn is_nef(&self, height: u64) -> PyResult<bool> {
        Ok(bdiv::is_nef_bdiv(&self.inner, height).map_err(err)?.is_nef())
    }

    /// Slice comparison of the value semigroup at the given flag cone.
    #[pyo3(signature = (flag, lmax, height = sections::DEFAULT_SECTION_HEIGHT))]
    fn okounkov_check(&self, py: Python<'_>, flag: Vec<usize>, lmax: u64, height: u64) -> PyResult<Py<PyAny>> {
        let fb = okounkov::FlagBasis::new(self.inner.base(), &flag).map_err(err)?;
        let r = okounkov::okounkov_slice_check(&self.inner, &fb, lmax, height).map_err(err)?;
        serialized(py, &r)
    }

    fn __repr__(&self) -> String {
        format!("BDivisor({}, mode={})", self.inner.phi().describe(), self.mode())
    }
}

#[pyfunction]
#[pyo3(signature = (divisors, tol = bdiv::DEFAULT_TOL, hmax = None))]
fn mixed_degree(py: Python<'_>, divisors: Vec<PyBDivisor>, tol: f64, hmax: Option<u64>) -> PyResult<Py<PyAny>> {
    let ds: Vec<bdiv::BDivisor> = divisors.into_iter().map(|d| d.inner).collect();
    let h = hmax.unwrap_or(bdiv::default_hmax(ds.first().map_or(2, |d| d.dim())));
    let r = bdiv::mixed_degree(&ds, tol, h).map_err(err)?;
    serialized(py, &r)
}

/// Stern-Brocot parents `(v_alpha, v_beta)` of a primitive vector in the open quadrant.
#[pyfunction]
fn euclid_split(v: Vec<i64>) -> PyResult<(Vec<i64>, Vec<i64>)> {
    let (a, b) = lattice::euclid_split(&vector(&v)).map_err(err)?;
    Ok((coords(&a)?, coords(&b)?))
}

/// Mixed volume of the convex hulls of the given point sets, as "p/q".
#[pyfunction]
fn mixed_volume(point_sets: Vec<Vec<Vec<Bound<'_, PyAny>>>>) -> PyResult<String> {
    let dim = point_sets.first().and_then(|s| s.first()).map_or(0, Vec::len);
    let polys = point_sets
        .iter()
        .map(|set| {
            let pts = set.iter().map(|p| p.iter().map(rational).collect::<PyResult<Vec<_>>>()).collect::<PyResult<Vec<_>>>()?;
            RationalPolytope::from_points(dim, &pts).map_err(err)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(format_rational(&convex::mixed_volume(&polys).map_err(err)?))
}

/// Runs a CLI job given as JSON; returns `(exit_code, document)`.
#[pyfunction]
fn run_job(py: Python<'_>, job: &str) -> PyResult<(i32, Py<PyAny>)> {
    let spec = JobSpec::from_json_str(job).map_err(err)?;
    let out = py.detach(|| cli::run(&spec));
    Ok((out.exit_code, to_py(py, &out.document)?))
}

#[pymodule]
fn pytorib(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cli::VERSION)?;
    m.add("SCHEMA", cli::SCHEMA)?;
    m.add("ToribError", m.py().get_type::<ToribError>())?;
    m.add("NotConvergedError", m.py().get_type::<NotConvergedError>())?;
    m.add_class::<PyFan>()?;
    m.add_class::<PyBDivisor>()?;
    m.add_function(wrap_pyfunction!(mixed_degree, m)?)?;
    m.add_function(wrap_pyfunction!(euclid_split, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_volume, m)?)?;
    m.add_function(wrap_pyfunction!(run_job, m)?)?;
    Ok(())
}
