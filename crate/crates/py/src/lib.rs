//! Python bindings. Reports come back as plain dicts and lists built from
//! the same serialized structures the command line prints.

use minsurf::forms::{self, ParityType};
use minsurf::spectral::{self, Schedule};
use minsurf::surface::{self, QuadSpec, WeierstrassData};
use minsurf::topology::{self, FeasibilityConstraints, Sidedness, SurfaceTopology};
use minsurf::complexfn::C64;
use minsurf::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

create_exception!(pyminsurf, NonConvergence, PyRuntimeError);
create_exception!(pyminsurf, InvariantViolation, PyRuntimeError);

fn err(e: Error) -> PyErr {
    if e.is_nonconvergence() {
        return NonConvergence::new_err(e.to_string());
    }
    match e {
        Error::InvalidInput(_) | Error::PoleHit { .. } | Error::LatticePointHit { .. } | Error::PlanarInput => {
            PyValueError::new_err(e.to_string())
        }
        _ => InvariantViolation::new_err(e.to_string()),
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(value_to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, value_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, r: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(r).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

/// A minimal surface given by catalog Weierstrass data.
#[pyclass(module = "pyminsurf", frozen)]
struct Surface {
    inner: WeierstrassData,
}

#[pymethods]
impl Surface {
    #[staticmethod]
    fn plane() -> Self {
        Surface { inner: surface::plane() }
    }

    #[staticmethod]
    fn catenoid() -> Self {
        Surface { inner: surface::catenoid() }
    }

    #[staticmethod]
    #[pyo3(signature = (k = 1))]
    fn enneper(k: u32) -> PyResult<Self> {
        if k == 0 {
            return Err(PyValueError::new_err("enneper needs k >= 1"));
        }
        Ok(Surface { inner: surface::enneper(k) })
    }

    #[staticmethod]
    #[pyo3(signature = (t = 1.0))]
    fn costa(t: f64) -> PyResult<Self> {
        Ok(Surface { inner: surface::costa(t).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    /// X(z) for a chart point z = re + i·im.
    fn immerse(&self, re: f64, im: f64) -> PyResult<(f64, f64, f64)> {
        let x = self.inner.immerse(C64::new(re, im)).map_err(err)?;
        Ok((x[0], x[1], x[2]))
    }

    fn gauss_curvature(&self, re: f64, im: f64) -> PyResult<f64> {
        self.inner.gauss_curvature(C64::new(re, im)).map_err(err)
    }

    /// One dict per puncture: multiplicity, pole orders, limiting normal.
    fn ends<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let e: Vec<_> =
            self.inner.punctures.iter().map(|p| surface::end_analysis(&self.inner, p)).collect::<Result<_, _>>().map_err(err)?;
        to_py(py, &e)
    }

    fn total_curvature(&self) -> PyResult<f64> {
        Ok(surface::total_curvature(&self.inner, &QuadSpec::default()).map_err(err)?.value)
    }

    fn topology(&self) -> PyResult<Topology> {
        let t = forms::basis::basis_topology(&self.inner).map_err(err)?;
        let mut d = t.multiplicities;
        d.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Topology { inner: SurfaceTopology::new(t.genus, d, t.sided).map_err(err)? })
    }

    /// Morse index by exhaustion over the given radii.
    #[pyo3(signature = (radii = None, h0 = None))]
    fn index<'py>(&self, py: Python<'py>, radii: Option<Vec<f64>>, h0: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        let mut s = Schedule::default();
        if let Some(r) = radii {
            s.radii = r;
        }
        if let Some(h) = h0 {
            s.h0 = h;
        }
        let rep = py.detach(|| spectral::index_estimate(&self.inner, &s)).map_err(err)?;
        to_py(py, &rep)
    }

    /// Holomorphic basis with its L²* Gram matrix summary.
    fn holomorphic_basis<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let b = py.detach(|| forms::holomorphic_basis(&self.inner)).map_err(err)?;
        to_py(py, &b)
    }

    fn __repr__(&self) -> String {
        format!("Surface({})", self.inner.name)
    }
}

/// (g, d₁..d_r, sidedness) with exact index bounds.
#[pyclass(module = "pyminsurf", frozen)]
struct Topology {
    inner: SurfaceTopology,
}

#[pymethods]
impl Topology {
    #[new]
    #[pyo3(signature = (genus, multiplicities, one_sided = false))]
    fn new(genus: u32, mut multiplicities: Vec<u32>, one_sided: bool) -> PyResult<Self> {
        multiplicities.sort_unstable_by(|a, b| b.cmp(a));
        let sided = if one_sided { Sidedness::One } else { Sidedness::Two };
        Ok(Topology { inner: SurfaceTopology::new(genus, multiplicities, sided).map_err(err)? })
    }

    #[getter]
    fn genus(&self) -> u32 {
        self.inner.genus
    }

    #[getter]
    fn multiplicities(&self) -> Vec<u32> {
        self.inner.multiplicities.clone()
    }

    /// Exact bounds; rationals come back as strings like "4/3".
    fn bound<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &topology::bound_report(&self.inner).map_err(err)?)
    }

    fn sandwich<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &topology::sandwich(&self.inner).map_err(err)?)
    }

    fn harmonic_dimension(&self) -> i64 {
        forms::dim_harmonic_l2star(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Topology({})", self.inner)
    }
}

/// Topologies whose index lower bound fits the budget. `presets` and
/// `exclude` are ids from the bundled literature file.
#[pyfunction]
#[pyo3(signature = (budget, one_sided = false, embedded = false, nonflat = false, min_ends = 0, min_genus = 0, presets = vec![], exclude = vec![]))]
#[allow(clippy::too_many_arguments)]
fn enumerate<'py>(
    py: Python<'py>,
    budget: u32,
    one_sided: bool,
    embedded: bool,
    nonflat: bool,
    min_ends: u32,
    min_genus: u32,
    presets: Vec<String>,
    exclude: Vec<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let lit = topology::Literature::builtin();
    let mut c = FeasibilityConstraints { nonflat, embedded, min_ends, min_genus, ..Default::default() };
    for id in &presets {
        c = c.with_preset(&lit.preset(id).map_err(err)?);
    }
    for id in &exclude {
        c.excluded_topologies.push(lit.exclusion(id).map_err(err)?);
    }
    let sided = if one_sided { Sidedness::One } else { Sidedness::Two };
    to_py(py, &topology::enumerate_feasible(budget, sided, &c))
}

/// (value, growth_rate, diverges) of the L²* norm of dz/z^l on an end of
/// multiplicity d, cut off at |z| = eps.
#[pyfunction]
fn l2star_end_norm(l: u32, d: u32, eps: f64) -> PyResult<(f64, f64, bool)> {
    let n = forms::l2star_end_norm(l, d, eps).map_err(err)?;
    Ok((n.value, n.growth_rate, n.diverges))
}

#[pyfunction]
#[pyo3(signature = (t = 1.0))]
fn costa_parity_dims<'py>(py: Python<'py>, t: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &forms::costa_parity_dims(t).map_err(err)?)
}

/// Violated parity inequalities for w = (w++, w+-, w-+, w--).
#[pyfunction]
fn parity_feasibility(w: [usize; 4]) -> PyResult<Vec<String>> {
    Ok(forms::parity_feasibility(w).map_err(err)?.iter().map(|i| i.to_string()).collect())
}

#[pyfunction]
#[pyo3(signature = (index = 3, w_minus_minus = 0, t = 1.0))]
fn contradiction_replay<'py>(py: Python<'py>, index: usize, w_minus_minus: usize, t: f64) -> PyResult<Bound<'py, PyAny>> {
    let sys = forms::LemmaSystem::for_costa(t).map_err(err)?;
    to_py(py, &forms::contradiction_replay(&sys, index, w_minus_minus))
}

/// Restricted counts (++, +-, -+, --) of the Costa quarter mesh.
#[pyfunction]
#[pyo3(signature = (t = 1.0, r = 40.0, h = 0.3))]
fn costa_parity_counts<'py>(py: Python<'py>, t: f64, r: f64, h: f64) -> PyResult<Bound<'py, PyAny>> {
    let pc = py
        .detach(|| {
            let wd = surface::costa(t)?;
            spectral::parity_counts(&spectral::quarter_mesh(&wd, r, 0.0, h)?)
        })
        .map_err(err)?;
    to_py(py, &pc)
}

fn parity_labels() -> Vec<String> {
    ParityType::ALL.iter().map(|p| p.label()).collect()
}

#[pymodule]
fn pyminsurf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", minsurf::VERSION)?;
    m.add("PARITIES", parity_labels())?;
    m.add("NonConvergence", m.py().get_type::<NonConvergence>())?;
    m.add("InvariantViolation", m.py().get_type::<InvariantViolation>())?;
    m.add_class::<Surface>()?;
    m.add_class::<Topology>()?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(l2star_end_norm, m)?)?;
    m.add_function(wrap_pyfunction!(costa_parity_dims, m)?)?;
    m.add_function(wrap_pyfunction!(parity_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(contradiction_replay, m)?)?;
    m.add_function(wrap_pyfunction!(costa_parity_counts, m)?)?;
    Ok(())
}
