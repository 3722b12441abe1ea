//! Python bindings for the diracflow certification toolkit.

use std::path::PathBuf;
use std::sync::Arc;

use diracflow::cli::read_certificates;
use diracflow::eigcert::{CertParams, Certifier, Verdict};
use diracflow::floer::{piercing_to_floer as floer_of, Sign};
use diracflow::oneform::{optimize, triangulate, DomainSpec};
use diracflow::spectrum::{load_spectrum as load, parse_spectrum};
use diracflow::trace::build_formal_side;
use diracflow::{Error, ManifoldData, Side, SideKind, SyntheticSpectrum, TraceData};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyComplex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(pydiracflow, DiracflowError, PyException);

fn err(e: Error) -> PyErr {
    DiracflowError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn side_kind(name: &str) -> PyResult<SideKind> {
    match name {
        "coexact" => Ok(SideKind::Coexact),
        "dirac_even" => Ok(SideKind::DiracEven),
        "dirac_odd" => Ok(SideKind::DiracOdd),
        "dirac_odd_derivative" => Ok(SideKind::DiracOddDerivative),
        other => Err(PyValueError::new_err(format!("unknown side kind {other:?}"))),
    }
}

/// `(1/2 1_[-1,1])^{*n}`, optionally modulated by `2 cos(nu x)`, stretched,
/// and multiplied by `x` when `odd` is set.
#[pyclass(name = "TestFunction", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTestFunction(diracflow::TestFunction);

#[pymethods]
impl PyTestFunction {
    #[new]
    #[pyo3(signature = (n, nu=None, stretch=1.0, odd=false))]
    fn new(n: u32, nu: Option<f64>, stretch: f64, odd: bool) -> PyResult<Self> {
        diracflow::TestFunction::new(n, nu, stretch, odd).map(Self).map_err(err)
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id()
    }

    #[getter]
    fn support_radius(&self) -> f64 {
        self.0.support_radius()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.value(x)
    }

    fn deriv(&self, x: f64, order: usize) -> f64 {
        self.0.deriv(x, order)
    }

    fn fourier<'py>(&self, py: Python<'py>, t: f64) -> Bound<'py, PyComplex> {
        let z = self.0.fourier(t);
        PyComplex::from_doubles(py, z.re, z.im)
    }

    fn __repr__(&self) -> String {
        format!("TestFunction({})", self.0.id())
    }
}

/// A checksummed length spectrum.
#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum(Arc<ManifoldData>);

#[pymethods]
impl PySpectrum {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_spectrum(text).map(|d| Self(Arc::new(d))).map_err(err)
    }

    /// Random admissible spectrum for testing.
    #[staticmethod]
    #[pyo3(signature = (seed, count, torsion_order=1, cutoff=7.0, max_free=3))]
    fn random(seed: u64, count: usize, torsion_order: u32, cutoff: f64, max_free: i64) -> PyResult<Self> {
        ManifoldData::random(&mut ChaCha8Rng::seed_from_u64(seed), count, torsion_order, cutoff, max_free)
            .map(|d| Self(Arc::new(d)))
            .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.0.volume
    }

    #[getter]
    fn b1(&self) -> u32 {
        self.0.b1
    }

    #[getter]
    fn torsion_order(&self) -> u32 {
        self.0.torsion_order
    }

    #[getter]
    fn cutoff(&self) -> f64 {
        self.0.cutoff
    }

    #[getter]
    fn checksum(&self) -> String {
        self.0.checksum.clone()
    }

    fn __len__(&self) -> usize {
        self.0.geodesics.len()
    }

    /// `(value, error_budget)` of a geometric side at each `tau`.
    fn geometric_side(
        &self,
        py: Python<'_>,
        test_function: &PyTestFunction,
        kind: &str,
        taus: Vec<f64>,
        k: u32,
    ) -> PyResult<Vec<(f64, f64)>> {
        let kind = side_kind(kind)?;
        let data = self.0.clone();
        let h = test_function.0.clone();
        py.detach(move || {
            let side = build_formal_side(&data, &h, kind)?;
            Ok(side.evaluate_grid(&taus, k).into_iter().map(|e| (e.value, e.budget)).collect())
        })
        .map_err(err)
    }
}

#[pyfunction]
fn load_spectrum(path: PathBuf) -> PyResult<PySpectrum> {
    load(&path).map(|d| PySpectrum(Arc::new(d))).map_err(err)
}

/// Planted oracle spectrum as JSON, with its `(tau, sign)` crossings.
#[pyfunction]
fn planted_spectrum(seed: u64, crossings: usize) -> PyResult<(String, Vec<(f64, i8)>)> {
    let (s, c) = SyntheticSpectrum::planted(&mut ChaCha8Rng::seed_from_u64(seed), crossings).map_err(err)?;
    Ok((s.to_json().map_err(err)?, c))
}

/// Run the certification pipeline and return the report as a dict.
///
/// `source` is a spectrum path, or the JSON text of a synthetic spectrum when
/// `synthetic` is set. `params` holds certification parameters by name.
#[pyfunction]
#[pyo3(signature = (source, synthetic=false, spinc=None, lambda_max=None, params=None))]
fn certify<'py>(
    py: Python<'py>,
    source: &str,
    synthetic: bool,
    spinc: Option<u32>,
    lambda_max: Option<f64>,
    params: Option<Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let params: CertParams = match params {
        Some(p) => {
            let text: String = py.import("json")?.call_method1("dumps", (p,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("params: {e}")))?
        }
        None => CertParams::default(),
    };
    let data: Arc<dyn TraceData> = if synthetic {
        Arc::new(SyntheticSpectrum::from_json(source).map_err(err)?)
    } else {
        Arc::new(load(source.as_ref()).map_err(err)?)
    };
    let report = py
        .detach(move || {
            let c = Certifier::new(data, params)?;
            let only = spinc.map(|k| vec![k]);
            let report = c.certify_all(lambda_max, only.as_deref())?;
            Ok(serde_json::to_string(&report)?)
        })
        .map_err(err)?;
    json_to_py(py, &report)
}

/// Floer output for a piercing sequence of `+1`/`-1` signs.
#[pyfunction]
fn piercing_to_floer<'py>(py: Python<'py>, signs: Vec<i8>) -> PyResult<Bound<'py, PyAny>> {
    let signs: Vec<Sign> = signs.into_iter().map(Sign::from_value).collect::<Result<_, _>>().map_err(err)?;
    let out = floer_of(&signs).map_err(err)?;
    json_to_py(py, &out.to_json().map_err(err)?)
}

/// JSON of the cube domain of half-width `h` with cohomology class `phi`.
#[pyfunction]
fn cube_domain(h: f64, phi: [i64; 3]) -> PyResult<String> {
    DomainSpec::cube(h, phi).and_then(|d| d.to_json()).map_err(err)
}

/// Optimize the one-form on a domain given as JSON; returns the report.
#[pyfunction]
#[pyo3(signature = (domain, iterations=10_000, seed=0))]
fn optimize_oneform<'py>(py: Python<'py>, domain: &str, iterations: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let spec = DomainSpec::from_json(domain).map_err(err)?;
    let report = py
        .detach(move || {
            let complex = triangulate(&spec)?;
            optimize(&complex, iterations, seed)?.to_json()
        })
        .map_err(err)?;
    json_to_py(py, &report)
}

/// Replay the certificates in a JSON text; returns `(replayed, inconclusive)`
/// and raises when any replay disagrees with its stored verdict.
#[pyfunction]
fn verify(text: &str) -> PyResult<(usize, usize)> {
    let certs = read_certificates(text).map_err(err)?;
    let mut inconclusive = 0;
    for c in &certs {
        if c.replay().map_err(err)? != Verdict::Certified {
            inconclusive += 1;
        }
    }
    Ok((certs.len(), inconclusive))
}

#[pymodule]
fn pydiracflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DiracflowError", m.py().get_type::<DiracflowError>())?;
    m.add_class::<PyTestFunction>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(load_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(planted_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(piercing_to_floer, m)?)?;
    m.add_function(wrap_pyfunction!(cube_domain, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_oneform, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
