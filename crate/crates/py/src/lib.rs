//! Python bindings. Elements, domains and generator sets are classes; the
//! classifiers take a list of `Element` and return plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use regulus_core::cartan::{self, LinearFunctional, Theta};
use regulus_core::controls;
use regulus_core::error::Error;
use regulus_core::groups::{self, GeneratorSet, RayPattern, WordSequence, DEFAULT_DEDUP_TOL};
use regulus_core::hilbert::{self, ConvexDomain};
use regulus_core::matrix::{matrix_from_rows, GroupElement};
use regulus_core::morse::{self, MorseConfig};
use regulus_core::pipeline::{self, PipelineConfig, RaySpec};
use regulus_core::sublinear::DEFAULT_SEED;
use regulus_core::trajectory::Trajectory;
use regulus_core::weyl::{self, WeylConfig};

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// serde value -> Python object through the json module.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn theta_for(d: usize, theta: Option<Vec<usize>>) -> PyResult<Theta> {
    match theta {
        Some(t) => Theta::new(d, t).map_err(err),
        None => Ok(Theta::full(d)),
    }
}

/// Runs `f` on a `Words` object or a list of `Element`. Words keep their
/// letters, so displacements are evaluated without cancellation.
fn with_seq<R>(seq: &Bound<'_, PyAny>, f: impl FnOnce(&dyn Trajectory) -> PyResult<R>) -> PyResult<R> {
    if let Ok(w) = seq.cast::<Words>() {
        let w = w.get();
        let ws = WordSequence::new(&w.gens, w.words.clone()).map_err(err)?;
        return f(&ws);
    }
    let list: Vec<PyRef<'_, Element>> = seq.extract()?;
    f(&elements(&list)?)
}

fn elements(seq: &[PyRef<'_, Element>]) -> PyResult<Vec<GroupElement>> {
    let out: Vec<GroupElement> = seq.iter().map(|e| e.inner.clone()).collect();
    if out.is_empty() {
        return Err(err(Error::EmptyInput));
    }
    Ok(out)
}

/// An element of SL(d, R), stored with its inverse.
#[pyclass(module = "regulus", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Element {
    inner: GroupElement,
}

#[pymethods]
impl Element {
    /// Rows of an invertible real matrix; rescaled to |det| = 1.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = matrix_from_rows(&rows).map_err(err)?;
        Ok(Element { inner: GroupElement::new(m).map_err(err)? })
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        Element { inner: GroupElement::identity(d) }
    }

    /// exp(diag(h)); h should sum to zero.
    #[staticmethod]
    fn diag_exp(h: Vec<f64>) -> Self {
        Element { inner: GroupElement::diag_exp(&h) }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn inverse(&self) -> Self {
        Element { inner: self.inner.inverse() }
    }

    fn compose(&self, other: &Element) -> PyResult<Self> {
        if other.inner.dim() != self.inner.dim() {
            return Err(err(Error::DimensionMismatch { expected: self.inner.dim(), found: other.inner.dim() }));
        }
        Ok(Element { inner: self.inner.compose(&other.inner) })
    }

    fn __matmul__(&self, other: &Element) -> PyResult<Self> {
        self.compose(other)
    }

    /// Log singular values, decreasing.
    fn kappa(&self) -> PyResult<Vec<f64>> {
        Ok(cartan::kappa(&self.inner).map_err(err)?.coords().to_vec())
    }

    /// Simple roots of κ.
    fn roots(&self) -> PyResult<Vec<f64>> {
        Ok(cartan::kappa(&self.inner).map_err(err)?.roots())
    }

    /// Fundamental weights of κ.
    fn weights(&self) -> PyResult<Vec<f64>> {
        Ok(cartan::kappa(&self.inner).map_err(err)?.weights())
    }

    /// d_X(self, other) = ‖κ(self⁻¹ other)‖.
    fn distance(&self, other: &Element) -> PyResult<f64> {
        cartan::sym_distance(&self.inner, &other.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Element({:?})", self.inner.to_rows())
    }
}

/// A properly convex domain in an affine chart.
#[pyclass(module = "regulus", frozen)]
pub struct Domain {
    inner: ConvexDomain,
}

#[pymethods]
impl Domain {
    #[staticmethod]
    fn klein_disk() -> Self {
        Domain { inner: ConvexDomain::klein_disk() }
    }

    #[staticmethod]
    fn unit_ball(n: usize) -> Self {
        Domain { inner: ConvexDomain::unit_ball(n) }
    }

    #[staticmethod]
    fn simplex(vertices: Vec<Vec<f64>>, base_point: Vec<f64>) -> PyResult<Self> {
        Ok(Domain { inner: ConvexDomain::simplex(vertices, base_point).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Domain { inner: ConvexDomain::from_json(&v).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn base_point(&self) -> Vec<f64> {
        self.inner.base_point().to_vec()
    }

    /// Hilbert distance between two chart points.
    fn distance(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        hilbert::hilbert_distance(&x, &y, &self.inner).map_err(err)
    }

    /// Projective action of g on a chart point.
    fn act(&self, g: &Element, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.act(&g.inner, &x).map_err(err)
    }

    /// sup over the orbit of |½ log σ₁/σ_d − d_Ω(o, g·o)| and its rows.
    #[pyo3(signature = (orbit, base_point=None))]
    fn fact_gap<'py>(&self, py: Python<'py>, orbit: Vec<PyRef<'py, Element>>, base_point: Option<Vec<f64>>) -> PyResult<(f64, Bound<'py, PyAny>)> {
        let o = base_point.unwrap_or_else(|| self.inner.base_point().to_vec());
        let (sup, rows) = hilbert::fact_singular_value_gap(&elements(&orbit)?, &o, &self.inner).map_err(err)?;
        Ok((sup, to_py(py, &rows)?))
    }
}

/// Generators of a finitely generated group or semigroup.
#[pyclass(module = "regulus", frozen)]
pub struct Generators {
    inner: GeneratorSet,
}

#[pymethods]
impl Generators {
    /// A built-in set; see `gallery_names()`.
    #[staticmethod]
    fn gallery(name: &str) -> PyResult<Self> {
        Ok(Generators { inner: groups::gallery(name).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Generators { inner: GeneratorSet::from_json(&v).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn labels(&self) -> String {
        self.inner.labels().iter().collect()
    }

    /// Product of the letters; capitals are inverses.
    fn evaluate(&self, word: &str) -> PyResult<Element> {
        Ok(Element { inner: self.inner.evaluate(word).map_err(err)? })
    }

    /// Reduced words of length ≤ radius as (word, length, element).
    fn word_ball(&self, radius: usize) -> PyResult<Vec<(String, usize, Element)>> {
        let ball = groups::word_ball(&self.inner, radius, DEFAULT_DEDUP_TOL).map_err(err)?;
        Ok(ball.into_iter().map(|n| (n.word, n.length, Element { inner: n.element })).collect())
    }

    /// First n prefixes of an eventually periodic word such as "(ab)".
    fn ray(&self, pattern: &str, n: usize) -> PyResult<Words> {
        let p = RayPattern::parse(pattern).map_err(err)?;
        let seq = WordSequence::ray(&self.inner, &p, n).map_err(err)?;
        Ok(Words { gens: self.inner.clone(), words: seq.words().to_vec() })
    }

    /// A sequence given by words in these generators.
    fn words(&self, words: Vec<String>) -> PyResult<Words> {
        WordSequence::new(&self.inner, words.clone()).map_err(err)?;
        Ok(Words { gens: self.inner.clone(), words })
    }

    /// Σ exp(−s·φ(κ(γ))) over the ball of the given radius.
    fn poincare(&self, phi: Vec<f64>, radius: usize, s: f64) -> PyResult<f64> {
        let ball = groups::word_ball(&self.inner, radius, DEFAULT_DEDUP_TOL).map_err(err)?;
        groups::poincare_partial(&ball, &LinearFunctional::new(phi), s).map_err(err)
    }

    /// Bracket on the critical exponent from annulus growth.
    fn critical_exponent<'py>(&self, py: Python<'py>, phi: Vec<f64>, radii: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
        let e = groups::critical_exponent_estimate(&self.inner, &LinearFunctional::new(phi), &radii).map_err(err)?;
        to_py(py, &e)
    }
}

/// A sequence of words in a generator set.
#[pyclass(module = "regulus", frozen)]
pub struct Words {
    gens: GeneratorSet,
    words: Vec<String>,
}

#[pymethods]
impl Words {
    fn __len__(&self) -> usize {
        self.words.len()
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.words.clone()
    }

    /// The evaluated elements; exact displacements are lost once entries grow.
    fn elements(&self) -> PyResult<Vec<Element>> {
        self.words.iter().map(|w| Ok(Element { inner: self.gens.evaluate(w).map_err(err)? })).collect()
    }
}

#[pyfunction]
fn gallery_names() -> Vec<(String, String)> {
    groups::GALLERY.iter().map(|(n, d)| (n.to_string(), d.to_string())).collect()
}

/// A reference sequence by name, e.g. "flat-regular" or "sqrt-detour".
#[pyfunction]
#[pyo3(signature = (kind, n=200))]
fn control(kind: &str, n: usize) -> PyResult<Vec<Element>> {
    Ok(controls::named(kind, n).map_err(err)?.into_iter().map(|g| Element { inner: g }).collect())
}

#[pyfunction]
#[pyo3(signature = (seq, theta=None, seed=DEFAULT_SEED))]
fn classify_morse<'py>(py: Python<'py>, seq: &Bound<'py, PyAny>, theta: Option<Vec<usize>>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    with_seq(seq, |seq| {
        let theta = theta_for(seq.dim(), theta)?;
        let v = morse::classify_morse(seq, &theta, &MorseConfig { seed, ..MorseConfig::default() }).map_err(err)?;
        to_py(py, &v)
    })
}

#[pyfunction]
#[pyo3(signature = (seq, theta=None, c=0.3, d=3))]
fn classify_uniform_regular<'py>(py: Python<'py>, seq: &Bound<'py, PyAny>, theta: Option<Vec<usize>>, c: f64, d: usize) -> PyResult<Bound<'py, PyAny>> {
    with_seq(seq, |seq| {
        let theta = theta_for(seq.dim(), theta)?;
        to_py(py, &morse::classify_uniform_regular(seq, &theta, c, d).map_err(err)?)
    })
}

#[pyfunction]
#[pyo3(signature = (seq, theta=None, starts=weyl::DEFAULT_STARTS, seed=DEFAULT_SEED))]
fn verify_morse_lemma<'py>(py: Python<'py>, seq: &Bound<'py, PyAny>, theta: Option<Vec<usize>>, starts: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    with_seq(seq, |seq| {
        let theta = theta_for(seq.dim(), theta)?;
        let cfg = WeylConfig { starts, seed, ..WeylConfig::default() };
        to_py(py, &weyl::verify_morse_lemma(seq, &theta, &cfg).map_err(err)?)
    })
}

/// Compact part and orbit extraction along a ray; give `axis` or `direction`.
#[pyfunction]
#[pyo3(signature = (group, domain, axis=None, direction=None, r=2.0, c=3.0, t=200.0, ball_radius=5, theta=None, seed=DEFAULT_SEED))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline<'py>(
    py: Python<'py>,
    group: &Generators,
    domain: &Domain,
    axis: Option<String>,
    direction: Option<Vec<f64>>,
    r: f64,
    c: f64,
    t: f64,
    ball_radius: usize,
    theta: Option<Vec<usize>>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let ray = match (axis, direction) {
        (Some(a), None) => RaySpec::Axis(a),
        (None, Some(d)) => RaySpec::Direction(d),
        _ => return Err(PyValueError::new_err("give exactly one of axis and direction")),
    };
    let theta = theta_for(group.inner.dim(), theta)?;
    let cfg = PipelineConfig { r, c, t_max: t, ball_radius, morse: MorseConfig { seed, ..MorseConfig::default() } };
    to_py(py, &pipeline::run_pipeline(&group.inner, &domain.inner, &ray, &theta, &cfg).map_err(err)?)
}

#[pymodule]
fn regulus(_py: Python, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Element>()?;
    m.add_class::<Domain>()?;
    m.add_class::<Generators>()?;
    m.add_class::<Words>()?;
    m.add_function(wrap_pyfunction!(gallery_names, m)?)?;
    m.add_function(wrap_pyfunction!(control, m)?)?;
    m.add_function(wrap_pyfunction!(classify_morse, m)?)?;
    m.add_function(wrap_pyfunction!(classify_uniform_regular, m)?)?;
    m.add_function(wrap_pyfunction!(verify_morse_lemma, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    Ok(())
}
