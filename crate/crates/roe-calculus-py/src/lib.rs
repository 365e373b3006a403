//! Python bindings: the main types (spaces, glue metrics, partial maps,
//! operators) as classes, and the checks as functions returning parsed
//! JSON objects.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use roe_calculus::almost_isometry::{self, ExtractOutcome, PartialMap};
use roe_calculus::catalog;
use roe_calculus::family::MetricFamily;
use roe_calculus::glue::{identity_glue, GlueMetric};
use roe_calculus::io;
use roe_calculus::operator::{
    band_decompose, factor_through, propagation_bound_check, Band, FinitePropagationOperator,
};
use roe_calculus::order::{self, UpperBoundOutcome, DEFAULT_GROWTH_THRESHOLD};
use roe_calculus::space::FiniteMetricSpace;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parse a JSON string into a Python object via the json module.
fn json_object(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let json = PyModule::import(py, "json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

fn report_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    json_object(py, &serde_json::to_string(value).map_err(err)?)
}

// ---------------------------------------------------------------------------
// Space
// ---------------------------------------------------------------------------

/// A finite metric space with labeled points.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Space {
    inner: Arc<FiniteMetricSpace>,
}

#[pymethods]
impl Space {
    /// Integer interval [-n, n] with |a - b|.
    #[staticmethod]
    fn z_interval(n: usize) -> Self {
        Space {
            inner: catalog::z_interval(n),
        }
    }

    /// Integer half-line [0, n].
    #[staticmethod]
    fn halfline(n: usize) -> Self {
        Space {
            inner: catalog::halfline(n),
        }
    }

    /// Grid [-n, n]^2 with the l1 metric.
    #[staticmethod]
    fn z2_grid(n: usize) -> Self {
        Space {
            inner: catalog::z2_grid(n),
        }
    }

    /// Shortest-path metric of a random connected graph with bounded
    /// degree, deterministic per seed.
    #[staticmethod]
    fn random_bounded_geometry(n: usize, max_degree: usize, seed: u64) -> PyResult<Self> {
        Ok(Space {
            inner: catalog::random_bounded_geometry(n, max_degree, seed).map_err(err)?,
        })
    }

    /// Resolve a catalog reference like "z_interval:10".
    #[staticmethod]
    fn from_ref(reference: &str) -> PyResult<Self> {
        Ok(Space {
            inner: catalog::resolve_space(reference).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, _) = io::space_from_str(text).map_err(err)?;
        Ok(Space { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn dist(&self, a: &str, b: &str) -> PyResult<f64> {
        let i = self
            .inner
            .position(a)
            .ok_or_else(|| err(format!("unknown label {a:?}")))?;
        let j = self
            .inner
            .position(b)
            .ok_or_else(|| err(format!("unknown label {b:?}")))?;
        Ok(self.inner.dist(i, j))
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    /// Full validation report as a dict.
    fn validate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        report_to_py(py, &self.inner.validate())
    }

    fn is_valid(&self) -> bool {
        self.inner.validate().ok
    }

    /// Largest ball cardinality per radius.
    fn growth(&self, radii: Vec<f64>) -> PyResult<Vec<(f64, usize)>> {
        self.inner.growth_function(&radii).map_err(err)
    }

    fn to_json(&self) -> String {
        io::space_to_str(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Space({} points)", self.inner.len())
    }
}

// ---------------------------------------------------------------------------
// Glue
// ---------------------------------------------------------------------------

/// A metric on the disjoint union of two spaces.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Glue {
    inner: GlueMetric,
}

#[pymethods]
impl Glue {
    /// The identity glue d0 on two copies of a space.
    #[staticmethod]
    fn dzero(space: &Space) -> Self {
        Glue {
            inner: identity_glue(&space.inner),
        }
    }

    /// Resolve a catalog reference like "df:id:10" or "idem:8".
    #[staticmethod]
    fn from_ref(reference: &str) -> PyResult<Self> {
        Ok(Glue {
            inner: catalog::resolve_glue(reference).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, _) = io::glue_from_str(text).map_err(err)?;
        Ok(Glue { inner })
    }

    /// A random valid glue between two spaces, deterministic per seed.
    #[staticmethod]
    fn random(left: &Space, right: &Space, seed: u64) -> Self {
        Glue {
            inner: catalog::random_glue(&left.inner, &right.inner, seed),
        }
    }

    fn left(&self) -> Space {
        Space {
            inner: self.inner.left().clone(),
        }
    }

    fn right(&self) -> Space {
        Space {
            inner: self.inner.right().clone(),
        }
    }

    fn cross(&self, x: &str, y: &str) -> PyResult<f64> {
        let i = self
            .inner
            .left()
            .position(x)
            .ok_or_else(|| err(format!("unknown left label {x:?}")))?;
        let j = self
            .inner
            .right()
            .position(y)
            .ok_or_else(|| err(format!("unknown right label {y:?}")))?;
        Ok(self.inner.cross(i, j))
    }

    fn cross_matrix(&self) -> Vec<Vec<f64>> {
        self.inner.cross_rows()
    }

    fn validate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        report_to_py(py, &self.inner.validate())
    }

    fn is_valid(&self) -> bool {
        self.inner.validate().ok
    }

    /// Min-plus composition with a glue sharing the middle space.
    fn compose(&self, other: &Glue) -> PyResult<Glue> {
        Ok(Glue {
            inner: self.inner.compose(&other.inner).map_err(err)?,
        })
    }

    fn adjoint(&self) -> Glue {
        Glue {
            inner: self.inner.adjoint(),
        }
    }

    fn meet(&self, other: &Glue) -> PyResult<Glue> {
        Ok(Glue {
            inner: self.inner.meet(&other.inner).map_err(err)?,
        })
    }

    fn shifted(&self, delta: f64) -> Glue {
        Glue {
            inner: self.inner.shifted(delta),
        }
    }

    fn max_abs_diff(&self, other: &Glue) -> PyResult<f64> {
        self.inner.max_abs_diff(&other.inner).map_err(err)
    }

    fn to_json(&self) -> String {
        io::glue_to_str(&self.inner)
    }

    fn __eq__(&self, other: &Glue) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Glue({} x {})",
            self.inner.left().len(),
            self.inner.right().len()
        )
    }
}

// ---------------------------------------------------------------------------
// Map
// ---------------------------------------------------------------------------

/// A partial map between spaces (a partial almost isometry once its
/// defect is finite, which at finite scale it always is).
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Map {
    inner: PartialMap,
}

#[pymethods]
impl Map {
    #[staticmethod]
    fn identity(space: &Space) -> PyResult<Self> {
        Ok(Map {
            inner: PartialMap::identity(&space.inner).map_err(err)?,
        })
    }

    /// Resolve a catalog reference like "neg:10" or "sparse_reflection:20".
    #[staticmethod]
    fn from_ref(reference: &str) -> PyResult<Self> {
        Ok(Map {
            inner: catalog::resolve_map(reference).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, _) = io::map_from_str(text).map_err(err)?;
        Ok(Map { inner })
    }

    /// Build from explicit (domain label, codomain label) pairs.
    #[staticmethod]
    fn from_pairs(domain: &Space, codomain: &Space, pairs: Vec<(String, String)>) -> PyResult<Self> {
        let borrowed: Vec<(&str, &str)> =
            pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Ok(Map {
            inner: PartialMap::from_labels(domain.inner.clone(), codomain.inner.clone(), borrowed)
                .map_err(err)?,
        })
    }

    fn domain(&self) -> Space {
        Space {
            inner: self.inner.domain().clone(),
        }
    }

    fn codomain(&self) -> Space {
        Space {
            inner: self.inner.codomain().clone(),
        }
    }

    fn support(&self) -> Vec<String> {
        self.inner
            .support()
            .map(|i| self.inner.domain().label(i).to_string())
            .collect()
    }

    fn is_total(&self) -> bool {
        self.inner.is_total()
    }

    /// (defect, witness pair).
    fn defect(&self) -> (f64, (String, String)) {
        let report = self.inner.defect();
        (report.defect, report.witness)
    }

    fn compose(&self, next: &Map) -> PyResult<Map> {
        Ok(Map {
            inner: self.inner.compose(&next.inner).map_err(err)?,
        })
    }

    /// The induced glue metric d_f with effective constant
    /// max(defect, epsilon).
    #[pyo3(signature = (epsilon = 1.0))]
    fn glue(&self, epsilon: f64) -> PyResult<Glue> {
        Ok(Glue {
            inner: self.inner.glue(epsilon).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        io::map_to_str(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Map({} of {} points mapped)",
            self.inner.support_len(),
            self.inner.domain().len()
        )
    }
}

// ---------------------------------------------------------------------------
// Operator
// ---------------------------------------------------------------------------

/// A sparse finite-propagation operator between two spaces.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Operator {
    inner: FinitePropagationOperator,
}

#[pymethods]
impl Operator {
    #[staticmethod]
    fn zero(source: &Space, target: &Space) -> Self {
        Operator {
            inner: FinitePropagationOperator::zero(source.inner.clone(), target.inner.clone()),
        }
    }

    /// The elementary matrix taking the basis vector at `x` to `y`.
    #[staticmethod]
    fn elementary(source: &Space, target: &Space, x: &str, y: &str) -> PyResult<Self> {
        Ok(Operator {
            inner: FinitePropagationOperator::elementary(
                source.inner.clone(),
                target.inner.clone(),
                x,
                y,
            )
            .map_err(err)?,
        })
    }

    /// Build from (target label, source label, re, im) entries.
    #[staticmethod]
    fn from_entries(
        source: &Space,
        target: &Space,
        entries: Vec<(String, String, f64, f64)>,
    ) -> PyResult<Self> {
        let mut indexed = Vec::with_capacity(entries.len());
        for (y, x, re, im) in entries {
            let yi = target
                .inner
                .position(&y)
                .ok_or_else(|| err(format!("unknown target label {y:?}")))?;
            let xi = source
                .inner
                .position(&x)
                .ok_or_else(|| err(format!("unknown source label {x:?}")))?;
            indexed.push((yi, xi, Complex64::new(re, im)));
        }
        Ok(Operator {
            inner: FinitePropagationOperator::from_entries(
                source.inner.clone(),
                target.inner.clone(),
                indexed,
            )
            .map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, _) = io::operator_from_str(text).map_err(err)?;
        Ok(Operator { inner })
    }

    fn entries(&self) -> Vec<(String, String, f64, f64)> {
        self.inner
            .entries()
            .map(|(y, x, c)| {
                (
                    self.inner.target().label(y).to_string(),
                    self.inner.source().label(x).to_string(),
                    c.re,
                    c.im,
                )
            })
            .collect()
    }

    fn support_len(&self) -> usize {
        self.inner.support_len()
    }

    /// Largest cross distance over the support; "propagation less than L"
    /// means this value is < L.
    fn propagation(&self, glue: &Glue) -> PyResult<f64> {
        self.inner.propagation(&glue.inner).map_err(err)
    }

    /// Propagation of an endomorphism against its own space's metric.
    fn propagation_in(&self, space: &Space) -> PyResult<f64> {
        self.inner.propagation_in(&space.inner).map_err(err)
    }

    /// Operator composition self ∘ rhs (rhs applies first).
    fn compose(&self, rhs: &Operator) -> PyResult<Operator> {
        Ok(Operator {
            inner: self.inner.compose(&rhs.inner).map_err(err)?,
        })
    }

    fn adjoint(&self) -> Operator {
        Operator {
            inner: self.inner.adjoint(),
        }
    }

    fn add(&self, other: &Operator) -> PyResult<Operator> {
        Ok(Operator {
            inner: self.inner.add(&other.inner).map_err(err)?,
        })
    }

    #[pyo3(signature = (re, im = 0.0))]
    fn scale(&self, re: f64, im: f64) -> Operator {
        Operator {
            inner: self.inner.scale(Complex64::new(re, im)),
        }
    }

    /// Operator norm (largest singular value).
    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Split into width-1 bands; returns one Operator per band, summing
    /// back to this operator exactly.
    fn band_decompose(&self) -> Vec<Operator> {
        band_decompose(&self.inner)
            .bands
            .iter()
            .map(|band| Operator {
                inner: band.to_operator(),
            })
            .collect()
    }

    fn to_json(&self) -> String {
        io::operator_to_str(&self.inner)
    }

    fn __eq__(&self, other: &Operator) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Operator({} -> {}, {} entries)",
            self.inner.source().len(),
            self.inner.target().len(),
            self.inner.support_len()
        )
    }
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// Sandwich report for two composable maps, as a dict.
#[pyfunction]
#[pyo3(signature = (f, g, epsilon = 1.0))]
fn sandwich_check(py: Python<'_>, f: &Map, g: &Map, epsilon: f64) -> PyResult<Py<PyAny>> {
    let report = almost_isometry::sandwich_check(&f.inner, &g.inner, epsilon).map_err(err)?;
    report_to_py(py, &report)
}

/// The nearest-point map within `bound`, or None with a witness dict.
#[pyfunction]
fn extract_close_map(py: Python<'_>, glue: &Glue, bound: f64) -> PyResult<Py<PyAny>> {
    match almost_isometry::extract_close_map(&glue.inner, bound) {
        ExtractOutcome::Map(inner) => Ok(Map { inner }.into_pyobject(py)?.into_any().unbind()),
        ExtractOutcome::Failure { witness } => {
            let text = serde_json::to_string(&serde_json::json!({
                "found": false,
                "witness": witness.map(|(p, d)| serde_json::json!({"point": p, "nearest": d})),
            }))
            .map_err(err)?;
            json_object(py, &text)
        }
    }
}

/// Near-identity comparison of a self-glue against d0.
#[pyfunction]
fn near_identity_check(py: Python<'_>, glue: &Glue) -> PyResult<Py<PyAny>> {
    let report = almost_isometry::near_identity_check(&glue.inner).map_err(err)?;
    report_to_py(py, &report)
}

/// Verify g <= g∘g*∘g <= 3g entrywise.
#[pyfunction]
fn inv_semi_check(py: Python<'_>, glue: &Glue) -> PyResult<Py<PyAny>> {
    report_to_py(py, &order::inv_semi_check(&glue.inner).map_err(err)?)
}

/// Domination profile h(R) = max{g'.cross : g.cross <= R}.
#[pyfunction]
fn domination_profile(
    py: Python<'_>,
    g: &Glue,
    g_prime: &Glue,
    radii: Vec<f64>,
) -> PyResult<Py<PyAny>> {
    report_to_py(
        py,
        &order::domination_profile(&g.inner, &g_prime.inner, &radii).map_err(err)?,
    )
}

fn family_from_members(tag: &str, members: Vec<Glue>) -> PyResult<MetricFamily> {
    MetricFamily::from_members(tag, members.into_iter().map(|g| g.inner).collect()).map_err(err)
}

/// Order verdict for the first family dominated by the second; members
/// are consecutive truncations of the two models.
#[pyfunction]
#[pyo3(signature = (family_g, family_h, radii, growth_threshold = DEFAULT_GROWTH_THRESHOLD))]
fn order_check(
    py: Python<'_>,
    family_g: Vec<Glue>,
    family_h: Vec<Glue>,
    radii: Vec<f64>,
    growth_threshold: f64,
) -> PyResult<Py<PyAny>> {
    let fg = family_from_members("g", family_g)?;
    let fh = family_from_members("h", family_h)?;
    report_to_py(
        py,
        &order::order_check(&fg, &fh, &radii, growth_threshold).map_err(err)?,
    )
}

/// Order verdicts both ways plus the equivalence flag.
#[pyfunction]
#[pyo3(signature = (family_g, family_h, radii, growth_threshold = DEFAULT_GROWTH_THRESHOLD))]
fn equivalence_check(
    py: Python<'_>,
    family_g: Vec<Glue>,
    family_h: Vec<Glue>,
    radii: Vec<f64>,
    growth_threshold: f64,
) -> PyResult<Py<PyAny>> {
    let fg = family_from_members("g", family_g)?;
    let fh = family_from_members("h", family_h)?;
    report_to_py(
        py,
        &order::equivalence_check(&fg, &fh, &radii, growth_threshold).map_err(err)?,
    )
}

/// Uniform bound on |g∘g - g| across the members.
#[pyfunction]
fn idempotent_check(py: Python<'_>, family: Vec<Glue>) -> PyResult<Py<PyAny>> {
    let fam = family_from_members("family", family)?;
    report_to_py(py, &order::idempotent_check(&fam).map_err(err)?)
}

/// Uniform bound on |g* - g| across the members.
#[pyfunction]
fn selfadjoint_check(py: Python<'_>, family: Vec<Glue>) -> PyResult<Py<PyAny>> {
    let fam = family_from_members("family", family)?;
    report_to_py(py, &order::selfadjoint_check(&fam).map_err(err)?)
}

/// Feasibility of a common upper bound; returns a dict with either the
/// feasible glue (as JSON text) or the obstruction certificate.
#[pyfunction]
fn join_feasible(py: Python<'_>, g1: &Glue, g2: &Glue, bound: f64) -> PyResult<Py<PyAny>> {
    let outcome = order::upper_bound_feasibility(&g1.inner, &g2.inner, bound).map_err(err)?;
    let value = match outcome {
        UpperBoundOutcome::Feasible(glue) => serde_json::json!({
            "feasible": true,
            "glue": serde_json::from_str::<serde_json::Value>(&io::glue_to_str(&glue))
                .map_err(err)?,
        }),
        UpperBoundOutcome::Obstruction(cert) => serde_json::json!({
            "feasible": false,
            "certificate": serde_json::to_value(&cert).map_err(err)?,
        }),
        UpperBoundOutcome::InfeasibleChain {
            side,
            a,
            b,
            closure,
            required,
        } => serde_json::json!({
            "feasible": false,
            "certificate": null,
            "chain": {"side": side, "a": a, "b": b, "closure": closure, "required": required},
        }),
    };
    json_object(py, &value.to_string())
}

/// Maximum matching on the pairs within `bound`.
#[pyfunction]
fn close_pair_matching(py: Python<'_>, glue: &Glue, bound: f64) -> PyResult<Py<PyAny>> {
    report_to_py(py, &order::close_pair_matching(&glue.inner, bound))
}

/// The maximality inequality of d_f against a competing glue.
#[pyfunction]
#[pyo3(signature = (f, g, epsilon = 1.0, radii = vec![1.0, 2.0, 4.0, 8.0, 16.0]))]
fn maximality_inequality_check(
    py: Python<'_>,
    f: &Map,
    g: &Glue,
    epsilon: f64,
    radii: Vec<f64>,
) -> PyResult<Py<PyAny>> {
    report_to_py(
        py,
        &order::maximality_inequality_check(&f.inner, &g.inner, epsilon, &radii).map_err(err)?,
    )
}

/// Factor a width-1 band operator through the middle space of two glues;
/// returns a list of (band, r, s) operator triples.
#[pyfunction]
fn factor_band(
    band: &Operator,
    g_xy: &Glue,
    g_yz: &Glue,
) -> PyResult<Vec<(Operator, Operator, Operator)>> {
    let band = Band::from_operator(&band.inner).map_err(err)?;
    let parts = factor_through(&band, &g_xy.inner, &g_yz.inner).map_err(err)?;
    Ok(parts
        .into_iter()
        .map(|p| {
            (
                Operator {
                    inner: p.band.to_operator(),
                },
                Operator { inner: p.r },
                Operator { inner: p.s },
            )
        })
        .collect())
}

/// Both sides of the propagation bound for a composable operator pair.
#[pyfunction]
fn propagation_bound(
    py: Python<'_>,
    s: &Operator,
    t: &Operator,
    g_xy: &Glue,
    g_yz: &Glue,
) -> PyResult<Py<PyAny>> {
    report_to_py(
        py,
        &propagation_bound_check(&s.inner, &t.inner, &g_xy.inner, &g_yz.inner).map_err(err)?,
    )
}

/// Members of a named catalog family ("idem:50", "dzero:30", ...).
#[pyfunction]
fn family_members(reference: &str) -> PyResult<Vec<Glue>> {
    let family = catalog::resolve_family(reference).map_err(err)?;
    Ok(family
        .members()
        .map_err(err)?
        .into_iter()
        .map(|(_, g)| Glue { inner: (*g).clone() })
        .collect())
}

/// The sparse-line truncation: (space, reflection map, injectivity
/// threshold of the index chart, collision count).
#[pyfunction]
fn sparse_line(n: usize) -> (Space, Map, usize, usize) {
    let line = catalog::sparse_line(n);
    (
        Space { inner: line.space },
        Map {
            inner: line.reflection,
        },
        line.injective_up_to,
        line.collisions.len(),
    )
}

#[pymodule]
fn roe_calculus_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Space>()?;
    m.add_class::<Glue>()?;
    m.add_class::<Map>()?;
    m.add_class::<Operator>()?;
    m.add_function(wrap_pyfunction!(sandwich_check, m)?)?;
    m.add_function(wrap_pyfunction!(extract_close_map, m)?)?;
    m.add_function(wrap_pyfunction!(near_identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(inv_semi_check, m)?)?;
    m.add_function(wrap_pyfunction!(domination_profile, m)?)?;
    m.add_function(wrap_pyfunction!(order_check, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_check, m)?)?;
    m.add_function(wrap_pyfunction!(idempotent_check, m)?)?;
    m.add_function(wrap_pyfunction!(selfadjoint_check, m)?)?;
    m.add_function(wrap_pyfunction!(join_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(close_pair_matching, m)?)?;
    m.add_function(wrap_pyfunction!(maximality_inequality_check, m)?)?;
    m.add_function(wrap_pyfunction!(factor_band, m)?)?;
    m.add_function(wrap_pyfunction!(propagation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(family_members, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_line, m)?)?;
    Ok(())
}
