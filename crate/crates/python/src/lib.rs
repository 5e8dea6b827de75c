//! Python bindings. Coefficients cross the boundary as `fractions.Fraction`;
//! any Python value whose `str()` is an integer or `p/q` is accepted as input.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::rngs::StdRng;
use rand::SeedableRng;

use entroprover::balance::{self, balance_with_report};
use entroprover::expr::{format_rat, parse, render};
use entroprover::linform::{LinForm, Rat, VarContext};
use entroprover::rules::{self, Partition};
use entroprover::semantics::{self, format_pmf, parse_pmf, JointPmf};
use entroprover::shannon::{self, verify_certificate, verify_witness, ShannonVerdict};

create_exception!(entroprover, EntroproverError, PyException);
create_exception!(entroprover, AssertionFailed, EntroproverError);

fn err(e: impl ToString) -> PyErr {
    EntroproverError::new_err(e.to_string())
}

fn to_fraction(py: Python<'_>, r: &Rat) -> PyResult<Py<PyAny>> {
    let fraction = py.import("fractions")?.getattr("Fraction")?;
    Ok(fraction.call1((format_rat(r),))?.unbind())
}

fn from_py_rat(value: &Bound<'_, PyAny>) -> PyResult<Rat> {
    let text = value.str()?.to_string();
    text.trim()
        .parse::<Rat>()
        .map_err(|_| PyValueError::new_err(format!("not a rational number: {text}")))
}

fn context(vars: Option<Vec<String>>) -> PyResult<Option<Arc<VarContext>>> {
    vars.map(|v| VarContext::new(v).map(Arc::new).map_err(err))
        .transpose()
}

/// A linear entropy inequality `sum c_J H(X_J) >= 0`.
#[pyclass(name = "Form", module = "entroprover", frozen)]
struct PyForm {
    inner: LinForm,
}

fn wrap(inner: LinForm) -> PyForm {
    PyForm { inner }
}

fn partition(f: &LinForm, z: &str, x: Vec<String>, y: Vec<String>) -> PyResult<Partition> {
    Partition::from_names(f.ctx(), z, &x, &y).map_err(err)
}

#[pymethods]
impl PyForm {
    /// Parses `text`; `vars` fixes the variable context and its order.
    #[new]
    #[pyo3(signature = (text, vars = None))]
    fn new(text: &str, vars: Option<Vec<String>>) -> PyResult<Self> {
        let ctx = context(vars)?;
        let ineq = parse(text, ctx.as_ref()).map_err(err)?;
        Ok(wrap(ineq.canonicalize()))
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.ctx().names().to_vec()
    }

    /// `{"A,B": Fraction(...)}` in canonical term order.
    fn terms<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (set, c) in self.inner.ordered_terms() {
            d.set_item(self.inner.ctx().format_set(set), to_fraction(py, c)?)?;
        }
        Ok(d)
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn coefficient_sum(&self, py: Python<'_>, var: &str) -> PyResult<Py<PyAny>> {
        to_fraction(py, &self.inner.coefficient_sum_over_name(var).map_err(err)?)
    }

    /// Balanced for `var`, or for every variable when `var` is omitted.
    #[pyo3(signature = (var = None))]
    fn is_balanced(&self, var: Option<&str>) -> PyResult<bool> {
        match var {
            Some(v) => balance::is_balanced_for_name(&self.inner, v).map_err(err),
            None => Ok(balance::is_balanced(&self.inner)),
        }
    }

    fn residuals<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (name, r) in self.inner.ctx().names().iter().zip(balance::residuals(&self.inner)) {
            d.set_item(name, to_fraction(py, &r)?)?;
        }
        Ok(d)
    }

    fn balance(&self) -> PyForm {
        wrap(balance_with_report(&self.inner).form)
    }

    fn check(&self) -> PyResult<Verdict> {
        let verdict = shannon::check_shannon(&self.inner).map_err(err)?;
        let elems = shannon::elementals(self.inner.ctx()).map_err(err)?;
        Ok(Verdict::new(&self.inner, verdict, &elems))
    }

    fn is_shannon(&self) -> PyResult<bool> {
        Ok(shannon::check_shannon(&self.inner).map_err(err)?.is_shannon())
    }

    /// Copy rule; returns `(conclusion, alpha)`.
    #[pyo3(signature = (z, x, y = Vec::new()))]
    fn zy(&self, py: Python<'_>, z: &str, x: Vec<String>, y: Vec<String>) -> PyResult<(PyForm, Py<PyAny>)> {
        let p = partition(&self.inner, z, x, y)?;
        let d = rules::decompose_zy(&self.inner, &p).map_err(err)?;
        let out = d.f.add(&d.g).map_err(err)?;
        Ok((wrap(out), to_fraction(py, &d.alpha)?))
    }

    /// Residual-subtraction rule; returns `(conclusion, r_z)`.
    #[pyo3(signature = (z, x, y = Vec::new()))]
    fn mmrv(&self, py: Python<'_>, z: &str, x: Vec<String>, y: Vec<String>) -> PyResult<(PyForm, Py<PyAny>)> {
        let p = partition(&self.inner, z, x, y)?;
        let r = rules::mmrv_residual(&self.inner, &p).map_err(err)?;
        let out = rules::apply_mmrv(&self.inner, &p).map_err(err)?;
        Ok((wrap(out), to_fraction(py, &r)?))
    }

    /// Replaces `old` by `new`; a fresh `new` renames.
    fn substitute(&self, old: &str, new: &str) -> PyResult<PyForm> {
        rules::substitute_or_rename(&self.inner, old, new)
            .map(wrap)
            .map_err(err)
    }

    fn realign(&self, vars: Vec<String>) -> PyResult<PyForm> {
        let ctx = Arc::new(VarContext::new(vars).map_err(err)?);
        self.inner.realign(ctx).map(wrap).map_err(err)
    }

    fn evaluate(&self, pmf: &Pmf) -> PyResult<f64> {
        let f = self.inner.realign(pmf.inner.ctx().clone()).map_err(err)?;
        semantics::evaluate(&f, &pmf.inner.entropy_vector()).map_err(err)
    }

    fn __add__(&self, other: &PyForm) -> PyResult<PyForm> {
        self.inner.add(&other.inner).map(wrap).map_err(err)
    }

    fn __sub__(&self, other: &PyForm) -> PyResult<PyForm> {
        self.inner.sub(&other.inner).map(wrap).map_err(err)
    }

    fn __mul__(&self, k: &Bound<'_, PyAny>) -> PyResult<PyForm> {
        Ok(wrap(self.inner.scale(&from_py_rat(k)?)))
    }

    fn __rmul__(&self, k: &Bound<'_, PyAny>) -> PyResult<PyForm> {
        self.__mul__(k)
    }

    fn __neg__(&self) -> PyForm {
        wrap(self.inner.neg())
    }

    /// Equality as inequalities: contexts may differ in unused variables.
    fn __eq__(&self, other: &Bound<'_, PyAny>) -> bool {
        other
            .cast::<PyForm>()
            .map(|o| self.inner.same_inequality(&o.get().inner))
            .unwrap_or(false)
    }

    fn __str__(&self) -> String {
        render(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Form({:?})", render(&self.inner))
    }
}

/// Outcome of a Shannon-type check.
#[pyclass(module = "entroprover", frozen)]
struct Verdict {
    #[pyo3(get)]
    is_shannon: bool,
    /// Exact re-verification of the certificate or witness.
    #[pyo3(get)]
    verified: bool,
    certificate: Vec<(String, Rat)>,
    witness: Vec<(String, Rat)>,
}

impl Verdict {
    fn new(f: &LinForm, v: ShannonVerdict, elems: &[shannon::Elemental]) -> Self {
        match v {
            ShannonVerdict::Certificate(c) => Verdict {
                is_shannon: true,
                verified: verify_certificate(f, &c),
                certificate: c
                    .terms
                    .iter()
                    .map(|(id, l)| (elems[*id].describe(), l.clone()))
                    .collect(),
                witness: Vec::new(),
            },
            ShannonVerdict::Witness(w) => Verdict {
                is_shannon: false,
                verified: verify_witness(f, &w),
                certificate: Vec::new(),
                witness: w
                    .entries()
                    .into_iter()
                    .map(|(s, v)| (w.ctx.format_set(s), v.clone()))
                    .collect(),
            },
        }
    }
}

#[pymethods]
impl Verdict {
    /// `[(elemental, multiplier)]`; empty for a witness.
    #[getter]
    fn certificate(&self, py: Python<'_>) -> PyResult<Vec<(String, Py<PyAny>)>> {
        self.certificate
            .iter()
            .map(|(d, l)| Ok((d.clone(), to_fraction(py, l)?)))
            .collect()
    }

    /// `{"A,B": h}` for every nonempty subset; empty for a certificate.
    #[getter]
    fn witness<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (s, v) in &self.witness {
            d.set_item(s, to_fraction(py, v)?)?;
        }
        Ok(d)
    }

    fn __bool__(&self) -> bool {
        self.is_shannon
    }

    fn __repr__(&self) -> String {
        if self.is_shannon {
            format!("Verdict(certificate, {} terms)", self.certificate.len())
        } else {
            "Verdict(witness)".to_string()
        }
    }
}

/// Finite joint distribution.
#[pyclass(module = "entroprover", frozen)]
struct Pmf {
    inner: JointPmf,
}

#[pymethods]
impl Pmf {
    /// Parses the `A:2 B:3` header / `0 1 : p` table format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Pmf> {
        Ok(Pmf {
            inner: parse_pmf(text).map_err(err)?,
        })
    }

    /// Uniformly random distribution on the given alphabets.
    #[staticmethod]
    #[pyo3(signature = (vars, sizes, seed = 0))]
    fn random(vars: Vec<String>, sizes: Vec<usize>, seed: u64) -> PyResult<Pmf> {
        let ctx = Arc::new(VarContext::new(vars).map_err(err)?);
        if sizes.len() != ctx.len() || sizes.contains(&0) {
            return Err(PyValueError::new_err("one positive alphabet size per variable"));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        Ok(Pmf {
            inner: JointPmf::random(ctx, sizes, &mut rng),
        })
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.ctx().names().to_vec()
    }

    #[getter]
    fn sizes(&self) -> Vec<usize> {
        self.inner.sizes().to_vec()
    }

    /// Joint entropy in bits.
    fn entropy(&self, vars: Vec<String>) -> PyResult<f64> {
        let set = self.inner.ctx().set_of(&vars).map_err(err)?;
        Ok(self.inner.entropy(set))
    }

    /// Appends `<a>_copy`, a `c`-copy of `a` over `b`.
    #[pyo3(signature = (a, b, c))]
    fn copy(&self, a: &str, b: Vec<String>, c: Vec<String>) -> PyResult<Pmf> {
        let b: Vec<&str> = b.iter().map(String::as_str).collect();
        let c: Vec<&str> = c.iter().map(String::as_str).collect();
        Ok(Pmf {
            inner: semantics::copy_distribution(&self.inner, a, &b, &c).map_err(err)?,
        })
    }

    fn __str__(&self) -> String {
        format_pmf(&self.inner)
    }
}

/// `Form(text, vars)`.
#[pyfunction]
#[pyo3(signature = (text, vars = None))]
fn parse_form(text: &str, vars: Option<Vec<String>>) -> PyResult<PyForm> {
    PyForm::new(text, vars)
}

/// Shannon-type check of an inequality given as text.
#[pyfunction]
fn check(text: &str) -> PyResult<Verdict> {
    PyForm::new(text, None)?.check()
}

/// `[(description, Form)]` for the elemental inequalities on `vars`.
#[pyfunction]
fn elementals(vars: Vec<String>) -> PyResult<Vec<(String, PyForm)>> {
    let ctx = Arc::new(VarContext::new(vars).map_err(err)?);
    Ok(shannon::elementals(&ctx)
        .map_err(err)?
        .into_iter()
        .map(|e| (e.describe(), wrap(e.form)))
        .collect())
}

/// Runs a derivation script and returns its transcript. A failed assertion
/// raises `AssertionFailed` whose message includes the partial transcript.
#[pyfunction]
fn run_script(text: &str) -> PyResult<String> {
    match entroprover::run_script(text) {
        Ok(t) => Ok(t.to_string()),
        Err(e) => {
            let transcript = e.transcript().map(|t| t.to_string()).unwrap_or_default();
            let msg = format!("{transcript}{e}");
            Err(match e {
                entroprover::engine::ScriptError::Assertion { .. } => AssertionFailed::new_err(msg),
                _ => EntroproverError::new_err(msg),
            })
        }
    }
}

#[pymodule]
#[pyo3(name = "entroprover")]
fn entroprover_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForm>()?;
    m.add_class::<Verdict>()?;
    m.add_class::<Pmf>()?;
    m.add_function(wrap_pyfunction!(parse_form, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(elementals, m)?)?;
    m.add_function(wrap_pyfunction!(run_script, m)?)?;
    m.add("EntroproverError", m.py().get_type::<EntroproverError>())?;
    m.add("AssertionFailed", m.py().get_type::<AssertionFailed>())?;
    Ok(())
}
