//! Python bindings. Rationals cross the boundary as `fractions.Fraction`;
//! anything `Fraction()` accepts (ints, strings like "3/4", floats) is
//! taken as input.

use num_bigint::{BigInt, BigUint};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use suplab::covering::{exact_min_cover, fit_dense_params, greedy_cover, FitConfig};
use suplab::dyadic::{round_measure, subadditivity_check, t_threshold};
use suplab::halving::{build_schedule, counting_factor};
use suplab::inclusion::{bp_measure, IndicatorFamily};
use suplab::mc::{mc_sup_tail, McConfig};
use suplab::report::{emit_summary, load_scenario, run_scenario as run_loaded, EXIT_INPUT};
use suplab::space::{FiniteSpace, FunctionTable};
use suplab::tail::exact_sup_tail as exact_tail;
use suplab::vc::{shatter_coefficient as shatter, vc_dimension as vc_dim, SetSystem};
use suplab::Rational;

fn err(e: suplab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let fraction = obj.py().import("fractions")?.getattr("Fraction")?.call1((obj,))?;
    let numer: BigInt = fraction.getattr("numerator")?.extract()?;
    let denom: BigInt = fraction.getattr("denominator")?.extract()?;
    Ok(Rational::new(numer, denom))
}

fn to_rationals(objs: &[Bound<'_, PyAny>]) -> PyResult<Vec<Rational>> {
    objs.iter().map(to_rational).collect()
}

fn to_fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((r.numer().clone(), r.denom().clone()))
}

/// A probability measure on `0..point_count` with exact rational weights.
#[pyclass(name = "FiniteSpace", frozen)]
struct PySpace {
    inner: FiniteSpace,
}

#[pymethods]
impl PySpace {
    #[new]
    fn new(weights: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        Ok(PySpace { inner: FiniteSpace::new(to_rationals(&weights)?).map_err(err)? })
    }

    #[staticmethod]
    fn uniform(point_count: usize) -> PyResult<Self> {
        Ok(PySpace { inner: FiniteSpace::uniform(point_count).map_err(err)? })
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.inner.point_count()
    }

    fn weights<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        self.inner.weights().iter().map(|w| to_fraction(py, w)).collect()
    }

    fn __repr__(&self) -> String {
        format!("FiniteSpace(point_count={})", self.inner.point_count())
    }
}

/// A finite class of `[0, 1]`-valued functions, one row per function.
#[pyclass(name = "FunctionTable", frozen)]
struct PyTable {
    inner: FunctionTable,
}

#[pymethods]
impl PyTable {
    #[new]
    fn new(rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Self> {
        let rows = rows.iter().map(|r| to_rationals(r)).collect::<PyResult<_>>()?;
        Ok(PyTable { inner: FunctionTable::new(rows).map_err(err)? })
    }

    #[staticmethod]
    fn from_indicators(point_count: usize, sets: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(PyTable { inner: FunctionTable::from_indicators(point_count, &sets).map_err(err)? })
    }

    #[getter]
    fn class_size(&self) -> usize {
        self.inner.class_size()
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.inner.point_count()
    }

    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
        self.inner
            .rows()
            .iter()
            .map(|r| r.iter().map(|v| to_fraction(py, v)).collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("FunctionTable(class_size={}, point_count={})", self.inner.class_size(), self.inner.point_count())
    }
}

/// Exact `P(sup_f S_n(f) >= u)`, or `>` when `strict`.
#[pyfunction]
#[pyo3(signature = (table, space, n, u, strict = false))]
fn exact_sup_tail<'py>(
    py: Python<'py>,
    table: &PyTable,
    space: &PySpace,
    n: u32,
    u: &Bound<'py, PyAny>,
    strict: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let u = to_rational(u)?;
    let r = py
        .detach(|| exact_tail(&table.inner, &space.inner, n, &u, strict))
        .map_err(err)?;
    to_fraction(py, r.exact_value().expect("exact method"))
}

/// Monte Carlo estimate with a 99% Clopper-Pearson interval.
#[pyfunction]
#[pyo3(signature = (table, space, n, u, samples, seed = 0, workers = 1, strict = false))]
#[allow(clippy::too_many_arguments)]
fn mc_estimate<'py>(
    py: Python<'py>,
    table: &PyTable,
    space: &PySpace,
    n: u32,
    u: &Bound<'py, PyAny>,
    samples: u64,
    seed: u64,
    workers: usize,
    strict: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let u = to_rational(u)?;
    let cfg = McConfig { sample_count: samples, seed, worker_count: workers };
    let est = py
        .detach(|| mc_sup_tail(&table.inner, &space.inner, n, &u, strict, &cfg))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("hit_count", est.hit_count)?;
    d.set_item("sample_count", est.sample_count)?;
    d.set_item("estimate", est.estimate)?;
    d.set_item("ci_low", est.ci_low)?;
    d.set_item("ci_high", est.ci_high)?;
    Ok(d)
}

/// `μ_p(B_p)` for an indicator class, by inclusion-exclusion.
#[pyfunction]
fn bp_measure_table<'py>(py: Python<'py>, table: &PyTable, space: &PySpace, p: u32) -> PyResult<Bound<'py, PyAny>> {
    let family = IndicatorFamily::from_class(&table.inner, &space.inner).map_err(err)?;
    let r = bp_measure(&family, p).map_err(err)?;
    to_fraction(py, r.exact_value().expect("exact method"))
}

/// `μ_p(B_p)` for a family given by its Venn pieces `[(sets, measure), ...]`.
#[pyfunction]
fn bp_measure_pieces<'py>(
    py: Python<'py>,
    set_count: usize,
    pieces: Vec<(Vec<usize>, Bound<'py, PyAny>)>,
    p: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let mut out = Vec::with_capacity(pieces.len());
    for (sets, m) in &pieces {
        let mask = sets.iter().try_fold(0u32, |acc, &s| {
            (s < set_count.min(32))
                .then_some(acc | 1 << s)
                .ok_or_else(|| PyValueError::new_err(format!("set index {s} out of range")))
        })?;
        out.push((mask, to_rational(m)?));
    }
    let family = IndicatorFamily::from_pieces(set_count, out).map_err(err)?;
    let r = bp_measure(&family, p).map_err(err)?;
    to_fraction(py, r.exact_value().expect("exact method"))
}

/// `(greedy size, exact minimum)` of an `ε`-cover in `L1(space)`.
#[pyfunction]
fn cover_sizes(table: &PyTable, space: &PySpace, epsilon: &Bound<'_, PyAny>) -> PyResult<(usize, usize)> {
    let eps = to_rational(epsilon)?;
    let g = greedy_cover(&table.inner, &space.inner, &eps).map_err(err)?;
    let cap = suplab::caps::Caps::global().exact_cover_rows;
    let x = exact_min_cover(&table.inner, &space.inner, &eps, cap).map_err(err)?;
    Ok((g.size(), x))
}

/// Fitted `(D, L)` from covering evidence over a sampled family of measures.
#[pyfunction]
#[pyo3(signature = (table, space, epsilons, exponents, seed = 0))]
fn fit_dense(
    py: Python<'_>,
    table: &PyTable,
    space: &PySpace,
    epsilons: Vec<Bound<'_, PyAny>>,
    exponents: Vec<f64>,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let eps = to_rationals(&epsilons)?;
    let cfg = FitConfig { seed, ..Default::default() };
    let fit = py
        .detach(|| fit_dense_params(&table.inner, &space.inner, &eps, &exponents, &cfg))
        .map_err(err)?;
    Ok((fit.parameter_d, fit.exponent_l))
}

#[pyfunction]
fn shatter_coefficient(ground: usize, sets: Vec<Vec<usize>>, n: usize) -> PyResult<BigUint> {
    let system = SetSystem::new(ground, &sets).map_err(err)?;
    shatter(&system, n).map_err(err)
}

#[pyfunction]
fn vc_dimension(ground: usize, sets: Vec<Vec<usize>>) -> PyResult<usize> {
    let system = SetSystem::new(ground, &sets).map_err(err)?;
    vc_dim(&system).map_err(err)
}

/// Levels of the halving schedule as dicts.
#[pyfunction]
fn halving_schedule<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    n0: BigUint,
    k_max: u32,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let s = build_schedule(&to_rational(rho)?, &n0, k_max).map_err(err)?;
    s.levels
        .iter()
        .map(|l| {
            let d = PyDict::new(py);
            d.set_item("k", l.k)?;
            d.set_item("n_k", l.n_k.clone())?;
            d.set_item("rho_low", l.rho_low)?;
            d.set_item("rho_high", l.rho_high)?;
            d.set_item("c_k", to_fraction(py, &l.c_k)?)?;
            d.set_item("half_rho_holds", l.half_rho_holds)?;
            Ok(d)
        })
        .collect()
}

/// Both sides of the counting-factor identity.
#[pyfunction]
fn counting_factor_forms<'py>(py: Python<'py>, n_k: u64, p: u64) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let c = counting_factor(n_k, p).map_err(err)?;
    Ok((to_fraction(py, &c.ratio_form)?, to_fraction(py, &c.product_form)?))
}

#[pyfunction]
fn level_threshold(u: &Bound<'_, PyAny>, j: u32) -> PyResult<BigInt> {
    t_threshold(&to_rational(u)?, j).map_err(err)
}

/// Dyadic rounding of cell masses to multiples of `2^-k`.
#[pyfunction]
fn round_masses<'py>(py: Python<'py>, masses: Vec<Bound<'py, PyAny>>, k: u32) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let r = round_measure(&to_rationals(&masses)?, k).map_err(err)?;
    r.masses().iter().map(|m| to_fraction(py, m)).collect()
}

/// `(tail, sum of level measures)` of the dyadic decomposition.
#[pyfunction]
#[pyo3(signature = (table, space, n, u, strict = false))]
fn subadditivity<'py>(
    py: Python<'py>,
    table: &PyTable,
    space: &PySpace,
    n: u32,
    u: &Bound<'py, PyAny>,
    strict: bool,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let r = subadditivity_check(&table.inner, &space.inner, n, &to_rational(u)?, strict).map_err(err)?;
    Ok((to_fraction(py, &r.lhs)?, to_fraction(py, &r.rhs)?))
}

/// Runs a scenario file like the CLI does and returns its exit code.
#[pyfunction]
#[pyo3(signature = (path, out, seed = None, workers = 1))]
fn run_scenario(py: Python<'_>, path: std::path::PathBuf, out: std::path::PathBuf, seed: Option<u64>, workers: usize) -> i32 {
    py.detach(|| {
        let outcome = load_scenario(&path).and_then(|s| run_loaded(&s, seed, workers));
        match outcome {
            Ok(o) if emit_summary(&o, &out).is_ok() => o.exit_code(),
            _ => EXIT_INPUT,
        }
    })
}

#[pymodule]
fn pysuplab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpace>()?;
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(exact_sup_tail, m)?)?;
    m.add_function(wrap_pyfunction!(mc_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(bp_measure_table, m)?)?;
    m.add_function(wrap_pyfunction!(bp_measure_pieces, m)?)?;
    m.add_function(wrap_pyfunction!(cover_sizes, m)?)?;
    m.add_function(wrap_pyfunction!(fit_dense, m)?)?;
    m.add_function(wrap_pyfunction!(shatter_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(vc_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(halving_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(counting_factor_forms, m)?)?;
    m.add_function(wrap_pyfunction!(level_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(round_masses, m)?)?;
    m.add_function(wrap_pyfunction!(subadditivity, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
