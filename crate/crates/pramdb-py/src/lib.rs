use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pramdb::kernel::{Machine as Core, MachineConfig, WriteMode};
use pramdb::oracle::{oracle_eval, OracleLimits};
use pramdb::primitives;
use pramdb::query::{self, parse_query, FractionalCover, Ghd};
use pramdb::relstore::{self, Relation, Setting};
use pramdb::run::{evaluate as run_query, Evaluator, RunOptions};
use pramdb::verify::{run_primitive as run_prim, PrimitiveRun};

create_exception!(pramdb, PramdbError, PyValueError);

fn err(e: pramdb::Error) -> PyErr {
    PramdbError::new_err(e.to_string())
}

fn config(mode: &str, seed: u64) -> PyResult<MachineConfig> {
    let mode: WriteMode = mode.parse().map_err(err)?;
    Ok(MachineConfig { write_mode: mode, arbitrary_seed: seed, ..Default::default() })
}

/// A simulated machine; primitives run on it and accumulate its metrics.
#[pyclass(unsendable)]
struct Machine {
    inner: Core,
}

#[pymethods]
impl Machine {
    #[new]
    #[pyo3(signature = (mode = "arbitrary", seed = 0))]
    fn new(mode: &str, seed: u64) -> PyResult<Self> {
        Ok(Machine { inner: Core::new(config(mode, seed)?) })
    }

    #[getter]
    fn work(&self) -> u64 {
        self.inner.work()
    }

    #[getter]
    fn depth(&self) -> u64 {
        self.inner.depth()
    }

    #[getter]
    fn space(&self) -> u64 {
        self.inner.space()
    }

    /// `{label: (calls, work, depth, space)}` per phase.
    fn phases(&self) -> BTreeMap<String, (u64, u64, u64, u64)> {
        self.inner.metrics().phases.into_iter().map(|p| (p.label, (p.calls, p.work, p.depth, p.space))).collect()
    }

    #[pyo3(signature = (values, lambda_ = 0.5, epsilon = 0.5))]
    fn prefix_sums(&mut self, values: Vec<u64>, lambda_: f64, epsilon: f64) -> PyResult<Vec<u64>> {
        let a = self.inner.load(values);
        let b = primitives::approx_prefix_sums(&mut self.inner, a, lambda_, epsilon).map_err(err)?;
        Ok(self.inner.read(b))
    }

    /// Order-preserving compaction of the non-`None` entries.
    #[pyo3(signature = (values, lambda_ = 0.5, epsilon = 0.5))]
    fn compact(&mut self, values: Vec<Option<u64>>, lambda_: f64, epsilon: f64) -> PyResult<Vec<Option<u64>>> {
        let a = self.inner.load(values);
        let c = primitives::approx_compact(&mut self.inner, a, lambda_, epsilon).map_err(err)?;
        Ok(self.inner.read(c.out))
    }

    /// Padded sort of values in `[0, n^c)`; cells are `(value, index)` or `None`.
    #[pyo3(signature = (values, c = 2, lambda_ = 0.5, epsilon = 0.5))]
    fn padded_sort(&mut self, values: Vec<u64>, c: u32, lambda_: f64, epsilon: f64) -> PyResult<Vec<Option<(u64, u32)>>> {
        let a = self.inner.load(values);
        let s = primitives::padded_sort(&mut self.inner, a, lambda_, epsilon, c).map_err(err)?;
        Ok(self.inner.read(s))
    }

    /// Nearest set flag before and after each position.
    #[pyo3(signature = (flags, epsilon = 0.5))]
    fn links(&mut self, flags: Vec<bool>, epsilon: f64) -> PyResult<(Vec<Option<u32>>, Vec<Option<u32>>)> {
        let a = self.inner.load(flags);
        let p = primitives::predecessor_links(&mut self.inner, a, epsilon).map_err(err)?;
        let s = primitives::successor_links(&mut self.inner, a, epsilon).map_err(err)?;
        Ok((self.inner.read(p), self.inner.read(s)))
    }
}

#[pyclass(frozen)]
struct Database {
    inner: relstore::Database,
}

#[pymethods]
impl Database {
    /// `relations` maps a name to `(attributes, rows)`; values are strings
    /// or integers.
    #[new]
    #[pyo3(signature = (setting, relations))]
    fn new(setting: &str, relations: BTreeMap<String, (Vec<String>, Vec<Vec<Bound<'_, PyAny>>>)>) -> PyResult<Self> {
        let setting: Setting = setting.parse().map_err(err)?;
        let mut rels = Vec::new();
        for (name, (attrs, rows)) in relations {
            let rows = rows
                .iter()
                .map(|r| r.iter().map(|v| v.str().map(|s| s.to_string())).collect::<PyResult<Vec<_>>>())
                .collect::<PyResult<Vec<_>>>()?;
            rels.push(Relation { name, attrs, rows, ordered_by: None });
        }
        Ok(Database { inner: relstore::Database::new(setting, rels).map_err(err)? })
    }

    #[staticmethod]
    fn from_manifest(path: PathBuf) -> PyResult<Self> {
        Ok(Database { inner: relstore::Database::from_manifest(&path).map_err(err)? })
    }

    #[getter]
    fn setting(&self) -> String {
        self.inner.setting.to_string()
    }

    #[getter]
    fn size(&self) -> u64 {
        self.inner.size()
    }

    fn relations(&self) -> Vec<String> {
        self.inner.relations.iter().map(|r| r.name.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Database(setting={}, relations={:?}, size={})", self.inner.setting, self.relations(), self.inner.size())
    }
}

/// Evaluates a rule or plan; returns a dict with `attrs`, `rows`, `work`,
/// `depth`, `space`, `evaluator`, `checks` and (with `verify`) `oracle_match`.
#[pyfunction]
#[pyo3(signature = (db, query, evaluator = "auto", epsilon = 0.5, lambda_ = 0.5, mode = "arbitrary", seed = 0,
                    verify = false, attr_order = None, cover = None, ghd = None))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    db: &Database,
    query: &str,
    evaluator: &str,
    epsilon: f64,
    lambda_: f64,
    mode: &str,
    seed: u64,
    verify: bool,
    attr_order: Option<Vec<String>>,
    cover: Option<Vec<String>>,
    ghd: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let q = parse_query(query).map_err(err)?;
    let ev: Evaluator = evaluator.parse().map_err(err)?;
    let cover = match cover {
        Some(c) => Some(FractionalCover::parse(&c.iter().map(String::as_str).collect::<Vec<_>>()).map_err(err)?),
        None => None,
    };
    let ghd = match ghd {
        Some(text) => Some(Ghd::from_json(text).map_err(err)?),
        None => None,
    };
    let opts = RunOptions { evaluator: ev, lambda: lambda_, epsilon, plan_mode: None, ghd, attr_order, cover };
    let mut m = Core::new(config(mode, seed)?);
    let o = run_query(&mut m, &db.inner, &q, &opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("attrs", o.attrs.clone())?;
    d.set_item("rows", o.rows.clone())?;
    d.set_item("evaluator", o.evaluator.name())?;
    d.set_item("work", m.work())?;
    d.set_item("depth", m.depth())?;
    d.set_item("space", m.space())?;
    let checks: Vec<(String, u64, u64)> =
        o.evaluation.checks.iter().map(|c| (c.label.clone(), c.value, c.bound)).collect();
    d.set_item("checks", checks)?;
    if verify {
        let want = oracle_eval(&q, &db.inner, OracleLimits::default()).map_err(err)?;
        let got: BTreeSet<Vec<String>> = o.rows.iter().cloned().collect();
        d.set_item("oracle_match", got.len() == o.rows.len() && got == want.tuples)?;
    }
    Ok(d)
}

/// Sequential reference result as a sorted list of tuples.
#[pyfunction]
#[pyo3(signature = (db, query, max_tuples = 200))]
fn oracle(db: &Database, query: &str, max_tuples: usize) -> PyResult<Vec<Vec<String>>> {
    let q = parse_query(query).map_err(err)?;
    let lim = OracleLimits { max_tuples, ..Default::default() };
    Ok(oracle_eval(&q, &db.inner, lim).map_err(err)?.tuples.into_iter().collect())
}

/// Minimum fractional edge cover of a rule, weights as fraction strings.
#[pyfunction]
fn fractional_cover(rule: &str) -> PyResult<Vec<String>> {
    match parse_query(rule).map_err(err)? {
        query::Query::Cq(q) => Ok(query::fractional_cover(&q).map_err(err)?.weights.iter().map(|w| w.to_string()).collect()),
        query::Query::Plan(_) => Err(PramdbError::new_err("a cover needs a conjunctive query")),
    }
}

#[pyfunction]
fn agm_bound(weights: Vec<String>, sizes: Vec<u64>) -> PyResult<u64> {
    let c = FractionalCover::parse(&weights.iter().map(String::as_str).collect::<Vec<_>>()).map_err(err)?;
    Ok(query::agm_bound(&c, &sizes))
}

/// Runs one primitive's invariant suite; returns `(passed, counterexample, work, depth)`.
#[pyfunction]
#[pyo3(signature = (name, n, lambda_ = 0.5, epsilon = 0.5, seed = 0))]
fn check_primitive(name: &str, n: usize, lambda_: f64, epsilon: f64, seed: u64) -> PyResult<(bool, Option<String>, u64, u64)> {
    let run = PrimitiveRun { n, lambda: lambda_, epsilon, seed, ..Default::default() };
    let r = run_prim(name, MachineConfig::default(), &run).map_err(err)?;
    Ok((r.passed, r.counterexample, r.work, r.depth))
}

#[pymodule]
fn pramdb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Machine>()?;
    m.add_class::<Database>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_cover, m)?)?;
    m.add_function(wrap_pyfunction!(agm_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_primitive, m)?)?;
    m.add("PramdbError", m.py().get_type::<PramdbError>())?;
    Ok(())
}
