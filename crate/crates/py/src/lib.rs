//! Python bindings: decisions, certificate checks, groups, reductions,
//! Fraïssé stages and model evaluations. Structured results come back as
//! plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use rcw_core::deciders::{self, Mode};
use rcw_core::equivariance;
use rcw_core::fraisse;
use rcw_core::modelzoo;
use rcw_core::reductions::oracle::SeededOracle;
use rcw_core::reductions::{self, OracleFamily};
use rcw_core::verify::verify_json;
use rcw_core::{group_closure, Perm, SubsetCode};

fn err(e: rcw_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON so Python receives dicts and lists.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn mode(s: &str) -> PyResult<Mode> {
    s.parse().map_err(err)
}

/// A permutation group on `0..degree`, from generators in cycle notation.
#[pyclass(name = "PermGroup", module = "rcw", frozen)]
struct PyPermGroup {
    inner: rcw_core::PermGroup,
}

#[pymethods]
impl PyPermGroup {
    #[new]
    fn new(degree: usize, generators: Vec<String>) -> PyResult<Self> {
        let gens = generators
            .iter()
            .map(|g| Perm::parse_cycles(degree, g))
            .collect::<rcw_core::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(PyPermGroup { inner: group_closure(degree, &gens).map_err(err)? })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn order(&self) -> usize {
        self.inner.order()
    }

    fn orbits(&self) -> Vec<Vec<usize>> {
        self.inner.orbits().into_iter().map(|o| o.to_vec()).collect()
    }

    /// Whether some equivariant arity-`n` selection exists on the domain.
    fn equivariant_sel_exists(&self, n: usize) -> PyResult<bool> {
        Ok(equivariance::equivariant_sel_exists(&self.inner, n).map_err(err)?.0)
    }

    /// An invariant `k`-subset of `l`, if any.
    fn invariant_ksubset(&self, l: Vec<usize>, k: usize) -> PyResult<Option<Vec<usize>>> {
        let l = SubsetCode::from_indices(l).map_err(err)?;
        Ok(equivariance::invariant_ksubset_exists(&self.inner, l, k).map_err(err)?.map(|s| s.to_vec()))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// rc decision: dict with `kind`, `bound`, `mode`, `examined` and `witness`.
#[pyfunction]
#[pyo3(signature = (n, m, mode_name = "complete"))]
fn decide_rc<'py>(py: Python<'py>, n: usize, m: usize, mode_name: &str) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| deciders::decide_local_rc(n, m, mode(mode_name)?).map_err(err))?;
    to_py(py, &v)
}

/// nrc decision from arity `m` to arity `k` over domains up to `bound`.
#[pyfunction]
#[pyo3(signature = (m, k, bound, mode_name = "complete"))]
fn decide_nrc<'py>(py: Python<'py>, m: usize, k: usize, bound: usize, mode_name: &str) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| deciders::decide_local_nrc(m, k, bound, mode(mode_name)?).map_err(err))?;
    to_py(py, &v)
}

/// `(accepted, reason)` for a certificate given as JSON text.
#[pyfunction]
fn verify(cert_json: &str) -> (bool, Option<String>) {
    match verify_json(cert_json) {
        Ok(()) => (true, None),
        Err(r) => (false, Some(r.to_string())),
    }
}

/// Sub-multiset of `sizes` (each dividing `p^k`) summing to `p^k`.
#[pyfunction]
fn subsum_divisors(p: u64, k: u32, sizes: Vec<u64>) -> PyResult<Vec<u64>> {
    reductions::subsum_divisors(p, k, &sizes).map_err(err)
}

/// Runs the reduction for arity `n` against the seeded oracle.
/// Returns `{"k": .., "assignments": {member: atoms}}` and the oracle call count.
#[pyfunction]
fn reduce<'py>(py: Python<'py>, n: usize, members: Vec<Vec<u32>>, seed: u64) -> PyResult<(Bound<'py, PyAny>, usize)> {
    let (sel, calls) = py.detach(|| {
        let mut fam = OracleFamily::new(members, n, SeededOracle::new(seed)).map_err(err)?;
        let sel = reductions::reduce(n, &mut fam).map_err(err)?;
        sel.validate(fam.members()).map_err(err)?;
        Ok::<_, PyErr>((sel, fam.calls().len()))
    })?;
    Ok((to_py(py, &sel)?, calls))
}

/// A finite stage of the generic selection model.
#[pyclass(name = "FraisseStage", module = "rcw", frozen)]
struct PyFraisseStage {
    inner: fraisse::FraisseStage,
}

#[pymethods]
impl PyFraisseStage {
    /// Builds `F_0 .. F_stages` under an atom cap.
    #[staticmethod]
    #[pyo3(signature = (arity, stages, cap = fraisse::STAGE_CAP))]
    fn build(py: Python<'_>, arity: usize, stages: usize, cap: usize) -> PyResult<Self> {
        py.detach(|| {
            let mut st = fraisse::FraisseStage::empty(arity).map_err(err)?;
            for _ in 0..stages {
                st = match fraisse::build_stage_capped(&st, arity, cap).map_err(err)? {
                    fraisse::StageOutcome::Complete(s) => s,
                    fraisse::StageOutcome::Partial(p) => {
                        return Err(PyValueError::new_err(format!(
                            "cap {cap} reached at stage {} with {} atoms",
                            p.stage_index(),
                            p.atom_count()
                        )))
                    }
                };
            }
            Ok(PyFraisseStage { inner: st })
        })
    }

    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        Ok(PyFraisseStage { inner: fraisse::load_stage(text).map_err(err)? })
    }

    fn dump(&self) -> String {
        fraisse::dump_stage(&self.inner)
    }

    #[getter]
    fn atom_count(&self) -> usize {
        self.inner.atom_count()
    }

    #[getter]
    fn stage(&self) -> usize {
        self.inner.stage_index()
    }

    /// `Sel` on a set of more than `arity` atoms.
    fn sel(&self, mut atoms: Vec<u32>) -> Option<Vec<u32>> {
        atoms.sort_unstable();
        atoms.dedup();
        self.inner.sel(&atoms)
    }

    #[pyo3(signature = (set_budget = 2_000_000))]
    fn scan<'py>(&self, py: Python<'py>, set_budget: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &fraisse::scan_sel(&self.inner, set_budget).map_err(err)?)
    }

    fn check_extension<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &fraisse::check_extension_property(&self.inner).map_err(err)?)
    }
}

/// A finite permutation-model approximation.
#[pyclass(name = "ZooModel", module = "rcw", frozen)]
struct PyZooModel {
    inner: modelzoo::ZooModel,
}

#[pymethods]
impl PyZooModel {
    #[new]
    #[pyo3(signature = (name, params = "", cap = 64, support = Vec::new()))]
    fn new(name: &str, params: &str, cap: usize, support: Vec<usize>) -> PyResult<Self> {
        Ok(PyZooModel { inner: modelzoo::make_model(name, params, cap, &support).map_err(err)? })
    }

    #[getter]
    fn atom_count(&self) -> usize {
        self.inner.atom_count
    }

    #[getter]
    fn block_sizes(&self) -> Vec<usize> {
        self.inner.blocks.iter().map(|b| b.size).collect()
    }

    fn group(&self) -> PyResult<PyPermGroup> {
        Ok(PyPermGroup { inner: self.inner.group().map_err(err)? })
    }

    fn descriptor(&self) -> String {
        self.inner.to_descriptor()
    }

    /// Verdict dict for `principle` (`nrc_fin`, `c_n`, `ncfin_minus`, `rc`).
    fn evaluate<'py>(&self, py: Python<'py>, principle: &str, n: usize, support_budget: usize) -> PyResult<Bound<'py, PyAny>> {
        let p = modelzoo::ZooPrinciple::parse(principle, n).map_err(err)?;
        let v = py.detach(|| modelzoo::evaluate(&self.inner, p, support_budget).map_err(err))?;
        to_py(py, &v)
    }
}

#[pymodule]
fn rcw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPermGroup>()?;
    m.add_class::<PyFraisseStage>()?;
    m.add_class::<PyZooModel>()?;
    m.add_function(wrap_pyfunction!(decide_rc, m)?)?;
    m.add_function(wrap_pyfunction!(decide_nrc, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(subsum_divisors, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    Ok(())
}
