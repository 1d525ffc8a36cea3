//! Python bindings for `ortho_spca`.

use ortho_spca as core;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: core::SpcaError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts a serializable value into Python objects through JSON.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Dense symmetric matrix.
#[pyclass(name = "SymMatrix", module = "orthospca", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySymMatrix {
    inner: core::SymMatrix,
}

#[pymethods]
impl PySymMatrix {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        core::SymMatrix::from_rows(&rows)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint().hash
    }

    fn __getitem__(&self, ij: (usize, usize)) -> PyResult<f64> {
        let n = self.inner.n();
        if ij.0 >= n || ij.1 >= n {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!(
                "index {ij:?} out of range for n = {n}"
            )));
        }
        Ok(self.inner.get(ij.0, ij.1))
    }

    fn __repr__(&self) -> String {
        format!("SymMatrix(n={}, trace={})", self.inner.n(), self.inner.trace())
    }
}

/// One sparse unit-norm component.
#[pyclass(name = "SparseComponent", module = "orthospca", frozen, from_py_object)]
#[derive(Clone)]
struct PyComponent {
    inner: core::SparseComponent,
}

#[pymethods]
impl PyComponent {
    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support.indices().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn variance(&self) -> f64 {
        self.inner.variance
    }

    #[getter]
    fn relaxed(&self) -> bool {
        self.inner.sparsity_relaxed
    }

    fn dense(&self) -> Vec<f64> {
        self.inner.dense()
    }

    fn __repr__(&self) -> String {
        format!(
            "SparseComponent(support={:?}, variance={}, relaxed={})",
            self.inner.support.indices(),
            self.inner.variance,
            self.inner.sparsity_relaxed
        )
    }
}

/// An ordered sequence of components for one matrix.
#[pyclass(name = "Solution", module = "orthospca", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySolution {
    inner: core::SpcaSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn components(&self) -> Vec<PyComponent> {
        self.inner
            .components
            .iter()
            .map(|c| PyComponent { inner: c.clone() })
            .collect()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.as_str()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    fn variances(&self) -> Vec<f64> {
        self.inner.variances()
    }

    fn total_variance(&self) -> f64 {
        self.inner.total_variance()
    }

    fn dense_components(&self) -> Vec<Vec<f64>> {
        self.inner.dense_components()
    }

    fn max_angle_deviation(&self) -> f64 {
        core::max_pairwise_angle_deviation(&self.inner)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.stats)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(mode={}, p={}, variances={:?})",
            self.inner.mode,
            self.inner.p,
            self.inner.variances()
        )
    }
}

fn unwrap_components(previous: Option<Vec<PyComponent>>) -> Vec<core::SparseComponent> {
    previous.unwrap_or_default().into_iter().map(|c| c.inner).collect()
}

/// First `k` components by exhaustive support enumeration.
#[pyfunction]
fn solve_sequence(py: Python<'_>, q: &PySymMatrix, p: usize, k: usize) -> PyResult<PySolution> {
    let q = q.inner.clone();
    py.detach(move || core::solve_sequence(&q, p, k))
        .map(|inner| PySolution { inner })
        .map_err(err)
}

/// Continues a sequence after the given prefix components.
#[pyfunction]
fn solve_sequence_from(q: &PySymMatrix, p: usize, k: usize, prefix: Vec<PyComponent>) -> PyResult<PySolution> {
    core::solve_sequence_from(&q.inner, p, k, unwrap_components(Some(prefix)))
        .map(|inner| PySolution { inner })
        .map_err(err)
}

/// Best `p`-sparse unit vector orthogonal to `previous`.
#[pyfunction]
#[pyo3(signature = (q, p, previous=None))]
fn solve_kth_exact(q: &PySymMatrix, p: usize, previous: Option<Vec<PyComponent>>) -> PyResult<PyComponent> {
    core::solve_kth_exact(&q.inner, p, &unwrap_components(previous))
        .map(|inner| PyComponent { inner })
        .map_err(err)
}

/// ε-optimal component by branch-and-bound; returns `(component, certificate)`.
#[pyfunction]
#[pyo3(signature = (q, p, previous=None, eps=0.0))]
fn solve_kth_bnb<'py>(
    py: Python<'py>,
    q: &PySymMatrix,
    p: usize,
    previous: Option<Vec<PyComponent>>,
    eps: f64,
) -> PyResult<(PyComponent, Bound<'py, PyAny>)> {
    let (c, cert) = core::solve_kth_bnb(&q.inner, p, &unwrap_components(previous), eps).map_err(err)?;
    Ok((PyComponent { inner: c }, to_py(py, &cert)?))
}

/// Threshold, split into blocks and merge; returns `(solution, blocks)`.
#[pyfunction]
#[pyo3(signature = (q, p, delta, k, eps=0.0))]
fn threshold_spca<'py>(
    py: Python<'py>,
    q: &PySymMatrix,
    p: usize,
    delta: f64,
    k: usize,
    eps: f64,
) -> PyResult<(PySolution, Bound<'py, PyAny>)> {
    let solver = if eps > 0.0 {
        core::KthSolver::Bnb { eps }
    } else {
        core::KthSolver::Exact
    };
    let out = core::threshold_spca(&q.inner, p, delta, k, solver).map_err(err)?;
    let blocks = core::decomp::BlockSummary::new(&out.structure, p);
    Ok((PySolution { inner: out.solution }, to_py(py, &blocks)?))
}

/// Sparse PCA by repeated projection deflation.
#[pyfunction]
fn deflation_baseline(q: &PySymMatrix, p: usize, k: usize) -> PyResult<PySolution> {
    core::deflation_baseline(&q.inner, p, k)
        .map(|inner| PySolution { inner })
        .map_err(err)
}

/// Block structure of `q` thresholded at `delta`, as a dict.
#[pyfunction]
#[pyo3(signature = (q, delta, p=1))]
fn block_diagonalize<'py>(py: Python<'py>, q: &PySymMatrix, delta: f64, p: usize) -> PyResult<Bound<'py, PyAny>> {
    let s = core::block_diagonalize(&q.inner, delta).map_err(err)?;
    to_py(py, &core::decomp::BlockSummary::new(&s, p))
}

/// `(C(n, p), Σᵢ C(nᵢ, min(p, nᵢ)))` for `q` thresholded at `delta`.
#[pyfunction]
fn predicted_cost<'py>(
    py: Python<'py>,
    q: &PySymMatrix,
    delta: f64,
    p: usize,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let s = core::block_diagonalize(&q.inner, delta).map_err(err)?;
    let (full, dec) = core::predicted_cost(&s, p);
    let int = py.import("builtins")?.getattr("int")?;
    Ok((int.call1((full.to_string(),))?, int.call1((dec.to_string(),))?))
}

/// Structural checks on a solution; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (q, p, solution, tol=1e-8))]
fn check_solution<'py>(
    py: Python<'py>,
    q: &PySymMatrix,
    p: usize,
    solution: &PySolution,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &core::check_solution(&q.inner, p, &solution.inner, tol))
}

/// Per-step optimality certificate against the exhaustive oracle (or the
/// cheap `λ_max` bound when `oracle_cap` is `None`).
#[pyfunction]
#[pyo3(signature = (q, p, solution, slack=None, oracle_cap=Some(core::certify::DEFAULT_ORACLE_CAP)))]
fn check_eps_certificate<'py>(
    py: Python<'py>,
    q: &PySymMatrix,
    p: usize,
    solution: &PySolution,
    slack: Option<f64>,
    oracle_cap: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let level = match oracle_cap {
        Some(cap) => core::CertLevel::Oracle { cap },
        None => core::CertLevel::Cheap,
    };
    let slack = slack.unwrap_or_else(|| solution.inner.guarantee_slack());
    let report = core::check_eps_certificate(&q.inner, p, &solution.inner, slack, level).map_err(err)?;
    to_py(py, &report)
}

/// Largest eigenvalue and its unit eigenvector.
#[pyfunction]
fn sym_eig_max(q: &PySymMatrix) -> (f64, Vec<f64>) {
    core::sym_eig_max(&q.inner)
}

/// Orthonormal basis of the span of `vectors`.
#[pyfunction]
#[pyo3(signature = (vectors, dim, tol=1e-10))]
fn gram_schmidt(vectors: Vec<Vec<f64>>, dim: usize, tol: f64) -> PyResult<Vec<Vec<f64>>> {
    core::gram_schmidt(dim, &vectors, tol)
        .map(|b| b.vectors().to_vec())
        .map_err(err)
}

/// `q` with entries of magnitude below `delta` set to zero.
#[pyfunction]
fn threshold_matrix(q: &PySymMatrix, delta: f64) -> PyResult<PySymMatrix> {
    core::threshold_matrix(&q.inner, delta)
        .map(|inner| PySymMatrix { inner })
        .map_err(err)
}

/// Synthetic near-block-diagonal PSD matrix.
#[pyfunction]
#[pyo3(signature = (n, d, block_size, coupling=1.0, noise=0.0, seed=0, shuffle=false))]
fn generate(
    n: usize,
    d: usize,
    block_size: usize,
    coupling: f64,
    noise: f64,
    seed: u64,
    shuffle: bool,
) -> PyResult<PySymMatrix> {
    let cfg = core::synth::GenConfig {
        n,
        d,
        block_size,
        coupling,
        noise,
        seed,
        shuffle,
    };
    core::synth::generate(&cfg)
        .map(|inner| PySymMatrix { inner })
        .map_err(err)
}

/// Reads a CSV matrix file.
#[pyfunction]
fn load_matrix(path: std::path::PathBuf) -> PyResult<PySymMatrix> {
    core::cli::load_matrix(&path)
        .map(|inner| PySymMatrix { inner })
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn orthospca(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymMatrix>()?;
    m.add_class::<PyComponent>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sequence_from, m)?)?;
    m.add_function(wrap_pyfunction!(solve_kth_exact, m)?)?;
    m.add_function(wrap_pyfunction!(solve_kth_bnb, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_spca, m)?)?;
    m.add_function(wrap_pyfunction!(deflation_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(block_diagonalize, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_cost, m)?)?;
    m.add_function(wrap_pyfunction!(check_solution, m)?)?;
    m.add_function(wrap_pyfunction!(check_eps_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(sym_eig_max, m)?)?;
    m.add_function(wrap_pyfunction!(gram_schmidt, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(load_matrix, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
