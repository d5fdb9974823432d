//! Python bindings. Matrices cross the boundary as lists of rows and tensors
//! as a shape plus a flat row-major (last index fastest) list.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use ridge_tucker::als::{self, AlsConfig, CoreUpdate};
use ridge_tucker::leverage;
use ridge_tucker::linalg::{self, DenseMatrix};
use ridge_tucker::missing;
use ridge_tucker::sampler;
use ridge_tucker::sketch::{self, SketchConfig};
use ridge_tucker::synthetic::{self, SyntheticSpec};
use ridge_tucker::tensor::{self, DenseTensor};
use ridge_tucker::verify;

fn to_py(e: ridge_tucker::Error) -> PyErr {
    match e {
        ridge_tucker::Error::Io(io) => PyIOError::new_err(io.to_string()),
        e if e.is_numerical() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> ridge_tucker::Result<DenseMatrix> {
    if rows.is_empty() {
        return Err(ridge_tucker::Error::InvalidArgument("matrix has no rows".into()));
    }
    DenseMatrix::from_rows(rows)
}

pub fn matrix_to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    rows_to_matrix(&rows).map_err(to_py)
}

/// Dense tensor of order at most 8.
#[pyclass(name = "Tensor", module = "ridge_tucker_py", from_py_object)]
#[derive(Clone)]
pub struct PyTensor {
    inner: DenseTensor,
}

#[pymethods]
impl PyTensor {
    #[new]
    fn new(shape: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: DenseTensor::new(shape, data).map_err(to_py)? })
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.shape().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.as_slice().to_vec()
    }

    fn get(&self, index: Vec<usize>) -> PyResult<f64> {
        if index.len() != self.inner.order() || index.iter().zip(self.inner.shape()).any(|(i, n)| i >= n) {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(&index))
    }

    /// Mode-`mode` unfolding as a list of rows (modes are zero-based).
    fn unfold(&self, mode: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix_to_rows(&self.inner.unfold(mode).map_err(to_py)?))
    }

    fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    fn rmse(&self, other: &PyTensor) -> PyResult<f64> {
        self.inner.rmse(&other.inner).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        tensor::write_tensor(&self.inner, path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: tensor::read_tensor(path).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("Tensor(shape={:?})", self.inner.shape())
    }
}

/// Tucker model: core tensor, one factor per mode, and λ.
#[pyclass(name = "TuckerModel", module = "ridge_tucker_py", from_py_object)]
#[derive(Clone)]
pub struct PyTuckerModel {
    inner: als::TuckerModel,
}

#[pymethods]
impl PyTuckerModel {
    #[new]
    fn new(core: PyTensor, factors: Vec<Vec<Vec<f64>>>, lam: f64) -> PyResult<Self> {
        let factors = factors.into_iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: als::TuckerModel::new(core.inner, factors, lam).map_err(to_py)? })
    }

    #[getter]
    fn core(&self) -> PyTensor {
        PyTensor { inner: self.inner.core.clone() }
    }

    #[getter]
    fn factors(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.factors.iter().map(matrix_to_rows).collect()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    fn reconstruct(&self) -> PyTensor {
        PyTensor { inner: self.inner.reconstruct() }
    }

    fn loss(&self, x: &PyTensor) -> PyResult<f64> {
        als::tucker_loss(&self.inner, &x.inner).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        als::write_model(&self.inner, path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: als::read_model(path).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("TuckerModel(shape={:?}, ranks={:?}, lam={})", self.inner.shape(), self.inner.ranks(), self.inner.lambda)
    }
}

/// Result of a Tucker ALS run.
#[pyclass(name = "AlsResult", module = "ridge_tucker_py", get_all)]
pub struct PyAlsResult {
    model: PyTuckerModel,
    iterations: usize,
    converged: bool,
    final_loss: f64,
    final_rmse: f64,
    /// `(iteration, step, loss, rmse)` after every block update.
    history: Vec<(usize, String, f64, f64)>,
    /// `(step, mean_seconds, count)` per step type.
    timings: Vec<(String, f64, usize)>,
}

#[pyfunction]
#[pyo3(signature = (rows, lam))]
fn ridge_scores(rows: Vec<Vec<f64>>, lam: f64) -> PyResult<Vec<f64>> {
    Ok(leverage::ridge_scores(&matrix(rows)?, lam).map_err(to_py)?.scores)
}

#[pyfunction]
fn leverage_scores(rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(leverage::leverage_scores(&matrix(rows)?).map_err(to_py)?.scores)
}

#[pyfunction]
fn effective_dimension(rows: Vec<Vec<f64>>, lam: f64) -> PyResult<f64> {
    Ok(leverage::ridge_scores(&matrix(rows)?, lam).map_err(to_py)?.l1_norm())
}

#[pyfunction]
fn solve_ridge(rows: Vec<Vec<f64>>, b: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
    linalg::solve_ridge_exact(&matrix(rows)?, &b, lam).map_err(to_py)
}

/// Sketched ridge regression with classical leverage scores as the
/// overestimate. Returns `(x, sample_count, distinct_rows)`.
#[pyfunction]
#[pyo3(signature = (rows, b, lam, epsilon=0.1, delta=0.1, seed=0, samples=None))]
fn sketched_ridge(
    rows: Vec<Vec<f64>>,
    b: Vec<f64>,
    lam: f64,
    epsilon: f64,
    delta: f64,
    seed: u64,
    samples: Option<usize>,
) -> PyResult<(Vec<f64>, usize, usize)> {
    let a = matrix(rows)?;
    let cand = leverage::leverage_scores(&a).map_err(to_py)?;
    let mut cfg = SketchConfig::new(epsilon, delta, seed).map_err(to_py)?;
    if let Some(s) = samples {
        cfg = cfg.with_sample_override(s);
    }
    let sol = sketch::approximate_ridge_regression(&a, &b, &cand, 1.0, lam, 0.0, &cfg).map_err(to_py)?;
    Ok((sol.x, sol.diagnostics.sample_count, sol.diagnostics.distinct_rows))
}

#[pyfunction]
fn sample_count(beta_prime: f64, d: usize, epsilon: f64, delta: f64) -> PyResult<usize> {
    sketch::sample_count(beta_prime, d, epsilon, delta).map_err(to_py)
}

#[pyfunction]
fn conservative_beta_prime(beta: f64, d: usize, d_eff_lower: f64) -> f64 {
    sampler::conservative_beta_prime(beta, d, d_eff_lower)
}

/// Scores of the kept rows after deleting `removed` (Woodbury update for
/// `lam > 0`, direct recomputation at zero).
#[pyfunction]
fn scores_after_removal(rows: Vec<Vec<f64>>, removed: Vec<usize>, lam: f64) -> PyResult<Vec<f64>> {
    Ok(missing::scores_after_removal(&matrix(rows)?, &removed, lam).map_err(to_py)?.scores)
}

#[pyfunction]
fn score_upper_bound_after_removal(rows: Vec<Vec<f64>>, removed: Vec<usize>, lam: f64) -> PyResult<Vec<f64>> {
    let ctx = missing::RowRemovalContext::new(matrix(rows)?, &removed, lam).map_err(to_py)?;
    Ok(missing::score_upper_bound_after_removal(&ctx).map_err(to_py)?.scores)
}

#[pyfunction]
#[pyo3(signature = (shape, planted_ranks, noise_fraction=0.01, noise_sigma=1.0, seed=0))]
fn generate_synthetic(
    shape: Vec<usize>,
    planted_ranks: Vec<usize>,
    noise_fraction: f64,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<PyTensor> {
    let spec = SyntheticSpec { shape, planted_ranks, noise_fraction, noise_sigma, seed };
    Ok(PyTensor { inner: synthetic::generate(&spec).map_err(to_py)?.tensor })
}

/// Regularized Tucker ALS. `mode` is `"exact"` or `"sketched"`.
#[pyfunction]
#[pyo3(signature = (x, ranks, lam=0.001, mode="exact", epsilon=0.1, delta=0.1, seed=0, max_iters=50, tol=1e-6, samples=None))]
#[allow(clippy::too_many_arguments)]
fn tucker_als(
    py: Python<'_>,
    x: &PyTensor,
    ranks: Vec<usize>,
    lam: f64,
    mode: &str,
    epsilon: f64,
    delta: f64,
    seed: u64,
    max_iters: usize,
    tol: f64,
    samples: Option<usize>,
) -> PyResult<PyAlsResult> {
    let core_update = match mode {
        "exact" => CoreUpdate::Exact,
        "sketched" => {
            let mut cfg = SketchConfig::new(epsilon, delta, seed).map_err(to_py)?;
            if let Some(s) = samples {
                cfg = cfg.with_sample_override(s);
            }
            CoreUpdate::Sketched(cfg)
        }
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let cfg = AlsConfig {
        lambda: lam,
        max_iterations: max_iters,
        convergence_tol: tol,
        core_update,
        seed,
        record_history: true,
    };
    let data = x.inner.clone();
    let res = py.detach(move || als::als(&data, &ranks, &cfg)).map_err(to_py)?;
    Ok(PyAlsResult {
        iterations: res.iterations,
        converged: res.converged,
        final_loss: res.final_loss,
        final_rmse: res.final_rmse,
        history: res.history.iter().map(|h| (h.iteration, h.step.to_string(), h.loss, h.rmse)).collect(),
        timings: res.timings.summary(),
        model: PyTuckerModel { inner: res.model },
    })
}

type CheckRow = (String, f64, f64, bool);

/// Runs one self-check suite. Returns `(passed, [(check, worst, tolerance, passed)])`.
#[pyfunction]
#[pyo3(signature = (suite, seed=0))]
fn run_verify(suite: &str, seed: u64) -> PyResult<(bool, Vec<CheckRow>)> {
    let s: verify::Suite = suite.parse().map_err(to_py)?;
    let report = verify::run_suite(s, seed).map_err(to_py)?;
    let checks = report.checks.into_iter().map(|c| (c.name, c.worst, c.tolerance, c.passed)).collect();
    Ok((report.passed, checks))
}

#[pymodule]
fn ridge_tucker_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyTuckerModel>()?;
    m.add_class::<PyAlsResult>()?;
    m.add_function(wrap_pyfunction!(ridge_scores, m)?)?;
    m.add_function(wrap_pyfunction!(leverage_scores, m)?)?;
    m.add_function(wrap_pyfunction!(effective_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ridge, m)?)?;
    m.add_function(wrap_pyfunction!(sketched_ridge, m)?)?;
    m.add_function(wrap_pyfunction!(sample_count, m)?)?;
    m.add_function(wrap_pyfunction!(conservative_beta_prime, m)?)?;
    m.add_function(wrap_pyfunction!(scores_after_removal, m)?)?;
    m.add_function(wrap_pyfunction!(score_upper_bound_after_removal, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(tucker_als, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_conversion_round_trips() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let m = rows_to_matrix(&rows).unwrap();
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(matrix_to_rows(&m), rows);
    }

    #[test]
    fn ragged_or_empty_rows_rejected() {
        assert!(rows_to_matrix(&[]).is_err());
        assert!(rows_to_matrix(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
