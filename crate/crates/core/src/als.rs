//! Regularized Tucker decomposition by alternating least squares.
//!
//! Each sweep updates the factors in mode order and then the core. Every
//! block update minimizes
//! `‖X − G ×₁ A⁽¹⁾ ⋯ ×_N A⁽ᴺ⁾‖_F² + λ(‖G‖_F² + Σₙ‖A⁽ⁿ⁾‖_F²)`
//! over that block. The core update is either solved exactly or by sketched
//! ridge regression against the implicit Kronecker design.

use crate::error::{arg_err, dim_err, Error, Result};
use crate::kronecker::ImplicitKronecker;
use crate::linalg::{dot, solve_ridge_exact, DenseMatrix, PsdSolver};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampler::AugmentedSampler;
use crate::sketch::{approximate_ridge_regression_with, SketchConfig, SketchDiagnostics};
use crate::tensor::{increment, DenseTensor};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

const MODEL_MAGIC: &[u8; 4] = b"DTUK";
const MODEL_VERSION: u8 = 1;

/// Core tensor, factor matrices and the shared regularization strength.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    pub core: DenseTensor,
    pub factors: Vec<DenseMatrix>,
    pub lambda: f64,
}

impl TuckerModel {
    pub fn new(core: DenseTensor, factors: Vec<DenseMatrix>, lambda: f64) -> Result<Self> {
        if factors.len() != core.order() {
            return dim_err(format!(
                "core has order {} but {} factors were given",
                core.order(),
                factors.len()
            ));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != core.shape()[n] {
                return dim_err(format!(
                    "factor {n} has {} columns but core dimension {n} is {}",
                    f.cols(),
                    core.shape()[n]
                ));
            }
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return arg_err(format!("lambda must be finite and non-negative, got {lambda}"));
        }
        Ok(Self { core, factors, lambda })
    }

    /// Core and factor entries i.i.d. uniform on `[0, 1)`, core drawn first.
    pub fn random_uniform<R: Rng + ?Sized>(
        shape: &[usize],
        ranks: &[usize],
        lambda: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if shape.len() != ranks.len() {
            return dim_err("shape and ranks must have the same length");
        }
        let core = DenseTensor::from_fn(ranks.to_vec(), |_| rng.random::<f64>())?;
        let factors = shape
            .iter()
            .zip(ranks)
            .map(|(&i, &r)| DenseMatrix::from_fn(i, r, |_, _| rng.random::<f64>()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(core, factors, lambda)
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::rows).collect()
    }

    /// `G ×₁ A⁽¹⁾ ⋯ ×_N A⁽ᴺ⁾`
    pub fn reconstruct(&self) -> DenseTensor {
        let mats: Vec<Option<&DenseMatrix>> = self.factors.iter().map(Some).collect();
        self.core
            .multi_mode_product(&mats)
            .expect("validated model shapes")
    }

    /// `‖G‖_F² + Σₙ ‖A⁽ⁿ⁾‖_F²`
    pub fn parameter_norm_sq(&self) -> f64 {
        let core = self.core.frobenius_norm().powi(2);
        let factors: f64 = self.factors.iter().map(|f| f.frobenius_norm().powi(2)).sum();
        core + factors
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_VERSION);
        out.extend_from_slice(&(self.order() as u32).to_le_bytes());
        out.extend_from_slice(&self.lambda.to_le_bytes());
        out.extend_from_slice(&self.core.to_bytes());
        for f in &self.factors {
            out.extend_from_slice(&(f.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(f.cols() as u64).to_le_bytes());
            for v in f.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 17];
        r.read_exact(&mut head)
            .map_err(|_| Error::Format("truncated DTUK header".into()))?;
        if &head[..4] != MODEL_MAGIC || head[4] != MODEL_VERSION {
            return Err(Error::Format("not a version-1 DTUK model".into()));
        }
        let order = u32::from_le_bytes(head[5..9].try_into().unwrap()) as usize;
        let lambda = f64::from_le_bytes(head[9..17].try_into().unwrap());
        let core = DenseTensor::read_from(&mut r)?;
        if core.order() != order {
            return Err(Error::Format("core order disagrees with header".into()));
        }
        let mut factors = Vec::with_capacity(order);
        for _ in 0..order {
            let mut b = [0u8; 16];
            r.read_exact(&mut b)
                .map_err(|_| Error::Format("truncated factor header".into()))?;
            let rows = u64::from_le_bytes(b[..8].try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(b[8..].try_into().unwrap()) as usize;
            let n = rows
                .checked_mul(cols)
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| Error::Format("factor size overflows".into()))?;
            let mut payload = Vec::new();
            (&mut r).take(n as u64).read_to_end(&mut payload)?;
            if payload.len() != n {
                return Err(Error::Format("truncated factor payload".into()));
            }
            let data = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            factors.push(DenseMatrix::new(rows, cols, data)?);
        }
        Self::new(core, factors, lambda).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }
}

pub fn write_model(model: &TuckerModel, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    model.write_to(std::io::BufWriter::new(f))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<TuckerModel> {
    let f = std::fs::File::open(path)?;
    TuckerModel::read_from(std::io::BufReader::new(f))
}

fn check_shapes(model: &TuckerModel, x: &DenseTensor) -> Result<()> {
    if model.shape() != x.shape() {
        return dim_err(format!(
            "model reconstructs shape {:?} but the data has shape {:?}",
            model.shape(),
            x.shape()
        ));
    }
    Ok(())
}

/// Regularized Tucker loss.
pub fn tucker_loss(model: &TuckerModel, x: &DenseTensor) -> Result<f64> {
    check_shapes(model, x)?;
    let fit = model.reconstruct().distance(x)?.powi(2);
    Ok(fit + model.lambda * model.parameter_norm_sq())
}

/// Exact ridge update of factor `mode`.
///
/// With `K = G₍ₙ₎ (⊗_{m≠n} A⁽ᵐ⁾)ᵀ` and `B = X₍ₙ₎`, every row solves
/// `min_y ‖y K − bᵢ‖² + λ‖y‖²`; all rows share `K Kᵀ + λI`, factored once.
pub fn update_factor(model: &TuckerModel, x: &DenseTensor, mode: usize) -> Result<DenseMatrix> {
    check_shapes(model, x)?;
    if mode >= model.order() {
        return arg_err(format!("mode {mode} out of range"));
    }
    let mats: Vec<Option<&DenseMatrix>> = model
        .factors
        .iter()
        .enumerate()
        .map(|(m, f)| (m != mode).then_some(f))
        .collect();
    let k = model.core.multi_mode_product(&mats)?.unfold(mode)?;
    let b = x.unfold(mode)?;
    let r = k.rows();
    let mut gram = DenseMatrix::zeros(r, r);
    for p in 0..r {
        for q in p..r {
            let v = dot(k.row(p), k.row(q)) + if p == q { model.lambda } else { 0.0 };
            gram.set(p, q, v);
            gram.set(q, p, v);
        }
    }
    let solver = PsdSolver::new(&gram)?;
    let mut out = DenseMatrix::zeros(b.rows(), r);
    let mut rhs = vec![0.0; r];
    for i in 0..b.rows() {
        for (p, v) in rhs.iter_mut().enumerate() {
            *v = dot(b.row(i), k.row(p));
        }
        out.row_mut(i).copy_from_slice(&solver.solve(&rhs));
    }
    Ok(out)
}

/// Exact ridge update of the core through the factor SVDs.
///
/// With `A⁽ⁿ⁾ = Uₙ Σₙ Vₙᵀ`, the minimizer is
/// `G = (Z ⊙ D) ×₁ V₁ ⋯ ×_N V_N` where `Z = X ×₁ U₁ᵀ ⋯ ×_N U_Nᵀ` and
/// `D_t = Πσ_t / (Πσ_t² + λ)`. `K` is never formed.
pub fn update_core_exact(model: &TuckerModel, x: &DenseTensor) -> Result<DenseTensor> {
    check_shapes(model, x)?;
    let svds = model
        .factors
        .iter()
        .map(crate::linalg::compact_svd)
        .collect::<Result<Vec<_>>>()?;
    let uts: Vec<DenseMatrix> = svds.iter().map(|s| s.u.transpose()).collect();
    let mats: Vec<Option<&DenseMatrix>> = uts.iter().map(Some).collect();
    let z = x.multi_mode_product(&mats)?;
    let ranks: Vec<usize> = svds.iter().map(|s| s.rank()).collect();
    let mut data = z.into_vec();
    let mut t = vec![0usize; ranks.len()];
    for v in data.iter_mut() {
        let sigma: f64 = svds
            .iter()
            .zip(&t)
            .map(|(s, &k)| s.singular_values[k])
            .product();
        *v *= sigma / (sigma * sigma + model.lambda);
        increment(&mut t, &ranks);
    }
    let scaled = DenseTensor::from_raw(ranks, data);
    let vs: Vec<DenseMatrix> = svds.iter().map(|s| s.v()).collect();
    let mats: Vec<Option<&DenseMatrix>> = vs.iter().map(Some).collect();
    scaled.multi_mode_product(&mats)
}

/// Exact core update by materializing `K` and calling the dense ridge solver.
/// Refuses designs with more than `max_entries` entries.
pub fn update_core_materialized(model: &TuckerModel, x: &DenseTensor, max_entries: usize) -> Result<DenseTensor> {
    check_shapes(model, x)?;
    let k = ImplicitKronecker::new(model.factors.clone())?.materialize(max_entries)?;
    let g = solve_ridge_exact(&k, x.as_slice(), model.lambda)?;
    DenseTensor::devectorize(g, model.ranks())
}

/// Sketched core update: builds the implicit Kronecker design and solves the
/// core ridge problem by leverage-score sampling.
pub fn update_core_fast(
    model: &TuckerModel,
    x: &DenseTensor,
    config: &SketchConfig,
) -> Result<(DenseTensor, SketchDiagnostics)> {
    check_shapes(model, x)?;
    let kron = ImplicitKronecker::new(model.factors.clone())?;
    sketched_core_solve(&kron, x, model.lambda, config)
}

/// The sampling and solve half of [`update_core_fast`], given a prepared
/// Kronecker design. Samples from `D(ℓ(K), 0)` and reads only the sampled
/// entries of `x`.
pub fn sketched_core_solve(
    kron: &ImplicitKronecker,
    x: &DenseTensor,
    lambda: f64,
    config: &SketchConfig,
) -> Result<(DenseTensor, SketchDiagnostics)> {
    if kron.nrows() != x.numel() {
        return dim_err("Kronecker design rows do not match the tensor size");
    }
    let ranks: Vec<usize> = kron.factors().iter().map(DenseMatrix::cols).collect();
    let sampler = AugmentedSampler::with_distribution(kron, kron.ncols(), 0.0)?;
    let sol = approximate_ridge_regression_with(kron, x.as_slice(), &sampler, 1.0, lambda, config)?;
    Ok((DenseTensor::devectorize(sol.x, &ranks)?, sol.diagnostics))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoreUpdate {
    Exact,
    Sketched(SketchConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    pub lambda: f64,
    pub max_iterations: usize,
    /// Stop once the relative change of the loss over a sweep drops below this.
    pub convergence_tol: f64,
    pub core_update: CoreUpdate,
    pub seed: u64,
    /// Record loss and RMSE after every block update.
    pub record_history: bool,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            lambda: 0.001,
            max_iterations: 50,
            convergence_tol: 1e-6,
            core_update: CoreUpdate::Exact,
            seed: 0,
            record_history: true,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return arg_err("max_iterations must be at least 1");
        }
        if !(self.convergence_tol >= 0.0) {
            return arg_err("convergence tolerance must be non-negative");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return arg_err("lambda must be finite and non-negative");
        }
        if let CoreUpdate::Sketched(cfg) = &self.core_update {
            cfg.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Init,
    Factor(usize),
    Core,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Init => write!(f, "Init"),
            Step::Factor(n) => write!(f, "F{}", n + 1),
            Step::Core => write!(f, "Core"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// Sweep number, zero for the initial model.
    pub iteration: usize,
    pub step: Step,
    pub loss: f64,
    pub rmse: f64,
}

/// Wall-clock seconds of each block update, per sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepTimings {
    pub factor_seconds: Vec<Vec<f64>>,
    pub core_seconds: Vec<f64>,
}

impl StepTimings {
    fn new(order: usize) -> Self {
        Self {
            factor_seconds: vec![Vec::new(); order],
            core_seconds: Vec::new(),
        }
    }

    /// `(step_type, mean_seconds, iterations)` rows: `F1..FN` then `Core`.
    pub fn summary(&self) -> Vec<(String, f64, usize)> {
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let mut rows: Vec<(String, f64, usize)> = self
            .factor_seconds
            .iter()
            .enumerate()
            .map(|(n, v)| (Step::Factor(n).to_string(), mean(v), v.len()))
            .collect();
        rows.push((Step::Core.to_string(), mean(&self.core_seconds), self.core_seconds.len()));
        rows
    }
}

#[derive(Debug, Clone)]
pub struct AlsResult {
    pub model: TuckerModel,
    pub history: Vec<HistoryEntry>,
    pub timings: StepTimings,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
    pub final_rmse: f64,
    /// One entry per sketched core update.
    pub core_diagnostics: Vec<SketchDiagnostics>,
}

/// Random uniform initialization followed by [`als_from`].
pub fn als(x: &DenseTensor, ranks: &[usize], config: &AlsConfig) -> Result<AlsResult> {
    config.validate()?;
    validate_ranks(x.shape(), ranks)?;
    let mut rng = rng_from_seed(config.seed);
    let init = TuckerModel::random_uniform(x.shape(), ranks, config.lambda, &mut rng)?;
    als_from(x, init, config)
}

pub fn validate_ranks(shape: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != shape.len() {
        return arg_err(format!(
            "expected {} ranks for shape {shape:?}, got {}",
            shape.len(),
            ranks.len()
        ));
    }
    for (n, (&r, &i)) in ranks.iter().zip(shape).enumerate() {
        if r == 0 || r > i {
            return arg_err(format!("rank {r} for mode {n} must lie in 1..={i}"));
        }
    }
    Ok(())
}

/// ALS from a given initial model. The model's λ is replaced by the config's.
pub fn als_from(x: &DenseTensor, init: TuckerModel, config: &AlsConfig) -> Result<AlsResult> {
    config.validate()?;
    check_shapes(&init, x)?;
    validate_ranks(x.shape(), init.ranks())?;
    let mut model = init;
    model.lambda = config.lambda;
    let order = model.order();
    let scale = (x.numel() as f64).sqrt();
    let evaluate = |m: &TuckerModel| -> Result<(f64, f64)> {
        let dist = m.reconstruct().distance(x)?;
        Ok((dist * dist + m.lambda * m.parameter_norm_sq(), dist / scale))
    };

    let mut history = Vec::new();
    let mut timings = StepTimings::new(order);
    let mut core_diagnostics = Vec::new();
    let (mut prev_loss, rmse0) = evaluate(&model)?;
    if config.record_history {
        history.push(HistoryEntry { iteration: 0, step: Step::Init, loss: prev_loss, rmse: rmse0 });
    }
    let mut converged = false;
    let mut iterations = 0;
    let mut last = (prev_loss, rmse0);

    for iter in 1..=config.max_iterations {
        iterations = iter;
        for n in 0..order {
            let t0 = Instant::now();
            let f = update_factor(&model, x, n)?;
            timings.factor_seconds[n].push(t0.elapsed().as_secs_f64());
            model.factors[n] = f;
            if config.record_history {
                let (loss, rmse) = evaluate(&model)?;
                history.push(HistoryEntry { iteration: iter, step: Step::Factor(n), loss, rmse });
            }
        }
        let t0 = Instant::now();
        model.core = match &config.core_update {
            CoreUpdate::Exact => update_core_exact(&model, x)?,
            CoreUpdate::Sketched(cfg) => {
                let cfg = cfg.with_seed(derive_seed(cfg.seed, iter as u64));
                let (core, diag) = update_core_fast(&model, x, &cfg)?;
                core_diagnostics.push(diag);
                core
            }
        };
        timings.core_seconds.push(t0.elapsed().as_secs_f64());
        last = evaluate(&model)?;
        if config.record_history {
            history.push(HistoryEntry { iteration: iter, step: Step::Core, loss: last.0, rmse: last.1 });
        }
        if !last.0.is_finite() {
            return Err(Error::NonFinite("ALS loss"));
        }
        let rel = (prev_loss - last.0).abs() / prev_loss.abs().max(f64::MIN_POSITIVE);
        prev_loss = last.0;
        if rel < config.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(AlsResult {
        model,
        history,
        timings,
        iterations,
        converged,
        final_loss: last.0,
        final_rmse: last.1,
        core_diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(shape: &[usize], ranks: &[usize], lambda: f64, seed: u64) -> TuckerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let core = DenseTensor::from_fn(ranks.to_vec(), |_| rng.random_range(-1.0..1.0)).unwrap();
        let factors = shape
            .iter()
            .zip(ranks)
            .map(|(&i, &r)| DenseMatrix::from_fn(i, r, |_, _| rng.random_range(-1.0..1.0)).unwrap())
            .collect();
        TuckerModel::new(core, factors, lambda).unwrap()
    }

    fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(shape.to_vec(), |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    /// Elementwise Tucker reconstruction by explicit summation.
    fn elementwise_reconstruction(m: &TuckerModel) -> DenseTensor {
        let ranks = m.ranks().to_vec();
        DenseTensor::from_fn(m.shape(), |idx| {
            let mut s = 0.0;
            let mut t = vec![0usize; ranks.len()];
            for _ in 0..ranks.iter().product::<usize>() {
                let mut p = m.core.get(&t);
                for (n, f) in m.factors.iter().enumerate() {
                    p *= f.get(idx[n], t[n]);
                }
                s += p;
                increment(&mut t, &ranks);
            }
            s
        })
        .unwrap()
    }

    #[test]
    fn reconstruction_matches_elementwise_sum() {
        let m = random_model(&[3, 3, 3], &[2, 2, 2], 0.0, 1);
        let err = m.reconstruct().distance(&elementwise_reconstruction(&m)).unwrap();
        assert!(err <= 1e-12);
    }

    #[test]
    fn loss_examples() {
        let m = random_model(&[3, 4, 2], &[2, 2, 2], 0.0, 2);
        let x = m.reconstruct();
        assert!(tucker_loss(&m, &x).unwrap() < 1e-20);

        let zero = TuckerModel::new(
            DenseTensor::zeros(vec![2, 2, 2]).unwrap(),
            vec![DenseMatrix::zeros(3, 2), DenseMatrix::zeros(4, 2), DenseMatrix::zeros(2, 2)],
            0.5,
        )
        .unwrap();
        let y = random_tensor(&[3, 4, 2], 3);
        assert!((tucker_loss(&zero, &y).unwrap() - y.frobenius_norm().powi(2)).abs() < 1e-12);

        let m = random_model(&[3, 4, 2], &[2, 3, 2], 0.3, 4);
        let fit: f64 = elementwise_reconstruction(&m)
            .as_slice()
            .iter()
            .zip(y.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let reg = m.core.as_slice().iter().map(|v| v * v).sum::<f64>()
            + m.factors.iter().flat_map(|f| f.as_slice()).map(|v| v * v).sum::<f64>();
        assert!((tucker_loss(&m, &y).unwrap() - (fit + 0.3 * reg)).abs() < 1e-10);
    }

    #[test]
    fn factor_update_fixed_point() {
        let m = random_model(&[5, 4, 3], &[2, 2, 2], 0.0, 5);
        let x = m.reconstruct();
        for mode in 0..3 {
            let f = update_factor(&m, &x, mode).unwrap();
            assert!(f.max_abs_diff(&m.factors[mode]) < 1e-9);
        }
    }

    #[test]
    fn factor_update_matches_per_row_oracle() {
        let m = random_model(&[4, 3, 2], &[2, 2, 2], 0.2, 6);
        let x = random_tensor(&[4, 3, 2], 7);
        for mode in 0..3 {
            let f = update_factor(&m, &x, mode).unwrap();
            // K built from the materialized Kronecker product of the other factors
            let others: Vec<&DenseMatrix> = (0..3).filter(|&k| k != mode).map(|k| &m.factors[k]).collect();
            let kron = others[0].kron(others[1]);
            let k = m.core.unfold(mode).unwrap().matmul(&kron.transpose()).unwrap();
            let b = x.unfold(mode).unwrap();
            let kt = k.transpose();
            for i in 0..b.rows() {
                let y = solve_ridge_exact(&kt, b.row(i), 0.2).unwrap();
                for (p, q) in y.iter().zip(f.row(i)) {
                    assert!((p - q).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn factor_update_vanishes_under_heavy_regularization() {
        let m = random_model(&[4, 3, 2], &[2, 2, 2], 1e6, 8);
        let x = random_tensor(&[4, 3, 2], 9);
        let f = update_factor(&m, &x, 1).unwrap();
        let unreg = update_factor(&TuckerModel { lambda: 0.0, ..m.clone() }, &x, 1).unwrap();
        assert!(f.frobenius_norm() <= 1e-3 * unreg.frobenius_norm());
    }

    #[test]
    fn core_update_identity_factors() {
        let x = random_tensor(&[3, 2, 4], 10);
        let m = TuckerModel::new(
            DenseTensor::zeros(vec![3, 2, 4]).unwrap(),
            vec![DenseMatrix::identity(3), DenseMatrix::identity(2), DenseMatrix::identity(4)],
            0.0,
        )
        .unwrap();
        let g = update_core_exact(&m, &x).unwrap();
        assert!(g.distance(&x).unwrap() < 1e-12);
    }

    #[test]
    fn core_update_routes_agree() {
        let m = random_model(&[4, 3, 2], &[2, 2, 2], 0.1, 11);
        let x = random_tensor(&[4, 3, 2], 12);
        let a = update_core_exact(&m, &x).unwrap();
        let b = update_core_materialized(&m, &x, 1 << 20).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-8);
    }

    #[test]
    fn core_update_orthonormal_projection() {
        let m = random_model(&[5, 4, 3], &[2, 3, 2], 0.0, 13);
        let orth: Vec<DenseMatrix> = m
            .factors
            .iter()
            .map(|f| crate::linalg::compact_svd(f).unwrap().u)
            .collect();
        let m = TuckerModel::new(m.core.clone(), orth.clone(), 0.0).unwrap();
        let x = random_tensor(&[5, 4, 3], 14);
        let g = update_core_exact(&m, &x).unwrap();
        let uts: Vec<DenseMatrix> = orth.iter().map(DenseMatrix::transpose).collect();
        let proj = x
            .multi_mode_product(&uts.iter().map(Some).collect::<Vec<_>>())
            .unwrap();
        assert!(g.distance(&proj).unwrap() < 1e-9);
    }

    #[test]
    fn fast_core_covers_identity_case() {
        let x = random_tensor(&[2, 3, 2], 15);
        let m = TuckerModel::new(
            DenseTensor::zeros(vec![2, 3, 2]).unwrap(),
            vec![DenseMatrix::identity(2), DenseMatrix::identity(3), DenseMatrix::identity(2)],
            0.0,
        )
        .unwrap();
        let cfg = SketchConfig::new(0.5, 0.5, 3).unwrap().with_sample_override(2000);
        let (g, diag) = update_core_fast(&m, &x, &cfg).unwrap();
        // twelve data rows and twelve regularizer rows
        assert_eq!(diag.distinct_rows, 24);
        assert!(!diag.rank_deficient);
        assert!(g.distance(&x).unwrap() < 1e-10);
    }

    #[test]
    fn max_iterations_contract() {
        let x = random_tensor(&[4, 3, 2], 16);
        let cfg = AlsConfig { max_iterations: 0, ..AlsConfig::default() };
        assert!(als(&x, &[2, 2, 2], &cfg).is_err());
        let cfg = AlsConfig { max_iterations: 1, ..AlsConfig::default() };
        let res = als(&x, &[2, 2, 2], &cfg).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.history.len(), 1 + 3 + 1);
        assert_eq!(res.timings.factor_seconds.iter().map(Vec::len).sum::<usize>(), 3);
        assert_eq!(res.timings.core_seconds.len(), 1);
    }

    #[test]
    fn invalid_ranks_rejected() {
        let x = random_tensor(&[4, 3, 2], 17);
        let cfg = AlsConfig::default();
        assert!(als(&x, &[2, 2], &cfg).is_err());
        assert!(als(&x, &[2, 4, 2], &cfg).is_err());
        assert!(als(&x, &[0, 2, 2], &cfg).is_err());
    }

    #[test]
    fn model_round_trip() {
        let m = random_model(&[4, 3, 2], &[2, 2, 1], 0.25, 18);
        let bytes = m.to_bytes();
        assert_eq!(TuckerModel::read_from(bytes.as_slice()).unwrap(), m);
        assert!(TuckerModel::read_from(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn step_labels() {
        assert_eq!(Step::Factor(0).to_string(), "F1");
        assert_eq!(Step::Core.to_string(), "Core");
    }
}
