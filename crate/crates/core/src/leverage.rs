//! Classical and λ-ridge leverage scores, cross scores, effective dimension
//! and β-overestimate checks.
//!
//! Scores are evaluated from the compact SVD `A = U Σ Vᵀ`:
//! `ℓᵢⱼ^λ = Σ_k σ_k²/(σ_k²+λ) · u_ik u_jk`. The pseudoinverse form
//! `aᵢ (AᵀA + λI)⁺ aⱼᵀ` is kept as [`ridge_scores_pinv`] for cross-checking.

use crate::error::{arg_err, dim_err, Error, Result};
use crate::linalg::{compact_svd, pseudoinverse, CompactSvd, DenseMatrix};
use serde::{Deserialize, Serialize};

/// Default refusal threshold for materializing an `n × n` cross-score matrix.
pub const DEFAULT_CROSS_SCORE_CAP: usize = 10_000;

/// Per-row scores together with the λ they were computed at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub lambda: f64,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, lambda: f64) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return arg_err("scores must be finite and non-negative");
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return arg_err(format!("lambda must be finite and non-negative, got {lambda}"));
        }
        Ok(Self { scores, lambda })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// Precomputed `U` and spectral weights `σ²/(σ²+λ)` of a matrix; evaluates
/// individual scores and cross scores in `O(r)` each.
#[derive(Debug, Clone)]
pub struct RidgeBasis {
    u: DenseMatrix,
    weights: Vec<f64>,
    singular_values: Vec<f64>,
    lambda: f64,
}

impl RidgeBasis {
    pub fn new(a: &DenseMatrix, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::from_svd(compact_svd(a)?, lambda))
    }

    pub fn from_svd(svd: CompactSvd, lambda: f64) -> Self {
        let weights = svd
            .singular_values
            .iter()
            .map(|s| {
                let s2 = s * s;
                s2 / (s2 + lambda)
            })
            .collect();
        Self {
            u: svd.u,
            weights,
            singular_values: svd.singular_values,
            lambda,
        }
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Eigenvalues of the cross-score matrix on its range, `σ_k²/(σ_k²+λ)`.
    pub fn spectral_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn score(&self, i: usize) -> f64 {
        self.u
            .row(i)
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| w * u * u)
            .sum()
    }

    pub fn cross(&self, i: usize, j: usize) -> f64 {
        let ui = self.u.row(i);
        let uj = self.u.row(j);
        ui.iter()
            .zip(uj)
            .zip(&self.weights)
            .map(|((a, b), w)| w * a * b)
            .sum()
    }

    pub fn scores(&self) -> ScoreVector {
        ScoreVector {
            scores: (0..self.rows()).map(|i| self.score(i)).collect(),
            lambda: self.lambda,
        }
    }

    /// `Σ_k σ_k²/(σ_k²+λ)`
    pub fn effective_dimension(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return arg_err(format!("lambda must be finite and non-negative, got {lambda}"));
    }
    Ok(())
}

/// λ-ridge leverage scores `ℓᵢ^λ(A) = aᵢ (AᵀA + λI)⁺ aᵢᵀ` (SVD form).
pub fn ridge_scores(a: &DenseMatrix, lambda: f64) -> Result<ScoreVector> {
    Ok(RidgeBasis::new(a, lambda)?.scores())
}

/// Classical (statistical) leverage scores, i.e. `λ = 0`.
pub fn leverage_scores(a: &DenseMatrix) -> Result<ScoreVector> {
    ridge_scores(a, 0.0)
}

/// Ridge scores evaluated literally from the pseudoinverse of `AᵀA + λI`.
pub fn ridge_scores_pinv(a: &DenseMatrix, lambda: f64) -> Result<ScoreVector> {
    check_lambda(lambda)?;
    let mut g = a.gram();
    for i in 0..a.cols() {
        g.set(i, i, g.get(i, i) + lambda);
    }
    let p = pseudoinverse(&g)?;
    let scores = (0..a.rows())
        .map(|i| {
            let row = a.row(i);
            let pr = p.matvec(row).expect("square pseudoinverse");
            row.iter().zip(&pr).map(|(x, y)| x * y).sum::<f64>().max(0.0)
        })
        .collect();
    Ok(ScoreVector { scores, lambda })
}

/// Full matrix `L = A (AᵀA + λI)⁺ Aᵀ` of cross ridge leverage scores.
#[derive(Debug, Clone)]
pub struct CrossScoreMatrix {
    pub l: DenseMatrix,
    pub lambda: f64,
}

impl CrossScoreMatrix {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.l.rows()).map(|i| self.l.get(i, i)).collect()
    }

    /// Principal submatrix on `idx × idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(idx.len(), idx.len(), |a, b| self.l.get(idx[a], idx[b]))
            .expect("finite entries")
    }
}

pub fn cross_scores(a: &DenseMatrix, lambda: f64) -> Result<CrossScoreMatrix> {
    cross_scores_with_cap(a, lambda, DEFAULT_CROSS_SCORE_CAP)
}

/// Same as [`cross_scores`] with an explicit row cap.
pub fn cross_scores_with_cap(a: &DenseMatrix, lambda: f64, cap: usize) -> Result<CrossScoreMatrix> {
    let n = a.rows();
    if n > cap {
        return Err(Error::TooLarge(format!(
            "cross-score matrix with {n} rows exceeds the cap of {cap}"
        )));
    }
    let basis = RidgeBasis::new(a, lambda)?;
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = basis.cross(i, j);
            l.set(i, j, v);
            l.set(j, i, v);
        }
    }
    Ok(CrossScoreMatrix { l, lambda })
}

/// `d_eff = Σᵢ ℓᵢ^λ(A)`.
pub fn effective_dimension(scores: &ScoreVector) -> f64 {
    scores.l1_norm()
}

/// Largest β for which `candidate` is a β-overestimate of `exact`:
/// `minᵢ (ℓ̂ᵢ/‖ℓ̂‖₁) / (ℓᵢ/‖ℓ‖₁)` over rows with `ℓᵢ > 0`.
pub fn check_beta_overestimate(candidate: &[f64], exact: &[f64]) -> Result<f64> {
    if candidate.len() != exact.len() {
        return dim_err(format!(
            "candidate has {} scores but exact has {}",
            candidate.len(),
            exact.len()
        ));
    }
    let cand_l1: f64 = candidate.iter().sum();
    let exact_l1: f64 = exact.iter().sum();
    if !(cand_l1 > 0.0) || !(exact_l1 > 0.0) {
        return arg_err("score vectors must have positive mass");
    }
    let mut beta = f64::INFINITY;
    for (c, e) in candidate.iter().zip(exact) {
        if *e == 0.0 {
            continue;
        }
        beta = beta.min((c / cand_l1) / (e / exact_l1));
    }
    Ok(beta)
}
