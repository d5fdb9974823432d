//! Ridge leverage scores after deleting rows of the design.
//!
//! Removing the rows `S̄` from `A` changes the score of every kept row `i` by
//! `vᵀ(I − L_{S̄S̄})⁻¹v` with `v = (ℓᵢⱼ^λ(A))_{j∈S̄}`. Only the `|S̄|×|S̄|`
//! block of cross scores and the per-row slices are formed.

use crate::error::{arg_err, Error, Result};
use crate::kronecker::ImplicitKronecker;
use crate::leverage::{ridge_scores, RidgeBasis, ScoreVector};
use crate::linalg::{dot, symmetric_eigen, Cholesky, DenseMatrix};

/// A design matrix split into kept rows `S` and removed rows `S̄`.
#[derive(Debug, Clone)]
pub struct RowRemovalContext {
    original: DenseMatrix,
    kept: Vec<usize>,
    removed: Vec<usize>,
    lambda: f64,
    basis: RidgeBasis,
    block: DenseMatrix,
}

impl RowRemovalContext {
    /// `removed` may be in any order; duplicates and out-of-range rows are
    /// rejected. Requires `λ > 0`.
    pub fn new(original: DenseMatrix, removed: &[usize], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return arg_err(format!(
                "row-removal formulas need a positive finite lambda, got {lambda}; recompute scores directly instead"
            ));
        }
        let n = original.rows();
        let mut mask = vec![false; n];
        for &j in removed {
            if j >= n {
                return arg_err(format!("removed row {j} out of range for {n} rows"));
            }
            if std::mem::replace(&mut mask[j], true) {
                return arg_err(format!("row {j} listed twice"));
            }
        }
        let kept: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
        let removed: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let basis = RidgeBasis::new(&original, lambda)?;
        let block = DenseMatrix::from_fn(removed.len(), removed.len(), |p, q| {
            basis.cross(removed[p], removed[q])
        })?;
        Ok(Self { original, kept, removed, lambda, basis, block })
    }

    pub fn original(&self) -> &DenseMatrix {
        &self.original
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn removed(&self) -> &[usize] {
        &self.removed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `L_{S̄S̄}`, the cross scores among removed rows.
    pub fn removed_block(&self) -> &DenseMatrix {
        &self.block
    }

    /// `(ℓᵢⱼ^λ(A))_{j∈S̄}`
    pub fn cross_slice(&self, i: usize) -> Vec<f64> {
        self.removed.iter().map(|&j| self.basis.cross(i, j)).collect()
    }

    /// Largest eigenvalue of `L_{S̄S̄}`; zero when nothing is removed.
    pub fn removed_block_max_eigenvalue(&self) -> Result<f64> {
        if self.removed.is_empty() {
            return Ok(0.0);
        }
        Ok(symmetric_eigen(&self.block)?.values[0])
    }

    /// Original scores of the kept rows.
    pub fn kept_scores(&self) -> Vec<f64> {
        self.kept.iter().map(|&i| self.basis.score(i)).collect()
    }

    /// Kept rows of `A`, in increasing order.
    pub fn reduced_matrix(&self) -> Result<DenseMatrix> {
        self.original.select_rows(&self.kept)
    }
}

/// Scores of the kept rows of `Ã = A_S` by the Woodbury update.
pub fn exact_scores_after_removal(ctx: &RowRemovalContext) -> Result<ScoreVector> {
    let base = ctx.kept_scores();
    if ctx.removed.is_empty() {
        return ScoreVector::new(base, ctx.lambda);
    }
    let m = ctx.removed.len();
    let complement = DenseMatrix::from_fn(m, m, |p, q| {
        (if p == q { 1.0 } else { 0.0 }) - ctx.block.get(p, q)
    })?;
    let chol = Cholesky::new(&complement).ok_or_else(|| {
        Error::InvalidArgument("I − L on the removed rows is not positive definite".into())
    })?;
    let scores = ctx
        .kept
        .iter()
        .zip(base)
        .map(|(&i, l)| {
            let v = ctx.cross_slice(i);
            l + dot(&v, &chol.solve(&v))
        })
        .collect();
    ScoreVector::new(scores, ctx.lambda)
}

/// Upper bound `ℓᵢ + Σ_{j∈S̄} ℓᵢⱼ² / (1 − λ_max(L_{S̄S̄}))` for every kept row.
pub fn score_upper_bound_after_removal(ctx: &RowRemovalContext) -> Result<ScoreVector> {
    let base = ctx.kept_scores();
    if ctx.removed.is_empty() {
        return ScoreVector::new(base, ctx.lambda);
    }
    let coef = 1.0 / (1.0 - ctx.removed_block_max_eigenvalue()?);
    let scores = ctx
        .kept
        .iter()
        .zip(base)
        .map(|(&i, l)| {
            let v = ctx.cross_slice(i);
            l + coef * dot(&v, &v)
        })
        .collect();
    ScoreVector::new(scores, ctx.lambda)
}

/// Scores of the kept rows for any `λ ≥ 0`: the Woodbury update when `λ > 0`,
/// direct recomputation on the reduced matrix otherwise.
pub fn scores_after_removal(a: &DenseMatrix, removed: &[usize], lambda: f64) -> Result<ScoreVector> {
    if lambda > 0.0 {
        exact_scores_after_removal(&RowRemovalContext::new(a.clone(), removed, lambda)?)
    } else {
        let mut mask = vec![false; a.rows()];
        for &j in removed {
            if j >= a.rows() {
                return arg_err(format!("removed row {j} out of range"));
            }
            mask[j] = true;
        }
        let kept: Vec<usize> = (0..a.rows()).filter(|&i| !mask[i]).collect();
        ridge_scores(&a.select_rows(&kept)?, lambda)
    }
}

/// `Σⱼ ℓᵢⱼ^λ(A)²`, at most `ℓᵢ^λ(A)` with equality at `λ = 0`.
pub fn sum_squared_cross_bound(a: &DenseMatrix, lambda: f64, i: usize) -> Result<f64> {
    if i >= a.rows() {
        return arg_err(format!("row {i} out of range for {} rows", a.rows()));
    }
    let basis = RidgeBasis::new(a, lambda)?;
    Ok((0..basis.rows()).map(|j| basis.cross(i, j).powi(2)).sum())
}

/// `1 + Πₙ σ_max²(A⁽ⁿ⁾)/λ`, which dominates `1/(1 − λ_max(L_{S̄S̄}))` for
/// every removal set of the Kronecker product.
pub fn kronecker_removal_coefficient(k: &ImplicitKronecker, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return arg_err(format!("lambda must be positive and finite, got {lambda}"));
    }
    let prod: f64 = k
        .factor_svds()
        .iter()
        .map(|s| s.singular_values.first().copied().unwrap_or(0.0).powi(2))
        .product();
    Ok(1.0 + prod / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn empty_removal_keeps_scores() {
        let a = random(6, 2, 1);
        let ctx = RowRemovalContext::new(a.clone(), &[], 0.3).unwrap();
        let base = ridge_scores(&a, 0.3).unwrap();
        assert_eq!(exact_scores_after_removal(&ctx).unwrap().scores, base.scores);
        assert_eq!(score_upper_bound_after_removal(&ctx).unwrap().scores, base.scores);
    }

    #[test]
    fn woodbury_matches_recomputation() {
        let a = random(10, 3, 2);
        let ctx = RowRemovalContext::new(a.clone(), &[7, 2], 0.5).unwrap();
        let got = exact_scores_after_removal(&ctx).unwrap();
        let want = ridge_scores(&ctx.reduced_matrix().unwrap(), 0.5).unwrap();
        for (g, w) in got.scores.iter().zip(&want.scores) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn removing_a_duplicate_raises_the_twin() {
        let mut rows: Vec<Vec<f64>> = (0..5).map(|i| random(1, 3, 10 + i).row(0).to_vec()).collect();
        rows.push(rows[1].clone());
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let before = ridge_scores(&a, 0.2).unwrap().scores[1];
        let ctx = RowRemovalContext::new(a, &[5], 0.2).unwrap();
        let after = exact_scores_after_removal(&ctx).unwrap();
        let want = ridge_scores(&ctx.reduced_matrix().unwrap(), 0.2).unwrap();
        assert!(after.scores[1] > before);
        assert!((after.scores[1] - want.scores[1]).abs() < 1e-9);
    }

    #[test]
    fn bound_dominates_exact() {
        let a = random(12, 3, 3);
        let ctx = RowRemovalContext::new(a, &[0, 5, 11], 1.0).unwrap();
        let exact = exact_scores_after_removal(&ctx).unwrap();
        let bound = score_upper_bound_after_removal(&ctx).unwrap();
        for (e, b) in exact.scores.iter().zip(&bound.scores) {
            assert!(b + 1e-12 >= *e);
        }
    }

    #[test]
    fn zero_lambda_rejected_and_dispatched() {
        let a = random(6, 2, 4);
        assert!(RowRemovalContext::new(a.clone(), &[1], 0.0).is_err());
        let s = scores_after_removal(&a, &[1], 0.0).unwrap();
        let want = ridge_scores(&a.select_rows(&[0, 2, 3, 4, 5]).unwrap(), 0.0).unwrap();
        assert_eq!(s.scores, want.scores);
    }

    #[test]
    fn bad_removal_sets_rejected() {
        let a = random(4, 2, 5);
        assert!(RowRemovalContext::new(a.clone(), &[4], 1.0).is_err());
        assert!(RowRemovalContext::new(a, &[1, 1], 1.0).is_err());
    }

    #[test]
    fn sum_squared_cross_examples() {
        let a = random(9, 3, 6);
        let l0 = ridge_scores(&a, 0.0).unwrap();
        let l5 = ridge_scores(&a, 0.5).unwrap();
        for i in 0..9 {
            assert!((sum_squared_cross_bound(&a, 0.0, i).unwrap() - l0.scores[i]).abs() < 1e-10);
            assert!(sum_squared_cross_bound(&a, 0.5, i).unwrap() < l5.scores[i]);
        }
        let mut rows: Vec<Vec<f64>> = (0..4).map(|i| a.row(i).to_vec()).collect();
        rows[2] = vec![0.0; 3];
        let z = DenseMatrix::from_rows(&rows).unwrap();
        assert_eq!(sum_squared_cross_bound(&z, 0.5, 2).unwrap(), 0.0);
    }

    #[test]
    fn kronecker_coefficient_examples() {
        let q1 = crate::linalg::compact_svd(&random(4, 2, 7)).unwrap().u;
        let q2 = crate::linalg::compact_svd(&random(3, 2, 8)).unwrap().u;
        let k = ImplicitKronecker::new(vec![q1, q2]).unwrap();
        let c = kronecker_removal_coefficient(&k, 0.25).unwrap();
        assert!((c - 5.0).abs() < 1e-12);
        assert!((kronecker_removal_coefficient(&k, 1e12).unwrap() - 1.0).abs() < 1e-11);
        assert!(kronecker_removal_coefficient(&k, 0.0).is_err());
    }

    #[test]
    fn kronecker_coefficient_dominates_block_eigenvalue() {
        let k = ImplicitKronecker::new(vec![random(4, 2, 9), random(3, 2, 10)]).unwrap();
        let lambda = 0.3;
        let coef = kronecker_removal_coefficient(&k, lambda).unwrap();
        let full = k.materialize(1 << 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let removed: Vec<usize> = (0..12).filter(|_| rng.random_bool(0.4)).collect();
            let ctx = RowRemovalContext::new(full.clone(), &removed, lambda).unwrap();
            let inv = 1.0 / (1.0 - ctx.removed_block_max_eigenvalue().unwrap());
            assert!(coef + 1e-12 >= inv);
        }
    }
}
