//! Approximate ridge regression by row sampling from the augmented
//! distribution.
//!
//! The ridge problem `min ‖Ax − b‖² + λ‖x‖²` is the least-squares problem on
//! `Ā = [A; √λ I]`, `b̄ = [b; 0]`. Rows of `Ā` are sampled with replacement,
//! reweighted by `1/√(P(j)·s)`, and the small sketched least-squares problem
//! is solved exactly. The sketch matrix `S` is kept in factored form
//! (indices + weights) and is never materialized.

use crate::error::{arg_err, dim_err, Result};
use crate::leverage::ScoreVector;
use crate::linalg::{add_outer_upper, axpy, compact_svd, dot, mirror_upper, symmetric_eigen, DenseMatrix};
use crate::rng::rng_from_seed;
use crate::sampler::{build_augmented, conservative_beta_prime, AugmentedSampler, RowDistribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A design matrix whose rows can be queried one at a time.
pub trait RowAccess {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Writes row `i` into `out` (length `ncols`).
    fn row_into(&self, i: usize, out: &mut [f64]);
}

impl RowAccess for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
}

/// Accuracy and confidence of the sketched solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Replaces the worst-case sample count when set.
    pub sample_count_override: Option<usize>,
    pub seed: u64,
}

impl Default for SketchConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.1,
            sample_count_override: None,
            seed: 0,
        }
    }
}

impl SketchConfig {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            epsilon,
            delta,
            sample_count_override: None,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sample_override(mut self, s: usize) -> Self {
        self.sample_count_override = Some(s);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return arg_err(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return arg_err(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.sample_count_override == Some(0) {
            return arg_err("sample count override must be at least 1");
        }
        Ok(())
    }
}

/// Sampling-and-rescaling operator `S ∈ ℝ^{s×(n+d)}` in factored form.
/// Row `t` of `S` has the single nonzero `weights[t]` at column `indices[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSketch {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl RowSketch {
    /// `S = I` on `n` rows.
    pub fn identity(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            weights: vec![1.0; n],
        }
    }

    /// Draws `s` rows with replacement; weight `1/√(P(j)·s)`.
    pub fn draw<D: RowDistribution, R: Rng + ?Sized>(
        sampler: &AugmentedSampler<D>,
        s: usize,
        rng: &mut R,
    ) -> Self {
        let mut indices = Vec::with_capacity(s);
        let mut weights = Vec::with_capacity(s);
        let sf = s as f64;
        for _ in 0..s {
            let (j, p) = sampler.draw(rng);
            indices.push(j);
            weights.push(1.0 / (p * sf).sqrt());
        }
        Self { indices, weights }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Distinct indices with their summed squared weights. The sketched
    /// Gram matrix and right-hand side depend only on this multiset.
    pub fn aggregate(&self) -> Vec<(usize, f64)> {
        let mut pairs: Vec<(usize, f64)> = self
            .indices
            .iter()
            .zip(&self.weights)
            .map(|(&j, &w)| (j, w * w))
            .collect();
        pairs.sort_unstable_by_key(|p| p.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (j, w2) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += w2,
                _ => out.push((j, w2)),
            }
        }
        out
    }
}

/// Worst-case sample count `⌈4d/β′ · max{420 ln(4d/δ), 1/(δε)}⌉`.
pub fn sample_count(beta_prime: f64, d: usize, epsilon: f64, delta: f64) -> Result<usize> {
    if !(beta_prime > 0.0) || d == 0 {
        return arg_err("beta' and d must be positive");
    }
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return arg_err("epsilon and delta must lie in (0, 1)");
    }
    let df = d as f64;
    let inner = (420.0 * (4.0 * df / delta).ln()).max(1.0 / (delta * epsilon));
    let s = (4.0 * df / beta_prime * inner).ceil();
    if s > usize::MAX as f64 {
        return arg_err("sample count overflows");
    }
    Ok(s as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchDiagnostics {
    /// Number of sampled rows `s`.
    pub sample_count: usize,
    /// Number of distinct sampled rows.
    pub distinct_rows: usize,
    /// β′ used to size the sketch.
    pub beta_prime: f64,
    /// `‖S Ā x̃ − S b̄‖²` at the returned solution.
    pub sketched_objective: f64,
    /// The sketched system had rank below `d`; solved with the pseudoinverse.
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchSolution {
    pub x: Vec<f64>,
    pub diagnostics: SketchDiagnostics,
}

/// Sketched ridge regression on a dense design, sampling from the augmented
/// distribution built from `candidate`, a β-overestimate of the ridge scores.
///
/// For classical leverage scores pass `beta = 1`; the sketch is then sized
/// for `β′ = 1/(1 + min{1, d − d_eff′})`, which the classical-score
/// overestimate always attains.
pub fn approximate_ridge_regression(
    a: &DenseMatrix,
    b: &[f64],
    candidate: &ScoreVector,
    beta: f64,
    lambda: f64,
    d_eff_lower: f64,
    config: &SketchConfig,
) -> Result<SketchSolution> {
    let sampler = build_augmented(&candidate.scores, a.rows(), a.cols(), d_eff_lower)?;
    approximate_ridge_regression_with(a, b, &sampler, beta, lambda, config)
}

/// Sketched ridge regression against any row-queryable design and sampler.
pub fn approximate_ridge_regression_with<M, D>(
    a: &M,
    b: &[f64],
    sampler: &AugmentedSampler<D>,
    beta: f64,
    lambda: f64,
    config: &SketchConfig,
) -> Result<SketchSolution>
where
    M: RowAccess + ?Sized,
    D: RowDistribution,
{
    config.validate()?;
    let (n, d) = (a.nrows(), a.ncols());
    if b.len() != n {
        return dim_err(format!("response has length {} but design has {n} rows", b.len()));
    }
    if sampler.n() != n || sampler.d() != d {
        return dim_err(format!(
            "sampler is for a {}x{} design, got {n}x{d}",
            sampler.n(),
            sampler.d()
        ));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return arg_err(format!("lambda must be finite and non-negative, got {lambda}"));
    }
    if !(beta > 0.0) {
        return arg_err("beta must be positive");
    }
    let bp = conservative_beta_prime(beta, d, sampler.d_eff_lower());
    let s = match config.sample_count_override {
        Some(s) => s,
        None => sample_count(bp, d, config.epsilon, config.delta)?,
    };
    let mut rng = rng_from_seed(config.seed);
    let sketch = RowSketch::draw(sampler, s, &mut rng);
    let (x, sketched_objective, rank_deficient, distinct_rows) = solve_sketched(a, b, lambda, &sketch)?;
    Ok(SketchSolution {
        x,
        diagnostics: SketchDiagnostics {
            sample_count: s,
            distinct_rows,
            beta_prime: bp,
            sketched_objective,
            rank_deficient,
        },
    })
}

/// Solves `min ‖S Ā x − S b̄‖²` through its normal equations, accumulated
/// over the distinct sampled rows.
pub fn solve_sketched<M: RowAccess + ?Sized>(
    a: &M,
    b: &[f64],
    lambda: f64,
    sketch: &RowSketch,
) -> Result<(Vec<f64>, f64, bool, usize)> {
    let (n, d) = (a.nrows(), a.ncols());
    let rows = sketch.aggregate();
    let mut gram = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    let mut buf = vec![0.0; d];
    for &(j, w2) in &rows {
        if j < n {
            a.row_into(j, &mut buf);
            add_outer_upper(&mut gram, d, &buf, w2);
            axpy(w2 * b[j], &buf, &mut rhs);
        } else if j < n + d {
            let k = j - n;
            gram[k * d + k] += w2 * lambda;
        } else {
            return arg_err(format!("sketch index {j} outside [0, {})", n + d));
        }
    }
    mirror_upper(&mut gram, d);
    let gram = DenseMatrix::new(d, d, gram)?;
    let svd = compact_svd(&gram)?;
    let rank_deficient = svd.rank() < d;
    // x = V Σ⁻¹ Uᵀ rhs
    let mut x = vec![0.0; d];
    for k in 0..svd.rank() {
        let coef = dot(&svd.u.column(k), &rhs) / svd.singular_values[k];
        axpy(coef, svd.vt.row(k), &mut x);
    }
    let mut objective = 0.0;
    for &(j, w2) in &rows {
        let r = if j < n {
            a.row_into(j, &mut buf);
            dot(&buf, &x) - b[j]
        } else {
            lambda.sqrt() * x[j - n]
        };
        objective += w2 * r * r;
    }
    Ok((x, objective, rank_deficient, rows.len()))
}

/// Statistics of the two sufficient conditions for a relative-error sketched
/// least-squares solution on `Ā = [A; √λ I]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConditions {
    /// `σ²_min(S U_Ā)`; the first condition asks for `≥ 1/√2`.
    pub cond1: f64,
    /// `‖U_Āᵀ Sᵀ S b̄^⊥‖² / ℛ²`; the second condition asks for `≤ ε/2`.
    pub cond2: f64,
    /// `ℛ² = ‖b̄^⊥‖²`, the optimal residual of the augmented problem.
    pub residual_sq: f64,
    pub satisfied: bool,
}

/// Evaluates both structural conditions for a given sketch.
pub fn verify_structural_conditions(
    a: &DenseMatrix,
    b: &[f64],
    sketch: &RowSketch,
    lambda: f64,
    epsilon: f64,
) -> Result<StructuralConditions> {
    let (n, d) = a.shape();
    if b.len() != n {
        return dim_err("response length does not match design rows");
    }
    let (a_bar, b_bar) = augmented_system(a, b, lambda)?;
    let svd = compact_svd(&a_bar)?;
    let u = &svd.u;
    let r = svd.rank();
    if r == 0 {
        return arg_err("augmented design has rank zero");
    }
    let utb = u.t_matvec(&b_bar)?;
    let proj = u.matvec(&utb)?;
    let b_perp: Vec<f64> = b_bar.iter().zip(&proj).map(|(x, y)| x - y).collect();
    let residual_sq = dot(&b_perp, &b_perp);

    let mut su_gram = vec![0.0; r * r];
    let mut cross = vec![0.0; r];
    for (&j, &w) in sketch.indices.iter().zip(&sketch.weights) {
        if j >= n + d {
            return arg_err(format!("sketch index {j} outside [0, {})", n + d));
        }
        let w2 = w * w;
        add_outer_upper(&mut su_gram, r, u.row(j), w2);
        axpy(w2 * b_perp[j], u.row(j), &mut cross);
    }
    mirror_upper(&mut su_gram, r);
    let eig = symmetric_eigen(&DenseMatrix::new(r, r, su_gram)?)?;
    let cond1 = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let b_scale = dot(&b_bar, &b_bar);
    let cond2 = if residual_sq <= 1e-28 * b_scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        dot(&cross, &cross) / residual_sq
    };
    Ok(StructuralConditions {
        cond1,
        cond2,
        residual_sq,
        satisfied: cond1 >= std::f64::consts::FRAC_1_SQRT_2 && cond2 <= epsilon / 2.0,
    })
}

/// `([A; √λ I], [b; 0])`
pub fn augmented_system(a: &DenseMatrix, b: &[f64], lambda: f64) -> Result<(DenseMatrix, Vec<f64>)> {
    if !(lambda >= 0.0) {
        return arg_err("lambda must be non-negative");
    }
    let d = a.cols();
    let a_bar = a.vstack(&DenseMatrix::identity(d).scaled(lambda.sqrt()))?;
    let mut b_bar = b.to_vec();
    b_bar.resize(b.len() + d, 0.0);
    Ok((a_bar, b_bar))
}

/// `(S M)ᵀ (S N)` for matrices whose rows are indexed like the sketch columns.
pub fn approximate_product(m: &DenseMatrix, nm: &DenseMatrix, sketch: &RowSketch) -> Result<DenseMatrix> {
    if m.rows() != nm.rows() {
        return dim_err("operands must have the same number of rows");
    }
    let (p, q) = (m.cols(), nm.cols());
    let mut out = vec![0.0; p * q];
    for (&j, &w) in sketch.indices.iter().zip(&sketch.weights) {
        if j >= m.rows() {
            return arg_err(format!("sketch index {j} outside [0, {})", m.rows()));
        }
        let w2 = w * w;
        let mr = m.row(j);
        let nr = nm.row(j);
        for (a, &x) in mr.iter().enumerate() {
            axpy(w2 * x, nr, &mut out[a * q..(a + 1) * q]);
        }
    }
    DenseMatrix::new(p, q, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leverage::leverage_scores;
    use crate::linalg::{ridge_objective, solve_ridge_exact};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn sample_count_log_regime() {
        // 32 · 420 · ln(160) = 68210.3...
        let expected = (32.0 * 420.0 * 160f64.ln()).ceil() as usize;
        assert_eq!(expected, 68_211);
        assert_eq!(sample_count(0.5, 4, 0.1, 0.1).unwrap(), 68_211);
    }

    #[test]
    fn sample_count_halves_when_beta_doubles() {
        let s1 = sample_count(0.25, 6, 0.2, 0.1).unwrap();
        let s2 = sample_count(0.5, 6, 0.2, 0.1).unwrap();
        assert!(s1.abs_diff(2 * s2) <= 2);
    }

    #[test]
    fn sample_count_both_regimes() {
        // d=2, β′=1, δ=0.001, ε=0.9: 420 ln 8000 ≈ 3774.6 beats 1/(δε) ≈ 1111.1
        let log_term = 420.0 * 8000f64.ln();
        assert!(log_term > 1.0 / (0.001 * 0.9));
        assert_eq!(sample_count(1.0, 2, 0.9, 0.001).unwrap(), (8.0 * log_term).ceil() as usize);
        // d=2, β′=1, δ=0.5, ε=0.001: 1/(δε) = 2000 beats 420 ln 16 ≈ 1164.5
        let inv = 1.0 / (0.5 * 0.001);
        assert!(inv > 420.0 * 16f64.ln());
        assert_eq!(sample_count(1.0, 2, 0.001, 0.5).unwrap(), (8.0 * inv).ceil() as usize);
    }

    #[test]
    fn config_validation() {
        assert!(SketchConfig::new(0.0, 0.1, 1).is_err());
        assert!(SketchConfig::new(0.1, 1.0, 1).is_err());
        let c = SketchConfig::new(0.1, 0.1, 1).unwrap().with_sample_override(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn identity_sketch_satisfies_conditions_exactly() {
        let a = random(10, 3, 1);
        let b: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let sc = verify_structural_conditions(&a, &b, &RowSketch::identity(13), 0.4, 0.1).unwrap();
        assert!((sc.cond1 - 1.0).abs() < 1e-12);
        assert!(sc.cond2 < 1e-24);
        assert!(sc.satisfied);
    }

    #[test]
    fn cond2_zero_when_response_in_range() {
        let a = random(6, 2, 3);
        let b = a.matvec(&[1.0, -2.0]).unwrap();
        // λ = 0 so b̄ lies in the range of Ā
        let sc = verify_structural_conditions(&a, &b, &RowSketch::identity(8), 0.0, 0.1).unwrap();
        assert_eq!(sc.cond2, 0.0);
    }

    #[test]
    fn full_coverage_identity_recovers_exact_solution() {
        let a = random(30, 4, 5);
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let (x, _, deficient, _) = solve_sketched(&a, &b, 0.7, &RowSketch::identity(34)).unwrap();
        assert!(!deficient);
        let exact = solve_ridge_exact(&a, &b, 0.7).unwrap();
        for (p, q) in x.iter().zip(&exact) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_design_ratio_within_epsilon() {
        let a = DenseMatrix::identity(3);
        let b = [1.0, -2.0, 0.5];
        let lambda = 0.5;
        let cand = leverage_scores(&a).unwrap();
        let opt = ridge_objective(&a, &b, lambda, &solve_ridge_exact(&a, &b, lambda).unwrap()).unwrap();
        let cfg = SketchConfig::new(0.5, 0.5, 9).unwrap().with_sample_override(2000);
        let sol = approximate_ridge_regression(&a, &b, &cand, 1.0, lambda, 0.0, &cfg).unwrap();
        let obj = ridge_objective(&a, &b, lambda, &sol.x).unwrap();
        assert!(obj <= 1.5 * opt, "{obj} vs {opt}");
        assert_eq!(sol.diagnostics.beta_prime, 0.5);
        assert_eq!(sol.diagnostics.sample_count, 2000);
    }

    #[test]
    fn rank_deficient_sketch_is_flagged() {
        let a = random(20, 3, 8);
        let b = vec![1.0; 20];
        let sketch = RowSketch { indices: vec![0], weights: vec![1.0] };
        let (x, _, deficient, distinct) = solve_sketched(&a, &b, 0.0, &sketch).unwrap();
        assert!(deficient);
        assert_eq!(distinct, 1);
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn aggregate_merges_duplicates() {
        let s = RowSketch { indices: vec![3, 1, 3], weights: vec![2.0, 1.0, 2.0] };
        assert_eq!(s.aggregate(), vec![(1, 1.0), (3, 8.0)]);
    }

    #[test]
    fn default_sample_count_used_without_override() {
        let a = random(40, 2, 13);
        let b = vec![1.0; 40];
        let cand = leverage_scores(&a).unwrap();
        let cfg = SketchConfig::new(0.5, 0.5, 2).unwrap();
        let sol = approximate_ridge_regression(&a, &b, &cand, 1.0, 0.1, 0.0, &cfg).unwrap();
        assert_eq!(sol.diagnostics.sample_count, sample_count(0.5, 2, 0.5, 0.5).unwrap());
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let a = random(5, 2, 1);
        let cand = leverage_scores(&a).unwrap();
        let cfg = SketchConfig::default();
        assert!(approximate_ridge_regression(&a, &[1.0; 4], &cand, 1.0, 0.1, 0.0, &cfg).is_err());
        let short = ScoreVector::new(vec![1.0; 4], 0.0).unwrap();
        assert!(approximate_ridge_regression(&a, &[1.0; 5], &short, 1.0, 0.1, 0.0, &cfg).is_err());
    }
}
