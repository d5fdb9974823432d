//! The augmented sampling distribution over the `n + d` rows of `[A; √λ I]`.
//!
//! Data row `i < n` carries mass `ℓ̂ᵢ` (rescaled so the data rows sum to `d`),
//! and each of the `d` regularizer rows carries `min{1, d − d_eff′}`. The
//! two-way branch between data and regularizer rows is taken from the same
//! uniform draw as the inverse-CDF lookup, so dense sampling costs one RNG
//! call and one binary search per draw.

use crate::error::{arg_err, Result};
use rand::Rng;

/// A distribution over the data rows that can be sampled in sublinear time.
pub trait RowDistribution {
    /// Number of data rows.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `P(i)` normalized over the data rows only.
    fn probability(&self, i: usize) -> f64;

    /// Draws a row given one uniform `u ∈ [0, 1)` already taken from `rng`;
    /// implementations needing more randomness pull it from `rng`.
    fn sample_with<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> (usize, f64);
}

impl<T: RowDistribution + ?Sized> RowDistribution for &T {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn probability(&self, i: usize) -> f64 {
        (**self).probability(i)
    }

    fn sample_with<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> (usize, f64) {
        (**self).sample_with(u, rng)
    }
}

/// Inverse-CDF table over explicit non-negative weights.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl PrefixTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return arg_err("sampling weights must be finite and non-negative");
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return arg_err("sampling weights are all zero");
        }
        Ok(Self {
            weights: weights.to_vec(),
            cumulative,
            total: acc,
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index whose cumulative interval contains `u · total`.
    pub fn lookup(&self, u: f64) -> usize {
        let target = u * self.total;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        if idx < self.weights.len() {
            idx
        } else {
            // u rounded onto the last boundary
            self.weights.iter().rposition(|&w| w > 0.0).expect("positive mass")
        }
    }
}

impl RowDistribution for PrefixTable {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn probability(&self, i: usize) -> f64 {
        self.weights[i] / self.total
    }

    fn sample_with<R: Rng + ?Sized>(&self, u: f64, _rng: &mut R) -> (usize, f64) {
        let i = self.lookup(u);
        (i, self.probability(i))
    }
}

/// Sampler for the augmented distribution `D(ℓ̂, d_eff′)` on `[n + d]`.
///
/// Indices `0..n` are data rows and `n..n+d` are regularizer rows.
#[derive(Debug, Clone)]
pub struct AugmentedSampler<D = PrefixTable> {
    data: D,
    n: usize,
    d: usize,
    d_eff_lower: f64,
    aug_mass_per_row: f64,
}

/// Builds the augmented sampler from explicit candidate scores.
pub fn build_augmented(
    candidate_scores: &[f64],
    n: usize,
    d: usize,
    d_eff_lower: f64,
) -> Result<AugmentedSampler<PrefixTable>> {
    if candidate_scores.len() != n {
        return arg_err(format!(
            "expected {n} candidate scores, got {}",
            candidate_scores.len()
        ));
    }
    AugmentedSampler::with_distribution(PrefixTable::new(candidate_scores)?, d, d_eff_lower)
}

impl<D: RowDistribution> AugmentedSampler<D> {
    pub fn with_distribution(data: D, d: usize, d_eff_lower: f64) -> Result<Self> {
        if d == 0 {
            return arg_err("d must be positive");
        }
        if !(0.0..=d as f64).contains(&d_eff_lower) {
            return arg_err(format!("d_eff lower bound {d_eff_lower} outside [0, {d}]"));
        }
        let n = data.len();
        let aug_mass_per_row = (d as f64 - d_eff_lower).min(1.0);
        Ok(Self {
            data,
            n,
            d,
            d_eff_lower,
            aug_mass_per_row,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_eff_lower(&self) -> f64 {
        self.d_eff_lower
    }

    pub fn data(&self) -> &D {
        &self.data
    }

    /// `min{1, d − d_eff′}`
    pub fn aug_mass_per_row(&self) -> f64 {
        self.aug_mass_per_row
    }

    /// Mass of the data rows after normalization, always `d`.
    pub fn data_mass(&self) -> f64 {
        self.d as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.data_mass() + self.d as f64 * self.aug_mass_per_row
    }

    /// Candidate scores rescaled to sum to `d`.
    pub fn normalized_score(&self, i: usize) -> f64 {
        self.data.probability(i) * self.data_mass()
    }

    /// `P(X = j)` for `j ∈ [n + d]`.
    pub fn probability(&self, j: usize) -> f64 {
        let total = self.total_mass();
        if j < self.n {
            self.data.probability(j) * self.data_mass() / total
        } else if j < self.n + self.d {
            self.aug_mass_per_row / total
        } else {
            0.0
        }
    }

    /// Draws one index in `[n + d]` with its probability.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let total = self.total_mass();
        let data_mass = self.data_mass();
        let u = rng.random::<f64>() * total;
        if u < data_mass {
            let (i, q) = self.data.sample_with(u / data_mass, rng);
            (i, q * data_mass / total)
        } else {
            let k = (((u - data_mass) / self.aug_mass_per_row) as usize).min(self.d - 1);
            (self.n + k, self.aug_mass_per_row / total)
        }
    }
}

/// β′ for which the augmented distribution overestimates the leverage
/// scores of `[A; √λ I]`, given a β-overestimate with ℓ₁ norm `l1_norm`.
pub fn beta_prime(beta: f64, l1_norm: f64, d: usize, d_eff: f64, d_eff_lower: f64) -> Result<f64> {
    if !(beta > 0.0) || !(l1_norm > 0.0) {
        return arg_err("beta and the score norm must be positive");
    }
    let df = d as f64;
    if !(d_eff > 0.0 && d_eff <= df + 1e-9) {
        return arg_err(format!("effective dimension {d_eff} outside (0, {d}]"));
    }
    if !(0.0..=df).contains(&d_eff_lower) {
        return arg_err(format!("d_eff lower bound {d_eff_lower} outside [0, {d}]"));
    }
    let aug = (df - d_eff_lower).min(1.0);
    let first = beta * df / d_eff / (1.0 + df * aug / l1_norm);
    let second = 1.0 / (l1_norm / df + aug);
    Ok(first.min(second))
}

/// Lower bound `min{β, 1} / (1 + min{1, d − d_eff′})` used to size sketches.
pub fn conservative_beta_prime(beta: f64, d: usize, d_eff_lower: f64) -> f64 {
    beta.min(1.0) / (1.0 + (d as f64 - d_eff_lower).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn symmetric_example_is_uniform() {
        let s = build_augmented(&[1.0, 1.0], 2, 2, 0.0).unwrap();
        for j in 0..4 {
            assert!((s.probability(j) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn full_effective_dimension_removes_regularizer_rows() {
        let s = build_augmented(&[3.0, 1.0, 2.0], 3, 2, 2.0).unwrap();
        assert_eq!(s.aug_mass_per_row(), 0.0);
        assert_eq!(s.probability(3), 0.0);
        assert_eq!(s.probability(4), 0.0);
        let mut rng = rng_from_seed(1);
        for _ in 0..100_000 {
            assert!(s.draw(&mut rng).0 < 3);
        }
    }

    #[test]
    fn hand_computed_probabilities() {
        let s = build_augmented(&[2.0, 1.0, 1.0], 3, 2, 1.0).unwrap();
        let expected = [0.25, 0.125, 0.125, 0.25, 0.25];
        for (j, e) in expected.iter().enumerate() {
            assert!((s.probability(j) - e).abs() < 1e-15);
        }
        assert!((s.normalized_score(0) - 1.0).abs() < 1e-15);
        assert!((s.normalized_score(1) - 0.5).abs() < 1e-15);
        let sum: f64 = (0..5).map(|j| s.probability(j)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_augmented(&[0.0, 0.0], 2, 2, 0.0).is_err());
        assert!(build_augmented(&[1.0, 0.0], 2, 2, 2.5).is_err());
        assert!(build_augmented(&[1.0, 0.0], 2, 2, -0.1).is_err());
        assert!(build_augmented(&[1.0], 2, 2, 0.0).is_err());
        assert!(build_augmented(&[1.0, -1.0], 2, 2, 0.0).is_err());
    }

    #[test]
    fn zero_mass_rows_are_never_drawn() {
        let s = build_augmented(&[0.0, 1.0, 0.0, 2.0, 0.0], 5, 2, 0.0).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..50_000 {
            let (j, p) = s.draw(&mut rng);
            assert!(j != 0 && j != 2 && j != 4);
            assert!(p > 0.0);
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let s = build_augmented(&[0.3, 1.0, 2.0, 0.1], 4, 3, 0.5).unwrap();
        let run = || {
            let mut rng = rng_from_seed(42);
            (0..1000).map(|_| s.draw(&mut rng).0).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn beta_prime_examples() {
        // classical scores normalized to d with full rank, d_eff′ = 0
        let d = 5;
        let d_eff = 3.2;
        let beta = d_eff / d as f64;
        let bp = beta_prime(beta, d as f64, d, d_eff, 0.0).unwrap();
        assert!((bp - 0.5).abs() < 1e-15);
        // unregularized limit
        let bp = beta_prime(1.0, 4.0, 4, 4.0, 4.0).unwrap();
        assert!((bp - 1.0).abs() < 1e-15);
        assert!(beta_prime(0.0, 1.0, 2, 1.0, 0.0).is_err());
    }

    #[test]
    fn conservative_examples() {
        assert_eq!(conservative_beta_prime(1.0, 4, 0.0), 0.5);
        assert_eq!(conservative_beta_prime(1.0, 4, 4.0), 1.0);
        assert!((conservative_beta_prime(0.4, 4, 3.5) - 0.4 / 1.5).abs() < 1e-15);
        assert_eq!(conservative_beta_prime(2.5, 4, 0.0), 0.5);
    }
}
