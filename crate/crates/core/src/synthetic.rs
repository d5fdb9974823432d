//! Planted Tucker benchmark instances with sparse Gaussian noise.

use crate::als::{validate_ranks, TuckerModel};
use crate::error::{arg_err, Result};
use crate::rng::rng_from_seed;
use crate::tensor::DenseTensor;
use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub shape: Vec<usize>,
    pub planted_ranks: Vec<usize>,
    /// Fraction of entries that receive noise.
    pub noise_fraction: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// One percent of the entries perturbed by standard normal noise.
    pub fn standard(shape: Vec<usize>, planted_ranks: Vec<usize>, seed: u64) -> Self {
        Self { shape, planted_ranks, noise_fraction: 0.01, noise_sigma: 1.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        validate_ranks(&self.shape, &self.planted_ranks)?;
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return arg_err(format!("noise fraction {} outside [0, 1]", self.noise_fraction));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return arg_err("noise sigma must be finite and non-negative");
        }
        Ok(())
    }

    pub fn noisy_entries(&self) -> usize {
        let numel: usize = self.shape.iter().product();
        (self.noise_fraction * numel as f64).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub planted: TuckerModel,
    /// Noiseless reconstruction of the planted model.
    pub clean: DenseTensor,
    pub tensor: DenseTensor,
}

/// Core and factor entries uniform on `[0, 1)`; noise is added to a uniformly
/// random subset of `round(fraction · numel)` distinct entries.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let planted = TuckerModel::random_uniform(&spec.shape, &spec.planted_ranks, 0.0, &mut rng)?;
    let clean = planted.reconstruct();
    let mut data = clean.as_slice().to_vec();
    let k = spec.noisy_entries();
    if k > 0 && spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        for idx in sample(&mut rng, data.len(), k) {
            data[idx] += normal.sample(&mut rng);
        }
    }
    let tensor = DenseTensor::new(spec.shape.clone(), data)?;
    Ok(SyntheticInstance { planted, clean, tensor })
}
