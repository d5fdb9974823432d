//! Implicit Kronecker-product design matrix `K = A⁽¹⁾ ⊗ ⋯ ⊗ A⁽ᴺ⁾`.
//!
//! Only the factors, their compact SVDs and their leverage-score tables are
//! stored. Row `(i₁,…,i_N)` of `K` has linear index `Σ iₙ·Π_{m>n} I_m`
//! (last factor fastest), matching tensor vectorization, so `vec(X)` lines
//! up with the rows of `K`.
//!
//! Leverage scores of `K` factor into products of factor scores, which makes
//! the leverage distribution of `K` a product distribution: a row is drawn
//! with one binary search per factor.

use crate::error::{arg_err, dim_err, Error, Result};
use crate::leverage::{RidgeBasis, ScoreVector};
use crate::linalg::{compact_svd, CompactSvd, DenseMatrix};
use crate::sampler::{PrefixTable, RowDistribution};
use crate::sketch::RowAccess;
use crate::tensor::{strides, MAX_ORDER};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct ImplicitKronecker {
    factors: Vec<DenseMatrix>,
    svds: Vec<CompactSvd>,
    scores: Vec<ScoreVector>,
    tables: Vec<PrefixTable>,
    row_dims: Vec<usize>,
    row_strides: Vec<usize>,
    nrows: usize,
    ncols: usize,
}

impl ImplicitKronecker {
    /// Wraps the factors; computes each factor SVD and leverage-score table.
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_ORDER {
            return arg_err(format!("need 1..={MAX_ORDER} factors, got {}", factors.len()));
        }
        let mut svds = Vec::with_capacity(factors.len());
        let mut scores = Vec::with_capacity(factors.len());
        let mut tables = Vec::with_capacity(factors.len());
        for (n, f) in factors.iter().enumerate() {
            let svd = compact_svd(f)?;
            if svd.rank() == 0 {
                return arg_err(format!("factor {n} is numerically zero"));
            }
            let s = RidgeBasis::from_svd(svd.clone(), 0.0).scores();
            tables.push(PrefixTable::new(&s.scores)?);
            scores.push(s);
            svds.push(svd);
        }
        let row_dims: Vec<usize> = factors.iter().map(DenseMatrix::rows).collect();
        let nrows = row_dims
            .iter()
            .try_fold(1usize, |a, &b| a.checked_mul(b))
            .ok_or_else(|| Error::TooLarge("Kronecker row count overflows".into()))?;
        let ncols = factors
            .iter()
            .try_fold(1usize, |a, f| a.checked_mul(f.cols()))
            .ok_or_else(|| Error::TooLarge("Kronecker column count overflows".into()))?;
        Ok(Self {
            row_strides: strides(&row_dims),
            factors,
            svds,
            scores,
            tables,
            row_dims,
            nrows,
            ncols,
        })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn factor_svds(&self) -> &[CompactSvd] {
        &self.svds
    }

    /// Classical leverage scores of each factor.
    pub fn factor_scores(&self) -> &[ScoreVector] {
        &self.scores
    }

    /// Number of `f64` values held, for checking the storage bound.
    pub fn storage_len(&self) -> usize {
        let factors: usize = self.factors.iter().map(|f| f.rows() * f.cols()).sum();
        let svds: usize = self
            .svds
            .iter()
            .map(|s| s.u.rows() * s.u.cols() + s.singular_values.len() + s.vt.rows() * s.vt.cols())
            .sum();
        let tables: usize = self.row_dims.iter().map(|i| 3 * i).sum();
        factors + svds + tables
    }

    pub fn split_index(&self, linear: usize) -> Vec<usize> {
        self.row_strides
            .iter()
            .zip(&self.row_dims)
            .map(|(s, d)| (linear / s) % d)
            .collect()
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        self.check_index(idx)?;
        Ok(idx.iter().zip(&self.row_strides).map(|(i, s)| i * s).sum())
    }

    fn check_index(&self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.order() {
            return dim_err(format!("expected {} indices, got {}", self.order(), idx.len()));
        }
        for (n, (&i, &d)) in idx.iter().zip(&self.row_dims).enumerate() {
            if i >= d {
                return arg_err(format!("index {i} out of range for factor {n} with {d} rows"));
            }
        }
        Ok(())
    }

    /// Row `⊗ₙ a⁽ⁿ⁾_{iₙ:}` of `K`.
    pub fn row(&self, idx: &[usize]) -> Result<Vec<f64>> {
        self.check_index(idx)?;
        let mut out = vec![0.0; self.ncols];
        self.fill_row(idx.iter().copied(), &mut out);
        Ok(out)
    }

    fn fill_row(&self, idx: impl Iterator<Item = usize>, out: &mut [f64]) {
        out[0] = 1.0;
        let mut len = 1;
        for (f, i) in self.factors.iter().zip(idx) {
            let a = f.row(i);
            let r = a.len();
            for p in (0..len).rev() {
                let v = out[p];
                for q in (0..r).rev() {
                    out[p * r + q] = v * a[q];
                }
            }
            len *= r;
        }
    }

    /// `ℓ_{(i₁…i_N)}(K) = Πₙ ℓ_{iₙ}(A⁽ⁿ⁾)`
    pub fn factored_leverage_score(&self, idx: &[usize]) -> Result<f64> {
        self.check_index(idx)?;
        Ok(idx
            .iter()
            .zip(&self.scores)
            .map(|(&i, s)| s.scores[i])
            .product())
    }

    /// Cross λ-ridge leverage score between rows `row_idx` and `col_idx` of `K`,
    /// summed over rank tuples of the factor SVDs in `O(ΠRₙ · N)`.
    pub fn ridge_cross_score(&self, row_idx: &[usize], col_idx: &[usize], lambda: f64) -> Result<f64> {
        self.check_index(row_idx)?;
        self.check_index(col_idx)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return arg_err(format!("lambda must be finite and non-negative, got {lambda}"));
        }
        let ranks: Vec<usize> = self.svds.iter().map(CompactSvd::rank).collect();
        let mut t = vec![0usize; ranks.len()];
        let total: usize = ranks.iter().product();
        let mut acc = 0.0;
        for _ in 0..total {
            let mut sigma2 = 1.0;
            let mut ui = 1.0;
            let mut uj = 1.0;
            for (n, svd) in self.svds.iter().enumerate() {
                let s = svd.singular_values[t[n]];
                sigma2 *= s * s;
                ui *= svd.u.get(row_idx[n], t[n]);
                uj *= svd.u.get(col_idx[n], t[n]);
            }
            acc += sigma2 / (sigma2 + lambda) * ui * uj;
            crate::tensor::increment(&mut t, &ranks);
        }
        Ok(acc)
    }

    /// Draws a row from the leverage distribution of `K`, returning the
    /// index tuple and its probability `Πₙ ℓ_{iₙ}(A⁽ⁿ⁾)/‖ℓ(A⁽ⁿ⁾)‖₁`.
    pub fn sample_row_index<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, f64) {
        let mut p = 1.0;
        let idx = self
            .tables
            .iter()
            .map(|t| {
                let i = t.lookup(rng.random::<f64>());
                p *= t.probability(i);
                i
            })
            .collect();
        (idx, p)
    }

    /// Dense `K`; refuses more than `max_entries` entries.
    pub fn materialize(&self, max_entries: usize) -> Result<DenseMatrix> {
        if self.nrows.saturating_mul(self.ncols) > max_entries {
            return Err(Error::TooLarge(format!(
                "{}x{} Kronecker product exceeds {max_entries} entries",
                self.nrows, self.ncols
            )));
        }
        let mut k = self.factors[0].clone();
        for f in &self.factors[1..] {
            k = k.kron(f);
        }
        Ok(k)
    }
}

impl RowAccess for ImplicitKronecker {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        let idx = self
            .row_strides
            .iter()
            .zip(&self.row_dims)
            .map(|(s, d)| (i / s) % d);
        self.fill_row(idx, out);
    }
}

impl RowDistribution for ImplicitKronecker {
    fn len(&self) -> usize {
        self.nrows
    }

    fn probability(&self, i: usize) -> f64 {
        self.split_index(i)
            .iter()
            .zip(&self.tables)
            .map(|(&k, t)| t.probability(k))
            .product()
    }

    fn sample_with<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> (usize, f64) {
        let mut p = 1.0;
        let mut linear = 0;
        for (n, t) in self.tables.iter().enumerate() {
            let un = if n == 0 { u } else { rng.random::<f64>() };
            let i = t.lookup(un);
            p *= t.probability(i);
            linear += i * self.row_strides[n];
        }
        (linear, p)
    }
}
