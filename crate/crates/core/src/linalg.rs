//! Dense linear algebra: the matrix type, a one-sided Jacobi SVD, a cyclic
//! Jacobi symmetric eigensolver, Cholesky, pseudoinverse and exact
//! least-squares / ridge solves.
//!
//! Matrices are stored row-major. Column access walks the buffer with stride
//! `cols`.

use crate::error::{arg_err, dim_err, Error, Result};
use serde::{Deserialize, Serialize};

/// Sweep cap for both Jacobi iterations.
pub const MAX_SWEEPS: usize = 100;

/// Row-major matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::TooLarge(format!("{rows}x{cols} matrix")))?;
        if data.len() != expected {
            return dim_err(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return dim_err(format!("row {i} has length {} but expected {cols}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Fills entry `(i, j)` with `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Wraps a buffer produced by arithmetic on finite inputs.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.cols.max(1)).copied().take(self.rows).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return dim_err(format!("vector of length {} for {} columns", x.len(), self.cols));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ y`
    pub fn t_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return dim_err(format!("vector of length {} for {} rows", y.len(), self.rows));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, self.row(i), &mut out);
        }
        Ok(out)
    }

    /// `AᵀA`
    pub fn gram(&self) -> DenseMatrix {
        let d = self.cols;
        let mut g = Self::zeros(d, d);
        for i in 0..self.rows {
            add_outer_upper(&mut g.data, d, self.row(i), 1.0);
        }
        mirror_upper(&mut g.data, d);
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|v| alpha * v).collect())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return dim_err("shapes differ in subtraction");
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return dim_err("column counts differ in vstack");
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self::from_raw(self.rows + other.rows, self.cols, data))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<DenseMatrix> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return arg_err(format!("row {i} out of range for {} rows", self.rows));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self::from_raw(idx.len(), self.cols, data))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let (r1, c1) = self.shape();
        let (r2, c2) = other.shape();
        let mut out = Self::zeros(r1 * r2, c1 * c2);
        for i1 in 0..r1 {
            for j1 in 0..c1 {
                let a = self.get(i1, j1);
                for i2 in 0..r2 {
                    for j2 in 0..c2 {
                        out.data[(i1 * r2 + i2) * (c1 * c2) + j1 * c2 + j2] = a * other.get(i2, j2);
                    }
                }
            }
        }
        out
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `g[upper] += w · x xᵀ` on a `d × d` row-major buffer.
#[inline]
pub(crate) fn add_outer_upper(g: &mut [f64], d: usize, x: &[f64], w: f64) {
    for i in 0..d {
        let wi = w * x[i];
        if wi == 0.0 {
            continue;
        }
        let row = &mut g[i * d..(i + 1) * d];
        for j in i..d {
            row[j] += wi * x[j];
        }
    }
}

pub(crate) fn mirror_upper(g: &mut [f64], d: usize) {
    for i in 0..d {
        for j in 0..i {
            g[i * d + j] = g[j * d + i];
        }
    }
}

/// Compact SVD `A = U diag(σ) Vᵀ` keeping only numerically nonzero σ.
#[derive(Debug, Clone)]
pub struct CompactSvd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub vt: DenseMatrix,
}

impl CompactSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows {
            for (k, s) in self.singular_values.iter().enumerate() {
                us.data[i * us.cols + k] *= s;
            }
        }
        us.matmul(&self.vt).expect("consistent SVD shapes")
    }

    /// `V` as an `n × r` matrix.
    pub fn v(&self) -> DenseMatrix {
        self.vt.transpose()
    }
}

/// Numerical-rank threshold: σ ≤ max(m, n) · ε_mach · σ_max counts as zero.
pub fn rank_cutoff(m: usize, n: usize, sigma_max: f64) -> f64 {
    m.max(n) as f64 * f64::EPSILON * sigma_max
}

/// One-sided Jacobi SVD.
///
/// Works on the columns of `A` (or of `Aᵀ` when `A` is wide). A pair of
/// columns is rotated while `|gᵢⱼ| > τ·√(gᵢᵢ gⱼⱼ)` with
/// `τ = max(1e-15, ε_mach·√m)` and both columns exceed `ε_mach·‖A‖_F` in
/// norm; every off-diagonal Gram entry of the
/// converged iterate therefore also sits below `1e-14·‖A‖_F²` for the
/// matrix sizes used here.
pub fn compact_svd(a: &DenseMatrix) -> Result<CompactSvd> {
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("compact_svd input"));
    }
    if a.rows < a.cols {
        let t = compact_svd(&a.transpose())?;
        return Ok(CompactSvd {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        });
    }
    let (m, n) = a.shape();
    // column-major working copy
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = 1e-15f64.max(f64::EPSILON * (m as f64).sqrt());
    // columns this small are below the rank cutoff; rotating them only mixes noise
    let floor = (f64::EPSILON * a.frobenius_norm()).powi(2);
    let mut converged = n < 2;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || alpha <= floor || beta <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::SvdNotConverged { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<(f64, usize)> = w.iter().enumerate().map(|(j, c)| (dot(c, c).sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let sigma_max = order.first().map_or(0.0, |o| o.0);
    let cutoff = rank_cutoff(m, n, sigma_max);
    let kept: Vec<(f64, usize)> = order.into_iter().filter(|(s, _)| *s > cutoff && *s > 0.0).collect();
    let r = kept.len();

    let mut u = DenseMatrix::zeros(m, r);
    let mut vt = DenseMatrix::zeros(r, n);
    let mut singular_values = Vec::with_capacity(r);
    for (k, &(s, j)) in kept.iter().enumerate() {
        singular_values.push(s);
        for i in 0..m {
            u.data[i * r + k] = w[j][i] / s;
        }
        vt.row_mut(k).copy_from_slice(&v[j]);
    }
    Ok(CompactSvd { u, singular_values, vt })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues in non-increasing order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: DenseMatrix,
}

/// Cyclic Jacobi eigensolver. Only the upper triangle of `a` is trusted to be
/// symmetric with the lower one; asymmetry beyond 1e-8 relative is rejected.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = a.rows;
    if a.cols != n {
        return dim_err("symmetric_eigen needs a square matrix");
    }
    let scale = a.frobenius_norm();
    for i in 0..n {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > 1e-8 * scale.max(1e-300) {
                return arg_err("matrix is not symmetric");
            }
        }
    }
    let mut m = a.data.clone();
    let mut vecs = DenseMatrix::identity(n);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off <= (1e-30 * scale * scale).max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = vecs.data[k * n + p];
                    let vkq = vecs.data[k * n + q];
                    vecs.data[k * n + p] = c * vkp - s * vkq;
                    vecs.data[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNotConverged { sweeps: MAX_SWEEPS });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y * n + y].total_cmp(&m[x * n + x]));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, k| vecs.data[i * n + order[k]])?;
    Ok(SymmetricEigen { values, vectors })
}

/// Moore–Penrose pseudoinverse `V Σ⁻¹ Uᵀ`.
pub fn pseudoinverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let svd = compact_svd(a)?;
    let (m, n) = a.shape();
    let r = svd.rank();
    let mut out = DenseMatrix::zeros(n, m);
    for k in 0..r {
        let inv = 1.0 / svd.singular_values[k];
        for i in 0..n {
            let vik = svd.vt.get(k, i) * inv;
            if vik == 0.0 {
                continue;
            }
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                *o += vik * svd.u.get(j, k);
            }
        }
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn new(a: &DenseMatrix) -> Option<Self> {
        let n = a.rows;
        if a.cols != n {
            return None;
        }
        let mut l = DenseMatrix::zeros(n, n);
        let tiny = 1e-14 * (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
        for j in 0..n {
            let mut diag = a.get(j, j);
            for k in 0..j {
                diag -= l.get(j, k) * l.get(j, k);
            }
            if !(diag > tiny) {
                return None;
            }
            let ljj = diag.sqrt();
            l.set(j, j, ljj);
            for i in (j + 1)..n {
                let mut v = a.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, v / ljj);
            }
        }
        Some(Self { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= self.l.get(i, k) * y[k];
            }
            y[i] = v / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in (i + 1)..n {
                v -= self.l.get(k, i) * y[k];
            }
            y[i] = v / self.l.get(i, i);
        }
        y
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }
}

/// Solver for `G x = r` with symmetric positive semidefinite `G`: Cholesky when
/// `G` is definite, the pseudoinverse otherwise.
pub(crate) enum PsdSolver {
    Cholesky(Cholesky),
    Pinv(DenseMatrix),
}

impl PsdSolver {
    pub(crate) fn new(g: &DenseMatrix) -> Result<Self> {
        match Cholesky::new(g) {
            Some(c) => Ok(PsdSolver::Cholesky(c)),
            None => Ok(PsdSolver::Pinv(pseudoinverse(g)?)),
        }
    }

    pub(crate) fn solve(&self, r: &[f64]) -> Vec<f64> {
        match self {
            PsdSolver::Cholesky(c) => c.solve(r),
            PsdSolver::Pinv(p) => p.matvec(r).expect("square system"),
        }
    }
}

/// Minimizer of `‖A x − b‖² + λ‖x‖²`, computed as `(AᵀA + λI)⁺ Aᵀ b`.
pub fn solve_ridge_exact(a: &DenseMatrix, b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if b.len() != a.rows {
        return dim_err(format!("response has length {} but design has {} rows", b.len(), a.rows));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return arg_err(format!("lambda must be finite and non-negative, got {lambda}"));
    }
    let mut g = a.gram();
    for i in 0..a.cols {
        g.data[i * a.cols + i] += lambda;
    }
    let rhs = a.t_matvec(b)?;
    solve_normal_equations(&g, &rhs)
}

/// Minimizer of `‖A x − b‖²` (minimum-norm when rank deficient).
pub fn solve_ls_exact(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    solve_ridge_exact(a, b, 0.0)
}

/// `G⁺ r` for a symmetric positive semidefinite Gram matrix.
pub(crate) fn solve_normal_equations(g: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let pinv = pseudoinverse(g)?;
    pinv.matvec(rhs)
}

/// `‖A x − b‖² + λ‖x‖²`
pub fn ridge_objective(a: &DenseMatrix, b: &[f64], lambda: f64, x: &[f64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    if ax.len() != b.len() {
        return dim_err("response length does not match design rows");
    }
    let resid: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    Ok(resid + lambda * dot(x, x))
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

    /// Independent oracle for σ: eigenvalues of AᵀA from nalgebra.
    fn oracle_singular_values(a: &DenseMatrix) -> Vec<f64> {
        let g = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
        let gram = g.transpose() * &g;
        let mut ev: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn svd_identity() {
        let svd = compact_svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(svd.singular_values, vec![1.0, 1.0, 1.0]);
        assert_eq!(svd.u, DenseMatrix::identity(3));
        assert_eq!(svd.vt, DenseMatrix::identity(3));
    }

    #[test]
    fn svd_truncates_zero_singular_value() {
        let a = DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, 0.0]]).unwrap();
        let svd = compact_svd(&a).unwrap();
        assert_eq!(svd.rank(), 1);
        assert_eq!(svd.singular_values, vec![3.0]);
    }

    #[test]
    fn svd_zero_matrix_has_rank_zero() {
        let svd = compact_svd(&DenseMatrix::zeros(4, 3)).unwrap();
        assert_eq!(svd.rank(), 0);
        assert_eq!(svd.u.shape(), (4, 0));
        assert_eq!(svd.vt.shape(), (0, 3));
    }

    #[test]
    fn svd_random_matches_gram_eigenvalues() {
        let a = random(6, 4, 1);
        let svd = compact_svd(&a).unwrap();
        let err = svd.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        assert!(err <= 1e-10, "reconstruction error {err}");
        let oracle = oracle_singular_values(&a);
        for (s, o) in svd.singular_values.iter().zip(&oracle) {
            assert!((s - o).abs() <= 1e-10, "{s} vs {o}");
        }
    }

    #[test]
    fn svd_wide_and_tall_orthonormal() {
        for (m, n, seed) in [(200, 50, 2), (7, 19, 3), (50, 50, 4)] {
            let a = random(m, n, seed);
            let svd = compact_svd(&a).unwrap();
            let utu = svd.u.transpose().matmul(&svd.u).unwrap();
            let vvt = svd.vt.matmul(&svd.vt.transpose()).unwrap();
            let r = svd.rank();
            assert!(utu.sub(&DenseMatrix::identity(r)).unwrap().frobenius_norm() <= 1e-10);
            assert!(vvt.sub(&DenseMatrix::identity(r)).unwrap().frobenius_norm() <= 1e-10);
            let err = svd.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
            assert!(err <= 1e-10, "{m}x{n}: {err}");
            assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn pseudoinverse_diagonal_and_zero() {
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        let p = pseudoinverse(&a).unwrap();
        assert_eq!(p, DenseMatrix::from_rows(&[[0.5, 0.0], [0.0, 0.25]]).unwrap());
        let z = pseudoinverse(&DenseMatrix::zeros(3, 2)).unwrap();
        assert_eq!(z, DenseMatrix::zeros(2, 3));
    }

    #[test]
    fn pseudoinverse_penrose_conditions() {
        let a = random(5, 3, 7);
        let p = pseudoinverse(&a).unwrap();
        let apa = a.matmul(&p).unwrap().matmul(&a).unwrap();
        let pap = p.matmul(&a).unwrap().matmul(&p).unwrap();
        let ap = a.matmul(&p).unwrap();
        let pa = p.matmul(&a).unwrap();
        assert!(apa.max_abs_diff(&a) <= 1e-9);
        assert!(pap.max_abs_diff(&p) <= 1e-9);
        assert!(ap.max_abs_diff(&ap.transpose()) <= 1e-9);
        assert!(pa.max_abs_diff(&pa.transpose()) <= 1e-9);
    }

    #[test]
    fn ridge_on_identity() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(solve_ridge_exact(&i2, &[2.0, 4.0], 0.0).unwrap(), vec![2.0, 4.0]);
        let x = solve_ridge_exact(&i2, &[2.0, 4.0], 1.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve_ridge_exact(&i2, &[1.0], 0.0).is_err());
        assert!(solve_ridge_exact(&i2, &[1.0, 2.0], -1.0).is_err());
    }

    #[test]
    fn ridge_matches_cholesky_oracle() {
        let a = random(20, 5, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_ridge_exact(&a, &b, 0.1).unwrap();
        let na = nalgebra::DMatrix::from_row_slice(20, 5, a.as_slice());
        let nb = nalgebra::DVector::from_vec(b.clone());
        let g = na.transpose() * &na + nalgebra::DMatrix::identity(5, 5) * 0.1;
        let oracle = g.cholesky().unwrap().solve(&(na.transpose() * nb));
        for (xi, oi) in x.iter().zip(oracle.iter()) {
            assert!((xi - oi).abs() < 1e-10);
        }
    }

    #[test]
    fn ridge_is_local_minimum() {
        let a = random(15, 4, 21);
        let b: Vec<f64> = (0..15).map(|i| (i as f64).sin()).collect();
        let x = solve_ridge_exact(&a, &b, 0.3).unwrap();
        let f0 = ridge_objective(&a, &b, 0.3, &x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect();
            assert!(ridge_objective(&a, &b, 0.3, &y).unwrap() >= f0);
        }
    }

    #[test]
    fn ridge_equals_augmented_least_squares() {
        let a = random(12, 3, 31);
        let b: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).cos()).collect();
        let lambda: f64 = 0.8;
        let aug = a.vstack(&DenseMatrix::identity(3).scaled(lambda.sqrt())).unwrap();
        let mut b_aug = b.clone();
        b_aug.extend([0.0; 3]);
        let x1 = solve_ridge_exact(&a, &b, lambda).unwrap();
        let x2 = solve_ls_exact(&aug, &b_aug).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn least_squares_examples() {
        let a = DenseMatrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let x = solve_ls_exact(&a, &[1.0, 3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        let x = solve_ls_exact(&DenseMatrix::identity(3), &[1.5, -2.0, 7.0]).unwrap();
        assert_eq!(x, vec![1.5, -2.0, 7.0]);

        let a = random(10, 3, 41);
        let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let x = solve_ls_exact(&a, &b).unwrap();
        let ax = a.matvec(&x).unwrap();
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        for v in a.t_matvec(&r).unwrap() {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn eigen_matches_nalgebra() {
        let a = random(6, 6, 51);
        let s = a.matmul(&a.transpose()).unwrap();
        let eig = symmetric_eigen(&s).unwrap();
        let ns = nalgebra::DMatrix::from_row_slice(6, 6, s.as_slice());
        let mut oracle: Vec<f64> = ns.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(|x, y| y.total_cmp(x));
        for (e, o) in eig.values.iter().zip(&oracle) {
            assert!((e - o).abs() < 1e-10);
        }
        // A v = λ v
        for k in 0..6 {
            let v = eig.vectors.column(k);
            let av = s.matvec(&v).unwrap();
            for (x, y) in av.iter().zip(&v) {
                assert!((x - eig.values[k] * y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(Cholesky::new(&a).is_none());
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let x = Cholesky::new(&a).unwrap().solve(&[2.0, 1.0]);
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kron_small() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let k = a.kron(&b);
        assert_eq!(k, DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 6.0]]).unwrap());
    }
}
