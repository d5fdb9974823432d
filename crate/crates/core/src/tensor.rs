//! Dense N-way tensors.
//!
//! Entries are stored with the last index varying fastest, and
//! vectorization uses the same order. With this convention
//! `vec(G ×₁ A⁽¹⁾ ⋯ ×_N A⁽ᴺ⁾) = (A⁽¹⁾ ⊗ ⋯ ⊗ A⁽ᴺ⁾) vec(G)`.
//!
//! The mode-`n` unfolding is `I_n × Π_{m≠n} I_m`; its columns enumerate the
//! remaining indices in increasing mode order, last one fastest. Modes are
//! zero-based throughout the API.
//!
//! # File format `DTEN1`
//!
//! | bytes        | content                                     |
//! |--------------|---------------------------------------------|
//! | 4            | magic `DTEN`                                |
//! | 1            | version, `u8` = 1                           |
//! | 4            | `N`, `u32` little-endian                    |
//! | 8·N          | shape, `u64` little-endian each             |
//! | 8·ΠI_n       | entries, `f64` little-endian, canonical order |

use crate::error::{arg_err, dim_err, Error, Result};
use crate::linalg::DenseMatrix;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub const MAX_ORDER: usize = 8;
const MAGIC: &[u8; 4] = b"DTEN";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn checked_numel(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_ORDER {
        return arg_err(format!("tensor order must be in 1..={MAX_ORDER}, got {}", shape.len()));
    }
    if shape.contains(&0) {
        return arg_err(format!("tensor dimensions must be positive, got {shape:?}"));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::TooLarge(format!("shape {shape:?} overflows")))
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let numel = checked_numel(&shape)?;
        if data.len() != numel {
            return dim_err(format!("shape {shape:?} needs {numel} entries, got {}", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor entries"));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let numel = checked_numel(&shape)?;
        Ok(Self {
            shape,
            data: vec![0.0; numel],
        })
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let numel = checked_numel(&shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Self::new(shape, data)
    }

    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return arg_err(format!("mode {mode} out of range for an order-{} tensor", self.order()));
        }
        Ok(())
    }

    /// `(left, I_mode, right)` block sizes around `mode`.
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.shape[..mode].iter().product();
        let right = self.shape[mode + 1..].iter().product();
        (left, self.shape[mode], right)
    }

    /// Mode-`mode` unfolding `X₍mode₎`.
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        self.check_mode(mode)?;
        let (left, dim, right) = self.split(mode);
        let cols = left * right;
        let mut out = vec![0.0; dim * cols];
        for l in 0..left {
            for i in 0..dim {
                let src = &self.data[(l * dim + i) * right..(l * dim + i + 1) * right];
                out[i * cols + l * right..i * cols + (l + 1) * right].copy_from_slice(src);
            }
        }
        Ok(DenseMatrix::from_raw(dim, cols, out))
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &DenseMatrix, mode: usize, shape: &[usize]) -> Result<Self> {
        let t = Self::zeros(shape.to_vec())?;
        t.check_mode(mode)?;
        let (left, dim, right) = t.split(mode);
        if m.rows() != dim || m.cols() != left * right {
            return dim_err(format!(
                "{}x{} matrix cannot fold into mode {mode} of {shape:?}",
                m.rows(),
                m.cols()
            ));
        }
        let mut data = t.data;
        let cols = left * right;
        let src = m.as_slice();
        for l in 0..left {
            for i in 0..dim {
                data[(l * dim + i) * right..(l * dim + i + 1) * right]
                    .copy_from_slice(&src[i * cols + l * right..i * cols + (l + 1) * right]);
            }
        }
        Ok(Self::from_raw(shape.to_vec(), data))
    }

    /// `self ×_mode m` for `m` of shape `J × I_mode`.
    pub fn mode_product(&self, m: &DenseMatrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, dim, right) = self.split(mode);
        if m.cols() != dim {
            return dim_err(format!(
                "mode-{mode} product needs {dim} matrix columns, got {}",
                m.cols()
            ));
        }
        let j_dim = m.rows();
        let mut out = vec![0.0; left * j_dim * right];
        for l in 0..left {
            for j in 0..j_dim {
                let dst = &mut out[(l * j_dim + j) * right..(l * j_dim + j + 1) * right];
                for (i, &coef) in m.row(j).iter().enumerate() {
                    if coef == 0.0 {
                        continue;
                    }
                    let src = &self.data[(l * dim + i) * right..(l * dim + i + 1) * right];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += coef * s;
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[mode] = j_dim;
        Ok(Self::from_raw(shape, out))
    }

    /// Chains `×ₙ mats[n]` over all modes where `mats[n]` is `Some`.
    pub fn multi_mode_product(&self, mats: &[Option<&DenseMatrix>]) -> Result<Self> {
        if mats.len() != self.order() {
            return dim_err("one optional matrix per mode is required");
        }
        // Apply the most shrinking products first to keep intermediates small.
        let mut order: Vec<usize> = (0..mats.len()).filter(|&n| mats[n].is_some()).collect();
        order.sort_by(|&a, &b| {
            let ra = mats[a].unwrap().rows() as f64 / self.shape[a] as f64;
            let rb = mats[b].unwrap().rows() as f64 / self.shape[b] as f64;
            ra.total_cmp(&rb)
        });
        let mut cur: Option<Self> = None;
        for n in order {
            let next = cur.as_ref().unwrap_or(self).mode_product(mats[n].unwrap(), n)?;
            cur = Some(next);
        }
        Ok(cur.unwrap_or_else(|| self.clone()))
    }

    pub fn vectorize(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn devectorize(v: Vec<f64>, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), v)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F`
    pub fn distance(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return dim_err(format!("shapes {:?} and {:?} differ", self.shape, other.shape));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// `‖self − other‖_F / √(Π I_n)`
    pub fn rmse(&self, other: &DenseTensor) -> Result<f64> {
        Ok(self.distance(other)? / (self.numel() as f64).sqrt())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 8 * self.order() + 8 * self.numel());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.order() as u32).to_le_bytes());
        for &s in &self.shape {
            out.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 9];
        r.read_exact(&mut head)
            .map_err(|_| Error::Format("truncated DTEN header".into()))?;
        if &head[..4] != MAGIC {
            return Err(Error::Format("missing DTEN magic".into()));
        }
        if head[4] != VERSION {
            return Err(Error::Format(format!("unsupported DTEN version {}", head[4])));
        }
        let order = u32::from_le_bytes(head[5..9].try_into().unwrap()) as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Format(format!("tensor order {order} outside 1..={MAX_ORDER}")));
        }
        let mut shape = Vec::with_capacity(order);
        for _ in 0..order {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|_| Error::Format("truncated DTEN shape".into()))?;
            let s = u64::from_le_bytes(b);
            shape.push(usize::try_from(s).map_err(|_| Error::Format(format!("dimension {s} too large")))?);
        }
        let numel = checked_numel(&shape).map_err(|e| Error::Format(e.to_string()))?;
        let nbytes = numel
            .checked_mul(8)
            .ok_or_else(|| Error::Format(format!("shape {shape:?} overflows")))?;
        let mut payload = Vec::new();
        r.take(nbytes as u64).read_to_end(&mut payload)?;
        if payload.len() != nbytes {
            return Err(Error::Format(format!(
                "truncated DTEN payload: expected {nbytes} bytes, got {}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(shape, data)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

pub fn write_tensor(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    t.write_to(std::io::BufWriter::new(f))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let f = std::fs::File::open(path)?;
    DenseTensor::read_from(BufReader::new(f))
}

/// Reads a tensor from CSV lines `i₁,…,i_N,value` with zero-based indices.
///
/// Blank lines and `#` comments are skipped. A comment of the form
/// `# shape: 2,3,4` fixes the shape; otherwise it is the per-mode maximum
/// index plus one. Unlisted entries are zero.
pub fn read_tensor_csv<R: Read>(r: R) -> Result<DenseTensor> {
    let mut declared: Option<Vec<usize>> = None;
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(spec) = comment.trim().strip_prefix("shape:") {
                let shape = spec
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Format(format!("line {}: bad shape: {e}", lineno + 1)))?;
                declared = Some(shape);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Format(format!("line {}: expected indices and a value", lineno + 1)));
        }
        let (idx, val) = fields.split_at(fields.len() - 1);
        let idx = idx
            .iter()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: bad index: {e}", lineno + 1)))?;
        let val: f64 = val[0]
            .parse()
            .map_err(|e| Error::Format(format!("line {}: bad value: {e}", lineno + 1)))?;
        if let Some(first) = entries.first() {
            if first.0.len() != idx.len() {
                return Err(Error::Format(format!("line {}: inconsistent tensor order", lineno + 1)));
            }
        }
        entries.push((idx, val));
    }
    let shape = match declared {
        Some(s) => s,
        None => {
            let order = entries
                .first()
                .map(|e| e.0.len())
                .ok_or_else(|| Error::Format("empty CSV tensor without a shape line".into()))?;
            (0..order)
                .map(|m| entries.iter().map(|e| e.0[m]).max().unwrap_or(0) + 1)
                .collect()
        }
    };
    let mut t = DenseTensor::zeros(shape)?;
    let strides = t.strides();
    for (idx, val) in entries {
        if idx.len() != t.order() || idx.iter().zip(&t.shape).any(|(i, s)| i >= s) {
            return Err(Error::Format(format!("index {idx:?} outside shape {:?}", t.shape)));
        }
        if !val.is_finite() {
            return Err(Error::NonFinite("CSV tensor value"));
        }
        let lin: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        t.data[lin] = val;
    }
    Ok(t)
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for n in (0..shape.len().saturating_sub(1)).rev() {
        s[n] = s[n + 1] * shape[n + 1];
    }
    s
}

/// Advances a multi-index in canonical order (last index fastest).
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for n in (0..idx.len()).rev() {
        idx[n] += 1;
        if idx[n] < shape[n] {
            return;
        }
        idx[n] = 0;
    }
}
