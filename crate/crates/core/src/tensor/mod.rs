//! Dense K-way tensors with mode-k unfolding, folding and mode products.
//!
//! Storage is first-index-fastest: the entry at zero-based multi-index
//! `(i_1, ..., i_K)` lives at `i_1 + n_1 * (i_2 + n_2 * (i_3 + ...))`.
//!
//! The mode-k unfolding places entry `(i_1, ..., i_K)` at row `i_k` and column
//! `sum_{l != k} i_l * prod_{m < l, m != k} n_m`, so the remaining indices vary
//! with the smallest mode fastest. For mode 0 this is the storage buffer read
//! as a column-major `n_1 x N/n_1` matrix.

mod io;
mod matrix;

pub use io::{read_tensor, read_tensor_file, write_tensor, write_tensor_file};
pub use matrix::DenseMatrix;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor from first-index-fastest data.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "{} values for dims {:?} (expected {len})",
                data.len(),
                dims
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Evaluates `f` at every zero-based multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_len(dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (i, n) in idx.iter_mut().zip(dims) {
                *i += 1;
                if *i < *n {
                    break;
                }
                *i = 0;
            }
        }
        Self::new(dims.to_vec(), data)
    }

    /// Outer product `a ∘ b ∘ ...` of the given vectors.
    pub fn outer(vectors: &[&[f64]]) -> Result<Self> {
        let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        Self::from_fn(&dims, |idx| {
            idx.iter().zip(vectors).map(|(&i, v)| v[i]).product()
        })
    }

    pub(crate) fn from_parts(dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of modes K.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Total number of entries N.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        if index.len() != self.dims.len() {
            return None;
        }
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &n) in index.iter().zip(&self.dims) {
            if i >= n {
                return None;
            }
            offset += i * stride;
            stride *= n;
        }
        Some(self.data[offset])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.dims.len(),
            });
        }
        Ok(())
    }

    fn check_same_dims(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// Mode-k unfolding: an `n_k x N/n_k` matrix whose columns are mode-k fibers.
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        self.check_mode(mode)?;
        Ok(DenseMatrix::wrap(self.unfold_raw(mode)))
    }

    pub(crate) fn unfold_raw(&self, mode: usize) -> DMatrix<f64> {
        let (left, n, right) = split_dims(&self.dims, mode);
        if mode == 0 {
            return DMatrix::from_column_slice(n, left * right, &self.data);
        }
        let mut out = vec![0.0; self.data.len()];
        for b in 0..right {
            for i in 0..n {
                let src = &self.data[left * (i + n * b)..left * (i + n * b + 1)];
                let col0 = left * b;
                for (a, &x) in src.iter().enumerate() {
                    out[i + n * (col0 + a)] = x;
                }
            }
        }
        DMatrix::from_vec(n, left * right, out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &DenseMatrix, mode: usize, dims: &[usize]) -> Result<Self> {
        checked_len(dims)?;
        if mode >= dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: dims.len(),
            });
        }
        let n = dims[mode];
        let len: usize = dims.iter().product();
        if m.rows() != n || m.rows() * m.cols() != len {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix cannot fold into dims {:?} along mode {mode}",
                m.rows(),
                m.cols(),
                dims
            )));
        }
        Ok(Self::fold_raw(m.as_nalgebra(), mode, dims))
    }

    pub(crate) fn fold_raw(m: &DMatrix<f64>, mode: usize, dims: &[usize]) -> Self {
        let (left, n, right) = split_dims(dims, mode);
        let src = m.as_slice();
        if mode == 0 {
            return Self::from_parts(dims.to_vec(), src.to_vec());
        }
        let mut out = vec![0.0; src.len()];
        for b in 0..right {
            for i in 0..n {
                let dst = &mut out[left * (i + n * b)..left * (i + n * b + 1)];
                let col0 = left * b;
                for (a, x) in dst.iter_mut().enumerate() {
                    *x = src[i + n * (col0 + a)];
                }
            }
        }
        Self::from_parts(dims.to_vec(), out)
    }

    /// Mode-k product `t ×_k M`: every mode-k fiber is multiplied by `M`.
    pub fn mode_product(&self, m: &DenseMatrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if m.cols() != self.dims[mode] {
            return Err(Error::ShapeMismatch(format!(
                "matrix with {} columns applied to mode {mode} of size {}",
                m.cols(),
                self.dims[mode]
            )));
        }
        let product = m.as_nalgebra() * self.unfold_raw(mode);
        let mut dims = self.dims.clone();
        dims[mode] = m.rows();
        Ok(Self::fold_raw(&product, mode, &dims))
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_parts(self.dims.clone(), self.data.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// `self += c * other`; dims must match.
    pub(crate) fn axpy(&mut self, c: f64, other: &DenseTensor) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub(crate) fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.dims, other.dims);
        Self::from_parts(
            self.dims.clone(),
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Sum of equally shaped tensors.
pub fn sum_tensors<'a>(tensors: impl IntoIterator<Item = &'a DenseTensor>) -> Option<DenseTensor> {
    let mut iter = tensors.into_iter();
    let mut acc = iter.next()?.clone();
    for t in iter {
        if t.dims != acc.dims {
            return None;
        }
        acc.axpy(1.0, t);
    }
    Some(acc)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidDims("a tensor needs at least one mode".into()));
    }
    if dims.iter().any(|&n| n == 0) {
        return Err(Error::InvalidDims(format!("zero-sized mode in {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidDims(format!("{dims:?} overflows")))
}

/// (product of dims before `mode`, dims[mode], product of dims after `mode`)
fn split_dims(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = dims[..mode].iter().product();
    let right = dims[mode + 1..].iter().product();
    (left, dims[mode], right)
}
