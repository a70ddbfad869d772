//! Dense tensors with a fixed linearization: the first index varies fastest.
//!
//! Every unfolding and mode product in this crate is defined against that
//! single layout, so `tensorize(matricize(t, k), k, dims)` is bit-exact.

use crate::matrix::Matrix;
use crate::TensorError;

/// Identifies one axis of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mode(pub usize);

/// Dense real tensor. `data[lin]` holds the entry whose multi-index
/// (i_0, …, i_{d-1}) satisfies lin = Σ_k i_k · stride_k with
/// stride_k = n_0 · … · n_{k-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        DenseTensor { dims: dims.to_vec(), data: vec![0.0; len] }
    }

    pub fn from_data(dims: &[usize], data: Vec<f64>) -> Result<Self, TensorError> {
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(TensorError::ShapeMismatch { expected: len, got: data.len() });
        }
        Ok(DenseTensor { dims: dims.to_vec(), data })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = DenseTensor::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for lin in 0..t.data.len() {
            t.data[lin] = f(&idx);
            advance(&mut idx, dims);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[linear_index(&self.dims, idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let lin = linear_index(&self.dims, idx);
        self.data[lin] = value;
    }

    /// Reinterprets the buffer under new dims; total size must match.
    pub fn reshape(&self, dims: &[usize]) -> Result<DenseTensor, TensorError> {
        let len: usize = dims.iter().product();
        if len != self.data.len() {
            return Err(TensorError::ShapeMismatch { expected: self.data.len(), got: len });
        }
        Ok(DenseTensor { dims: dims.to_vec(), data: self.data.clone() })
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64, TensorError> {
        if self.dims != other.dims {
            return Err(TensorError::ShapeMismatch {
                expected: self.data.len(),
                got: other.data.len(),
            });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> DenseTensor {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    /// self + factor · other.
    pub fn add_scaled(&self, factor: f64, other: &DenseTensor) -> Result<DenseTensor, TensorError> {
        if self.dims != other.dims {
            return Err(TensorError::ShapeMismatch {
                expected: self.data.len(),
                got: other.data.len(),
            });
        }
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += factor * w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor, TensorError> {
        self.add_scaled(-1.0, other)
    }
}

/// Linear offset of a multi-index under the first-index-fastest layout.
pub fn linear_index(dims: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), idx.len());
    let mut lin = 0;
    let mut stride = 1;
    for (k, &i) in idx.iter().enumerate() {
        debug_assert!(i < dims[k]);
        lin += i * stride;
        stride *= dims[k];
    }
    lin
}

/// Odometer step: increments `idx` with the first position fastest.
fn advance(idx: &mut [usize], dims: &[usize]) {
    for k in 0..idx.len() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// All multi-indices of `dims` in linearization order.
pub fn each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    let len: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..len {
        f(&idx);
        advance(&mut idx, dims);
    }
}

/// Mode-k unfolding. Row index is i_k; the column index packs the remaining
/// indices keeping their relative order and the global fastest-first rule,
/// so mode 0 is a pure buffer reinterpret.
pub fn matricize(t: &DenseTensor, mode: Mode) -> Result<Matrix, TensorError> {
    let k = mode.0;
    if k >= t.dims.len() {
        return Err(TensorError::ModeOutOfRange { mode: k, order: t.dims.len() });
    }
    let n_k = t.dims[k];
    let total = t.data.len();
    let cols = if n_k == 0 { 0 } else { total / n_k };
    if k == 0 {
        return Matrix::from_col_major(n_k, cols, t.data.clone());
    }
    let stride: usize = t.dims[..k].iter().product();
    let outer = if stride * n_k == 0 { 0 } else { total / (stride * n_k) };
    let mut m = Matrix::zeros(n_k, cols);
    for post in 0..outer {
        for i in 0..n_k {
            let src = stride * (i + n_k * post);
            for pre in 0..stride {
                let col = pre + stride * post;
                m[(i, col)] = t.data[src + pre];
            }
        }
    }
    Ok(m)
}

/// Inverse of `matricize`: rebuilds the tensor of shape `dims` whose mode-k
/// unfolding is `m`. Requires dims[k] == m.rows and the sizes to agree.
pub fn tensorize(m: &Matrix, mode: Mode, dims: &[usize]) -> Result<DenseTensor, TensorError> {
    let k = mode.0;
    if k >= dims.len() {
        return Err(TensorError::ModeOutOfRange { mode: k, order: dims.len() });
    }
    let total: usize = dims.iter().product();
    if m.rows() != dims[k] || m.rows() * m.cols() != total {
        return Err(TensorError::ShapeMismatch { expected: total, got: m.rows() * m.cols() });
    }
    if k == 0 {
        return DenseTensor::from_data(dims, m.data().to_vec());
    }
    let n_k = dims[k];
    let stride: usize = dims[..k].iter().product();
    let outer = if stride * n_k == 0 { 0 } else { total / (stride * n_k) };
    let mut t = DenseTensor::zeros(dims);
    for post in 0..outer {
        for i in 0..n_k {
            let dst = stride * (i + n_k * post);
            for pre in 0..stride {
                let col = pre + stride * post;
                t.data[dst + pre] = m[(i, col)];
            }
        }
    }
    Ok(t)
}

/// Mode-k product t ×_k m: contracts index k of `t` with the columns of `m`,
/// so the result has dims[k] = m.rows.
pub fn mode_multiply(t: &DenseTensor, mode: Mode, m: &Matrix) -> Result<DenseTensor, TensorError> {
    let k = mode.0;
    if k >= t.dims.len() {
        return Err(TensorError::ModeOutOfRange { mode: k, order: t.dims.len() });
    }
    if m.cols() != t.dims[k] {
        return Err(TensorError::InnerDimensionMismatch { left: m.cols(), right: t.dims[k] });
    }
    let mut dims = t.dims.clone();
    dims[k] = m.rows();
    if k == 0 {
        // mat_0 is a reinterpret, so this is one matmul on the raw buffer.
        let unfolded = Matrix::from_col_major(t.dims[0], t.data.len() / t.dims[0].max(1), t.data.clone())?;
        let product = m.matmul(&unfolded)?;
        return DenseTensor::from_data(&dims, product.into_data());
    }
    let unfolded = matricize(t, mode)?;
    let product = m.matmul(&unfolded)?;
    tensorize(&product, mode, &dims)
}

/// Applies t ×_k m_k for every (k, m_k) pair in order.
pub fn mode_multiply_all(
    t: &DenseTensor,
    factors: &[(Mode, &Matrix)],
) -> Result<DenseTensor, TensorError> {
    let mut out = t.clone();
    for (mode, m) in factors {
        out = mode_multiply(&out, *mode, m)?;
    }
    Ok(out)
}
