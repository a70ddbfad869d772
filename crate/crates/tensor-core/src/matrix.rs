//! Dense column-major matrices sized for desk-scale factor algebra.

use crate::TensorError;

/// Dense real matrix, column-major storage: entry (i, j) lives at `i + rows * j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i + n * i] = 1.0;
        }
        m
    }

    /// Builds from a column-major slice; length must equal rows * cols.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i + rows * j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[j + self.cols * i] = self.data[i + self.rows * j];
            }
        }
        t
    }

    /// C = self * other.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, TensorError> {
        if self.cols != other.rows {
            return Err(TensorError::InnerDimensionMismatch {
                left: self.cols,
                right: other.rows,
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut c = Matrix::zeros(m, n);
        for j in 0..n {
            let cj = &mut c.data[j * m..(j + 1) * m];
            for l in 0..k {
                let f = other.data[l + k * j];
                if f == 0.0 {
                    continue;
                }
                let al = &self.data[l * m..(l + 1) * m];
                for i in 0..m {
                    cj[i] += f * al[i];
                }
            }
        }
        Ok(c)
    }

    /// C = selfᵀ * other, without materializing the transpose.
    pub fn matmul_tn(&self, other: &Matrix) -> Result<Matrix, TensorError> {
        if self.rows != other.rows {
            return Err(TensorError::InnerDimensionMismatch {
                left: self.rows,
                right: other.rows,
            });
        }
        let (m, k, n) = (self.cols, self.rows, other.cols);
        let mut c = Matrix::zeros(m, n);
        for j in 0..n {
            let bj = &other.data[j * k..(j + 1) * k];
            for i in 0..m {
                let ai = &self.data[i * k..(i + 1) * k];
                let mut acc = 0.0;
                for l in 0..k {
                    acc += ai[l] * bj[l];
                }
                c.data[i + m * j] = acc;
            }
        }
        Ok(c)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, TensorError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(TensorError::ShapeMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, TensorError> {
        self.add(&other.scale(-1.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// ‖selfᵀ·self − I‖_F, the orthonormality defect of the columns.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.cols {
            for i in 0..self.cols {
                let mut dot = 0.0;
                let ci = self.col(i);
                let cj = self.col(j);
                for l in 0..self.rows {
                    dot += ci[l] * cj[l];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                acc += (dot - target) * (dot - target);
            }
        }
        acc.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + self.rows * j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + self.rows * j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small_known_product() {
        let a = Matrix::from_col_major(2, 2, vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let b = Matrix::from_col_major(2, 2, vec![5.0, 7.0, 6.0, 8.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        // [[1,2],[3,4]] * [[5,6],[7,8]] = [[19,22],[43,50]]
        assert_eq!(c[(0, 0)], 19.0);
        assert_eq!(c[(0, 1)], 22.0);
        assert_eq!(c[(1, 0)], 43.0);
        assert_eq!(c[(1, 1)], 50.0);
    }

    #[test]
    fn matmul_tn_matches_explicit_transpose() {
        let a = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.5 - 1.0);
        let b = Matrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 + 0.25);
        let fast = a.matmul_tn(&b).unwrap();
        let slow = a.transpose().matmul(&b).unwrap();
        for j in 0..2 {
            for i in 0..3 {
                assert!((fast[(i, j)] - slow[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn inner_dimension_mismatch_is_reported() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        assert!(matches!(
            a.matmul(&b),
            Err(TensorError::InnerDimensionMismatch { left: 3, right: 2 })
        ));
    }

    #[test]
    fn orthonormality_deviation_of_identity_is_zero() {
        assert_eq!(Matrix::identity(4).orthonormality_deviation(), 0.0);
    }
}
