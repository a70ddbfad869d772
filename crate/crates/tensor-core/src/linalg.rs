//! Small dense factorizations: Householder QR, a cyclic Jacobi symmetric
//! eigensolver, and a scaled Taylor matrix exponential.
//!
//! All routines are deterministic: the same input bytes produce the same
//! output bytes, which keeps factor sweeps reproducible across runs.

use crate::matrix::Matrix;
use crate::TensorError;

/// Economy QR of an m×n matrix: returns (Q, R) with Q of size m×k and R of
/// size k×n upper triangular, k = min(m, n). The diagonal of R is made
/// non-negative by flipping signs, so the factorization of a matrix with full
/// column rank is unique.
pub fn qr_economy(a: &Matrix) -> (Matrix, Matrix) {
    let m = a.rows();
    let n = a.cols();
    let k = m.min(n);
    let mut work = a.clone();
    // Householder vectors, one per reflection, stored densely for the
    // backward accumulation of Q.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(k);

    for j in 0..k {
        let mut v = vec![0.0; m - j];
        let mut norm2 = 0.0;
        for i in j..m {
            let x = work[(i, j)];
            v[i - j] = x;
            norm2 += x * x;
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            vs.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            vs.push(Vec::new());
            work[(j, j)] = alpha;
            continue;
        }
        for col in j..n {
            let mut dot = 0.0;
            for i in j..m {
                dot += v[i - j] * work[(i, col)];
            }
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                work[(i, col)] -= f * v[i - j];
            }
        }
        vs.push(v);
    }

    let mut r = Matrix::zeros(k, n);
    for j in 0..n {
        for i in 0..k.min(j + 1) {
            r[(i, j)] = work[(i, j)];
        }
    }

    // Accumulate Q = H_0 · … · H_{k-1} applied to the first k identity columns.
    let mut q = Matrix::zeros(m, k);
    for j in 0..k {
        q[(j, j)] = 1.0;
    }
    for j in (0..k).rev() {
        let v = &vs[j];
        if v.is_empty() {
            continue;
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for col in 0..k {
            let mut dot = 0.0;
            for i in j..m {
                dot += v[i - j] * q[(i, col)];
            }
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                q[(i, col)] -= f * v[i - j];
            }
        }
    }

    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for col in j..n {
                r[(j, col)] = -r[(j, col)];
            }
            for i in 0..m {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }

    (q, r)
}

/// QR of a tall matrix (rows ≥ cols): Q is m×n with orthonormal columns and
/// R is n×n upper triangular with non-negative diagonal.
pub fn qr_orthonormal(a: &Matrix) -> Result<(Matrix, Matrix), TensorError> {
    if a.rows() < a.cols() {
        return Err(TensorError::NotTall { rows: a.rows(), cols: a.cols() });
    }
    Ok(qr_economy(a))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending and
/// each eigenvector's largest-magnitude entry (first such index) made
/// non-negative, so the output is deterministic up to degeneracies.
pub fn sym_eig(a: &Matrix) -> Result<(Vec<f64>, Matrix), TensorError> {
    if !a.is_square() {
        return Err(TensorError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let mut d = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm().max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += d[(p, q)] * d[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = d[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (d[(q, q)] - d[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let dip = d[(i, p)];
                    let diq = d[(i, q)];
                    d[(i, p)] = c * dip - s * diq;
                    d[(i, q)] = s * dip + c * diq;
                }
                for i in 0..n {
                    let dpi = d[(p, i)];
                    let dqi = d[(q, i)];
                    d[(p, i)] = c * dpi - s * dqi;
                    d[(q, i)] = s * dpi + c * dqi;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[(j, j)].partial_cmp(&d[(i, i)]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (out_col, &src_col) in order.iter().enumerate() {
        values.push(d[(src_col, src_col)]);
        let mut max_abs = 0.0;
        let mut max_i = 0;
        for i in 0..n {
            let x = v[(i, src_col)].abs();
            if x > max_abs {
                max_abs = x;
                max_i = i;
            }
        }
        let sign = if v[(max_i, src_col)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, out_col)] = sign * v[(i, src_col)];
        }
    }
    Ok((values, vectors))
}

/// Matrix exponential by scaling and squaring around a Taylor series.
/// Accurate to near machine precision for the moderate norms seen here.
pub fn matrix_exp(a: &Matrix) -> Result<Matrix, TensorError> {
    if !a.is_square() {
        return Err(TensorError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let norm = a.frobenius_norm();
    let mut squarings = 0u32;
    let mut scaled = a.clone();
    while norm / f64::powi(2.0, squarings as i32) > 0.5 {
        squarings += 1;
    }
    if squarings > 0 {
        scaled = scaled.scale(1.0 / f64::powi(2.0, squarings as i32));
    }

    let n = a.rows();
    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=24 {
        term = term.matmul(&scaled).unwrap().scale(1.0 / k as f64);
        result = result.add(&term).unwrap();
        if term.frobenius_norm() < 1e-18 * result.frobenius_norm().max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result).unwrap();
    }
    Ok(result)
}
