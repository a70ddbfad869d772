//! Property tests for the layout contract: round trips, the unfolding of a
//! multi-mode product, and algebraic laws the kernels must satisfy.

use proptest::prelude::*;
use tensor_core::{
    matricize, mode_multiply, qr_economy, tensorize, DenseTensor, Matrix, Mode,
};

/// Kronecker product with the second factor indexing fastest, matching the
/// first-index-fastest tensor layout.
fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |i, j| {
        let (ia, ib) = (i / b.rows(), i % b.rows());
        let (ja, jb) = (j / b.cols(), j % b.cols());
        a[(ia, ja)] * b[(ib, jb)]
    })
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 2..=4)
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    dims_strategy().prop_flat_map(|dims| {
        let len: usize = dims.iter().product();
        prop::collection::vec(-1.0f64..1.0, len)
            .prop_map(move |data| DenseTensor::from_data(&dims, data).unwrap())
    })
}

proptest! {
    #[test]
    fn matricize_tensorize_round_trip(t in tensor_strategy()) {
        for k in 0..t.order() {
            let m = matricize(&t, Mode(k)).unwrap();
            let back = tensorize(&m, Mode(k), t.dims()).unwrap();
            prop_assert_eq!(back.data(), t.data());
        }
    }

    #[test]
    fn unfolding_of_full_mode_product(t in tensor_strategy(), seed in 0u64..1000) {
        let d = t.order();
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let factors: Vec<Matrix> = t
            .dims()
            .iter()
            .map(|&n| Matrix::from_fn(n + 1, n, |_, _| next()))
            .collect();

        let mut product = t.clone();
        for (k, u) in factors.iter().enumerate() {
            product = mode_multiply(&product, Mode(k), u).unwrap();
        }

        for k in 0..d {
            // mat_k(C ×_0 U_0 … ×_{d-1} U_{d-1})
            //   = U_k · mat_k(C) · (U_{d-1} ⊗ … skip k … ⊗ U_0)ᵀ
            let mut others = Matrix::identity(1);
            for j in (0..d).rev() {
                if j != k {
                    others = kron(&others, &factors[j]);
                }
            }
            let lhs = matricize(&product, Mode(k)).unwrap();
            let rhs = factors[k]
                .matmul(&matricize(&t, Mode(k)).unwrap())
                .unwrap()
                .matmul(&others.transpose())
                .unwrap();
            let err = lhs.sub(&rhs).unwrap().frobenius_norm();
            prop_assert!(err <= 1e-12 * lhs.frobenius_norm().max(1.0), "mode {}: {}", k, err);
        }
    }

    #[test]
    fn mode_product_is_linear(t in tensor_strategy(), alpha in -2.0f64..2.0) {
        let k = t.order() - 1;
        let m = Matrix::from_fn(3, t.dims()[k], |i, j| ((i * 5 + j * 3) as f64).cos());
        let scaled_then_mul = mode_multiply(&t.scale(alpha), Mode(k), &m).unwrap();
        let mul_then_scaled = mode_multiply(&t, Mode(k), &m).unwrap().scale(alpha);
        let err = scaled_then_mul.sub(&mul_then_scaled).unwrap().norm();
        prop_assert!(err <= 1e-12 * mul_then_scaled.norm().max(1.0));
    }

    #[test]
    fn mode_products_on_distinct_modes_commute(t in tensor_strategy()) {
        prop_assume!(t.order() >= 2);
        let a = Matrix::from_fn(2, t.dims()[0], |i, j| ((i + 2 * j) as f64).sin());
        let b = Matrix::from_fn(2, t.dims()[1], |i, j| ((3 * i + j) as f64).cos());
        let ab = mode_multiply(&mode_multiply(&t, Mode(0), &a).unwrap(), Mode(1), &b).unwrap();
        let ba = mode_multiply(&mode_multiply(&t, Mode(1), &b).unwrap(), Mode(0), &a).unwrap();
        let err = ab.sub(&ba).unwrap().norm();
        prop_assert!(err <= 1e-12 * ab.norm().max(1.0));
    }

    #[test]
    fn qr_reconstructs_and_is_deterministic(
        rows in 1usize..8,
        cols in 1usize..8,
        seed in 0u64..1000,
    ) {
        let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(7);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = Matrix::from_fn(rows, cols, |_, _| next());
        let (q, r) = qr_economy(&a);
        let (q2, r2) = qr_economy(&a);
        prop_assert_eq!(q.data(), q2.data());
        prop_assert_eq!(r.data(), r2.data());
        let back = q.matmul(&r).unwrap();
        prop_assert!(back.sub(&a).unwrap().frobenius_norm() <= 1e-12 * a.frobenius_norm().max(1.0));
        prop_assert!(q.orthonormality_deviation() <= 1e-13);
    }
}
