//! The classical rank-r matrix projector-splitting step (K, then negated S,
//! then L), used purely as an independent oracle for the two-leaf tree case.

use crate::error::OracleError;
use tensor_core::{qr_orthonormal, Matrix};

/// Y = U·S·Vᵀ with U, V orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFactorization {
    pub u: Matrix,
    pub s: Matrix,
    pub v: Matrix,
}

impl MatrixFactorization {
    pub fn value(&self) -> Matrix {
        self.u
            .matmul(&self.s)
            .and_then(|us| us.matmul(&self.v.transpose()))
            .expect("consistent factor shapes")
    }

    pub fn rank(&self) -> usize {
        self.s.rows()
    }
}

/// One projector-splitting step from `t0` to `t1`. Each substep ODE is
/// solved by classical RK4 with `substeps` uniform internal steps; for
/// fields without state dependence RK4 reduces to Simpson quadrature, exact
/// for cubics in t.
pub fn matrix_ksl_step<F>(
    y0: &MatrixFactorization,
    field: F,
    t0: f64,
    t1: f64,
    substeps: usize,
) -> Result<MatrixFactorization, OracleError>
where
    F: Fn(f64, &Matrix) -> Matrix,
{
    let v0 = y0.v.clone();

    // K-step: K̇ = F(t, K V₀ᵀ)·V₀ forward from U₀S₀.
    let k0 = y0.u.matmul(&y0.s)?;
    let k1 = rk4_matrix(
        &k0,
        |t, k| {
            let dense = k.matmul(&v0.transpose()).expect("shapes fixed");
            field(t, &dense).matmul(&v0).expect("shapes fixed")
        },
        t0,
        t1,
        substeps,
    );
    let (u1, s_hat) = qr_orthonormal(&k1)?;
    guard_rank(&s_hat, "K")?;

    // S-step: Ṡ = −U₁ᵀ F(t, U₁ S V₀ᵀ)·V₀ forward from Ŝ.
    let s_tilde = rk4_matrix(
        &s_hat,
        |t, s| {
            let dense = u1
                .matmul(s)
                .and_then(|us| us.matmul(&v0.transpose()))
                .expect("shapes fixed");
            u1.matmul_tn(&field(t, &dense))
                .and_then(|m| m.matmul(&v0))
                .expect("shapes fixed")
                .scale(-1.0)
        },
        t0,
        t1,
        substeps,
    );

    // L-step: L̇ = F(t, U₁ Lᵀ)ᵀ·U₁ forward from V₀S̃ᵀ.
    let l0 = v0.matmul(&s_tilde.transpose())?;
    let l1 = rk4_matrix(
        &l0,
        |t, l| {
            let dense = u1.matmul(&l.transpose()).expect("shapes fixed");
            field(t, &dense).matmul_tn(&u1).expect("shapes fixed")
        },
        t0,
        t1,
        substeps,
    );
    let (v1, r) = qr_orthonormal(&l1)?;
    guard_rank(&r, "L")?;
    Ok(MatrixFactorization { u: u1, s: r.transpose(), v: v1 })
}

fn guard_rank(r: &Matrix, factor: &'static str) -> Result<(), OracleError> {
    let scale = r.frobenius_norm();
    for j in 0..r.rows().min(r.cols()) {
        if r[(j, j)].abs() <= 1e-13 * scale {
            return Err(OracleError::RankLoss { factor, index: j });
        }
    }
    Ok(())
}

fn rk4_matrix<F>(y0: &Matrix, field: F, t0: f64, t1: f64, substeps: usize) -> Matrix
where
    F: Fn(f64, &Matrix) -> Matrix,
{
    let steps = substeps.max(1);
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.clone();
    for n in 0..steps {
        let t = t0 + h * n as f64;
        let k1 = field(t, &y);
        let k2 = field(t + 0.5 * h, &y.add(&k1.scale(0.5 * h)).expect("same shape"));
        let k3 = field(t + 0.5 * h, &y.add(&k2.scale(0.5 * h)).expect("same shape"));
        let k4 = field(t + h, &y.add(&k3.scale(h)).expect("same shape"));
        let incr = k1
            .add(&k2.scale(2.0))
            .and_then(|m| m.add(&k3.scale(2.0)))
            .and_then(|m| m.add(&k4))
            .expect("same shape");
        y = y.add(&incr.scale(h / 6.0)).expect("same shape");
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensor_core::matrix_exp;

    fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        Matrix::from_fn(rows, cols, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    fn skew(n: usize, seed: u64) -> Matrix {
        let g = seeded_matrix(n, n, seed);
        let mut w = Matrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                w[(i, j)] = 0.5 * (g[(i, j)] - g[(j, i)]);
            }
        }
        w.scale(1.0 / w.frobenius_norm())
    }

    fn random_factorization(n: usize, r: usize, seed: u64) -> MatrixFactorization {
        let (u, _) = qr_orthonormal(&seeded_matrix(n, r, seed)).unwrap();
        let (v, _) = qr_orthonormal(&seeded_matrix(n, r, seed + 1)).unwrap();
        let mut s = seeded_matrix(r, r, seed + 2);
        for j in 0..r {
            // Keep S safely invertible.
            s[(j, j)] += 2.0;
        }
        MatrixFactorization { u, s, v }
    }

    #[test]
    fn zero_field_preserves_the_value() {
        let y0 = random_factorization(6, 2, 1);
        let y1 =
            matrix_ksl_step(&y0, |_, m| m.scale(0.0), 0.0, 0.1, 4).unwrap();
        let diff = y1.value().sub(&y0.value()).unwrap().frobenius_norm();
        assert!(diff <= 1e-13, "diff {diff}");
        assert!(y1.u.orthonormality_deviation() <= 1e-13);
        assert!(y1.v.orthonormality_deviation() <= 1e-13);
    }

    /// Exactness: for F(t) = Ȧ(t) with A(t) = e^{tW₁}·A₀·e^{tW₂ᵀ} of rank r,
    /// the splitting step reproduces A at every step endpoint.
    #[test]
    fn reproduces_rank_preserving_rotations() {
        let n = 8;
        let r = 3;
        let y0 = random_factorization(n, r, 7);
        let a0 = y0.value();
        let (w1, w2) = (skew(n, 20), skew(n, 21));
        let a = |t: f64| {
            let e1 = matrix_exp(&w1.scale(t)).unwrap();
            let e2 = matrix_exp(&w2.scale(t)).unwrap();
            e1.matmul(&a0).and_then(|m| m.matmul(&e2.transpose())).unwrap()
        };
        let dot = |t: f64| {
            let at = a(t);
            w1.matmul(&at)
                .and_then(|m| m.add(&at.matmul(&w2.transpose()).unwrap()))
                .unwrap()
        };

        let mut y = y0;
        let h = 0.1;
        for step in 0..10 {
            let t0 = h * step as f64;
            y = matrix_ksl_step(&y, |t, _| dot(t), t0, t0 + h, 25).unwrap();
            let err = y.value().sub(&a(t0 + h)).unwrap().frobenius_norm();
            assert!(err <= 1e-10, "step {step}: err {err}");
        }
    }

    #[test]
    fn rank_loss_is_reported() {
        let mut y0 = random_factorization(5, 2, 3);
        // Collapse S to rank 1 and keep the field at zero, so the K-step QR
        // sees a rank-deficient matrix.
        for j in 0..2 {
            y0.s[(1, j)] = y0.s[(0, j)];
            y0.s[(j, 1)] = y0.s[(j, 0)];
        }
        y0.s[(1, 1)] = y0.s[(0, 0)];
        let got = matrix_ksl_step(&y0, |_, m| m.scale(0.0), 0.0, 0.1, 2);
        assert!(matches!(got, Err(OracleError::RankLoss { factor: "K", .. })), "{got:?}");
    }
}
