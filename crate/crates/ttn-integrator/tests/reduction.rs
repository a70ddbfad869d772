//! Cross-checks against independently written integrators: the two-leaf tree
//! against the classical low-rank matrix splitting, height-one trees against
//! the flat (single connection tensor) step, order one against the matrix
//! oracle, and the factored route against the dense route subflow by subflow.

use tensor_core::{qr_orthonormal, DenseTensor, Matrix};
use ttn_integrator::{
    child_subflow, connection_subflow, extended_dims, extended_tucker_step, phi_i_tucker,
    psi_tucker, sum_terms_dense, ttn_step, ConstantField, ConstantSumField, IntegratorError,
    RotatingField, StepOptions, StepState, SubstepSolver, TuckerState, VectorField,
};
use ttn_model::{parse_tree_spec, random_orthonormal_ttn, tangent_sample, DimSpec, RankSpec, Ttn};
use ttn_reference::{matrix_ksl_step, MatrixFactorization};

fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
    Matrix::from_fn(rows, cols, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    })
}

fn uniform_state(tree: &str, n: usize, r: usize, seed: u64) -> Ttn {
    let shape = parse_tree_spec(tree, &DimSpec::Uniform(n), &RankSpec::Uniform(r)).unwrap();
    random_orthonormal_ttn(&shape, seed)
}

/// F(t) = G₀ + t·G₁ on a fixed-size extended state, independent of Y.
struct LinearDrift {
    g0: DenseTensor,
    g1: DenseTensor,
}

impl VectorField for LinearDrift {
    fn eval_dense(&self, t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        assert_eq!(y.len(), self.g0.len(), "drift size mismatch");
        Ok(self.g0.add_scaled(t, &self.g1)?.reshape(y.dims())?)
    }

    fn constant_in_y(&self) -> bool {
        true
    }
}

/// Reads the two-leaf network Y = U₁·C·U₂ᵀ into the matrix factorization the
/// oracle expects.
fn two_leaf_factors(y: &Ttn) -> MatrixFactorization {
    let Ttn::Internal { core, children } = y else { panic!("two-leaf network") };
    let r1 = core.dims()[1];
    let r2 = core.dims()[2];
    let s = Matrix::from_col_major(r1, r2, core.data().to_vec()).unwrap();
    MatrixFactorization {
        u: children[0].basis_matrix().unwrap(),
        s,
        v: children[1].basis_matrix().unwrap(),
    }
}

fn dense_as_matrix(t: &DenseTensor, rows: usize, cols: usize) -> Matrix {
    Matrix::from_col_major(rows, cols, t.reshape(&[rows, cols]).unwrap().into_data()).unwrap()
}

#[test]
fn two_leaf_step_matches_the_matrix_splitting_oracle() {
    let n = 8;
    let r = 3;
    let solver = SubstepSolver::exact_increment();
    let opts = StepOptions::default();
    for seed in 0..6 {
        let y0 = uniform_state("[1,2]", n, r, 100 + seed);
        let g0 = seeded_matrix(n, n, 7 * seed + 1).scale(0.8);
        let g1 = seeded_matrix(n, n, 7 * seed + 2).scale(0.5);
        let field = LinearDrift {
            g0: DenseTensor::from_data(&[n, n], g0.data().to_vec()).unwrap(),
            g1: DenseTensor::from_data(&[n, n], g1.data().to_vec()).unwrap(),
        };

        let stepped =
            ttn_step(&StepState { t: 0.0, y: y0.clone() }, &field, 0.2, &solver, &opts).unwrap();
        let got = dense_as_matrix(&stepped.y.contract().unwrap(), n, n);

        let oracle_start = two_leaf_factors(&y0);
        let oracle = matrix_ksl_step(
            &oracle_start,
            |t, _| g0.add(&g1.scale(t)).unwrap(),
            0.0,
            0.2,
            2,
        )
        .unwrap();
        let want = oracle.value();

        let diff = got.sub(&want).unwrap().frobenius_norm();
        let scale = want.frobenius_norm().max(1.0);
        assert!(diff <= 1e-11 * scale, "seed {seed}: two-leaf gap {diff:.3e}");
    }
}

#[test]
fn height_one_subflows_match_the_flat_step() {
    let n = 5;
    let r = 2;
    let solver = SubstepSolver::exact_increment();
    let opts = StepOptions::default();
    let y0 = uniform_state("[1,2,3]", n, r, 4);
    let field = RotatingField::random(&y0, 99);
    let (t0, t1) = (0.0, 0.15);

    let mut tree_state = y0.clone();
    let mut flat_state = TuckerState::from_height_one(&y0).unwrap();
    for i in 1..=3 {
        tree_state = child_subflow(&tree_state, &field, i, t0, t1, &solver, &opts).unwrap();
        flat_state = phi_i_tucker(&flat_state, &field, i, t0, t1, &solver).unwrap();
        let a = tree_state.contract_extended().unwrap();
        let b = flat_state.value().unwrap();
        let gap = a.sub(&b.reshape(a.dims()).unwrap()).unwrap().norm();
        assert!(gap <= 1e-12, "after basis subflow {i}: gap {gap:.3e}");
    }
    tree_state = connection_subflow(&tree_state, &field, t0, t1, &solver).unwrap();
    flat_state = psi_tucker(&flat_state, &field, t0, t1, &solver).unwrap();
    let a = tree_state.contract_extended().unwrap();
    let b = flat_state.value().unwrap();
    let gap = a.sub(&b.reshape(a.dims()).unwrap()).unwrap().norm();
    assert!(gap <= 1e-12, "after connection subflow: gap {gap:.3e}");

    // The composed step agrees as well and matches the subflow-by-subflow
    // result.
    let full = ttn_step(&StepState { t: t0, y: y0.clone() }, &field, t1, &solver, &opts).unwrap();
    let c = full.y.contract_extended().unwrap();
    let gap = a.sub(&c).unwrap().norm();
    assert!(gap <= 1e-13, "composed step differs from subflow chain: {gap:.3e}");
}

#[test]
fn order_one_flat_step_matches_the_matrix_oracle() {
    let n = 7;
    let r0 = 4;
    let r1 = 2;
    let solver = SubstepSolver::exact_increment();
    for seed in 0..4 {
        let (u, _) = qr_orthonormal(&seeded_matrix(n, r1, 50 + seed)).unwrap();
        let mut c = seeded_matrix(r0, r1, 60 + seed);
        for j in 0..r1 {
            c[(j, j)] += 1.5;
        }
        let core = DenseTensor::from_data(&[r0, r1], c.data().to_vec()).unwrap();
        let state = TuckerState::new(core, vec![u.clone()]).unwrap();

        let g0 = seeded_matrix(r0, n, 70 + seed).scale(0.9);
        let g1 = seeded_matrix(r0, n, 80 + seed).scale(0.4);
        let field = LinearDrift {
            g0: DenseTensor::from_data(&[r0, n], g0.data().to_vec()).unwrap(),
            g1: DenseTensor::from_data(&[r0, n], g1.data().to_vec()).unwrap(),
        };
        let stepped = extended_tucker_step(&state, &field, 0.0, 0.3, &solver).unwrap();
        let got = dense_as_matrix(&stepped.value().unwrap(), r0, n);

        // The transposed value U·Cᵀ is a rank-r₁ matrix; QR of C supplies the
        // right-hand factor pair.
        let (q, rfac) = qr_orthonormal(&c).unwrap();
        let start = MatrixFactorization { u, s: rfac.transpose(), v: q };
        let oracle = matrix_ksl_step(
            &start,
            |t, _| g0.add(&g1.scale(t)).unwrap().transpose(),
            0.0,
            0.3,
            2,
        )
        .unwrap();
        let want = oracle.value().transpose();

        let diff = got.sub(&want).unwrap().frobenius_norm();
        let scale = want.frobenius_norm().max(1.0);
        assert!(diff <= 1e-11 * scale, "seed {seed}: order-one gap {diff:.3e}");
    }
}

#[test]
fn factored_and_dense_routes_agree_subflow_by_subflow() {
    let y0 = uniform_state("[[1,2],3]", 4, 2, 8);
    let terms = tangent_sample(&y0, 5, 1.0).unwrap().summands();
    let factored = ConstantSumField::new(terms.clone());
    let dense_value = sum_terms_dense(&terms, &extended_dims(&y0)).unwrap();
    let dense = ConstantField { value: dense_value };
    let solver = SubstepSolver::exact_increment();
    let opts = StepOptions::default();
    let (t0, t1) = (0.0, 0.3);

    for i in 1..=2 {
        let a = child_subflow(&y0, &factored, i, t0, t1, &solver, &opts).unwrap();
        let b = child_subflow(&y0, &dense, i, t0, t1, &solver, &opts).unwrap();
        let gap = a
            .contract_extended()
            .unwrap()
            .sub(&b.contract_extended().unwrap())
            .unwrap()
            .norm();
        assert!(gap <= 1e-12, "child subflow {i}: route gap {gap:.3e}");
    }

    let a = connection_subflow(&y0, &factored, t0, t1, &solver).unwrap();
    let b = connection_subflow(&y0, &dense, t0, t1, &solver).unwrap();
    let gap =
        a.contract_extended().unwrap().sub(&b.contract_extended().unwrap()).unwrap().norm();
    assert!(gap <= 1e-12, "connection subflow route gap {gap:.3e}");

    let full_a =
        ttn_step(&StepState { t: t0, y: y0.clone() }, &factored, t1, &solver, &opts).unwrap();
    let full_b = ttn_step(&StepState { t: t0, y: y0 }, &dense, t1, &solver, &opts).unwrap();
    let gap = full_a
        .y
        .contract_extended()
        .unwrap()
        .sub(&full_b.y.contract_extended().unwrap())
        .unwrap()
        .norm();
    assert!(gap <= 1e-12, "full step route gap {gap:.3e}");
}
