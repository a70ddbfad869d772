//! Deterministic random generation of orthonormal networks and of the
//! auxiliary matrices used by the synthetic experiment fields.

use crate::tree::{RankedNode, RankedTree};
use crate::ttn::Ttn;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tensor_core::{matricize, qr_orthonormal, tensorize, DenseTensor, Matrix, Mode};

/// Random orthonormal network of the given shape. One ChaCha8 stream seeded
/// from `seed` is consumed in pre-order, so the result is reproducible across
/// platforms. Every non-root factor is orthonormalized by QR with the
/// nonnegative-diagonal convention; the root core is scaled to unit
/// Frobenius norm so the whole tensor has norm 1.
pub fn random_orthonormal_ttn(shape: &RankedTree, seed: u64) -> Ttn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build(shape.root(), &mut rng, true)
}

fn build(node: &RankedNode, rng: &mut ChaCha8Rng, is_root: bool) -> Ttn {
    match node {
        RankedNode::Leaf { label, dim, rank } => {
            let raw = normal_matrix(*dim, *rank, rng);
            let (q, _) = qr_orthonormal(&raw).expect("leaf basis is tall by validation");
            Ttn::Leaf { label: *label, basis: q }
        }
        RankedNode::Internal { rank, children } => {
            let mut dims = Vec::with_capacity(children.len() + 1);
            dims.push(*rank);
            dims.extend(children.iter().map(RankedNode::rank));
            let raw = normal_tensor(&dims, rng);
            let core = if is_root {
                raw.scale(1.0 / raw.norm())
            } else {
                // Orthonormalize mat_0(C)ᵀ; feasibility (rank ≤ ∏ child
                // ranks) was checked when the shape was built.
                let unfolded = matricize(&raw, Mode(0)).expect("mode 0").transpose();
                let (q, _) = qr_orthonormal(&unfolded).expect("feasible rank");
                tensorize(&q.transpose(), Mode(0), &dims).expect("same dims")
            };
            let children = children.iter().map(|c| build(c, rng, false)).collect();
            Ttn::Internal { core, children }
        }
    }
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_col_major(rows, cols, data).expect("length matches")
}

pub(crate) fn normal_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    let len: usize = dims.iter().product();
    let data = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    DenseTensor::from_data(dims, data).expect("length matches")
}

/// Random skew-symmetric matrix of unit Frobenius norm: (G − Gᵀ)/2 scaled.
/// A 1×1 skew-symmetric matrix is necessarily zero, so n = 1 returns the
/// zero matrix (a unit norm is impossible there).
pub fn random_skew_unit(n: usize, rng: &mut impl Rng) -> Matrix {
    if n == 1 {
        return Matrix::zeros(1, 1);
    }
    let mut g = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            g[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            w[(i, j)] = 0.5 * (g[(i, j)] - g[(j, i)]);
        }
    }
    let norm = w.frobenius_norm();
    w.scale(1.0 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{parse_tree_spec, DimSpec, RankSpec};
    use tensor_core::sym_eig;

    fn shape(spec: &str, dim: usize, rank: usize) -> RankedTree {
        parse_tree_spec(spec, &DimSpec::Uniform(dim), &RankSpec::Uniform(rank)).unwrap()
    }

    #[test]
    fn deterministic_per_seed_and_distinct_across_seeds() {
        let s = shape("[[1,2],3]", 5, 2);
        let a = random_orthonormal_ttn(&s, 42);
        let b = random_orthonormal_ttn(&s, 42);
        let c = random_orthonormal_ttn(&s, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fresh_network_is_orthonormal_with_unit_norm() {
        let s = shape("[[1,3,5],[4,2],6]", 6, 3);
        let x = random_orthonormal_ttn(&s, 0);
        assert!(x.max_deviation() <= 1e-13);
        assert!((x.top_factor_norm() - 1.0).abs() <= 1e-14);
        let dense_norm = x.contract().unwrap().norm();
        assert!((dense_norm - 1.0).abs() <= 1e-12);
    }

    /// The generated networks must be well-conditioned enough to serve as
    /// base points: smallest singular value of each core unfolding stays
    /// clearly above round-off.
    #[test]
    fn root_core_is_well_conditioned() {
        let s = shape("[[1,2],[3,4]]", 8, 3);
        let x = random_orthonormal_ttn(&s, 7);
        if let Ttn::Internal { core, .. } = &x {
            let m = matricize(&core.reshape(&[3, 3]).unwrap(), Mode(0)).unwrap();
            let gram = m.matmul(&m.transpose()).unwrap();
            let (evals, _) = sym_eig(&gram).unwrap();
            let sigma_min = evals.last().unwrap().max(0.0).sqrt();
            assert!(sigma_min > 1e-8, "sigma_min {sigma_min}");
        } else {
            panic!("root is internal");
        }
    }

    #[test]
    fn skew_unit_is_skew_with_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_skew_unit(5, &mut rng);
        for i in 0..5 {
            for j in 0..5 {
                assert!((w[(i, j)] + w[(j, i)]).abs() <= 1e-15);
            }
        }
        assert!((w.frobenius_norm() - 1.0).abs() <= 1e-14);
        assert_eq!(random_skew_unit(1, &mut rng), Matrix::zeros(1, 1));
    }
}
