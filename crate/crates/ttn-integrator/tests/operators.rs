//! Properties of the child prolongation and restriction pair across tree
//! shapes: isometry, adjointness, round trip, contraction, and agreement of
//! the network route with the dense route.

use proptest::prelude::*;
use tensor_core::{DenseTensor, Matrix};
use ttn_integrator::RestrictionContext;
use ttn_model::{parse_tree_spec, random_orthonormal_ttn, DimSpec, RankSpec, Ttn};

const CONFIGS: &[(&str, usize, usize)] = &[
    ("[1,2]", 4, 2),
    ("[1,2,3]", 3, 2),
    ("[[1,2],3]", 4, 2),
    ("[[1,2],[3,4]]", 3, 2),
    ("[[[1,2],3],[4,5]]", 3, 2),
];

fn uniform_state(tree: &str, n: usize, r: usize, seed: u64) -> Ttn {
    let shape = parse_tree_spec(tree, &DimSpec::Uniform(n), &RankSpec::Uniform(r)).unwrap();
    random_orthonormal_ttn(&shape, seed)
}

fn next_value(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Same tree and ranks as `x`, arbitrary (non-orthonormal) entries.
fn refill(x: &Ttn, state: &mut u64) -> Ttn {
    match x {
        Ttn::Leaf { label, basis } => Ttn::Leaf {
            label: *label,
            basis: Matrix::from_fn(basis.rows(), basis.cols(), |_, _| next_value(state)),
        },
        Ttn::Internal { core, children } => Ttn::Internal {
            core: DenseTensor::from_fn(core.dims(), |_| next_value(state)),
            children: children.iter().map(|c| refill(c, state)).collect(),
        },
    }
}

fn child_count(x: &Ttn) -> usize {
    match x {
        Ttn::Leaf { .. } => 0,
        Ttn::Internal { children, .. } => children.len(),
    }
}

fn check_pair(parent: &Ttn, i: usize, state: &mut u64) {
    let ctx = RestrictionContext::new(parent, i).unwrap();
    let y = refill(ctx.initial_child(), state);
    let z = refill(parent, state);
    let y_dense = y.contract_extended().unwrap();
    let z_dense = z.contract_extended().unwrap();
    let y_norm = y_dense.norm();
    let z_norm = z_dense.norm();

    // Network and dense prolongation routes produce the same tensor.
    let up = ctx.prolong_network(&y).unwrap();
    let up_dense = up.contract_extended().unwrap();
    let up_direct = ctx.prolong_dense(&y_dense).unwrap();
    let route_gap = up_dense.sub(&up_direct).unwrap().norm();
    assert!(route_gap <= 1e-12 * y_norm.max(1.0), "prolong routes: {route_gap:.3e}");

    // Isometry.
    assert!(
        (up_dense.norm() - y_norm).abs() <= 1e-12 * y_norm.max(1.0),
        "prolongation changed the norm"
    );

    // Round trip back to the child space.
    let down = ctx.restrict_network(&up).unwrap();
    let round_gap = down.contract_extended().unwrap().sub(&y_dense).unwrap().norm();
    assert!(round_gap <= 1e-12 * y_norm.max(1.0), "round trip: {round_gap:.3e}");

    // Adjointness against an arbitrary parent-shaped network.
    let restricted = ctx.restrict_network(&z).unwrap();
    let lhs = up_dense.reshape(z_dense.dims()).unwrap().inner(&z_dense).unwrap();
    let rhs = y_dense
        .inner(&restricted.contract_extended().unwrap().reshape(y_dense.dims()).unwrap())
        .unwrap();
    let pair_scale = (y_norm * z_norm).max(1.0);
    assert!((lhs - rhs).abs() <= 1e-12 * pair_scale, "adjointness: {:.3e}", (lhs - rhs).abs());

    // Restriction never grows the norm.
    let down_norm = restricted.contract_extended().unwrap().norm();
    assert!(down_norm <= z_norm * (1.0 + 1e-12), "restriction grew the norm");

    // Network and dense restriction routes agree.
    let down_direct = ctx.restrict_dense(&z_dense).unwrap();
    let gap = restricted
        .contract_extended()
        .unwrap()
        .reshape(down_direct.dims())
        .unwrap()
        .sub(&down_direct)
        .unwrap()
        .norm();
    assert!(gap <= 1e-12 * z_norm.max(1.0), "restrict routes: {gap:.3e}");
}

#[test]
fn restriction_pair_properties_hold_across_tree_shapes() {
    for (k, &(tree, n, r)) in CONFIGS.iter().enumerate() {
        for seed in [1, 2, 3] {
            let parent = uniform_state(tree, n, r, 1000 * k as u64 + seed);
            let mut state = 0x5deece66d ^ (seed * 7919);
            for i in 1..=child_count(&parent) {
                check_pair(&parent, i, &mut state);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn restriction_pair_properties_hold_on_sampled_instances(
        seed in any::<u64>(),
        config in 0..CONFIGS.len(),
        pick in any::<u16>(),
    ) {
        let (tree, n, r) = CONFIGS[config];
        let parent = uniform_state(tree, n, r, seed);
        let children = child_count(&parent);
        let i = 1 + (pick as usize) % children;
        let mut state = seed ^ 0x9e3779b97f4a7c15;
        check_pair(&parent, i, &mut state);
    }
}
