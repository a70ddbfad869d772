//! Tree tensor networks of fixed tree rank: shape grammar and validation,
//! the recursive network value type, orthonormalization, Gram recursions,
//! deterministic random generation, tangent perturbations, and rank
//! truncation of dense tensors.
//!
//! Layout conventions follow `tensor-core`: mode 0 of every connection
//! tensor is the parent-facing rank mode, and dense values are indexed by
//! the leaves in left-to-right tree order.

mod error;
mod gram;
mod random;
mod tangent;
mod tree;
mod truncate;
mod ttn;

pub use error::ModelError;
pub use gram::gram;
pub use random::{random_orthonormal_ttn, random_skew_unit};
pub use tangent::{tangent_sample, TangentTtn};
pub use tree::{parse_tree, parse_tree_spec, DimSpec, RankSpec, RankedNode, RankedTree, Tree};
pub use truncate::{projection_residual, truncate};
pub use ttn::{combination_norm, linear_combination, NodeDeviation, Ttn, DENSE_BUDGET};
