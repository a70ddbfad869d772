//! Projector-splitting time integration for tree tensor networks of fixed
//! tree rank.
//!
//! The integrator advances an orthonormalized network through one step by
//! sweeping the tree: each child contributes a forward subflow on its own
//! extended state space (obtained by restricting the field through the
//! parent), followed by a backward interaction update, and finally the
//! connection tensor itself is advanced. Internal children are handled by
//! applying the whole scheme recursively to their subtree. All state spaces
//! stay factored; dense tensors of the full product dimension never appear
//! on the production path.

pub mod context;
pub mod error;
pub mod field;
pub mod fields;
pub mod probe;
pub mod solver;
pub mod step;
pub mod tucker;

pub use context::{extended_dims, RestrictedField, RestrictionContext};
pub use error::IntegratorError;
pub use field::{sum_terms_dense, ConstantField, ConstantSumField, VectorField, ZeroField};
pub use fields::RotatingField;
pub use probe::AgreementProbe;
pub use solver::{solve_substep, SolveMethod, SubstepSolver};
pub use step::{
    child_subflow, connection_subflow, integrate, ttn_step, StepOptions, StepState, MAX_STEPS,
};
pub use tucker::{
    extended_tucker_step, phi_i_tucker, psi_tucker, tucker_identity_mode_subflow, TuckerState,
};
