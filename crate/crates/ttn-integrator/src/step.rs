//! The recursive splitting step and the outer time loop.
//!
//! One step on a node sweeps its children in declared order. For child i the
//! parent connection tensor is split by a QR of its i-th unfolding into an
//! orthonormal complement and a triangular interaction factor; the child
//! state (with the interaction folded in) is advanced forward under the
//! restricted field, re-orthonormalized, and the interaction factor is then
//! rewound under the negated restricted field. Leaf children solve their
//! aggregated factor ODE directly; internal children recurse. After all
//! children, the connection tensor itself is advanced.

use crate::context::{guard_basis, RestrictedField, RestrictionContext};
use crate::error::IntegratorError;
use crate::field::{sum_terms_dense, VectorField};
use crate::probe::AgreementProbe;
use crate::solver::{matrix_as_tensor, tensor_as_matrix, SubstepSolver};
use tensor_core::{matricize, mode_multiply, qr_orthonormal, tensorize, DenseTensor, Matrix, Mode};
use ttn_model::{gram, Ttn};

pub const MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct StepState {
    pub t: f64,
    pub y: Ttn,
}

#[derive(Clone, Copy, Debug)]
pub struct StepOptions {
    /// Fault injection for diagnostics: keep the raw forward leaf factor
    /// without re-orthonormalizing it. Lets orthonormality decay visibly.
    pub skip_leaf_qr: bool,
    /// Per-step bound on the worst node deviation; exceeding it aborts.
    /// `None` disables the check (used together with fault injection).
    pub orthonormality_limit: Option<f64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { skip_leaf_qr: false, orthonormality_limit: Some(1e-11) }
    }
}

/// One splitting step from `state.t` to `t1` over the whole tree.
pub fn ttn_step(
    state: &StepState,
    field: &dyn VectorField,
    t1: f64,
    solver: &SubstepSolver,
    opts: &StepOptions,
) -> Result<StepState, IntegratorError> {
    let depth_budget = state.y.tree().height() + 1;
    let y = step_node(&state.y, field, state.t, t1, solver, opts, depth_budget)?;
    Ok(StepState { t: t1, y })
}

fn step_node(
    y: &Ttn,
    field: &dyn VectorField,
    t0: f64,
    t1: f64,
    solver: &SubstepSolver,
    opts: &StepOptions,
    depth_budget: usize,
) -> Result<Ttn, IntegratorError> {
    if depth_budget == 0 {
        return Err(IntegratorError::shape(
            "recursion exceeded the tree height; this is a bug",
        ));
    }
    let child_count = match y {
        Ttn::Internal { children, .. } => children.len(),
        Ttn::Leaf { .. } => {
            return Err(IntegratorError::shape(
                "a step starts at an internal node; leaves are handled by their parent",
            ))
        }
    };
    let mut current = y.clone();
    for i in 1..=child_count {
        current = child_subflow_inner(&current, field, i, t0, t1, solver, opts, depth_budget)?;
    }
    connection_subflow(&current, field, t0, t1, solver)
}

/// The forward-and-rewind subflow for child `i` of `parent`, as one
/// standalone operation. Part of a full step, exposed for cross-checks.
pub fn child_subflow(
    parent: &Ttn,
    field: &dyn VectorField,
    i: usize,
    t0: f64,
    t1: f64,
    solver: &SubstepSolver,
    opts: &StepOptions,
) -> Result<Ttn, IntegratorError> {
    let depth_budget = parent.tree().height() + 1;
    child_subflow_inner(parent, field, i, t0, t1, solver, opts, depth_budget)
}

#[allow(clippy::too_many_arguments)]
fn child_subflow_inner(
    parent: &Ttn,
    field: &dyn VectorField,
    i: usize,
    t0: f64,
    t1: f64,
    solver: &SubstepSolver,
    opts: &StepOptions,
    depth_budget: usize,
) -> Result<Ttn, IntegratorError> {
    let ctx = RestrictionContext::new(parent, i)?;
    let restricted = RestrictedField::new(field, &ctx);
    let y0_child = ctx.restrict_initial()?;
    let child_name = y0_child.name();

    let (x1, s_hat) = match &y0_child {
        Ttn::Leaf { label, basis } => {
            let b1 = solve_leaf_factor(&restricted, *label, basis, t0, t1, solver)?;
            if opts.skip_leaf_qr {
                (Ttn::Leaf { label: *label, basis: b1.clone() }, Matrix::identity(b1.cols()))
            } else {
                let (q, r) = qr_orthonormal(&b1)?;
                guard_basis(&child_name, "updated leaf basis", &r)?;
                (Ttn::Leaf { label: *label, basis: q }, r)
            }
        }
        Ttn::Internal { .. } => {
            let stepped =
                step_node(&y0_child, &restricted, t0, t1, solver, opts, depth_budget - 1)?;
            let (core, children) = match stepped {
                Ttn::Internal { core, children } => (core, children),
                Ttn::Leaf { .. } => unreachable!("internal child stepped to a leaf"),
            };
            // the interaction QR only touches the small core, not the
            // subtree value
            let unfolded = matricize(&core, Mode(0))?.transpose();
            let (q, r) = qr_orthonormal(&unfolded)?;
            guard_basis(&child_name, "updated connection tensor", &r)?;
            let ortho_core = tensorize(&q.transpose(), Mode(0), core.dims())?;
            (Ttn::Internal { core: ortho_core, children }, r)
        }
    };

    let s_tilde = rewind_interaction(&restricted, &x1, &s_hat, t0, t1, solver)?;

    let new_core = tensorize(
        &s_tilde.matmul(&ctx.complement().transpose())?,
        Mode(i),
        ctx.core_dims(),
    )?;
    let mut children = match parent {
        Ttn::Internal { children, .. } => children.clone(),
        Ttn::Leaf { .. } => unreachable!(),
    };
    children[i - 1] = x1;
    Ok(Ttn::Internal { core: new_core, children })
}

/// Aggregated leaf factor ODE, solved on the transposed (rank-first) layout.
fn solve_leaf_factor(
    restricted: &RestrictedField,
    label: usize,
    basis0: &Matrix,
    t0: f64,
    t1: f64,
    solver: &SubstepSolver,
) -> Result<Matrix, IntegratorError> {
    let y0 = matrix_as_tensor(&basis0.transpose());
    let factored = restricted.supports_factored();
    let mut rhs = |t: f64, y: &DenseTensor| {
        if factored {
            let net = Ttn::Leaf { label, basis: tensor_as_matrix(y)?.transpose() };
            let terms = restricted.eval_factored(t, &net)?;
            sum_terms_dense(&terms, y.dims())
        } else {
            restricted.eval_dense(t, y)
        }
    };
    let y1 = solver.solve(&mut rhs, restricted.constant_in_y(), &y0, t0, t1)?;
    Ok(tensor_as_matrix(&y1)?.transpose())
}

/// Rewinds the interaction factor: solves S' = -<X1, F(t, X1 S^T)> forward,
/// starting from the triangular factor of the forward sweep.
fn rewind_interaction(
    restricted: &RestrictedField,
    x1: &Ttn,
    s_hat: &Matrix,
    t0: f64,
    t1: f64,
    solver: &SubstepSolver,
) -> Result<Matrix, IntegratorError> {
    let factored = restricted.supports_factored();
    let mut rhs = |t: f64, s_ten: &DenseTensor| {
        let s = tensor_as_matrix(s_ten)?;
        let net = x1.mode0_multiply(&s.transpose())?;
        let f_hat = if factored {
            let terms = restricted.eval_factored(t, &net)?;
            let mut acc = Matrix::zeros(s.rows(), s.cols());
            for term in &terms {
                acc = acc.add(&gram(x1, term)?)?;
            }
            acc
        } else {
            let f = restricted.eval_dense(t, &net.contract_extended()?)?;
            let f_basis = matricize(&f, Mode(0))?.transpose();
            x1.basis_matrix()?.matmul_tn(&f_basis)?
        };
        Ok(matrix_as_tensor(&f_hat.scale(-1.0)))
    };
    let s1 = solver.solve(
        &mut rhs,
        restricted.constant_in_y(),
        &matrix_as_tensor(s_hat),
        t0,
        t1,
    )?;
    tensor_as_matrix(&s1)
}

/// Advances the connection tensor under the field projected onto the
/// updated child bases. With factored field output the projection reduces
/// to child overlap matrices; no dense value is formed.
pub fn connection_subflow(
    y: &Ttn,
    field: &dyn VectorField,
    t0: f64,
    t1: f64,
    solver: &SubstepSolver,
) -> Result<Ttn, IntegratorError> {
    let (core0, children) = match y {
        Ttn::Internal { core, children } => (core.clone(), children.clone()),
        Ttn::Leaf { .. } => {
            return Err(IntegratorError::shape("connection subflow needs an internal node"))
        }
    };
    let factored = field.supports_factored();
    let mut rhs = |t: f64, c: &DenseTensor| {
        let net = Ttn::Internal { core: c.clone(), children: children.clone() };
        if factored {
            let terms = field.eval_factored(t, &net)?;
            let mut acc = DenseTensor::zeros(c.dims());
            for term in &terms {
                let (g, zch) = match term {
                    Ttn::Internal { core, children } => (core, children),
                    Ttn::Leaf { .. } => {
                        return Err(IntegratorError::shape(
                            "factored term shape does not match the state",
                        ))
                    }
                };
                let mut folded = g.clone();
                for (j, child) in children.iter().enumerate() {
                    folded = mode_multiply(&folded, Mode(j + 1), &gram(child, &zch[j])?)?;
                }
                acc = acc.add_scaled(1.0, &folded)?;
            }
            Ok(acc)
        } else {
            let f = field.eval_dense(t, &net.contract_extended()?)?;
            let mut g = f;
            for (j, child) in children.iter().enumerate() {
                g = mode_multiply(&g, Mode(j + 1), &child.basis_matrix()?.transpose())?;
            }
            Ok(g)
        }
    };
    let core1 = solver.solve(&mut rhs, field.constant_in_y(), &core0, t0, t1)?;
    Ok(Ttn::Internal { core: core1, children })
}

/// Uniform steps of size `h` from `initial.t` to `t_end`, with a final
/// partial step when the span is not a multiple of `h`. Returns the whole
/// trajectory including the initial state. Orthonormality is asserted after
/// every step unless disabled in the options.
pub fn integrate(
    initial: &StepState,
    field: &dyn VectorField,
    t_end: f64,
    h: f64,
    solver: &SubstepSolver,
    opts: &StepOptions,
    probe: Option<&AgreementProbe>,
) -> Result<Vec<StepState>, IntegratorError> {
    if !(h > 0.0) {
        return Err(IntegratorError::shape("step size must be positive"));
    }
    let span = t_end - initial.t;
    if span < 0.0 {
        return Err(IntegratorError::shape("t_end lies before the initial time"));
    }
    let planned = (span / h).ceil() as u128;
    if planned > MAX_STEPS as u128 {
        return Err(IntegratorError::StepBudget { steps: planned, budget: MAX_STEPS });
    }
    let mut trajectory = vec![initial.clone()];
    let mut current = initial.clone();
    let mut step_index: usize = 0;
    while current.t < t_end - 1e-12 * h {
        let natural = initial.t + (step_index + 1) as f64 * h;
        let target = if natural >= t_end - 1e-12 * h { t_end } else { natural };
        current = ttn_step(&current, field, target, solver, opts)?;
        step_index += 1;
        if let Some(p) = probe {
            p.observe(field, current.t, &current.y)?;
        }
        if let Some(limit) = opts.orthonormality_limit {
            let mut worst_node = String::new();
            let mut worst = 0.0_f64;
            for d in current.y.check_orthonormal() {
                if d.deviation > worst {
                    worst = d.deviation;
                    worst_node = d.node;
                }
            }
            if worst > limit {
                return Err(IntegratorError::OrthonormalityLost {
                    step: step_index,
                    node: worst_node,
                    deviation: worst,
                });
            }
        }
        trajectory.push(current.clone());
        if step_index > MAX_STEPS {
            return Err(IntegratorError::StepBudget {
                steps: step_index as u128,
                budget: MAX_STEPS,
            });
        }
    }
    Ok(trajectory)
}
