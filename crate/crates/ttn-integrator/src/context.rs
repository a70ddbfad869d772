use crate::error::IntegratorError;
use crate::field::VectorField;
use tensor_core::{matricize, mode_multiply, qr_orthonormal, tensorize, DenseTensor, Matrix, Mode};
use ttn_model::{gram, ModelError, Ttn, DENSE_BUDGET};

/// Frozen data for moving between a node's extended state space and the
/// extended space of one of its children: the orthonormalized complement Q0
/// of the initial connection tensor, the triangular interaction factor, and
/// the initial sibling networks. Prolongation embeds a child-level state into
/// the node-level space; restriction is its adjoint.
pub struct RestrictionContext {
    node: String,
    child_mode: usize,
    core_dims: Vec<usize>,
    q0: Matrix,
    s0_t: Matrix,
    children: Vec<Ttn>,
}

/// Rejects numerically singular triangular interaction factors. The subflows
/// assume the initial data has full tree rank; a collapsed diagonal means
/// that assumption is violated and the step must not proceed silently.
pub(crate) fn guard_interaction(
    node: &str,
    child: usize,
    r: &Matrix,
) -> Result<(), IntegratorError> {
    let scale = r.frobenius_norm();
    let mut min_diag = f64::INFINITY;
    for j in 0..r.cols() {
        min_diag = min_diag.min(r.col(j)[j].abs());
    }
    if !(min_diag > 1e-13 * scale) {
        return Err(IntegratorError::DegenerateCore {
            node: node.to_string(),
            child,
            min_diag,
        });
    }
    Ok(())
}

/// Rejects rank collapse in the triangular factor of a post-solve QR.
pub(crate) fn guard_basis(
    node: &str,
    stage: &'static str,
    r: &Matrix,
) -> Result<(), IntegratorError> {
    let scale = r.frobenius_norm();
    for j in 0..r.cols() {
        if !(r.col(j)[j].abs() > 1e-13 * scale) {
            return Err(IntegratorError::RankLoss {
                node: node.to_string(),
                stage,
                index: j,
            });
        }
    }
    Ok(())
}

/// Mode extents of a subtree state: parent-facing rank first, then one
/// flattened block per child (a leaf state is rank by dimension).
pub fn extended_dims(x: &Ttn) -> Vec<usize> {
    match x {
        Ttn::Leaf { basis, .. } => vec![basis.cols(), basis.rows()],
        Ttn::Internal { core, children } => {
            let mut dims = vec![core.dims()[0]];
            dims.extend(children.iter().map(|c| c.dense_entries() as usize));
            dims
        }
    }
}

impl RestrictionContext {
    /// Builds the context for child `child_mode` (1-based, matching the core
    /// mode that carries this child's rank). Fails when the unfolded core
    /// has numerically deficient rank, since the subflows assume the full
    /// tree rank is present.
    pub fn new(parent: &Ttn, child_mode: usize) -> Result<Self, IntegratorError> {
        let (core, children) = match parent {
            Ttn::Internal { core, children } => (core, children),
            Ttn::Leaf { .. } => {
                return Err(IntegratorError::shape(
                    "restriction context requires an internal node",
                ))
            }
        };
        if child_mode == 0 || child_mode > children.len() {
            return Err(IntegratorError::shape(format!(
                "child mode {child_mode} out of range for {} children",
                children.len()
            )));
        }
        let unfolded = matricize(core, Mode(child_mode))?.transpose();
        let (q0, s0_t) = qr_orthonormal(&unfolded)?;
        let node = parent.name();
        guard_interaction(&node, child_mode, &s0_t)?;
        Ok(RestrictionContext {
            node,
            child_mode,
            core_dims: core.dims().to_vec(),
            q0,
            s0_t,
            children: children.clone(),
        })
    }

    pub fn node(&self) -> &str {
        &self.node
    }

    pub fn child_mode(&self) -> usize {
        self.child_mode
    }

    /// Transposed triangular factor of the unfolded core, i.e. the initial
    /// interaction carried by the selected child.
    pub fn interaction_transposed(&self) -> &Matrix {
        &self.s0_t
    }

    /// Orthonormalized complement of the unfolded connection tensor.
    pub fn complement(&self) -> &Matrix {
        &self.q0
    }

    pub fn core_dims(&self) -> &[usize] {
        &self.core_dims
    }

    pub fn initial_child(&self) -> &Ttn {
        &self.children[self.child_mode - 1]
    }

    /// The restriction of the node-level initial state: the child state with
    /// the interaction factor folded into its top mode.
    pub fn restrict_initial(&self) -> Result<Ttn, IntegratorError> {
        Ok(self.initial_child().mode0_multiply(&self.s0_t)?)
    }

    fn check_child_rank(&self, rank: usize) -> Result<(), IntegratorError> {
        let expect = self.core_dims[self.child_mode];
        if rank != expect {
            return Err(IntegratorError::shape(format!(
                "child state of rank {rank} does not match core extent {expect} at node {}",
                self.node
            )));
        }
        Ok(())
    }

    /// Prolongation as a network: the orthonormal complement becomes the new
    /// connection tensor and `y` takes the selected child's slot. The result
    /// has orthonormal factors above `y` by construction.
    pub fn prolong_network(&self, y: &Ttn) -> Result<Ttn, IntegratorError> {
        self.check_child_rank(y.rank())?;
        let core = tensorize(&self.q0.transpose(), Mode(self.child_mode), &self.core_dims)?;
        let mut children = self.children.clone();
        children[self.child_mode - 1] = y.clone();
        Ok(Ttn::Internal { core, children })
    }

    /// Adjoint of prolongation, computed without leaving the factored form:
    /// sibling overlaps contract the top core of `z`, and the result rotates
    /// the top mode of the selected child of `z`.
    pub fn restrict_network(&self, z: &Ttn) -> Result<Ttn, IntegratorError> {
        let (g, zch) = match z {
            Ttn::Internal { core, children } => (core, children),
            Ttn::Leaf { .. } => {
                return Err(IntegratorError::shape(
                    "restriction expects a node-level network",
                ))
            }
        };
        if zch.len() + 1 != self.core_dims.len() {
            return Err(IntegratorError::shape(format!(
                "network with {} children restricted at a node with {}",
                zch.len(),
                self.core_dims.len() - 1
            )));
        }
        let mut folded = g.clone();
        for j in 1..self.core_dims.len() {
            if j == self.child_mode {
                continue;
            }
            let overlap = gram(&self.children[j - 1], &zch[j - 1])?;
            folded = mode_multiply(&folded, Mode(j), &overlap)?;
        }
        let unfolded = matricize(&folded, Mode(self.child_mode))?.transpose();
        let rotation = self.q0.matmul_tn(&unfolded)?;
        Ok(zch[self.child_mode - 1].mode0_multiply(&rotation)?)
    }

    /// Extents of the node-level extended space this context embeds into.
    pub fn parent_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.core_dims[0]];
        dims.extend(self.children.iter().map(|c| c.dense_entries() as usize));
        dims
    }

    pub fn child_dims(&self) -> Vec<usize> {
        extended_dims(self.initial_child())
    }

    fn guard_budget(&self) -> Result<(), IntegratorError> {
        let entries: u128 = self.core_dims[0] as u128
            * self.children.iter().map(Ttn::dense_entries).product::<u128>();
        if entries > DENSE_BUDGET as u128 {
            return Err(IntegratorError::Model(ModelError::BudgetExceeded {
                entries,
                budget: DENSE_BUDGET,
            }));
        }
        Ok(())
    }

    /// Dense prolongation. Only suitable for small instances; the factored
    /// route above is the production path.
    pub fn prolong_dense(&self, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        self.guard_budget()?;
        let y_flat = matricize(y, Mode(0))?;
        self.check_child_rank(y_flat.rows())?;
        let mut out = tensorize(&self.q0.transpose(), Mode(self.child_mode), &self.core_dims)?;
        out = mode_multiply(&out, Mode(self.child_mode), &y_flat.transpose())?;
        for j in 1..self.core_dims.len() {
            if j == self.child_mode {
                continue;
            }
            let basis = self.children[j - 1].basis_matrix()?;
            out = mode_multiply(&out, Mode(j), &basis)?;
        }
        Ok(out)
    }

    /// Dense restriction, the adjoint of `prolong_dense`.
    pub fn restrict_dense(&self, z: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        self.guard_budget()?;
        let parent_dims = self.parent_dims();
        let z = z.reshape(&parent_dims)?;
        let mut w = z;
        for j in 1..parent_dims.len() {
            if j == self.child_mode {
                continue;
            }
            let basis = self.children[j - 1].basis_matrix()?;
            w = mode_multiply(&w, Mode(j), &basis.transpose())?;
        }
        let unfolded = matricize(&w, Mode(self.child_mode))?;
        let product = unfolded.matmul(&self.q0)?;
        Ok(tensorize(&product.transpose(), Mode(0), &self.child_dims())?)
    }
}

/// The field induced on a child's extended space: prolong, evaluate, restrict.
/// Composing these through the tree realizes the restricted fields of every
/// subtree without ever forming node-sized dense tensors (factored route).
pub struct RestrictedField<'a> {
    inner: &'a dyn VectorField,
    ctx: &'a RestrictionContext,
}

impl<'a> RestrictedField<'a> {
    pub fn new(inner: &'a dyn VectorField, ctx: &'a RestrictionContext) -> Self {
        RestrictedField { inner, ctx }
    }
}

impl VectorField for RestrictedField<'_> {
    fn eval_dense(&self, t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        let up = self.ctx.prolong_dense(y)?;
        let f = self.inner.eval_dense(t, &up)?;
        self.ctx.restrict_dense(&f)
    }

    fn eval_factored(&self, t: f64, y: &Ttn) -> Result<Vec<Ttn>, IntegratorError> {
        let up = self.ctx.prolong_network(y)?;
        let terms = self.inner.eval_factored(t, &up)?;
        terms
            .iter()
            .map(|term| self.ctx.restrict_network(term))
            .collect()
    }

    fn supports_factored(&self) -> bool {
        self.inner.supports_factored()
    }

    fn constant_in_y(&self) -> bool {
        self.inner.constant_in_y()
    }
}
