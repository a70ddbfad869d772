//! The tree tensor network value type and its core algebra: dense
//! contraction, orthonormalization, block sums, and exact sum norms.

use crate::error::ModelError;
use crate::tree::Tree;
use tensor_core::{
    matricize, mode_multiply, qr_economy, qr_orthonormal, tensorize, DenseTensor, Matrix, Mode,
};

/// Largest dense value the model crate will materialize (entry count).
pub const DENSE_BUDGET: usize = 20_000_000;

/// A tree tensor network node: an n×r basis matrix at a leaf, or a connection
/// tensor of dims [r, r_1, …, r_m] over m child networks. The value of a node
/// lives in R^{r × n_1 × … × n_m} with each child's leaf block flattened.
#[derive(Debug, Clone, PartialEq)]
pub enum Ttn {
    Leaf { label: usize, basis: Matrix },
    Internal { core: DenseTensor, children: Vec<Ttn> },
}

/// Orthonormality defect of one node, named by its subtree text.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDeviation {
    pub node: String,
    pub deviation: f64,
}

impl Ttn {
    /// Mode-0 extent of this node's value (1 at the root of a full network).
    pub fn rank(&self) -> usize {
        match self {
            Ttn::Leaf { basis, .. } => basis.cols(),
            Ttn::Internal { core, .. } => core.dims()[0],
        }
    }

    pub fn tree(&self) -> Tree {
        match self {
            Ttn::Leaf { label, .. } => Tree::Leaf(*label),
            Ttn::Internal { children, .. } => {
                Tree::Internal(children.iter().map(Ttn::tree).collect())
            }
        }
    }

    pub fn name(&self) -> String {
        self.tree().to_string()
    }

    /// Product of leaf dimensions below this node.
    pub fn dense_entries(&self) -> u128 {
        match self {
            Ttn::Leaf { basis, .. } => basis.rows() as u128,
            Ttn::Internal { children, .. } => children.iter().map(Ttn::dense_entries).product(),
        }
    }

    /// Leaf dimensions in left-to-right tree order.
    pub fn leaf_dims(&self) -> Vec<usize> {
        match self {
            Ttn::Leaf { basis, .. } => vec![basis.rows()],
            Ttn::Internal { children, .. } => {
                children.iter().flat_map(Ttn::leaf_dims).collect()
            }
        }
    }

    pub fn storage_entries(&self) -> usize {
        match self {
            Ttn::Leaf { basis, .. } => basis.rows() * basis.cols(),
            Ttn::Internal { core, children } => {
                core.len() + children.iter().map(Ttn::storage_entries).sum::<usize>()
            }
        }
    }

    fn budget_check(&self) -> Result<(), ModelError> {
        let entries = self.rank() as u128 * self.dense_entries();
        if entries > DENSE_BUDGET as u128 {
            return Err(ModelError::BudgetExceeded { entries, budget: DENSE_BUDGET });
        }
        Ok(())
    }

    /// Dense value of this node: dims [r, n_1, …, n_m] (a leaf gives [r, n]).
    pub fn contract_extended(&self) -> Result<DenseTensor, ModelError> {
        self.budget_check()?;
        match self {
            Ttn::Leaf { basis, .. } => {
                let t = basis.transpose();
                Ok(DenseTensor::from_data(&[basis.cols(), basis.rows()], t.into_data())?)
            }
            Ttn::Internal { core, children } => {
                let mut acc = core.clone();
                for (j, child) in children.iter().enumerate() {
                    let u = child.basis_matrix()?;
                    acc = mode_multiply(&acc, Mode(j + 1), &u)?;
                }
                Ok(acc)
            }
        }
    }

    /// Dense basis matrix of this node: mat_0 of the value, transposed
    /// (n_total × r, orthonormal columns when the network is orthonormal).
    pub fn basis_matrix(&self) -> Result<Matrix, ModelError> {
        let value = self.contract_extended()?;
        let n: usize = value.dims()[1..].iter().product();
        let m = Matrix::from_col_major(value.dims()[0], n, value.into_data())?;
        Ok(m.transpose())
    }

    /// Dense order-d tensor of a full network (mode-0 extent 1), with one
    /// mode per leaf in left-to-right tree order.
    pub fn contract(&self) -> Result<DenseTensor, ModelError> {
        if self.rank() != 1 {
            return Err(ModelError::validation(format!(
                "contract needs mode-0 extent 1, got {}",
                self.rank()
            )));
        }
        let value = self.contract_extended()?;
        Ok(value.reshape(&self.leaf_dims())?)
    }

    /// X ×_0 M in factorized form: only the top factor changes.
    pub fn mode0_multiply(&self, m: &Matrix) -> Result<Ttn, ModelError> {
        match self {
            Ttn::Leaf { label, basis } => Ok(Ttn::Leaf {
                label: *label,
                basis: basis.matmul(&m.transpose())?,
            }),
            Ttn::Internal { core, children } => Ok(Ttn::Internal {
                core: mode_multiply(core, Mode(0), m)?,
                children: children.clone(),
            }),
        }
    }

    pub fn scale(&self, factor: f64) -> Ttn {
        match self {
            Ttn::Leaf { label, basis } => {
                Ttn::Leaf { label: *label, basis: basis.scale(factor) }
            }
            Ttn::Internal { core, children } => Ttn::Internal {
                core: core.scale(factor),
                children: children.clone(),
            },
        }
    }

    /// Frobenius norm of the top factor; equals the norm of the dense value
    /// when all non-root factors are orthonormal.
    pub fn top_factor_norm(&self) -> f64 {
        match self {
            Ttn::Leaf { basis, .. } => basis.frobenius_norm(),
            Ttn::Internal { core, .. } => core.norm(),
        }
    }

    /// Rewrites the network so every leaf basis and every non-root connection
    /// matricization is orthonormal, by a leaf-to-root QR sweep that folds
    /// each R factor into the parent core. The dense value is unchanged.
    pub fn orthonormalize(&self) -> Result<Ttn, ModelError> {
        match self {
            Ttn::Leaf { .. } => Err(ModelError::validation(
                "cannot orthonormalize a bare leaf node",
            )),
            Ttn::Internal { core, children } => {
                let mut new_core = core.clone();
                let mut new_children = Vec::with_capacity(children.len());
                for (j, child) in children.iter().enumerate() {
                    let (ortho, r) = orthonormalize_node(child)?;
                    new_core = mode_multiply(&new_core, Mode(j + 1), &r)?;
                    new_children.push(ortho);
                }
                Ok(Ttn::Internal { core: new_core, children: new_children })
            }
        }
    }

    /// Per-node deviations ‖QᵀQ − I‖_F for Q = U_ℓ (leaf) or mat_0(C_τ)ᵀ
    /// (internal). The root core carries no orthonormality constraint and is
    /// not reported.
    pub fn check_orthonormal(&self) -> Vec<NodeDeviation> {
        let mut out = Vec::new();
        if let Ttn::Internal { children, .. } = self {
            for child in children {
                collect_deviations(child, &mut out);
            }
        }
        out
    }

    pub fn max_deviation(&self) -> f64 {
        self.check_orthonormal()
            .iter()
            .fold(0.0, |acc, d| acc.max(d.deviation))
    }
}

fn orthonormalize_node(node: &Ttn) -> Result<(Ttn, Matrix), ModelError> {
    match node {
        Ttn::Leaf { label, basis } => {
            let (q, r) = qr_orthonormal(basis)?;
            guard_full_rank(&r, &node.name())?;
            Ok((Ttn::Leaf { label: *label, basis: q }, r))
        }
        Ttn::Internal { core, children } => {
            let mut new_core = core.clone();
            let mut new_children = Vec::with_capacity(children.len());
            for (j, child) in children.iter().enumerate() {
                let (ortho, r) = orthonormalize_node(child)?;
                new_core = mode_multiply(&new_core, Mode(j + 1), &r)?;
                new_children.push(ortho);
            }
            let unfolded = matricize(&new_core, Mode(0))?.transpose();
            let (q, r) = qr_orthonormal(&unfolded)?;
            guard_full_rank(&r, &node.name())?;
            let core_dims = new_core.dims().to_vec();
            let folded = tensorize(&q.transpose(), Mode(0), &core_dims)?;
            Ok((Ttn::Internal { core: folded, children: new_children }, r))
        }
    }
}

fn guard_full_rank(r: &Matrix, node: &str) -> Result<(), ModelError> {
    let scale = r.frobenius_norm();
    for j in 0..r.cols().min(r.rows()) {
        if r[(j, j)].abs() <= 1e-13 * scale {
            return Err(ModelError::RankDeficient { node: node.to_string(), index: j });
        }
    }
    Ok(())
}

fn collect_deviations(node: &Ttn, out: &mut Vec<NodeDeviation>) {
    match node {
        Ttn::Leaf { basis, .. } => out.push(NodeDeviation {
            node: node.name(),
            deviation: basis.orthonormality_deviation(),
        }),
        Ttn::Internal { core, children } => {
            // QᵀQ for Q = mat_0(C)ᵀ is mat_0(C)·mat_0(C)ᵀ.
            let m0 = matricize(core, Mode(0)).expect("mode 0 always exists");
            let q = m0.transpose();
            out.push(NodeDeviation {
                node: node.name(),
                deviation: q.orthonormality_deviation(),
            });
            for child in children {
                collect_deviations(child, out);
            }
        }
    }
}

/// Σ_k α_k · X_k as one network: ranks add per node, cores embed block-wise,
/// weights fold into the root core. All terms must share the tree, the leaf
/// dimensions, and mode-0 extent 1.
pub fn linear_combination(terms: &[(f64, &Ttn)]) -> Result<Ttn, ModelError> {
    let (_, first) = terms.first().ok_or_else(|| {
        ModelError::validation("linear_combination needs at least one term")
    })?;
    for (_, t) in terms {
        if t.tree() != first.tree() || t.leaf_dims() != first.leaf_dims() {
            return Err(ModelError::TreeMismatch);
        }
        if t.rank() != 1 {
            return Err(ModelError::validation(
                "linear_combination needs mode-0 extent 1 on every term",
            ));
        }
    }
    block_nodes(terms, true)
}

fn block_nodes(terms: &[(f64, &Ttn)], is_root: bool) -> Result<Ttn, ModelError> {
    match terms[0].1 {
        Ttn::Leaf { label, .. } => {
            let n = match terms[0].1 {
                Ttn::Leaf { basis, .. } => basis.rows(),
                _ => unreachable!(),
            };
            let total: usize = terms
                .iter()
                .map(|(_, t)| match t {
                    Ttn::Leaf { basis, .. } => basis.cols(),
                    _ => unreachable!(),
                })
                .sum();
            let mut stacked = Matrix::zeros(n, total);
            let mut offset = 0;
            for (_, t) in terms {
                if let Ttn::Leaf { basis, .. } = t {
                    for j in 0..basis.cols() {
                        for i in 0..n {
                            stacked[(i, offset + j)] = basis[(i, j)];
                        }
                    }
                    offset += basis.cols();
                }
            }
            Ok(Ttn::Leaf { label: *label, basis: stacked })
        }
        Ttn::Internal { children, .. } => {
            let m = children.len();
            let mut new_children = Vec::with_capacity(m);
            for j in 0..m {
                let child_terms: Vec<(f64, &Ttn)> = terms
                    .iter()
                    .map(|(a, t)| match t {
                        Ttn::Internal { children, .. } => (*a, &children[j]),
                        _ => unreachable!(),
                    })
                    .collect();
                new_children.push(block_nodes(&child_terms, false)?);
            }

            // Block extents per mode; mode 0 stays 1 at the root.
            let mut dims = vec![0usize; m + 1];
            dims[0] = if is_root {
                1
            } else {
                terms.iter().map(|(_, t)| t.rank()).sum()
            };
            for j in 0..m {
                dims[j + 1] = terms
                    .iter()
                    .map(|(_, t)| match t {
                        Ttn::Internal { children, .. } => children[j].rank(),
                        _ => unreachable!(),
                    })
                    .sum();
            }
            let mut blocked = DenseTensor::zeros(&dims);
            let mut offsets = vec![0usize; m + 1];
            for (alpha, t) in terms {
                if let Ttn::Internal { core, .. } = t {
                    let weight = if is_root { *alpha } else { 1.0 };
                    tensor_core::each_index(core.dims(), |idx| {
                        let mut dst: Vec<usize> = idx
                            .iter()
                            .zip(&offsets)
                            .map(|(i, o)| i + o)
                            .collect();
                        if is_root {
                            dst[0] = 0;
                        }
                        blocked.set(&dst, blocked.get(&dst) + weight * core.get(idx));
                    });
                    if !is_root {
                        offsets[0] += core.dims()[0];
                    }
                    for j in 0..m {
                        offsets[j + 1] += core.dims()[j + 1];
                    }
                }
            }
            Ok(Ttn::Internal { core: blocked, children: new_children })
        }
    }
}

/// Exact Euclidean norm of Σ_k α_k · X_k, computed entirely in factorized
/// form: build the block sum, run an economy-QR sweep from the leaves, and
/// read the root core norm. Unlike a Gram-based evaluation this does not
/// square the condition number, so cancellation down to ~1e-14 is resolved.
pub fn combination_norm(terms: &[(f64, &Ttn)]) -> Result<f64, ModelError> {
    let combined = linear_combination(terms)?;
    match combined {
        Ttn::Leaf { .. } => unreachable!("combination root is internal"),
        Ttn::Internal { core, children } => {
            let mut acc = core;
            for (j, child) in children.iter().enumerate() {
                let r = norm_sweep(child)?;
                acc = mode_multiply(&acc, Mode(j + 1), &r)?;
            }
            Ok(acc.norm())
        }
    }
}

fn norm_sweep(node: &Ttn) -> Result<Matrix, ModelError> {
    match node {
        Ttn::Leaf { basis, .. } => {
            let (_, r) = qr_economy(basis);
            Ok(r)
        }
        Ttn::Internal { core, children } => {
            let mut acc = core.clone();
            for (j, child) in children.iter().enumerate() {
                let r = norm_sweep(child)?;
                acc = mode_multiply(&acc, Mode(j + 1), &r)?;
            }
            let (_, r) = qr_economy(&matricize(&acc, Mode(0))?.transpose());
            Ok(r)
        }
    }
}
