//! Rank truncation of a dense tensor to a prescribed tree shape: recursive
//! HOSVD from the root, then optional alternating refinement sweeps with a
//! strict accept-or-revert error check.

use crate::error::ModelError;
use crate::tree::{RankedNode, RankedTree};
use crate::ttn::{Ttn, DENSE_BUDGET};
use tensor_core::{matricize, mode_multiply, qr_economy, sym_eig, tensorize, DenseTensor, Matrix, Mode};

/// Approximates `t` by an orthonormal network of the given shape.
///
/// Initialization processes each internal node's children in order of
/// increasing dense size (cheapest contractions first) and keeps the leading
/// left singular vectors of each child-group unfolding. `als_sweeps` further
/// sweeps re-solve one factor at a time against its contracted environment;
/// a sweep that fails to reduce ‖t − contract(result)‖ is reverted and the
/// iteration stops, so the error is non-increasing in the sweep count.
pub fn truncate(
    t: &DenseTensor,
    shape: &RankedTree,
    als_sweeps: usize,
) -> Result<Ttn, ModelError> {
    if t.dims() != shape.leaf_dims().as_slice() {
        return Err(ModelError::validation(format!(
            "tensor dims {:?} do not match shape leaf dims {:?}",
            t.dims(),
            shape.leaf_dims()
        )));
    }
    if t.len() > DENSE_BUDGET {
        return Err(ModelError::BudgetExceeded {
            entries: t.len() as u128,
            budget: DENSE_BUDGET,
        });
    }

    let extended = t.reshape(&prepend_unit(t.dims()))?;
    let seeded = hosvd_node(&extended, shape.root())?;
    let seeded = seeded.orthonormalize()?;
    let mut best = refresh_root_core(&seeded, t)?;
    let t_norm = t.norm();
    let mut best_err = projection_residual(t_norm, &best);

    for _ in 0..als_sweeps {
        let candidate = als_sweep(&best, t)?;
        let err = projection_residual(t_norm, &candidate);
        if err > best_err {
            break;
        }
        best = candidate;
        best_err = err;
    }
    Ok(best)
}

/// ‖t − contract(x)‖ for x an orthogonal projection of t onto its own
/// subspace (root core refreshed), via the Pythagorean identity.
pub fn projection_residual(t_norm: f64, x: &Ttn) -> f64 {
    let y = x.top_factor_norm();
    (t_norm * t_norm - y * y).max(0.0).sqrt()
}

fn prepend_unit(dims: &[usize]) -> Vec<usize> {
    let mut d = Vec::with_capacity(dims.len() + 1);
    d.push(1);
    d.extend_from_slice(dims);
    d
}

/// Truncates one level: `extended` has dims [r, leaf dims of the subtree].
fn hosvd_node(extended: &DenseTensor, node: &RankedNode) -> Result<Ttn, ModelError> {
    let children = match node {
        RankedNode::Internal { children, .. } => children,
        RankedNode::Leaf { .. } => unreachable!("leaves are handled by the parent"),
    };

    // Mode-group layout of `extended`: child j spans `widths[j]` modes
    // starting after mode 0 and the groups of children before it.
    let mut widths: Vec<usize> = children
        .iter()
        .map(|c| c.leaf_dims().len())
        .collect();
    let mut acc = extended.clone();
    let mut bases: Vec<Option<Matrix>> = vec![None; children.len()];

    let mut order: Vec<usize> = (0..children.len()).collect();
    order.sort_by_key(|&j| children[j].dense_entries());

    for j in order {
        let start = 1 + widths[..j].iter().sum::<usize>();
        let merged = merge_group(&acc, start, widths[j])?;
        let unfolding = matricize(&merged, Mode(start))?;
        let u = leading_left_singular(&unfolding, children[j].rank())?;
        acc = mode_multiply(&merged, Mode(start), &u.transpose())?;
        bases[j] = Some(u);
        widths[j] = 1;
    }

    let built = children
        .iter()
        .zip(bases)
        .map(|(child, u)| {
            let u = u.expect("every child was processed");
            match child {
                RankedNode::Leaf { label, .. } => Ok(Ttn::Leaf { label: *label, basis: u }),
                RankedNode::Internal { rank, .. } => {
                    let mut sub_dims = vec![*rank];
                    sub_dims.extend(child.leaf_dims());
                    let sub = tensorize(&u.transpose(), Mode(0), &[*rank, u.rows()])?
                        .reshape(&sub_dims)?;
                    hosvd_node(&sub, child)
                }
            }
        })
        .collect::<Result<Vec<_>, ModelError>>()?;

    Ok(Ttn::Internal { core: acc, children: built })
}

/// Collapses `len` adjacent modes starting at `start` into one mode. Free
/// under the first-index-fastest layout because the group is contiguous.
fn merge_group(t: &DenseTensor, start: usize, len: usize) -> Result<DenseTensor, ModelError> {
    let dims = t.dims();
    let mut merged = dims[..start].to_vec();
    merged.push(dims[start..start + len].iter().product());
    merged.extend_from_slice(&dims[start + len..]);
    Ok(t.reshape(&merged)?)
}

/// Leading `r` left singular vectors of `m`, via the Gram matrix on the
/// smaller side. When the column count is smaller and some retained singular
/// values vanish, the basis is completed with deterministic orthonormal
/// directions so the result always has exactly `r` orthonormal columns.
fn leading_left_singular(m: &Matrix, r: usize) -> Result<Matrix, ModelError> {
    let (rows, cols) = (m.rows(), m.cols());
    if r > rows {
        return Err(ModelError::validation(format!(
            "cannot extract {r} directions from {rows} rows"
        )));
    }
    if rows <= cols {
        let g = m.matmul(&m.transpose())?;
        let (_, vecs) = sym_eig(&g)?;
        return Ok(take_cols(&vecs, r));
    }

    let g = m.matmul_tn(m)?;
    let (evals, vecs) = sym_eig(&g)?;
    let top = evals.first().copied().unwrap_or(0.0).max(0.0);
    let mut u = Matrix::zeros(rows, r);
    let mut kept = 0;
    for k in 0..r.min(cols) {
        let sigma_sq = evals[k].max(0.0);
        if sigma_sq <= 1e-26 * top || sigma_sq == 0.0 {
            break;
        }
        let sigma = sigma_sq.sqrt();
        for i in 0..rows {
            let mut acc = 0.0;
            for j in 0..cols {
                acc += m[(i, j)] * vecs[(j, k)];
            }
            u[(i, kept)] = acc / sigma;
        }
        kept += 1;
    }
    if kept == r {
        return Ok(u);
    }

    // Rank-deficient tail: append complement directions from a QR of the
    // kept columns alongside the identity.
    let mut padded = Matrix::zeros(rows, kept + rows);
    for j in 0..kept {
        for i in 0..rows {
            padded[(i, j)] = u[(i, j)];
        }
    }
    for i in 0..rows {
        padded[(i, kept + i)] = 1.0;
    }
    let (q, _) = qr_economy(&padded);
    Ok(take_cols(&q, r))
}

fn take_cols(m: &Matrix, r: usize) -> Matrix {
    Matrix::from_fn(m.rows(), r, |i, j| m[(i, j)])
}

/// Replaces the root core by the exact projection coefficients of `t` onto
/// the span of the children's bases, making the network value the orthogonal
/// projection of `t`.
fn refresh_root_core(x: &Ttn, t: &DenseTensor) -> Result<Ttn, ModelError> {
    let children = match x {
        Ttn::Internal { children, .. } => children,
        Ttn::Leaf { .. } => unreachable!("shape root is internal"),
    };
    let mut acc = t.reshape(&prepend_unit(t.dims()))?;
    let mut widths: Vec<usize> = children.iter().map(|c| c.leaf_dims().len()).collect();
    for (j, child) in children.iter().enumerate() {
        let start = 1 + widths[..j].iter().sum::<usize>();
        let merged = merge_group(&acc, start, widths[j])?;
        let basis = child.basis_matrix()?;
        acc = mode_multiply(&merged, Mode(start), &basis.transpose())?;
        widths[j] = 1;
    }
    Ok(Ttn::Internal { core: acc, children: children.clone() })
}

/// One alternating pass: every non-root factor is re-solved in pre-order
/// against the environment formed by contracting all bases off its root
/// path, then the root core is refreshed.
fn als_sweep(x: &Ttn, t: &DenseTensor) -> Result<Ttn, ModelError> {
    let mut current = x.clone();
    let paths = non_root_paths(&current);
    for path in paths {
        let extended = t.reshape(&prepend_unit(t.dims()))?;
        let (env, slot_start, slot_len) = contract_off_path(extended, &current, &path, 1)?;
        let merged = merge_group(&env, slot_start, slot_len)?;
        let unfolding = matricize(&merged, Mode(slot_start))?;
        let node = node_at(&current, &path);
        let rank = node.rank();
        let u = leading_left_singular(&unfolding, rank)?;
        let replacement = match node {
            Ttn::Leaf { label, .. } => Ttn::Leaf { label: *label, basis: u },
            Ttn::Internal { core, .. } => {
                let folded = tensorize(&u.transpose(), Mode(0), &[rank, u.rows()])?
                    .reshape(core.dims())?;
                Ttn::Internal {
                    core: folded,
                    children: match node {
                        Ttn::Internal { children, .. } => children.clone(),
                        _ => unreachable!(),
                    },
                }
            }
        };
        current = replace_at(&current, &path, replacement);
    }
    refresh_root_core(&current, t)
}

fn non_root_paths(x: &Ttn) -> Vec<Vec<usize>> {
    fn walk(node: &Ttn, prefix: &[usize], out: &mut Vec<Vec<usize>>) {
        if !prefix.is_empty() {
            out.push(prefix.to_vec());
        }
        if let Ttn::Internal { children, .. } = node {
            for (j, c) in children.iter().enumerate() {
                let mut p = prefix.to_vec();
                p.push(j);
                walk(c, &p, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(x, &[], &mut out);
    out
}

fn node_at<'a>(x: &'a Ttn, path: &[usize]) -> &'a Ttn {
    match path.split_first() {
        None => x,
        Some((&j, rest)) => match x {
            Ttn::Internal { children, .. } => node_at(&children[j], rest),
            Ttn::Leaf { .. } => unreachable!("path descends past a leaf"),
        },
    }
}

fn replace_at(x: &Ttn, path: &[usize], replacement: Ttn) -> Ttn {
    match path.split_first() {
        None => replacement,
        Some((&j, rest)) => match x {
            Ttn::Internal { core, children } => {
                let mut new_children = children.clone();
                new_children[j] = replace_at(&children[j], rest, replacement);
                Ttn::Internal { core: core.clone(), children: new_children }
            }
            Ttn::Leaf { .. } => unreachable!("path descends past a leaf"),
        },
    }
}

/// Contracts into `env` the dense bases of every node hanging off the root
/// path to the target, leaving the target's own slot expanded: a leaf target
/// keeps its physical mode; an internal target keeps one rank mode per
/// child. Returns the tensor plus the slot's mode offset and width.
///
/// Positions are tracked with a cursor over the evolving mode layout;
/// contractions strictly to the right of an already-located slot never move
/// it, so offsets stay absolute across the recursion.
fn contract_off_path(
    env: DenseTensor,
    node: &Ttn,
    path: &[usize],
    offset: usize,
) -> Result<(DenseTensor, usize, usize), ModelError> {
    let (&next, rest) = path.split_first().expect("called with a non-empty path");
    let children = match node {
        Ttn::Internal { children, .. } => children,
        Ttn::Leaf { .. } => unreachable!("path descends past a leaf"),
    };

    let mut acc = env;
    let mut cursor = offset;
    let mut slot = (0, 0);
    for (j, child) in children.iter().enumerate() {
        let width = child.leaf_dims().len();
        if j != next {
            let merged = merge_group(&acc, cursor, width)?;
            let basis = child.basis_matrix()?;
            acc = mode_multiply(&merged, Mode(cursor), &basis.transpose())?;
            cursor += 1;
        } else if rest.is_empty() {
            match child {
                Ttn::Leaf { .. } => {
                    slot = (cursor, 1);
                    cursor += 1;
                }
                Ttn::Internal { children: grand, .. } => {
                    let start = cursor;
                    for gc in grand {
                        let gw = gc.leaf_dims().len();
                        let merged = merge_group(&acc, cursor, gw)?;
                        let basis = gc.basis_matrix()?;
                        acc = mode_multiply(&merged, Mode(cursor), &basis.transpose())?;
                        cursor += 1;
                    }
                    slot = (start, grand.len());
                }
            }
        } else {
            let before = acc.dims().len();
            let (deeper, s, l) = contract_off_path(acc, child, rest, cursor)?;
            let contracted_away = before - deeper.dims().len();
            acc = deeper;
            slot = (s, l);
            cursor += width - contracted_away;
        }
    }
    Ok((acc, slot.0, slot.1))
}
