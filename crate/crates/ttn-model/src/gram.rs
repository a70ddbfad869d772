//! Inner products of basis matrices of two networks over the same tree,
//! computed leaf-to-root without ever forming an n_total-row matrix.

use crate::error::ModelError;
use crate::ttn::Ttn;
use tensor_core::{matricize, mode_multiply, Mode};
use tensor_core::Matrix;

/// U_xᵀ·U_z for the dense basis matrices of two nodes over the same subtree
/// (r_x × r_z). Ranks may differ; leaf dimensions must match.
///
/// Recursion: at a leaf this is a plain basis product; at an internal node
/// the children's Gram matrices are folded into one core and contracted with
/// the other, so cost stays polynomial in the ranks.
pub fn gram(x: &Ttn, z: &Ttn) -> Result<Matrix, ModelError> {
    match (x, z) {
        (Ttn::Leaf { basis: bx, label: lx }, Ttn::Leaf { basis: bz, label: lz }) => {
            if lx != lz || bx.rows() != bz.rows() {
                return Err(ModelError::TreeMismatch);
            }
            Ok(bx.matmul_tn(bz)?)
        }
        (
            Ttn::Internal { core: cx, children: chx },
            Ttn::Internal { core: cz, children: chz },
        ) => {
            if chx.len() != chz.len() {
                return Err(ModelError::TreeMismatch);
            }
            let mut folded = cx.clone();
            for (j, (a, b)) in chx.iter().zip(chz).enumerate() {
                let m = gram(a, b)?;
                folded = mode_multiply(&folded, Mode(j + 1), &m.transpose())?;
            }
            let left = matricize(&folded, Mode(0))?;
            let right = matricize(cz, Mode(0))?;
            Ok(left.matmul(&right.transpose())?)
        }
        _ => Err(ModelError::TreeMismatch),
    }
}
