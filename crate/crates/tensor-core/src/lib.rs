//! Dense tensor and small-matrix kernels shared by the tree tensor network
//! crates: a fixed first-index-fastest linearization, mode unfoldings and
//! products against that layout, and deterministic QR / symmetric eigen /
//! matrix exponential routines.

mod linalg;
mod matrix;
mod tensor;

pub use linalg::{matrix_exp, qr_economy, qr_orthonormal, sym_eig};
pub use matrix::Matrix;
pub use tensor::{
    each_index, linear_index, matricize, mode_multiply, mode_multiply_all, tensorize, DenseTensor,
    Mode,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TensorError {
    #[error("buffer length mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("inner dimensions differ: {left} vs {right}")]
    InnerDimensionMismatch { left: usize, right: usize },
    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("matrix is {rows}x{cols}, but rows >= cols is required here")]
    NotTall { rows: usize, cols: usize },
    #[error("matrix is {rows}x{cols}, but a square matrix is required")]
    NotSquare { rows: usize, cols: usize },
}
