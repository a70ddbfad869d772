use tensor_core::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("invalid tree network: {message}")]
    Validation { message: String },
    #[error("the two networks live on different trees")]
    TreeMismatch,
    #[error("rank-deficient factor at node {node}: diagonal entry {index} of R vanished")]
    RankDeficient { node: String, index: usize },
    #[error("dense value needs {entries} entries, above the {budget}-entry budget")]
    BudgetExceeded { entries: u128, budget: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl ModelError {
    pub fn validation(message: impl Into<String>) -> Self {
        ModelError::Validation { message: message.into() }
    }
}
