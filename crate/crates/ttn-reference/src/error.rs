use tensor_core::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense reference would hold {entries} entries, budget {budget}")]
    BudgetExceeded { entries: u128, budget: usize },
    #[error(
        "reference self-consistency gate failed: halving the step moved the \
         endpoint by {rel_change:e} relative (limit {limit:e})"
    )]
    SelfConsistency { rel_change: f64, limit: f64 },
    #[error("rank loss in factor {factor} at diagonal index {index}")]
    RankLoss { factor: &'static str, index: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
