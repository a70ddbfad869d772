use tensor_core::TensorError;
use thiserror::Error;
use ttn_model::ModelError;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error(
        "singular initial interaction at node {node}, child {child}: smallest \
         QR diagonal {min_diag:e}; the step assumes full tree rank"
    )]
    DegenerateCore { node: String, child: usize, min_diag: f64 },
    #[error("rank loss at node {node} ({stage}), diagonal index {index}")]
    RankLoss { node: String, stage: &'static str, index: usize },
    #[error(
        "orthonormality lost after step {step}: node {node} deviates by {deviation:e}"
    )]
    OrthonormalityLost { step: usize, node: String, deviation: f64 },
    #[error("{steps} steps exceed the step budget {budget}")]
    StepBudget { steps: u128, budget: usize },
    #[error("exact-increment solving requires a field that is constant in Y")]
    SolverNotApplicable,
    #[error(
        "factorized and dense field evaluations disagree at t = {t}: relative \
         difference {rel:e} exceeds {tol:e}"
    )]
    FactoredDenseMismatch { t: f64, rel: f64, tol: f64 },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl IntegratorError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        IntegratorError::Shape(msg.into())
    }
}
