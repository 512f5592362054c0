use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("qubit {qubit} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("steady state is ambiguous: {0}")]
    Ambiguous(String),
    #[error("invalid calibration: {0}")]
    Calibration(String),
    #[error("missing calibration entry for ion pair ({0}, {1})")]
    MissingPair(usize, usize),
    #[error("dataset is not informationally complete: {0}")]
    NotInformationallyComplete(String),
    #[error("request exceeds cost guard: {0}")]
    CostGuard(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
