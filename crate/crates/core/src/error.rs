use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("singular matrix: pivot {pivot:.3e} at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("value iteration did not converge within {0} sweeps")]
    IterationCap(usize),

    #[error("policy evaluation failed at iteration {iteration}: {source}")]
    Evaluation {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("truncation length {requested} out of range 1..={available}")]
    TruncationOutOfRange { requested: usize, available: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("gate targets and controls overlap on qubit {0}")]
    OverlappingQubits(usize),

    #[error("gate `{gate}` expects {expected} target qubits, got {actual}")]
    GateArity {
        gate: String,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("{0} qubits exceeds the simulator cap of {1}")]
    TooManyQubits(usize, usize),

    #[error("cannot encode the zero vector as a quantum state")]
    ZeroVector,

    #[error("post-selection starved: success probability {0:.3e}")]
    PostSelectionStarved(f64),

    #[error("cost denominator vanished: B|x> = 0 (over-truncated LCU?)")]
    ZeroDenominator,

    #[error("optimizer diverged: cost increased for {0} consecutive iterations")]
    Diverged(usize),

    #[error("({n_qubits}, {terms}) is not an allowed gate-count cell")]
    DisallowedCell { n_qubits: usize, terms: usize },

    #[error("infeasible: coupling floor {floor:.3e} exceeds target error rate {target:.3e}")]
    Infeasible { floor: f64, target: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
