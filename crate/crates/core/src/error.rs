use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A numeric input fell outside its admissible range.
    #[error("`{name}` out of range: got {value}, expected {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// An expectation has no finite value (e.g. a waiting time with zero
    /// success probability) or a tail sum failed to converge.
    #[error("divergent expectation: {0}")]
    Divergent(String),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit state")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("{qubits} qubits exceed the dense-matrix cap of {cap}")]
    TooManyQubits { qubits: usize, cap: usize },

    #[error("length mismatch: expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
