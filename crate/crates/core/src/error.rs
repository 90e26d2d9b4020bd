use thiserror::Error;

/// Errors raised by the simulation, estimation and fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EsdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("probability {value} out of range [0, 1] ({context})")]
    InvalidProbability { value: f64, context: String },

    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("duplicate qubit index {0} in gate")]
    DuplicateQubit(usize),

    #[error("wrong parameter count: expected {expected}, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid derangement: {0}")]
    InvalidDerangement(String),

    #[error("variant index {index} out of range ({count} variants for n = {n})")]
    VariantOutOfRange { index: usize, count: usize, n: usize },

    #[error("register layout needs {needed} qubits, backend cap is {cap}; use the spectral backend")]
    QubitCapExceeded { needed: usize, cap: usize },

    #[error("estimate undefined: {0}")]
    Undefined(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, EsdError>;
