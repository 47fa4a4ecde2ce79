use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by circuit validation and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed document: {0}")]
    Parse(String),

    #[error("gate {gate} in layer {layer} is not unitary (max deviation {deviation:.3e})")]
    NonUnitary {
        layer: usize,
        gate: usize,
        deviation: f64,
    },

    #[error("gates overlap on qubit {qubit} in layer {layer}")]
    OverlappingGates { layer: usize, qubit: usize },

    #[error("invalid gate in layer {layer}: {reason}")]
    InvalidGate { layer: usize, reason: String },

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gamma = {gamma:.6e} exceeds the zero-free admissibility bound {bound:.6e}")]
    GammaTooLarge { gamma: f64, bound: f64 },

    #[error("truncation order {p} exceeds the configured cap {cap}")]
    OrderCap { p: usize, cap: usize },

    #[error("{n} qubits exceed the dense simulation cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("enumeration needs {count} terms, budget is {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("bond dimension {bond} exceeds the bound {bound} at cut {cut}")]
    BondBound { cut: usize, bond: usize, bound: usize },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("coarse-graining failed: {0}")]
    CoarseGrain(String),
}

impl Error {
    /// Input failed to parse or validate as a circuit/observable document.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::NonUnitary { .. }
                | Error::OverlappingGates { .. }
                | Error::InvalidGate { .. }
                | Error::Layout(_)
        )
    }

    /// An algorithm precondition was not met by otherwise valid input.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::GammaTooLarge { .. }
                | Error::ZeroPolynomial
                | Error::CoarseGrain(_)
        )
    }

    /// A configured resource limit was hit.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. } | Error::BudgetExceeded { .. } | Error::OrderCap { .. }
        )
    }
}
