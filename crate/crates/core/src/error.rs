use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Operands live in different coordinate dimensions.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// Jets of different truncation order were combined.
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(u32, u32),

    /// Sections with different truncation windows or frames were combined.
    #[error("structural mismatch: {0}")]
    Structure(String),

    /// Inversion of something with vanishing constant term.
    #[error("singular: {0}")]
    Singular(String),

    /// A derivative was requested from a jet with no reliable order left.
    #[error("derivative budget underflow: {0}")]
    BudgetUnderflow(String),

    /// A degree beyond the truncation window was requested.
    #[error("truncation window exceeded: {0}")]
    WindowExceeded(String),

    /// `div_hbar` met a nonzero ħ⁰ part.
    #[error("section is not divisible by hbar: {0}")]
    NotDivisible(String),

    #[error("operation requires a complex (Kähler) frame")]
    UnsupportedFrame,

    #[error("invalid pairing tensor: {0}")]
    InvalidPairing(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("parse error: {0}")]
    Parse(String),
}
