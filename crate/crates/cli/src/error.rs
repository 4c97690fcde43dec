use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown symbol `{name}` at line {line}, column {column}")]
    UnknownSymbol {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("symbol `{symbol}` does not belong to the {frame}")]
    FrameSymbol { symbol: String, frame: String },

    /// A denominator vanishes at the base point.
    #[error("singular at the base point: `{0}` vanishes there")]
    Singularity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fedosov_core::Error),
}
