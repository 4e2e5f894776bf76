use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Violates `1 <= p < n` or a length mismatch between vectors.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A structural invariant of an input type does not hold.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A scenario or regime cannot be evaluated at the requested sample size.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate posterior: no resolvable mass on (W_n, 1) with W_n = {w_n}")]
    DegeneratePosterior { w_n: f64 },

    #[error("method error: {0}")]
    Method(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error stems from invalid user input rather than a
    /// failure during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_) | Error::Invariant(_) | Error::Config(_) | Error::Parse(_)
        )
    }
}
