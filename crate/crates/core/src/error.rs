use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid physical or geometric parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input failed a structural check (e.g. a matrix that should be Hermitian).
    #[error("validation error: {0}")]
    Validation(String),

    /// Integration or iteration failed to converge, or produced NaN.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A perturbative denominator vanished.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Argument outside the domain of the operation (e.g. log of a nonpositive value).
    #[error("domain error: {0}")]
    Domain(String),

    /// A closed-form time integral does not converge.
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
}

pub type Result<T> = std::result::Result<T, Error>;
