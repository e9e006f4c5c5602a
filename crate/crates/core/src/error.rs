use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode space: {0}")]
    InvalidSpace(String),

    #[error("rho must be nonnegative, got {0}")]
    NegativeRho(f64),

    #[error("interior margin {margin} exceeds cutoff {cutoff}")]
    MarginTooLarge { margin: u32, cutoff: u32 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operator is not Hermitian (max |H - H^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("quadrature did not converge: refinement changed result by {change:.3e} (tolerance {tolerance:.3e})")]
    QuadratureNotConverged { change: f64, tolerance: f64 },

    #[error("non-finite integrand value at node {node}")]
    NonFinite { node: String },

    #[error("moment degree {degree} exceeds table maximum {max}")]
    MomentOverflow { degree: u32, max: u32 },

    #[error("quadrature rule failed self-validation: monomial ({a},{b}) off by {error:.3e}")]
    RuleValidation { a: u32, b: u32, error: f64 },

    #[error("no polynomial Berezin symbol at degree {degree}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NoPolynomialSymbol {
        degree: u32,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("symbol parse error on line {line}: {message}")]
    SymbolParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
