use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BondError {
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("gamma must be non-negative, got {0}")]
    NegativeGamma(f64),
    #[error("parameter {name} is not finite")]
    NonFiniteParameter { name: &'static str },
    #[error("Feller condition violated: 2*alpha = {two_alpha} < sigma^2 = {sigma_sq}")]
    FellerViolated { two_alpha: f64, sigma_sq: f64 },
    #[error("beta = 0 is not supported by {0}")]
    BetaZeroUnsupportedForClosedForm(&'static str),
    #[error("{pricer} requires gamma = {expected}, got {actual}")]
    GammaMismatch {
        pricer: &'static str,
        expected: f64,
        actual: f64,
    },
    #[error("{what} is undefined at r = {r}")]
    DomainError { what: &'static str, r: f64 },
    #[error("negative maturity {0}")]
    NegativeMaturity(f64),
    #[error("finite-difference step {step} exceeds a quarter of {coordinate} = {value}")]
    StepTooLarge {
        coordinate: &'static str,
        step: f64,
        value: f64,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid PDE configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite or non-positive bond price at step {step}, node {node}")]
    UnstableSolve { step: usize, node: usize },
    #[error("tridiagonal pivot {pivot:e} at row {row} is numerically zero")]
    TridiagonalSingular { row: usize, pivot: f64 },
    #[error("error norm {value:e} at index {index} is not positive; the pricers agree to machine precision")]
    NonPositiveError { index: usize, value: f64 },
    #[error("need at least two maturities, got {0}")]
    TooFewMaturities(usize),
    #[error("error list has {errors} entries but {taus} maturities were given")]
    LengthMismatch { errors: usize, taus: usize },
    #[error("yield is undefined at zero maturity")]
    ZeroMaturity,
    #[error("curves live on different grids or maturities")]
    GridMismatch,
    #[error("table 3 needs a PDE solution")]
    MissingPdeSolution,
    #[error("snapshot maturity {tau} is outside [0, {t_final}]")]
    SnapshotOutOfRange { tau: f64, t_final: f64 },
    #[error("parameter file line {line}: {message}")]
    ParamFile { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, BondError>;
