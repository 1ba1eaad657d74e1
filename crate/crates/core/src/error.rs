//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at site {site}: expected {expected}, got {got}")]
    DimensionMismatch { site: usize, expected: usize, got: usize },

    #[error("operators live on different Hilbert spaces: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("Hamiltonian is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("negative rate {rate} for dissipator `{name}`")]
    NegativeRate { name: String, rate: f64 },

    #[error("steady state is not unique: smallest |eigenvalues| {smallest:.3e} and {second:.3e}")]
    DegenerateNullSpace { smallest: f64, second: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("integrator failed at t = {t:.6e}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("Fock cutoff {cutoff} too small: tail population {tail:.3e}")]
    CutoffTooSmall { cutoff: usize, tail: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("steady inversion {0:.4} is not positive; t95 is undefined")]
    NotInverted(f64),

    #[error("scan point ({i}, {j}) failed: {source}")]
    ScanPoint {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cumulant closure met an average of order {order}: {average}")]
    ClosureOrder { order: usize, average: String },

    #[error("moment closure did not terminate within {cap} moments; runaway: {runaway:?}")]
    NonTerminatingClosure { cap: usize, runaway: Vec<String> },

    #[error("moment {0} is not part of the equation system")]
    UnknownMoment(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("missing value for parameter symbol `{0}`")]
    MissingSymbol(String),

    #[error("no steady state: oscillation with period ~{period:.4e} persists")]
    LimitCycle { period: f64 },

    #[error("steady state not reached by t = {t:.4e} (residual {residual:.3e})")]
    NotConverged { t: f64, residual: f64 },

    #[error("correlation has not decayed: |g1(tmax)|/g1(0) = {ratio:.3e}; use a longer window")]
    InsufficientDecay { ratio: f64 },

    #[error("spectrum has no unique peak: {0}")]
    NoPeak(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step size {dt} exceeds the limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("non-finite value encountered at t = {t:.6e}")]
    NonFinite { t: f64 },

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("unit error: {0}")]
    Unit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
