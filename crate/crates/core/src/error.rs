use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid grid (N = {n}, L = {length}): {reason}")]
    InvalidGrid {
        n: usize,
        length: f64,
        reason: &'static str,
    },

    #[error("state vectors live on different grids")]
    GridMismatch,

    /// g' vanishes on too large a portion of the window for its zero set to be
    /// Lebesgue-null; g'(H)^{-1} would not be densely defined.
    #[error(
        "zero set of g' is not Lebesgue-null: |g'| < 1e-14 on {fraction:.1}% of the scan cells \
         (more than 10% allowed), so g'(H)^-1 is not densely defined"
    )]
    DenseZeroSet { fraction: f64 },

    #[error("symbol is not real-valued at λ = {at}: g(λ) = {value}")]
    NotRealValued { at: f64, value: f64 },

    #[error("symbolic derivative disagrees with finite difference at λ = {at}: {symbolic} vs {numeric}")]
    DerivativeMismatch {
        at: f64,
        symbolic: f64,
        numeric: f64,
    },

    #[error("symbol has not been validated on a spectral window")]
    NotValidated,

    #[error("empty or reversed window [{0}, {1}]")]
    InvalidWindow(f64, f64),

    #[error("invalid singular set: {0}")]
    InvalidSingularSet(String),

    #[error("exclusion margin {margin} must exceed two frequency bins ({min})")]
    MarginTooSmall { margin: f64, min: f64 },

    #[error("g'(λ) = {value:e} at unmasked frequency λ = {k}: a zero of g' was not excluded")]
    NearZeroDerivative { k: f64, value: f64 },

    #[error("symbol value is not finite at unmasked frequency λ = {k}")]
    NonFiniteSymbol { k: f64 },

    #[error("symbol is undefined at λ = {k} where the state carries mass {mass:e}")]
    UndefinedOnSupport { k: f64, mass: f64 },

    #[error("gaussian footprint [{lo}, {hi}] exceeds the domain [-{half}, {half}]")]
    FootprintExceedsDomain { lo: f64, hi: f64, half: f64 },

    #[error("invalid bump support [{0}, {1}]")]
    InvalidBump(f64, f64),

    #[error("bump support [{a}, {b}] overlaps the exclusion interval around {z} (margin {margin})")]
    BumpOverlapsSingularSet { a: f64, b: f64, z: f64, margin: f64 },

    #[error("state is not admissible: {what} = {value:e} exceeds {limit:e}")]
    Inadmissible {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
