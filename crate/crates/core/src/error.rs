use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped by [`ErrorKind`] so that front ends can map them to
/// exit codes without matching every case.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("symbol index {index} out of range for {n_states} states")]
    InvalidSymbol { index: usize, n_states: usize },

    #[error("transition structure is not topologically mixing (no positive power up to {cap})")]
    NotMixing { cap: usize },

    #[error("window too short: need {needed} symbols, have {available}")]
    InsufficientWindow { needed: usize, available: usize },

    #[error("roof Birkhoff sums are not eventually positive (checked n0 <= {max_n0})")]
    RoofNotEventuallyPositive { max_n0: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("transfer matrix is not irreducible")]
    NotPrimitive,

    #[error("could not bracket the pressure root within |P| <= {bound}")]
    BracketFailure { bound: f64 },

    #[error("point lies outside the cycle domain: {0}")]
    OutsideCycleDomain(String),

    #[error("inadmissible word: {0}")]
    InvalidWord(String),

    #[error("shifted window leaves the cylinder roof bound: {0}")]
    InvalidShift(String),

    #[error("orbit generator exhausted after {emitted} symbols")]
    OrbitTruncated { emitted: usize },

    #[error("windows are not shift-equivalent: {0}")]
    NotEquivalent(String),

    #[error("block exchange produced an inadmissible word: {0}")]
    InadmissibleSurgery(String),

    #[error("exact preimage sum unsupported: {0}")]
    UnsupportedExact(String),

    #[error("denominator sum vanished")]
    DegenerateDenominator,

    #[error("non-positive preimage sum at T# = {t_sharp}")]
    InsufficientGrowthWindow { t_sharp: f64 },

    #[error("no accepted samples")]
    DegenerateSample,

    #[error("model file: {0}")]
    ModelFormat(String),
}

/// Coarse classification used by the command line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input or configuration.
    Input,
    /// A numerical procedure failed.
    Numerical,
    /// The model violates a standing hypothesis.
    ModelInvariant,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            NoConvergence { .. }
            | BracketFailure { .. }
            | OutsideCycleDomain(_)
            | DegenerateDenominator
            | InsufficientGrowthWindow { .. }
            | DegenerateSample
            | UnsupportedExact(_) => ErrorKind::Numerical,
            RoofNotEventuallyPositive { .. } | NotMixing { .. } | NotPrimitive => {
                ErrorKind::ModelInvariant
            }
            _ => ErrorKind::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
