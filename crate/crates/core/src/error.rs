use thiserror::Error;

use crate::numeric::Tolerances;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tolerances {0:?}: all must be positive and rank_tol < 1")]
    InvalidTolerances(Tolerances),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("unknown letter `{0}`")]
    UnknownLetter(String),

    #[error("empty word")]
    EmptyWord,

    #[error("parameter point does not match word: {0}")]
    ParamMismatch(String),

    #[error("parameter {coordinate} of letter {letter} lies outside the torus (zero)")]
    DomainViolation { letter: String, coordinate: usize },

    #[error("letter `{0}` is not a subgroup; runs of it cannot be collapsed")]
    NotSubgroup(String),

    #[error("matrix is not in the group (membership residual {residual:.3e})")]
    NotInGroup { residual: f64 },

    #[error("target lies in the excluded locus: {0}")]
    ExcludedLocus(String),

    #[error("leading principal minor {index} vanishes")]
    LeadingMinorZero { index: usize },

    #[error("matrix is not invertible")]
    NotInvertible,

    #[error("no admissible correction found after {attempts} attempts")]
    RetriesExhausted { attempts: usize },

    #[error("upper-right block D is singular")]
    DSingular,

    #[error("upper-right block D is not symmetric (asymmetry {asymmetry:.3e})")]
    DNotSymmetric { asymmetry: f64 },

    #[error("linear system for the S-component is rank deficient (rank {rank} < {needed})")]
    LinearSystemSingular { rank: usize, needed: usize },

    #[error("factorisation residual {residual:.3e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },

    #[error("{0} is not supported for this group or word")]
    Unsupported(String),

    #[error("word is not over torus monomial letters: `{0}`")]
    NotMonomial(String),

    #[error("exponent matrix has rank {rank} < {rows} rows; kernel is not of the expected dimension")]
    RankDeficient { rank: usize, rows: usize },

    #[error("evaluation of curve and start do not agree (residual {residual:.3e})")]
    StartMismatch { residual: f64 },

    #[error("path tracking failed at t = {t:.6}")]
    TrackingFailure { t: f64 },

    #[error("invalid input: {0}")]
    Input(String),
}
