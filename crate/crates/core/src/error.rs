use thiserror::Error;

use crate::inverse::IdentifiabilityReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building or analysing a network.
///
/// Variants split into input errors (malformed networks, documents or
/// arguments) and numerical failures; see [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{field}: reference to unknown id `{id}`")]
    DanglingReference { field: String, id: String },

    #[error("{field}: duplicate id `{id}`")]
    DuplicateId { field: String, id: String },

    #[error("{field}: value must be strictly positive, got {value}")]
    NonPositiveValue { field: String, value: f64 },

    #[error("edge `{edge}` is a self-loop on node `{node}`")]
    SelfLoop { edge: String, node: String },

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("partition has no boundary nodes")]
    EmptyBoundary,

    #[error("partition has no internal nodes")]
    EmptyInterior,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid incidence matrix: {0}")]
    InvalidIncidence(String),

    #[error("invalid Laplacian: {0}")]
    InvalidLaplacian(String),

    #[error("edge `{edge}` is reactive; real analysis needs a resistor-only network")]
    ReactiveElement { edge: String },

    #[error("network has reactive elements but no frequency was given")]
    MissingFrequency,

    #[error("frequency must be finite and strictly positive, got {0}")]
    InvalidFrequency(f64),

    #[error("boundary currents do not sum to zero (sum = {sum:e})")]
    InconsistentCurrents { sum: f64 },

    #[error("network is disconnected")]
    Disconnected,

    #[error("zero pivot when eliminating node `{node}` (diagonal {pivot:e})")]
    ZeroPivot { node: String, pivot: f64 },

    #[error(
        "interior block is singular (smallest eigenvalue {min_eigenvalue:e} <= {threshold:e}); \
         the graph is disconnected or the partition is invalid"
    )]
    SingularInterior {
        min_eigenvalue: f64,
        threshold: f64,
    },

    #[error(
        "interior block is resonant (smallest singular value {sigma_min:e}, largest {sigma_max:e})"
    )]
    ResonantInterior { sigma_min: f64, sigma_max: f64 },

    #[error("Jacobian is singular")]
    SingularJacobian,

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("Gauss-Newton normal matrix is rank deficient (rank {rank} < {parameters})")]
    RankDeficient {
        rank: usize,
        parameters: usize,
        report: Box<IdentifiabilityReport>,
    },
}

impl Error {
    /// Numerical failures, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroPivot { .. }
                | Error::SingularInterior { .. }
                | Error::ResonantInterior { .. }
                | Error::SingularJacobian
                | Error::NoConvergence { .. }
                | Error::RankDeficient { .. }
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::DanglingReference { .. } => "DanglingReference",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::NonPositiveValue { .. } => "NonPositiveValue",
            Error::SelfLoop { .. } => "SelfLoop",
            Error::UnknownEdge(_) => "UnknownEdge",
            Error::UnknownNode(_) => "UnknownNode",
            Error::EmptyBoundary => "EmptyBoundary",
            Error::EmptyInterior => "EmptyInterior",
            Error::InvalidPartition(_) => "InvalidPartition",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidIncidence(_) => "InvalidIncidence",
            Error::InvalidLaplacian(_) => "InvalidLaplacian",
            Error::ReactiveElement { .. } => "ReactiveElement",
            Error::MissingFrequency => "MissingFrequency",
            Error::InvalidFrequency(_) => "InvalidFrequency",
            Error::InconsistentCurrents { .. } => "InconsistentCurrents",
            Error::Disconnected => "Disconnected",
            Error::ZeroPivot { .. } => "ZeroPivot",
            Error::SingularInterior { .. } => "SingularInterior",
            Error::ResonantInterior { .. } => "ResonantInterior",
            Error::SingularJacobian => "SingularJacobian",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::RankDeficient { .. } => "RankDeficient",
        }
    }
}
