use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular basis: |det| = {det:e} is not above the threshold {threshold:e}")]
    SingularBasis { det: f64, threshold: f64 },

    #[error("dimension {0} is not supported (expected 2..=8)")]
    DimensionUnsupported(usize),

    #[error("malformed basis: {0}")]
    MalformedBasis(String),

    #[error("enumeration budget exceeded: more than {cap} candidates")]
    EnumerationBudgetExceeded { cap: u64 },

    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),

    #[error("invalid norm specification: {0}")]
    InvalidNormSpec(String),

    #[error("unknown lattice `{0}`")]
    UnknownLattice(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Errors that come from the geometry of the input rather than its syntax.
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            Error::SingularBasis { .. }
                | Error::EnumerationBudgetExceeded { .. }
                | Error::GeometryDegenerate(_)
        )
    }
}
