use thiserror::Error;

/// Errors raised anywhere in the kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("matrix is singular (|det| = {det:e}, floor = {floor:e})")]
    SingularMatrix { det: f64, floor: f64 },
    #[error("matrix is not symmetric (asymmetry {asym:e})")]
    NotSymmetric { asym: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("{0}")]
    Domain(#[from] DomainError),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("inverted elements after distortion: {0:?}")]
    InvertedElement(Vec<usize>),
    #[error("unsupported notched-specimen resolution: {0}")]
    UnsupportedResolution(String),
    #[error("unknown node set `{0}`")]
    UnknownNodeSet(String),
    #[error("unknown face set `{0}`")]
    UnknownFaceSet(String),
    #[error("global system is singular at equation {0}")]
    SingularSystem(usize),
    #[error("element {element}: {source}")]
    InElement {
        element: usize,
        #[source]
        source: Box<FemError>,
    },
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl FemError {
    /// Strips element context wrappers.
    pub fn root(&self) -> &FemError {
        match self {
            FemError::InElement { source, .. } => source.root(),
            other => other,
        }
    }

    /// True when the failure should trigger a load-step cutback rather than an abort.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self.root(),
            FemError::NoConvergence(_)
                | FemError::NotPositiveDefinite
                | FemError::Domain(_)
                | FemError::SingularMatrix { .. }
                | FemError::SingularSystem(_)
        )
    }
}

impl From<std::io::Error> for FemError {
    fn from(e: std::io::Error) -> Self {
        FemError::Io(e.to_string())
    }
}

/// A primitive was evaluated outside its domain (for example `ln` of a non-positive value).
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{op} evaluated at {value:e}, outside its domain")]
pub struct DomainError {
    pub op: &'static str,
    pub value: f64,
}

pub type Result<T> = std::result::Result<T, FemError>;
