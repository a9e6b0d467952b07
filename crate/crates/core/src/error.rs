use thiserror::Error;

use crate::numkernel::KernelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("embedding does not have dense range: rank {rank} < {required}")]
    DenseRange { rank: usize, required: usize },
    #[error("{what} is not Hermitian positive definite: {source}")]
    Definiteness { what: &'static str, source: KernelError },
    #[error("association is ill-posed: the form is singular on ker(j) (smallest singular value {sigma_min:.3e})")]
    IllPosedAssociation { sigma_min: f64 },
    #[error("numerical-range normalisation is degenerate: {0}")]
    DegenerateNormalization(String),
    #[error("eigenvalue {eigenvalue} lies on the split line Re = {delta} (gap {gap:.3e}); choose another delta")]
    SplitTie { delta: f64, eigenvalue: String, gap: f64 },
    #[error("spectral split invariant violated: {0}")]
    SplitInvariant(String),
    #[error("slope fit failed: {0}")]
    Fit(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
