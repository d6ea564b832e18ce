use thiserror::Error;

use crate::lattice::Site;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("{0} must be nonempty")]
    EmptySet(&'static str),

    #[error("sets overlap at site {0}")]
    NotDisjoint(Site),

    #[error("rate {0} outside [0, 1]")]
    InvalidRate(f64),

    #[error("invalid rates ({0}, {1}): both must be finite, nonnegative and not both zero")]
    InvalidRates(f64, f64),

    #[error("sites {0} and {1} are not nearest neighbors")]
    NotNeighbors(Site, Site),

    #[error("coordinate or radius {0} exceeds the supported range")]
    OutOfRange(i64),

    #[error("stop condition has no bound; an unconditioned run never ends")]
    UnboundedStop,

    #[error("no eligible edge with a finite candidate time")]
    NoEligibleEdge,

    #[error("site {0} is already infected")]
    AlreadyInfected(Site),

    #[error("site {0} is not infected")]
    NotInfected(Site),

    #[error("parent {parent} of {site} is missing or has the wrong type")]
    BadParent { site: Site, parent: Site },

    #[error("infection type must be 1 or 2, got {0}")]
    BadType(u8),

    #[error("coupled configurations disagree on {0}")]
    InconsistentCoupling(&'static str),

    #[error("coupling precondition not met: {0}")]
    PreconditionUnmet(String),

    #[error("initial pair is not fertile: {0}")]
    Infertile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
