use alloc::string::String;
use core::fmt;

/// Error type shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An H-representation describes an unbounded set.
    Unbounded,
    /// Ambient dimensions of two objects disagree.
    DimensionMismatch { expected: usize, got: usize },
    /// A matrix or basis does not have the required rank.
    RankDeficient(String),
    /// A subspace is not spanned by rational vectors.
    IrrationalSubspace,
    /// The lattices of two periodic decompositions differ.
    LatticeMismatch,
    /// A requested vertex is not a vertex of the decomposition.
    NotAVertex,
    /// Delaunay window too small to certify periodicity.
    InsufficientRadius { suggested: u32 },
    /// Transversality fails at a cell; carries a description of the cell.
    TransversalityFailure(String),
    /// A function is not convex where convexity is required.
    NotConvex(String),
    /// Inconsistent scenario input (hard error).
    InconsistentInput(String),
    /// A value that must be rational carries symbolic generators.
    SymbolicValue,
    /// Generic invalid-input error.
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Unbounded => write!(f, "unbounded"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::RankDeficient(s) => write!(f, "rank deficient: {s}"),
            Error::IrrationalSubspace => write!(f, "subspace has no rational basis"),
            Error::LatticeMismatch => write!(f, "lattice mismatch"),
            Error::NotAVertex => write!(f, "point is not a vertex of the decomposition"),
            Error::InsufficientRadius { suggested } => {
                write!(f, "search radius insufficient, try {suggested}")
            }
            Error::TransversalityFailure(s) => write!(f, "transversality failure at {s}"),
            Error::NotConvex(s) => write!(f, "not convex: {s}"),
            Error::InconsistentInput(s) => write!(f, "inconsistent input: {s}"),
            Error::SymbolicValue => write!(f, "value is symbolic where a rational is required"),
            Error::Invalid(s) => write!(f, "{s}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
