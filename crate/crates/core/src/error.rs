use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),
    #[error("index set is not downward closed")]
    NotDownwardClosed,
    #[error("numerical overflow in {0}")]
    Overflow(&'static str),
    #[error("undefined power: 0 raised to a negative exponent")]
    ZeroToNegativePower,
    #[error("degenerate box on axis {axis}")]
    DegenerateBox { axis: usize },
    #[error("invalid truncated box: {0}")]
    InvalidTruncatedBox(String),
    #[error("elements {0} and {1} overlap")]
    OverlappingElements(usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("insertion point {0} lies outside the open support")]
    InsertionOutsideSupport(f64),
    #[error("point lies outside the domain")]
    OutsideDomain,
    #[error("degree {0} exceeds the supported maximum {1}")]
    DegreeTooLarge(usize, usize),
    #[error("integration box is not contained in the generator support")]
    EtaOutsideSupport,
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("invalid meshline: {0}")]
    InvalidMeshline(String),
    #[error("cycle detected in the nesting relation")]
    NestingCycle,
    #[error("no mesh element is contained in the support of generator {0}")]
    NoElementInSupport(usize),
    #[error("derivative of order {0:?} is not available")]
    DerivativeUnavailable(Vec<usize>),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
