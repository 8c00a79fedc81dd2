use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("root set is empty")]
    EmptyRootSet,
    #[error("root {0} is not finite")]
    NonFiniteRoot(usize),
    #[error("derivative order k = {k} is out of range for degree n = {n}")]
    InvalidOrder { k: usize, n: usize },
    #[error("evaluation point coincides with a root")]
    Pole,
    #[error("division by a value below the underflow guard")]
    Underflow,
    #[error("degenerate Möbius transformation, |ad - bc| = {0:e}")]
    DegenerateMobius(f64),
    #[error("log_± of negative argument {0}")]
    NegativeLogArgument(f64),
    #[error("contour too close to zero/pole")]
    ContourTooClose,
    #[error("winding number not stable after {0} samples")]
    WindingUnstable(usize),
    #[error("root finding did not converge")]
    NotConverged,
    #[error("degree {degree} exceeds the oracle limit of {limit}")]
    DegreeTooLarge { degree: usize, limit: usize },
    #[error("measures have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("measure of size {size} exceeds the limit of {limit}")]
    MeasureTooLarge { size: usize, limit: usize },
    #[error("empirical measure is empty")]
    EmptyMeasure,
    #[error("cannot partition {n} indices into {k} blocks")]
    InvalidPartition { n: usize, k: usize },
    #[error("hypothesis not satisfied: |S_n| = {value:e} > 1 at point {point}, subset {subset:#b}")]
    HypothesisNotSatisfied { point: usize, subset: u32, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
