use alloc::string::String;

/// Errors raised by the numerical pipelines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("inner series of a composition must have zero constant term")]
    NonzeroInnerConstant,
    #[error("logarithm needs a positive constant term, got {0}")]
    NonpositiveConstantTerm(f64),
    #[error("series has a zero constant term")]
    ZeroConstantTerm,
    #[error("coefficient overflow in {0} (valid range is order <= 100)")]
    Overflow(&'static str),

    #[error("theta = {0} lies outside the parameter interval")]
    ThetaOutOfDomain(f64),
    #[error("mean = {0} lies outside the mean domain")]
    MeanOutOfDomain(f64),
    #[error("mean out of domain at cell ({row}, {col}): {mean}")]
    CellMeanOutOfDomain { row: usize, col: usize, mean: f64 },
    #[error("no sampler registered for family {0}")]
    SamplerUnavailable(String),
    #[error("basis measure is concentrated on a single point")]
    DegenerateBasis,

    #[error("not infinitely divisible: c_{index} = {value}")]
    NotInfinitelyDivisible { index: usize, value: f64 },
    #[error("alpha_{index} > 0 while beta_{index} = 0")]
    AbsoluteContinuityViolated { index: usize },
    #[error("quadratic variance with a2 = -1 (Bernoulli) has no reduction function")]
    BernoulliNoRf,
    #[error("no reduction function available for family {0}")]
    RfUnavailable(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    NonConvergent { estimate: f64, error: f64 },
    #[error("formula {name} failed validation: max relative discrepancy {discrepancy:e}")]
    FormulaInvalid { name: String, discrepancy: f64 },
    #[error("density series unreliable at x = {0}")]
    SeriesDiverged(f64),
    #[error("truncated convolution tail {0:e} exceeds tolerance")]
    TailTooHeavy(f64),
    #[error("tolerance {requested:e} not met (achieved {achieved:e})")]
    ToleranceNotMet { requested: f64, achieved: f64 },

    #[error("eigengap {0:e} too small: leading subspace ill-defined")]
    DegenerateSpectrum(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown family: {0}")]
    UnknownFamily(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
