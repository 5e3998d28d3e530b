use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("precision must be positive, got {0}")]
    BadPrecision(i64),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("mixed contexts: {0}")]
    MixedContext(String),
    #[error("repeated root cluster could not be resolved at precision (depth {depth})")]
    UnresolvedFactor { depth: i64 },
    #[error("matrix is singular at precision")]
    SingularAtPrecision,
    #[error("characteristic polynomial has {missing} root(s) outside Z_p; declare exponents explicitly")]
    UnsupportedExponentField { missing: usize },
    #[error("index {index} beyond truncation degree {trunc}")]
    IndexBeyondTruncation { index: usize, trunc: usize },
    #[error("constant term is not invertible at precision")]
    NonUnitConstantTerm,
    #[error("precision {precision} too small: need more than {needed}")]
    PrecisionTooSmall { needed: i64, precision: i64 },
    #[error("generalized eigenspace for {0} is not separable at precision")]
    EigenspaceSplitFailure(String),
    #[error("not weakly prepared after {0} steps")]
    MaxStepsExceeded(usize),
    #[error("Sylvester operator singular at degree {degree}")]
    SylvesterSingular { degree: usize },
    #[error("A_0 + {m}I is singular: exponent -{m} hit")]
    ResidueShiftSingular { m: usize },
    #[error("rank ambiguous at precision (surviving entry of valuation {valuation})")]
    RankAmbiguousAtPrecision { valuation: i64 },
    #[error("exponents are not {0}-weakly prepared")]
    NotKWeaklyPrepared(usize),
    #[error("connections differ modulo z^{0}")]
    NotCongruentModZk(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("declared exponents do not match the residue: {0}")]
    BadDeclaredExponents(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// The variant name, for messages that must name the error case.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroDenominator => "ZeroDenominator",
            Error::NotPrime(_) => "NotPrime",
            Error::BadPrecision(_) => "BadPrecision",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::MixedContext(_) => "MixedContext",
            Error::UnresolvedFactor { .. } => "UnresolvedFactor",
            Error::SingularAtPrecision => "SingularAtPrecision",
            Error::UnsupportedExponentField { .. } => "UnsupportedExponentField",
            Error::IndexBeyondTruncation { .. } => "IndexBeyondTruncation",
            Error::NonUnitConstantTerm => "NonUnitConstantTerm",
            Error::PrecisionTooSmall { .. } => "PrecisionTooSmall",
            Error::EigenspaceSplitFailure(_) => "EigenspaceSplitFailure",
            Error::MaxStepsExceeded(_) => "MaxStepsExceeded",
            Error::SylvesterSingular { .. } => "SylvesterSingular",
            Error::ResidueShiftSingular { .. } => "ResidueShiftSingular",
            Error::RankAmbiguousAtPrecision { .. } => "RankAmbiguousAtPrecision",
            Error::NotKWeaklyPrepared(_) => "NotKWeaklyPrepared",
            Error::NotCongruentModZk(_) => "NotCongruentModZk",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::BadDeclaredExponents(_) => "BadDeclaredExponents",
            Error::Parse(_) => "Parse",
            Error::UnknownScenario(_) => "UnknownScenario",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
