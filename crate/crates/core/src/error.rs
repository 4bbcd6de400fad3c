use thiserror::Error;

/// Coarse classification used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: documents, expressions, chart mismatches.
    Input,
    /// The input is well formed but the mathematical property does not hold.
    Negative,
    /// The engine could not certify an answer (sampling, pivots, regularity).
    Certification,
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sampling exhausted: {0}")]
    SamplingExhausted(String),
    #[error("pivot ambiguity: {0}")]
    PivotAmbiguity(String),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("generators are dependent: generic rank {rank} < {count}")]
    DependentGenerators { rank: usize, count: usize },
    #[error("derived flag not stable after {0} steps")]
    MaxStepsExceeded(usize),
    #[error("field is not contained in the distribution")]
    NotInDistribution,
    #[error("not a first integral: {0}")]
    NotFirstIntegral(String),
    #[error("transversal coefficient of `{0}` vanishes")]
    ZeroTransversalCoefficient(String),
    #[error("not de-prolongable: {0}")]
    NotDeprolongable(String),
    #[error("maps are not mutually inverse: {0}")]
    NotInverse(String),
    #[error("distribution is not fully non-holonomic (closure rank {closure} < {dim})")]
    NotFullyNonholonomic { closure: usize, dim: usize },
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("total derivative needs `{0}`, which exceeds the jet order; prolong first")]
    ExceedsJetOrder(String),
    #[error("incompatible system: {0}")]
    IncompatibleSystem(String),
    #[error("non-linear closure: {0}")]
    NonlinearClosure(String),
    #[error("system not stabilized: top symbol has dimension {0}")]
    NotStabilized(usize),
    #[error("system is not of class one: {0}")]
    NotClassOne(String),
    #[error("system is of finite type (no common characteristic)")]
    FiniteType,
    #[error("symbol dimensions disagree with prolongation at level {level}: formula {formula}, actual {actual}")]
    InconsistentWithProlongation {
        level: usize,
        formula: usize,
        actual: usize,
    },
    #[error("point is not regular: {0}")]
    NotRegularPoint(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Syntax { .. }
            | UnknownIdentifier { .. }
            | Schema { .. }
            | ChartMismatch(_)
            | WrongShape(_)
            | DependentGenerators { .. } => ErrorClass::Input,
            Domain(_)
            | SamplingExhausted(_)
            | PivotAmbiguity(_)
            | CertificationFailed(_)
            | MaxStepsExceeded(_)
            | NotRegularPoint(_) => ErrorClass::Certification,
            NotInDistribution
            | NotFirstIntegral(_)
            | ZeroTransversalCoefficient(_)
            | NotDeprolongable(_)
            | NotInverse(_)
            | NotFullyNonholonomic { .. }
            | ExceedsJetOrder(_)
            | IncompatibleSystem(_)
            | NonlinearClosure(_)
            | NotStabilized(_)
            | NotClassOne(_)
            | FiniteType
            | InconsistentWithProlongation { .. } => ErrorClass::Negative,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
