use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("expectation undefined: {0}")]
    UndefinedExpectation(String),
    #[error("no predictor has finite risk")]
    AllInfiniteRisk,
    #[error("no predictor has finite empirical risk")]
    AllInfiniteEmpiricalRisk,
    #[error("conditional distribution for x = {x} is not in the unconditional family")]
    ConditionalNotInFamily { x: usize },
    #[error("exponential moment diverges: {0}")]
    InfiniteMoment(String),
    #[error("condition {0} is not supported here: {1}")]
    UnsupportedKind(String, String),
    #[error("shape violation: {0}")]
    ShapeViolation(String),
    #[error("gamma violates its shape constraints: {0}")]
    GammaShapeViolation(String),
    #[error("support outside [-{a}, {a}]: found {value}")]
    SupportViolation { a: f64, value: f64 },
    #[error("moment instance is infeasible: a/n = {a_over_n} exceeds tanh(eta/2) = {threshold}")]
    InfeasibleInstance { a_over_n: f64, threshold: f64 },
    #[error("no feasible atom set on the grid (grid too coarse)")]
    NoFeasibleAtomTriple,
    #[error("dual certificate invalid: min u = {min_u} at s = {at}")]
    CertificateInvalid { min_u: f64, at: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("the model has no usable embedding for this loss")]
    EmbeddingMissing,
    #[error("substitution produced a decision outside the decision set")]
    SubstitutionOutsideDecisionSet,
}
