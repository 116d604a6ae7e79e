use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("letter {letter} out of range at depth {depth} (degree {degree})")]
    LetterOutOfRange {
        letter: usize,
        depth: usize,
        degree: usize,
    },
    #[error("not an antichain: {0}")]
    NotAntichain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0} require a regular tree")]
    NonRegularTree(&'static str),
    #[error("automorphisms live on different trees")]
    TreeMismatch,
    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),
    #[error("product exceeded the state budget of {0}")]
    StateBudgetExceeded(usize),
    #[error("nucleus did not close within {0} elements (contraction not refuted)")]
    NotContractingUpTo(usize),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("group spec error: {0}")]
    Schema(String),
    #[error("relation smoke check failed: {0}")]
    RelationCheck(String),
    #[error("level size {size} exceeds cap {cap}")]
    LevelCap { size: u128, cap: usize },
    #[error("no admissible center at radius {0}")]
    NoAdmissibleCenter(usize),
    #[error("insufficient evidence: {0}")]
    InsufficientEvidence(String),
    #[error("oracle scope exceeded: {0}")]
    ScopeExceeded(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("orbit size cap {0} exceeded")]
    OrbitCap(usize),
    #[error("order-two obstruction: {0} squares to the identity")]
    OrderTwoObstruction(String),
    #[error("no displacement configuration within depth {0}")]
    DepthBudgetExceeded(usize),
    #[error("configuration not verified: {0}")]
    NotVerified(String),
    #[error("no rigid stabilizer generators found at scale {0}")]
    NoRistGenerators(usize),
    #[error("trivial element in a set that must consist of nontrivial elements: {0}")]
    TrivialElement(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid Bratteli diagram: {0}")]
    InvalidDiagram(String),
    #[error("prefix replacement needs equal targets ({0} vs {1})")]
    TargetMismatch(String, String),
}
