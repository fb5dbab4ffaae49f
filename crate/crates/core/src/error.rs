use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: malformed edge entry `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: u64 },
    #[error("line {line}: duplicate edge {u}-{v}")]
    DuplicateEdge { line: usize, u: u64, v: u64 },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph has {n} node(s); at least 2 are required")]
    TooFewNodes { n: usize },
    #[error("node id {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("infeasible generator parameters: {0}")]
    InfeasibleFamily(String),
    #[error("unrecognised graph family `{0}`")]
    UnknownFamily(String),
    #[error("random regular pairing rejected {attempts} times in a row")]
    PairingRetriesExhausted { attempts: usize },
    #[error("{what} needs n <= {cap}, graph has n = {n}")]
    SizeCap { what: &'static str, n: usize, cap: usize },
    #[error("graph is not regular")]
    NotRegular,
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("k = {k} is invalid: need 1 <= k <= {max}")]
    InvalidK { k: usize, max: usize },
    #[error("invalid model parameters: {0}")]
    InvalidParams(&'static str),
    #[error("state has {got} entries, graph has {expected} nodes")]
    StateLength { expected: usize, got: usize },
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("initial state is not centred (M(0) = {0})")]
    NotCentred(f64),
    #[error("exact enumeration needs {needed} events, cap is {cap}")]
    EnumerationCap { needed: u128, cap: u128 },
    #[error("event {index} is invalid for this graph: {reason}")]
    InvalidEvent { index: usize, reason: &'static str },
    #[error("singular linear system while solving for the stationary distribution")]
    Singular,
    #[error("at least {min} trials are required, got {got}")]
    TooFewTrials { min: usize, got: usize },
}
