use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("node `{node}` has negative population {population}")]
    NegativePopulation { node: String, population: i64 },
    #[error("graph is disconnected: no path between `{a}` and `{b}` (component sizes {component_sizes:?})")]
    Disconnected {
        a: String,
        b: String,
        component_sizes: Vec<usize>,
    },
    #[error("{0} nodes exceed the 16-bit distance matrix limit")]
    TooLarge(usize),
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("k exceeds node count ({k} districts, {nodes} nodes)")]
    TooManyDistricts { k: usize, nodes: usize },
    #[error("district count must be at least 1")]
    NoDistricts,
    #[error("invalid deviation `{0}`: expected a decimal in [0, 1)")]
    InvalidDeviation(String),
    #[error("district set is empty")]
    EmptyDistrict,
    #[error("district {0} is empty")]
    EmptyLabel(usize),
    #[error("district {0} is not connected")]
    DisconnectedDistrict(usize),
    #[error("district label {label} out of range for k = {k}")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("brute-force enumeration limited to {limit} nodes, instance has {nodes}")]
    TooLargeForOracle { nodes: usize, limit: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
