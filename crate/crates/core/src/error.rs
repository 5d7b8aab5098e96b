use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("element {element} is not a 4-node quadrilateral ({detail})")]
    NonQuad { element: usize, detail: String },
    #[error("element {element} references node {node}, but the mesh has {count} nodes")]
    DanglingNode {
        element: usize,
        node: usize,
        count: usize,
    },
    #[error("element {element} repeats node {node}")]
    RepeatedNode { element: usize, node: usize },
    #[error("element {element} is inverted or degenerate (det J = {det:e} at a Gauss point)")]
    Inverted { element: usize, det: f64 },
    #[error("node {node} has non-finite coordinates")]
    NonFinite { node: usize },
    #[error("node {node} is not used by any element")]
    OrphanNode { node: usize },
    #[error("edge record for element {element}, local edge {local}: {message}")]
    BadEdge {
        element: usize,
        local: usize,
        message: String,
    },
    #[error("mesh generator: {0}")]
    Generator(String),
    #[error("mesh has no elements")]
    Empty,
}

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("Young's modulus must be positive (got {0})")]
    YoungsModulus(f64),
    #[error("Poisson's ratio must lie in (-1, 0.5) (got {0})")]
    PoissonRatio(f64),
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("Lame constants violate mu > 0, lambda + 2 mu > 0 (lambda = {lambda}, mu = {mu})")]
    Lame { lambda: f64, mu: f64 },
    #[error("phase value {0} outside [0, 1]")]
    PhaseOutOfRange(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    #[error("degenerate element geometry (det J = {0:e})")]
    Degenerate(f64),
    #[error("edge ({element}, {local}) is not on the boundary")]
    NotBoundaryEdge { element: usize, local: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(
        "phase solve did not converge after {outer} active-set sweeps \
         (last iterate {last:?}, residual {residual:?})"
    )]
    NotConverged {
        outer: usize,
        last: [f64; 4],
        residual: [f64; 4],
    },
    #[error("singular reduced tangent")]
    Singular,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("element {element} at t = {time:e}: {source}")]
    Solver {
        element: usize,
        time: f64,
        #[source]
        source: SolverError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sampling sink failed: {0}")]
    Sink(String),
}

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("at least {needed} samples are required (got {got})")]
    TooFewSamples { needed: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown benchmark '{0}' (expected tension, ct or kalthoff)")]
    UnknownBenchmark(String),
}

/// Top-level error for the command-line front end and the C ABI.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
