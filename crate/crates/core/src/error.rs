use std::path::PathBuf;

use thiserror::Error;

/// Failures while reading or validating a mesh.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cannot read mesh file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported MSH format version {0} (expected 2.2 or 4.1, ASCII)")]
    UnsupportedFormatVersion(String),
    #[error("malformed MSH file at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("element {element} references missing node id {node}")]
    MissingNode { element: usize, node: usize },
    #[error("boundary edge ({0}, {1}) belongs to no named physical group")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("triangle {index} is degenerate (area {area:e} km^2)")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("invalid mesh: {0}")]
    Invalid(String),
}

/// Failures of the sparse linear solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-finite value in linear system input")]
    NonFiniteInput,
    #[error("dimension mismatch: matrix is {matrix}, vector is {vector}")]
    DimensionMismatch { matrix: usize, vector: usize },
}

/// Failures while building a scenario.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario preset '{0}' (expected dense, disperse or custom)")]
    InvalidPreset(String),
    #[error("porosity {value} at node {node} outside the admissible interval [{lo}, {hi}]")]
    PorosityOutOfRange { node: usize, value: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Failures while parsing a configuration file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `section.key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' expects {expected}, got '{value}'")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("parameter '{key}' must be positive, got {value}")]
    NonPositiveParameter { key: String, value: f64 },
}

/// Top-level error for simulation drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("non-finite field value")]
    NonFiniteInput,
    #[error("non-finite state at step {step} (t = {t} h): {detail}")]
    NonFiniteState { step: usize, t: f64, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
