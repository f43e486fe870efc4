use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("arity mismatch: tree expects {expected} leaves, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("aliasing guard tripped: {fraction:.3e} of the energy sits in the top third of modes (increase the cutoff)")]
    Aliasing { fraction: f64 },
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;
