use thiserror::Error;

use crate::packing::SparsePacking;

/// Errors raised by the bound, divergence, packing and oracle routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("reference measure does not dominate: q[{index}] = 0 but p[{index}] = {p_val} > 0")]
    NotAbsolutelyContinuous { index: usize, p_val: f64 },

    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("packing incomplete: found {found} of {target} codewords after {attempts} attempts")]
    IncompletePacking {
        found: usize,
        target: usize,
        attempts: usize,
        best: Box<SparsePacking>,
    },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
