use std::io;

use thiserror::Error;

use crate::grid::Cell;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("invalid parameters: {0}")]
    Param(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    Shape {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("row {0} appears more than once")]
    DuplicateRow(usize),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("node {0} is not a data node")]
    NotDataNode(usize),

    #[error("node {0} is not a parity node")]
    NotParityNode(usize),

    #[error("cell {0} is not available")]
    MissingCell(Cell),

    #[error("repair program fault: {0}")]
    ProgramFault(String),

    #[error("bad magic bytes")]
    BadMagic,

    #[error("unsupported format version {0}")]
    VersionMismatch(u8),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("header does not match code: {0}")]
    HeaderSpecMismatch(String),

    #[error("checksum mismatch: manifest {expected:#010x}, decoded {actual:#010x}")]
    ChecksumMismatch { expected: u32, actual: u32 },

    #[error("not enough shards: need {needed}, found {found}")]
    InsufficientShards { needed: usize, found: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param_err(msg: impl Into<String>) -> Error {
    Error::Param(msg.into())
}
