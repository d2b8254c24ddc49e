use thiserror::Error;

/// Errors surfaced by graph construction, solvers, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate ({col}, {slice}, {row}) outside grid {dims}")]
    OutOfGrid {
        col: u32,
        slice: u32,
        row: u32,
        dims: String,
    },

    #[error("terminal vertex has no edge block")]
    TerminalHasNoBlock,

    #[error("terminal-arc slot has no mate")]
    TerminalArcHasNoMate,

    #[error("{requested} segments requested but volume has only {columns} columns")]
    TooManySegments { requested: usize, columns: u32 },

    #[error("segment/tile count must be at least 1")]
    EmptySegmentation,

    #[error("edge-cost profile is not convex at offset {offset}")]
    NonConvexPrior { offset: i32 },

    #[error("capacity overflow: {what}")]
    CapacityOverflow { what: String },

    #[error("column ({col}, {slice}) has no vertex on the source side")]
    EmptyColumn { col: u32, slice: u32 },

    #[error("sink still reachable from source; flow is not maximal")]
    FlowNotMaximal,

    #[error("instance too large for the reference solver ({vertices} vertices, limit {limit})")]
    OracleTooLarge { vertices: usize, limit: usize },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("backend {backend} cannot run on {input} input")]
    BackendMismatch { backend: String, input: String },

    #[error("volume dimensions invalid: {reason}")]
    BadDims { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
