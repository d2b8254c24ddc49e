//! Shared-memory s-t maxflow/mincut for structured multi-column volume
//! graphs, with a net-surface reduction front end.
//!
//! The solvers operate on an implicit-addressing layout: capacities live in
//! one contiguous 4-byte-per-half-edge array and adjacency is recovered
//! from slot arithmetic plus a small (row x slice x slot) offset cache.
//! Backends:
//!
//! * [`serial`] — FIFO push-relabel with periodic global relabeling
//! * [`parallel`] — column-partitioned parallel push-relabel with
//!   per-segment queues, shared-vertex locking and level-synchronized
//!   global-relabel waves
//! * [`bk`] / [`parallel_bk`] — tree-reusing augmenting-path solver, run
//!   either whole-volume or per tile with hierarchical merging
//! * [`oracle`] — a plain shortest-augmenting-path reference for
//!   cross-checking on small instances

pub mod bk;
pub mod cut;
pub mod error;
pub mod gen;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod parallel;
pub mod parallel_bk;
pub mod report;
pub mod serial;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{CapacityStore, Endpoint, GraphTopology, Instance, VertexId, VolumeDims};
