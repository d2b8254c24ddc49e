//! Structured multi-column volume topology with implicit edge addressing.
//!
//! Vertices live on an R x C x S grid (R rows per column, C columns, S
//! slices) and are numbered `(c*S + s)*R + r`, so every column — and every
//! contiguous range of columns — occupies consecutive indices. Each vertex
//! owns a fixed block of `8K + 8` half-edge slots: up, down, four lateral
//! neighbor columns times the `2K+1` rows of the edge interval, one
//! source-arc slot and one sink-arc slot. The slot offset alone encodes the
//! edge direction, so the mate of a half-edge is found from a small cache
//! keyed by (row, slice, slot) instead of stored pointers.

use crate::error::{Error, Result};

/// Lateral neighbor groups, in slot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LateralGroup {
    /// Column c-1.
    Left,
    /// Column c+1.
    Right,
    /// Slice s-1.
    Front,
    /// Slice s+1.
    Back,
}

impl LateralGroup {
    pub const ALL: [LateralGroup; 4] = [
        LateralGroup::Left,
        LateralGroup::Right,
        LateralGroup::Front,
        LateralGroup::Back,
    ];

    pub fn opposite(self) -> LateralGroup {
        match self {
            LateralGroup::Left => LateralGroup::Right,
            LateralGroup::Right => LateralGroup::Left,
            LateralGroup::Front => LateralGroup::Back,
            LateralGroup::Back => LateralGroup::Front,
        }
    }

    fn index(self) -> u32 {
        match self {
            LateralGroup::Left => 0,
            LateralGroup::Right => 1,
            LateralGroup::Front => 2,
            LateralGroup::Back => 3,
        }
    }

    fn from_index(i: u32) -> LateralGroup {
        LateralGroup::ALL[i as usize]
    }

    /// (column delta, slice delta)
    fn step(self) -> (i64, i64) {
        match self {
            LateralGroup::Left => (-1, 0),
            LateralGroup::Right => (1, 0),
            LateralGroup::Front => (0, -1),
            LateralGroup::Back => (0, 1),
        }
    }
}

/// What a slot offset means within a vertex's edge block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// Row r+1, same column.
    Up,
    /// Row r-1, same column.
    Down,
    /// Neighbor column `group`, vertical offset `dv` in [-K, K].
    Lateral { group: LateralGroup, dv: i32 },
    /// Arc from the source into this vertex.
    SourceArc,
    /// Arc from this vertex into the sink.
    SinkArc,
}

pub const SLOT_UP: u32 = 0;
pub const SLOT_DOWN: u32 = 1;

/// A grid vertex index in `[0, n)`. Terminals are not grid vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

/// A vertex or one of the two terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Grid(VertexId),
    Source,
    Sink,
}

/// Volume dimensions plus the edge interval K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolumeDims {
    pub rows: u32,
    pub columns: u32,
    pub slices: u32,
    pub edge_interval: u32,
}

impl VolumeDims {
    pub fn new(rows: u32, columns: u32, slices: u32, edge_interval: u32) -> Result<VolumeDims> {
        let d = VolumeDims {
            rows,
            columns,
            slices,
            edge_interval,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.columns == 0 || self.slices == 0 {
            return Err(Error::BadDims {
                reason: "rows, columns and slices must all be at least 1".into(),
            });
        }
        let n = self.rows as u64 * self.columns as u64 * self.slices as u64;
        // Labels go up to 2(n+2)+1 and must fit u32; half-edge storage must
        // fit in addressable memory.
        if n >= (u32::MAX / 2 - 2) as u64 {
            return Err(Error::BadDims {
                reason: format!("{} vertices exceeds the supported limit", n),
            });
        }
        if self.edge_interval > 1 << 20 {
            return Err(Error::BadDims {
                reason: "edge interval too large".into(),
            });
        }
        let epn = 8u64 * self.edge_interval as u64 + 8;
        if n.checked_mul(epn).is_none_or(|m| m > (isize::MAX as u64) / 4) {
            return Err(Error::BadDims {
                reason: "edge storage would exceed addressable memory".into(),
            });
        }
        Ok(())
    }

    /// Grid vertices, excluding the two terminals.
    pub fn vertex_count(&self) -> usize {
        self.rows as usize * self.columns as usize * self.slices as usize
    }

    /// Half-edge slots per vertex: 4 lateral neighbors x (2K+1) interval
    /// rows, up, down, source arc, sink arc = 8K + 8.
    pub fn edges_per_node(&self) -> u32 {
        8 * self.edge_interval + 8
    }

    pub fn interval_width(&self) -> u32 {
        2 * self.edge_interval + 1
    }
}

impl std::fmt::Display for VolumeDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{}x{} (K={})",
            self.rows, self.columns, self.slices, self.edge_interval
        )
    }
}

/// Cached mate lookup for one (row, slice, slot) key: the signed index
/// delta to the neighbor plus the reciprocal slot. `mate_slot == OOB`
/// marks a target outside the grid in the row or slice dimension.
#[derive(Clone, Copy)]
struct CacheEntry {
    delta: i64,
    mate_slot: u32,
}

const OOB: u32 = u32::MAX;

/// Immutable topology: dimensions plus the offset cache. Shareable across
/// threads; all methods are read-only after construction.
pub struct GraphTopology {
    dims: VolumeDims,
    cache: Vec<CacheEntry>,
}

impl GraphTopology {
    pub fn new(dims: VolumeDims) -> Result<GraphTopology> {
        dims.validate()?;
        let cache = build_offset_cache(&dims);
        Ok(GraphTopology { dims, cache })
    }

    pub fn dims(&self) -> &VolumeDims {
        &self.dims
    }

    pub fn vertex_count(&self) -> usize {
        self.dims.vertex_count()
    }

    pub fn edges_per_node(&self) -> u32 {
        self.dims.edges_per_node()
    }

    /// Number of (row, slice, slot) entries held by the offset cache.
    pub fn offset_cache_entries(&self) -> usize {
        self.cache.len()
    }

    pub fn source_slot(&self) -> u32 {
        2 + 4 * self.dims.interval_width()
    }

    pub fn sink_slot(&self) -> u32 {
        self.source_slot() + 1
    }

    pub fn lateral_slot(&self, group: LateralGroup, dv: i32) -> u32 {
        let k = self.dims.edge_interval as i32;
        debug_assert!(dv >= -k && dv <= k);
        2 + group.index() * self.dims.interval_width() + (dv + k) as u32
    }

    pub fn slot_kind(&self, slot: u32) -> SlotKind {
        let w = self.dims.interval_width();
        match slot {
            SLOT_UP => SlotKind::Up,
            SLOT_DOWN => SlotKind::Down,
            s if s < 2 + 4 * w => {
                let rel = s - 2;
                let group = LateralGroup::from_index(rel / w);
                let dv = (rel % w) as i32 - self.dims.edge_interval as i32;
                SlotKind::Lateral { group, dv }
            }
            s if s == self.source_slot() => SlotKind::SourceArc,
            s if s == self.sink_slot() => SlotKind::SinkArc,
            _ => panic!("slot {} out of range", slot),
        }
    }

    pub fn vertex_index(&self, col: u32, slice: u32, row: u32) -> Result<VertexId> {
        if col >= self.dims.columns || slice >= self.dims.slices || row >= self.dims.rows {
            return Err(Error::OutOfGrid {
                col,
                slice,
                row,
                dims: self.dims.to_string(),
            });
        }
        Ok(VertexId(self.index_of(col, slice, row)))
    }

    #[inline]
    pub fn index_of(&self, col: u32, slice: u32, row: u32) -> u32 {
        (col * self.dims.slices + slice) * self.dims.rows + row
    }

    /// (column, slice, row) of a raw vertex index.
    #[inline]
    pub fn coords(&self, v: u32) -> (u32, u32, u32) {
        let r = v % self.dims.rows;
        let cs = v / self.dims.rows;
        let s = cs % self.dims.slices;
        let c = cs / self.dims.slices;
        (c, s, r)
    }

    #[inline]
    pub fn column_of(&self, v: u32) -> u32 {
        v / (self.dims.rows * self.dims.slices)
    }

    /// First slot of a vertex's edge block.
    pub fn edge_base(&self, v: Endpoint) -> Result<usize> {
        match v {
            Endpoint::Grid(VertexId(i)) => Ok(self.edge_base_idx(i)),
            _ => Err(Error::TerminalHasNoBlock),
        }
    }

    #[inline]
    pub fn edge_base_idx(&self, v: u32) -> usize {
        v as usize * self.dims.edges_per_node() as usize
    }

    /// The neighbor and reciprocal slot of a lateral/vertical half-edge, or
    /// `None` when the target lies outside the grid. Terminal-arc slots
    /// have no mate.
    pub fn mate(&self, v: Endpoint, slot: u32) -> Result<Option<(VertexId, u32)>> {
        let VertexId(idx) = match v {
            Endpoint::Grid(id) => id,
            _ => return Err(Error::TerminalHasNoBlock),
        };
        if slot >= self.source_slot() {
            return Err(Error::TerminalArcHasNoMate);
        }
        Ok(self
            .mate_idx(idx, slot)
            .map(|(w, ws)| (VertexId(w), ws)))
    }

    /// Fast-path mate lookup on raw indices. Row/slice bounds come from the
    /// cache entry; the column bound falls out of the index range check,
    /// because with row and slice in bounds the computed index leaves
    /// `[0, n)` exactly when the column does.
    #[inline]
    pub fn mate_idx(&self, v: u32, slot: u32) -> Option<(u32, u32)> {
        let (_, s, r) = self.coords(v);
        self.mate_cached(v, r, s, slot)
    }

    /// Mate lookup when the caller already knows (row, slice) of `v`.
    #[inline]
    pub fn mate_cached(&self, v: u32, row: u32, slice: u32, slot: u32) -> Option<(u32, u32)> {
        let epn = self.dims.edges_per_node();
        let entry = self.cache[((row * self.dims.slices + slice) * epn + slot) as usize];
        if entry.mate_slot == OOB {
            return None;
        }
        let w = v as i64 + entry.delta;
        if w < 0 || w >= self.vertex_count() as i64 {
            return None;
        }
        Some((w as u32, entry.mate_slot))
    }
}

fn build_offset_cache(dims: &VolumeDims) -> Vec<CacheEntry> {
    let epn = dims.edges_per_node();
    let w = dims.interval_width();
    let k = dims.edge_interval as i64;
    let oob = CacheEntry {
        delta: 0,
        mate_slot: OOB,
    };
    let mut cache = vec![oob; dims.rows as usize * dims.slices as usize * epn as usize];
    let col_stride = dims.slices as i64 * dims.rows as i64;
    let slice_stride = dims.rows as i64;
    for r in 0..dims.rows as i64 {
        for s in 0..dims.slices as i64 {
            let base = ((r as u32 * dims.slices + s as u32) * epn) as usize;
            if r + 1 < dims.rows as i64 {
                cache[base + SLOT_UP as usize] = CacheEntry {
                    delta: 1,
                    mate_slot: SLOT_DOWN,
                };
            }
            if r > 0 {
                cache[base + SLOT_DOWN as usize] = CacheEntry {
                    delta: -1,
                    mate_slot: SLOT_UP,
                };
            }
            for group in LateralGroup::ALL {
                let (dc, ds) = group.step();
                for dv in -k..=k {
                    let tr = r + dv;
                    let ts = s + ds;
                    if tr < 0 || tr >= dims.rows as i64 || ts < 0 || ts >= dims.slices as i64 {
                        continue;
                    }
                    let slot = 2 + group.index() * w + (dv + k) as u32;
                    let mate = 2 + group.opposite().index() * w + (-dv + k) as u32;
                    cache[base + slot as usize] = CacheEntry {
                        delta: dc * col_stride + ds * slice_stride + dv,
                        mate_slot: mate,
                    };
                }
            }
            // terminal-arc slots keep the sentinel
        }
    }
    cache
}

/// Contiguous residual capacities: one 4-byte value per half-edge slot.
/// Slots whose structural target lies outside the grid are kept at zero.
#[derive(Clone, Default)]
pub struct CapacityStore {
    residual: Vec<u32>,
}

impl CapacityStore {
    pub fn new_zeroed(topo: &GraphTopology) -> CapacityStore {
        CapacityStore {
            residual: vec![0; topo.vertex_count() * topo.edges_per_node() as usize],
        }
    }

    pub fn from_raw(residual: Vec<u32>) -> CapacityStore {
        CapacityStore { residual }
    }

    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }

    /// Bytes consumed by half-edge capacities: exactly 4 per slot.
    pub fn edge_storage_bytes(&self) -> usize {
        self.residual.len() * std::mem::size_of::<u32>()
    }

    #[inline]
    pub fn get(&self, idx: usize) -> u32 {
        self.residual[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, cap: u32) {
        self.residual[idx] = cap;
    }

    #[inline]
    pub fn cap(&self, topo: &GraphTopology, v: u32, slot: u32) -> u32 {
        self.residual[topo.edge_base_idx(v) + slot as usize]
    }

    #[inline]
    pub fn set_cap(&mut self, topo: &GraphTopology, v: u32, slot: u32, cap: u32) {
        self.residual[topo.edge_base_idx(v) + slot as usize] = cap;
    }

    pub fn raw(&self) -> &[u32] {
        &self.residual
    }

    pub fn into_raw(self) -> Vec<u32> {
        self.residual
    }

    /// Structural sanity for a freshly built or loaded instance: slots with
    /// no in-grid target must be zero, and no mated pair may sum past
    /// `u32::MAX` (pushes move capacity between the two halves, so the pair
    /// sum is the overflow bound).
    pub fn validate(&self, topo: &GraphTopology) -> Result<()> {
        let n = topo.vertex_count() as u32;
        let src = topo.source_slot();
        for v in 0..n {
            let base = topo.edge_base_idx(v);
            for slot in 0..src {
                let c = self.residual[base + slot as usize];
                match topo.mate_idx(v, slot) {
                    None => {
                        if c != 0 {
                            return Err(Error::CapacityOverflow {
                                what: format!(
                                    "vertex {} slot {} targets no grid vertex but has capacity {}",
                                    v, slot, c
                                ),
                            });
                        }
                    }
                    Some((w, ws)) => {
                        let m = self.cap(topo, w, ws);
                        if c as u64 + m as u64 > u32::MAX as u64 {
                            return Err(Error::CapacityOverflow {
                                what: format!(
                                    "pair ({}, {}) capacities {} + {} exceed the 4-byte bound",
                                    v, w, c, m
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Sum of all source-arc capacities; bounds every excess the solvers
    /// can ever hold.
    pub fn total_source_capacity(&self, topo: &GraphTopology) -> u64 {
        let src = topo.source_slot();
        (0..topo.vertex_count() as u32)
            .map(|v| self.cap(topo, v, src) as u64)
            .sum()
    }
}

/// A topology bundled with its capacities: one solvable instance.
pub struct Instance {
    pub topo: GraphTopology,
    pub caps: CapacityStore,
}
