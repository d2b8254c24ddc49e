//! Tree-reusing augmenting-path solver (grow / augment / adopt), run over
//! a rectangular tile of the volume. The whole-volume serial backend and
//! the hierarchically merged parallel backend both drive this engine; a
//! tile keeps its search trees between rounds so merged tiles resume where
//! the halves stopped.
//!
//! No distance or timestamp heuristics: orphan origin checks walk to the
//! root. Parent links are stored as the slot at the child pointing toward
//! its parent, so a source-tree arc (parent -> child) is the mate of the
//! stored slot while a sink-tree arc (child -> parent) is the slot itself.

use crate::graph::{CapacityStore, GraphTopology};
use std::collections::VecDeque;
use std::sync::atomic::{AtomicU32, AtomicU8, Ordering};

const FREE: u8 = 0;
const SOURCE_TREE: u8 = 1;
const SINK_TREE: u8 = 2;

const PARENT_NONE: u32 = u32::MAX;
const PARENT_TERMINAL: u32 = u32::MAX - 1;

/// Per-vertex search-tree state. Tiles touch disjoint vertices within a
/// round, so plain relaxed atomics are enough to share the arrays.
pub struct BkState {
    tag: Vec<AtomicU8>,
    parent: Vec<AtomicU32>,
}

impl BkState {
    pub fn new(n: usize) -> BkState {
        BkState {
            tag: (0..n).map(|_| AtomicU8::new(FREE)).collect(),
            parent: (0..n).map(|_| AtomicU32::new(PARENT_NONE)).collect(),
        }
    }

    #[inline]
    fn tag(&self, v: u32) -> u8 {
        self.tag[v as usize].load(Ordering::Relaxed)
    }

    #[inline]
    fn set_tag(&self, v: u32, t: u8) {
        self.tag[v as usize].store(t, Ordering::Relaxed)
    }

    #[inline]
    fn parent(&self, v: u32) -> u32 {
        self.parent[v as usize].load(Ordering::Relaxed)
    }

    #[inline]
    fn set_parent(&self, v: u32, p: u32) {
        self.parent[v as usize].store(p, Ordering::Relaxed)
    }

    /// Terminal tag of a vertex for seam comparisons: 0 free, 1 source,
    /// 2 sink.
    pub fn terminal_tag(&self, v: u32) -> u8 {
        self.tag(v)
    }
}

/// Column/slice rectangle. Rows are never split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileBounds {
    pub c0: u32,
    pub c1: u32,
    pub s0: u32,
    pub s1: u32,
}

impl TileBounds {
    #[inline]
    pub fn contains(&self, topo: &GraphTopology, v: u32) -> bool {
        let (c, s, _) = topo.coords(v);
        c >= self.c0 && c < self.c1 && s >= self.s0 && s < self.s1
    }

    pub fn union(&self, other: &TileBounds) -> TileBounds {
        TileBounds {
            c0: self.c0.min(other.c0),
            c1: self.c1.max(other.c1),
            s0: self.s0.min(other.s0),
            s1: self.s1.max(other.s1),
        }
    }
}

pub struct TileRun<'a> {
    topo: &'a GraphTopology,
    caps: &'a [AtomicU32],
    st: &'a BkState,
    bounds: TileBounds,
    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    flow: u64,
}

impl<'a> TileRun<'a> {
    pub fn new(
        topo: &'a GraphTopology,
        caps: &'a [AtomicU32],
        st: &'a BkState,
        bounds: TileBounds,
    ) -> TileRun<'a> {
        TileRun {
            topo,
            caps,
            st,
            bounds,
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            flow: 0,
        }
    }

    #[inline]
    fn cap(&self, v: u32, slot: u32) -> u32 {
        self.caps[self.topo.edge_base_idx(v) + slot as usize].load(Ordering::Relaxed)
    }

    #[inline]
    fn cap_sub(&self, v: u32, slot: u32, d: u32) {
        self.caps[self.topo.edge_base_idx(v) + slot as usize].fetch_sub(d, Ordering::Relaxed);
    }

    #[inline]
    fn cap_add(&self, v: u32, slot: u32, d: u32) {
        self.caps[self.topo.edge_base_idx(v) + slot as usize].fetch_add(d, Ordering::Relaxed);
    }

    pub fn activate(&mut self, v: u32) {
        self.active.push_back(v);
    }

    /// Claims every tile vertex with a positive terminal arc into the
    /// matching tree. A vertex with both goes to the source tree; the
    /// pending path through it surfaces during growth.
    pub fn seed_terminals(&mut self) {
        let src = self.topo.source_slot();
        let sink = self.topo.sink_slot();
        for c in self.bounds.c0..self.bounds.c1 {
            for s in self.bounds.s0..self.bounds.s1 {
                for r in 0..self.topo.dims().rows {
                    let v = self.topo.index_of(c, s, r);
                    if self.cap(v, src) > 0 {
                        self.st.set_tag(v, SOURCE_TREE);
                        self.st.set_parent(v, PARENT_TERMINAL);
                        self.activate(v);
                    } else if self.cap(v, sink) > 0 {
                        self.st.set_tag(v, SINK_TREE);
                        self.st.set_parent(v, PARENT_TERMINAL);
                        self.activate(v);
                    }
                }
            }
        }
    }

    /// Grows both trees until no active vertex remains; returns the flow
    /// augmented during this run.
    pub fn run(&mut self) -> u64 {
        let start = self.flow;
        while let Some(v) = self.active.pop_front() {
            self.grow(v);
        }
        self.flow - start
    }

    fn grow(&mut self, v: u32) {
        let src = self.topo.source_slot();
        let sink = self.topo.sink_slot();
        let epn = self.topo.edges_per_node();
        let mut slot = 0;
        while slot < epn {
            let tag = self.st.tag(v);
            if tag == FREE {
                return;
            }
            if tag == SOURCE_TREE {
                if slot == sink {
                    if self.cap(v, sink) > 0 {
                        self.augment(Meet::AtSink(v));
                        continue; // re-check the same slot
                    }
                } else if slot != src && self.cap(v, slot) > 0 {
                    if let Some((w, ws)) = self.topo.mate_idx(v, slot) {
                        if self.bounds.contains(self.topo, w) {
                            match self.st.tag(w) {
                                FREE => {
                                    self.st.set_tag(w, SOURCE_TREE);
                                    self.st.set_parent(w, ws);
                                    self.activate(w);
                                }
                                SINK_TREE => {
                                    self.augment(Meet::Grid(v, slot, w));
                                    continue;
                                }
                                _ => {}
                            }
                        }
                    }
                }
            } else {
                // sink tree: grow along residual arcs INTO v
                if slot == src {
                    if self.cap(v, src) > 0 {
                        self.augment(Meet::AtSource(v));
                        continue;
                    }
                } else if slot != sink {
                    if let Some((w, ws)) = self.topo.mate_idx(v, slot) {
                        if self.cap(w, ws) > 0 && self.bounds.contains(self.topo, w) {
                            match self.st.tag(w) {
                                FREE => {
                                    self.st.set_tag(w, SINK_TREE);
                                    self.st.set_parent(w, ws);
                                    self.activate(w);
                                }
                                SOURCE_TREE => {
                                    self.augment(Meet::Grid(w, ws, v));
                                    continue;
                                }
                                _ => {}
                            }
                        }
                    }
                }
            }
            slot += 1;
        }
    }

    fn augment(&mut self, meet: Meet) {
        let src = self.topo.source_slot();
        let sink = self.topo.sink_slot();
        // collect the source-side chain (child slots toward parents) and the
        // sink-side chain, then the bottleneck over all arcs
        let (s_head, t_head, meet_arc) = match meet {
            Meet::Grid(v, slot, w) => (Some(v), Some(w), Some((v, slot))),
            Meet::AtSink(v) => (Some(v), None, Some((v, sink))),
            Meet::AtSource(w) => (None, Some(w), Some((w, src))),
        };

        let mut delta = u32::MAX;
        if let Some((v, slot)) = meet_arc {
            delta = delta.min(self.cap(v, slot));
        }
        let mut x = s_head;
        while let Some(v) = x {
            match self.st.parent(v) {
                PARENT_TERMINAL => {
                    delta = delta.min(self.cap(v, src));
                    x = None;
                }
                p_slot => {
                    let (p, ps) = self.topo.mate_idx(v, p_slot).expect("tree arc exists");
                    delta = delta.min(self.cap(p, ps));
                    x = Some(p);
                }
            }
        }
        let mut x = t_head;
        while let Some(v) = x {
            match self.st.parent(v) {
                PARENT_TERMINAL => {
                    delta = delta.min(self.cap(v, sink));
                    x = None;
                }
                p_slot => {
                    delta = delta.min(self.cap(v, p_slot));
                    let (p, _) = self.topo.mate_idx(v, p_slot).expect("tree arc exists");
                    x = Some(p);
                }
            }
        }
        debug_assert!(delta > 0 && delta < u32::MAX);

        // push the bottleneck and orphan children behind saturated arcs
        if let Some((v, slot)) = meet_arc {
            self.cap_sub(v, slot, delta);
            if slot < src {
                let (w, ws) = self.topo.mate_idx(v, slot).unwrap();
                self.cap_add(w, ws, delta);
            }
        }
        let mut x = s_head;
        while let Some(v) = x {
            match self.st.parent(v) {
                PARENT_TERMINAL => {
                    self.cap_sub(v, src, delta);
                    if self.cap(v, src) == 0 {
                        self.make_orphan(v);
                    }
                    x = None;
                }
                p_slot => {
                    let (p, ps) = self.topo.mate_idx(v, p_slot).expect("tree arc exists");
                    self.cap_sub(p, ps, delta);
                    self.cap_add(v, p_slot, delta);
                    if self.cap(p, ps) == 0 {
                        self.make_orphan(v);
                    }
                    x = Some(p);
                }
            }
        }
        let mut x = t_head;
        while let Some(v) = x {
            match self.st.parent(v) {
                PARENT_TERMINAL => {
                    self.cap_sub(v, sink, delta);
                    if self.cap(v, sink) == 0 {
                        self.make_orphan(v);
                    }
                    x = None;
                }
                p_slot => {
                    self.cap_sub(v, p_slot, delta);
                    let (p, ps) = self.topo.mate_idx(v, p_slot).unwrap();
                    self.cap_add(p, ps, delta);
                    if self.cap(v, p_slot) == 0 {
                        self.make_orphan(v);
                    }
                    x = Some(p);
                }
            }
        }

        self.flow += delta as u64;
        self.adopt();
    }

    fn make_orphan(&mut self, v: u32) {
        self.st.set_parent(v, PARENT_NONE);
        self.orphans.push_back(v);
    }

    /// True if following parents from `v` reaches a terminal.
    fn rooted(&self, mut v: u32) -> bool {
        loop {
            match self.st.parent(v) {
                PARENT_TERMINAL => return true,
                PARENT_NONE => return false,
                p_slot => {
                    let (p, _) = self.topo.mate_idx(v, p_slot).expect("tree arc exists");
                    v = p;
                }
            }
        }
    }

    fn adopt(&mut self) {
        let src = self.topo.source_slot();
        let sink = self.topo.sink_slot();
        while let Some(o) = self.orphans.pop_front() {
            let tag = self.st.tag(o);
            debug_assert_ne!(tag, FREE);
            let terminal_slot = if tag == SOURCE_TREE { src } else { sink };
            if self.cap(o, terminal_slot) > 0 {
                self.st.set_parent(o, PARENT_TERMINAL);
                continue;
            }
            let mut adopted = false;
            for slot in 0..src {
                if let Some((p, ps)) = self.topo.mate_idx(o, slot) {
                    if !self.bounds.contains(self.topo, p) || self.st.tag(p) != tag {
                        continue;
                    }
                    // arc toward the root must carry residual
                    let residual_ok = if tag == SOURCE_TREE {
                        self.cap(p, ps) > 0
                    } else {
                        self.cap(o, slot) > 0
                    };
                    if residual_ok && self.rooted(p) {
                        self.st.set_parent(o, slot);
                        adopted = true;
                        break;
                    }
                }
            }
            if adopted {
                continue;
            }
            // no parent: free o, orphan its children, reactivate neighbors
            // that may regrow toward it
            for slot in 0..src {
                if let Some((q, qs)) = self.topo.mate_idx(o, slot) {
                    if !self.bounds.contains(self.topo, q) || self.st.tag(q) != tag {
                        continue;
                    }
                    if self.st.parent(q) == qs {
                        self.make_orphan(q);
                    }
                    let can_regrow = if tag == SOURCE_TREE {
                        self.cap(q, qs) > 0
                    } else {
                        self.cap(o, slot) > 0
                    };
                    if can_regrow {
                        self.activate(q);
                    }
                }
            }
            self.st.set_tag(o, FREE);
            self.st.set_parent(o, PARENT_NONE);
        }
    }
}

enum Meet {
    /// Source-tree vertex, slot toward the sink-tree vertex, that vertex.
    Grid(u32, u32, u32),
    /// Source-tree vertex with residual on its sink arc.
    AtSink(u32),
    /// Sink-tree vertex with residual on its source arc.
    AtSource(u32),
}

/// Whole-volume serial solve.
pub fn solve(topo: &GraphTopology, caps: &mut CapacityStore) -> u64 {
    let raw = std::mem::take(caps).into_raw();
    let atomic: Vec<AtomicU32> = raw.into_iter().map(AtomicU32::new).collect();
    let st = BkState::new(topo.vertex_count());
    let bounds = TileBounds {
        c0: 0,
        c1: topo.dims().columns,
        s0: 0,
        s1: topo.dims().slices,
    };
    let mut run = TileRun::new(topo, &atomic, &st, bounds);
    run.seed_terminals();
    let flow = run.run();
    *caps = CapacityStore::from_raw(atomic.into_iter().map(|a| a.into_inner()).collect());
    flow
}
