//! Reference maxflow on explicit edge lists: repeated BFS augmentation.
//!
//! Deliberately simple and structurally unrelated to the production
//! solvers so it can serve as an independent cross-check. Only meant for
//! small graphs.

use crate::error::{Error, Result};
use crate::graph::{CapacityStore, GraphTopology};
use std::collections::VecDeque;

pub const ORACLE_VERTEX_LIMIT: usize = 10_000;

/// Explicit directed graph with adjacency lists and residual capacities.
pub struct EdgeListGraph {
    pub n: usize,
    pub source: usize,
    pub sink: usize,
    first: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u64>,
    orig: Vec<u64>,
}

impl EdgeListGraph {
    pub fn new(n: usize, source: usize, sink: usize) -> EdgeListGraph {
        EdgeListGraph {
            n,
            source,
            sink,
            first: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            orig: Vec::new(),
        }
    }

    /// Adds a directed edge and its zero-capacity reverse.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: u64) {
        assert!(u < self.n && v < self.n);
        let e = self.to.len();
        self.first[u].push(e);
        self.to.push(v);
        self.cap.push(cap);
        self.orig.push(cap);
        self.first[v].push(e + 1);
        self.to.push(u);
        self.cap.push(0);
        self.orig.push(0);
    }

    pub fn edge_count(&self) -> usize {
        self.to.len() / 2
    }

    fn bfs_parents(&self) -> Option<Vec<usize>> {
        const NONE: usize = usize::MAX;
        let mut parent_edge = vec![NONE; self.n];
        let mut seen = vec![false; self.n];
        seen[self.source] = true;
        let mut q = VecDeque::new();
        q.push_back(self.source);
        while let Some(u) = q.pop_front() {
            for &e in &self.first[u] {
                let v = self.to[e];
                if !seen[v] && self.cap[e] > 0 {
                    seen[v] = true;
                    parent_edge[v] = e;
                    if v == self.sink {
                        return Some(parent_edge);
                    }
                    q.push_back(v);
                }
            }
        }
        None
    }

    /// Exact maxflow by shortest-path augmentation.
    pub fn max_flow(&mut self) -> u64 {
        let mut flow = 0u64;
        while let Some(parent) = self.bfs_parents() {
            let mut delta = u64::MAX;
            let mut v = self.sink;
            while v != self.source {
                let e = parent[v];
                delta = delta.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = self.sink;
            while v != self.source {
                let e = parent[v];
                self.cap[e] -= delta;
                self.cap[e ^ 1] += delta;
                v = self.to[e ^ 1];
            }
            flow += delta;
        }
        flow
    }

    /// Source side of the minimum cut after `max_flow`, plus its capacity
    /// in original edge capacities.
    pub fn min_cut(&self) -> Result<(Vec<bool>, u64)> {
        let mut side = vec![false; self.n];
        side[self.source] = true;
        let mut q = VecDeque::new();
        q.push_back(self.source);
        while let Some(u) = q.pop_front() {
            for &e in &self.first[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !side[v] {
                    side[v] = true;
                    q.push_back(v);
                }
            }
        }
        if side[self.sink] {
            return Err(Error::FlowNotMaximal);
        }
        let mut cut = 0u64;
        for e in (0..self.to.len()).step_by(2) {
            let u = self.to[e ^ 1];
            let v = self.to[e];
            if side[u] && !side[v] {
                cut += self.orig[e];
            }
        }
        Ok((side, cut))
    }
}

/// Flattens a structured instance into an explicit edge list: terminal
/// arcs plus every in-grid half-edge as its own directed edge.
pub fn from_structured(topo: &GraphTopology, caps: &CapacityStore) -> Result<EdgeListGraph> {
    let n = topo.vertex_count();
    if n + 2 > ORACLE_VERTEX_LIMIT {
        return Err(Error::OracleTooLarge {
            vertices: n + 2,
            limit: ORACLE_VERTEX_LIMIT,
        });
    }
    let source = n;
    let sink = n + 1;
    let mut g = EdgeListGraph::new(n + 2, source, sink);
    let src_slot = topo.source_slot();
    let sink_slot = topo.sink_slot();
    for v in 0..n as u32 {
        let c = caps.cap(topo, v, src_slot);
        if c > 0 {
            g.add_edge(source, v as usize, c as u64);
        }
        let c = caps.cap(topo, v, sink_slot);
        if c > 0 {
            g.add_edge(v as usize, sink, c as u64);
        }
        for slot in 0..src_slot {
            let c = caps.cap(topo, v, slot);
            if c > 0 {
                let (w, _) = topo
                    .mate_idx(v, slot)
                    .expect("positive capacity on a slot with no target");
                g.add_edge(v as usize, w as usize, c as u64);
            }
        }
    }
    Ok(g)
}

/// Maxflow value of a structured instance via the reference solver.
pub fn oracle_maxflow(topo: &GraphTopology, caps: &CapacityStore) -> Result<u64> {
    Ok(from_structured(topo, caps)?.max_flow())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> EdgeListGraph {
        // s -> a, s -> b, a -> t, b -> t, all capacity 1
        let mut g = EdgeListGraph::new(4, 0, 3);
        g.add_edge(0, 1, 1);
        g.add_edge(0, 2, 1);
        g.add_edge(1, 3, 1);
        g.add_edge(2, 3, 1);
        g
    }

    #[test]
    fn diamond_flow_and_cut() {
        let mut g = diamond();
        assert_eq!(g.max_flow(), 2);
        let (side, cut) = g.min_cut().unwrap();
        assert!(side[0] && !side[3]);
        assert_eq!(cut, 2);
    }

    #[test]
    fn single_edge() {
        let mut g = EdgeListGraph::new(2, 0, 1);
        g.add_edge(0, 1, 9);
        assert_eq!(g.max_flow(), 9);
        let (side, cut) = g.min_cut().unwrap();
        assert_eq!(side, vec![true, false]);
        assert_eq!(cut, 9);
    }

    #[test]
    fn path_with_bottleneck() {
        let mut g = EdgeListGraph::new(4, 0, 3);
        g.add_edge(0, 1, 4);
        g.add_edge(1, 2, 2);
        g.add_edge(2, 3, 3);
        assert_eq!(g.max_flow(), 2);
    }

    #[test]
    fn disconnected_is_zero() {
        let mut g = EdgeListGraph::new(3, 0, 2);
        g.add_edge(0, 1, 7);
        assert_eq!(g.max_flow(), 0);
    }
}
