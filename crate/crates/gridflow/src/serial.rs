//! Single-threaded FIFO push-relabel with periodic global relabeling.
//!
//! Labels use N = n + 2 so the terminals count toward the vertex total:
//! d(sink) = 0, d(source) = N, and 2N+1 is the sentinel for vertices with
//! no residual edges at all. The store keeps every slot as the residual of
//! the arc it names; flow taken from the source is tracked per vertex in
//! `returnable`, so the source-arc slot always holds the forward residual
//! of the s->v arc.

use crate::graph::{CapacityStore, GraphTopology};
use std::collections::VecDeque;

/// Per-vertex solver state shared by the push and relabel steps.
pub struct FlowState {
    pub excess: Vec<u64>,
    pub label: Vec<u32>,
    pub wave: Vec<u32>,
    pub cursor: Vec<u32>,
    /// Flow currently borrowed from the source, pushable back along v->s.
    pub returnable: Vec<u32>,
    pub flow_value: u64,
    pub wave_number: u32,
}

impl FlowState {
    pub fn new(n: usize) -> FlowState {
        FlowState {
            excess: vec![0; n],
            label: vec![0; n],
            wave: vec![0; n],
            cursor: vec![0; n],
            returnable: vec![0; n],
            flow_value: 0,
            wave_number: 0,
        }
    }

    /// Label assigned to the source: vertex count including terminals.
    pub fn source_label(n: usize) -> u32 {
        n as u32 + 2
    }

    /// Label for vertices with no residual out-edges at all.
    pub fn sentinel_label(n: usize) -> u32 {
        2 * Self::source_label(n) + 1
    }
}

#[derive(Debug, Clone)]
pub struct SerialConfig {
    /// Global relabel every ceil(gr_factor * N) discharges.
    pub gr_factor: f64,
}

impl Default for SerialConfig {
    fn default() -> Self {
        SerialConfig { gr_factor: 2.0 }
    }
}

#[derive(Debug, Default, Clone)]
pub struct SerialStats {
    pub discharges: u64,
    pub relabels: u64,
    pub global_relabels: u64,
}

/// Saturates all source arcs: the arc capacity moves into the vertex's
/// excess and becomes returnable, and the slot drops to zero forward
/// residual. Labels are then set by a full global relabel.
pub fn initialize_preflow(
    topo: &GraphTopology,
    caps: &mut CapacityStore,
    state: &mut FlowState,
    queue: &mut VecDeque<u32>,
    in_queue: &mut [bool],
) {
    let src = topo.source_slot();
    for v in 0..topo.vertex_count() as u32 {
        let c = caps.cap(topo, v, src);
        if c > 0 {
            caps.set_cap(topo, v, src, 0);
            state.returnable[v as usize] = c;
            state.excess[v as usize] = c as u64;
            queue.push_back(v);
            in_queue[v as usize] = true;
        }
    }
    global_relabel(topo, caps, state);
}

/// Exact-distance labels by reverse BFS: distance to the sink along
/// residual arcs where reachable, N + distance to the source for the rest
/// that can still return flow, sentinel otherwise.
pub fn global_relabel(topo: &GraphTopology, caps: &CapacityStore, state: &mut FlowState) {
    let n = topo.vertex_count();
    let n_label = FlowState::source_label(n);
    let sentinel = FlowState::sentinel_label(n);
    state.wave_number += 1;

    let dist = bfs_distance_to_sink(topo, caps);
    let mut visited = vec![false; n];
    for v in 0..n {
        if dist[v] != u32::MAX {
            state.label[v] = dist[v];
            state.wave[v] = state.wave_number;
            visited[v] = true;
        }
    }

    // second phase: distance back to the source along residual arcs
    let mut q = VecDeque::new();
    for v in 0..n as u32 {
        if !visited[v as usize] && state.returnable[v as usize] > 0 {
            visited[v as usize] = true;
            state.label[v as usize] = n_label + 1;
            q.push_back(v);
        }
    }
    while let Some(v) = q.pop_front() {
        let lab = state.label[v as usize];
        let (_, s, r) = topo.coords(v);
        let base = topo.edge_base_idx(v);
        for slot in 0..topo.source_slot() {
            if let Some((w, ws)) = topo.mate_cached(v, r, s, slot) {
                // w -> v residual means w is one step farther from s
                if !visited[w as usize] && caps.get(topo.edge_base_idx(w) + ws as usize) > 0 {
                    visited[w as usize] = true;
                    state.label[w as usize] = lab + 1;
                    q.push_back(w);
                }
            }
        }
        let _ = base;
    }

    for v in 0..n {
        if !visited[v] {
            state.label[v] = sentinel;
        }
    }
}

/// Residual BFS distance to the sink per vertex; `u32::MAX` if unreachable.
pub fn bfs_distance_to_sink(topo: &GraphTopology, caps: &CapacityStore) -> Vec<u32> {
    let n = topo.vertex_count();
    let sink_slot = topo.sink_slot();
    let mut dist = vec![u32::MAX; n];
    let mut q = VecDeque::new();
    for v in 0..n as u32 {
        if caps.cap(topo, v, sink_slot) > 0 {
            dist[v as usize] = 1;
            q.push_back(v);
        }
    }
    while let Some(v) = q.pop_front() {
        let d = dist[v as usize];
        let (_, s, r) = topo.coords(v);
        for slot in 0..topo.source_slot() {
            if let Some((w, ws)) = topo.mate_cached(v, r, s, slot) {
                if dist[w as usize] == u32::MAX
                    && caps.get(topo.edge_base_idx(w) + ws as usize) > 0
                {
                    dist[w as usize] = d + 1;
                    q.push_back(w);
                }
            }
        }
    }
    dist
}

/// Moves min(excess, residual) along one slot of `v`. Returns the target
/// made newly active, if any.
fn push(
    topo: &GraphTopology,
    caps: &mut CapacityStore,
    state: &mut FlowState,
    v: u32,
    slot: u32,
) -> Option<u32> {
    let base = topo.edge_base_idx(v);
    if slot == topo.sink_slot() {
        let res = caps.get(base + slot as usize);
        let delta = (state.excess[v as usize]).min(res as u64) as u32;
        caps.set(base + slot as usize, res - delta);
        state.excess[v as usize] -= delta as u64;
        state.flow_value += delta as u64;
        return None;
    }
    if slot == topo.source_slot() {
        let ret = state.returnable[v as usize];
        let delta = (state.excess[v as usize]).min(ret as u64) as u32;
        state.returnable[v as usize] = ret - delta;
        let res = caps.get(base + slot as usize);
        caps.set(base + slot as usize, res + delta);
        state.excess[v as usize] -= delta as u64;
        return None;
    }
    let (w, ws) = topo.mate_idx(v, slot).expect("push along missing edge");
    let res = caps.get(base + slot as usize);
    let delta = (state.excess[v as usize]).min(res as u64) as u32;
    caps.set(base + slot as usize, res - delta);
    let mbase = topo.edge_base_idx(w);
    let mres = caps.get(mbase + ws as usize);
    caps.set(mbase + ws as usize, mres + delta);
    state.excess[v as usize] -= delta as u64;
    let was = state.excess[w as usize];
    state.excess[w as usize] = was + delta as u64;
    if was == 0 && delta > 0 {
        Some(w)
    } else {
        None
    }
}

/// Relabels `v` to one more than its lowest-labeled residual neighbor.
/// Never decreases the label.
fn relabel(topo: &GraphTopology, caps: &CapacityStore, state: &mut FlowState, v: u32) {
    let n = topo.vertex_count();
    let n_label = FlowState::source_label(n);
    let sentinel = FlowState::sentinel_label(n);
    let base = topo.edge_base_idx(v);
    let mut newd = sentinel;
    for slot in 0..topo.source_slot() {
        if caps.get(base + slot as usize) > 0 {
            if let Some((w, _)) = topo.mate_idx(v, slot) {
                newd = newd.min(state.label[w as usize].saturating_add(1));
            }
        }
    }
    if caps.get(base + topo.sink_slot() as usize) > 0 {
        newd = newd.min(1);
    }
    if state.returnable[v as usize] > 0 {
        newd = newd.min(n_label + 1);
    }
    if newd > state.label[v as usize] {
        state.label[v as usize] = newd.min(sentinel);
    }
}

#[inline]
fn admissible(topo: &GraphTopology, state: &FlowState, n_label: u32, v: u32, slot: u32, w: Option<u32>) -> bool {
    let target_label = if slot == topo.sink_slot() {
        0
    } else if slot == topo.source_slot() {
        n_label
    } else {
        state.label[w.unwrap() as usize]
    };
    state.label[v as usize] == target_label + 1
}

/// Runs FIFO discharges until no vertex holds excess. Returns the flow
/// value; on exit every unit of excess has drained to a terminal, so the
/// recovered flow conserves exactly.
pub fn discharge_fifo_loop(
    topo: &GraphTopology,
    caps: &mut CapacityStore,
    state: &mut FlowState,
    cfg: &SerialConfig,
) -> SerialStats {
    let n = topo.vertex_count();
    let n_label = FlowState::source_label(n);
    let gr_every = ((cfg.gr_factor * n_label as f64).ceil() as u64).max(1);
    let mut stats = SerialStats::default();
    let mut queue = VecDeque::new();
    let mut in_queue = vec![false; n];

    initialize_preflow(topo, caps, state, &mut queue, &mut in_queue);
    let mut since_gr = 0u64;

    while let Some(v) = queue.pop_front() {
        in_queue[v as usize] = false;
        if state.excess[v as usize] == 0 {
            continue;
        }
        stats.discharges += 1;
        since_gr += 1;

        let epn = topo.edges_per_node();
        let mut e = state.cursor[v as usize];
        let mut exhausted = true;
        while e < epn {
            if state.excess[v as usize] == 0 {
                exhausted = false;
                break;
            }
            let can_carry = if e == topo.source_slot() {
                state.returnable[v as usize] > 0
            } else {
                caps.get(topo.edge_base_idx(v) + e as usize) > 0
            };
            if can_carry {
                let w = if e < topo.source_slot() {
                    topo.mate_idx(v, e).map(|(w, _)| w)
                } else {
                    None
                };
                let valid_target = e >= topo.source_slot() || w.is_some();
                if valid_target && admissible(topo, state, n_label, v, e, w) {
                    if let Some(activated) = push(topo, caps, state, v, e) {
                        if !in_queue[activated as usize] {
                            in_queue[activated as usize] = true;
                            queue.push_back(activated);
                        }
                    }
                }
            }
            e += 1;
        }
        state.cursor[v as usize] = if exhausted { 0 } else { e };
        if exhausted {
            relabel(topo, caps, state, v);
            stats.relabels += 1;
        }
        if state.excess[v as usize] > 0 && !in_queue[v as usize] {
            in_queue[v as usize] = true;
            queue.push_back(v);
        }

        if since_gr >= gr_every {
            since_gr = 0;
            global_relabel(topo, caps, state);
            stats.global_relabels += 1;
        }
    }
    stats
}

/// Full serial solve: returns the maxflow value, leaving `caps` as the
/// final residual store.
pub fn solve(topo: &GraphTopology, caps: &mut CapacityStore, cfg: &SerialConfig) -> u64 {
    let mut state = FlowState::new(topo.vertex_count());
    discharge_fifo_loop(topo, caps, &mut state, cfg);
    debug_assert!(state.excess.iter().all(|&e| e == 0));
    state.flow_value
}

/// Solve and hand back the final per-vertex state as well.
pub fn solve_with_state(
    topo: &GraphTopology,
    caps: &mut CapacityStore,
    cfg: &SerialConfig,
) -> (u64, FlowState) {
    let mut state = FlowState::new(topo.vertex_count());
    discharge_fifo_loop(topo, caps, &mut state, cfg);
    (state.flow_value, state)
}
