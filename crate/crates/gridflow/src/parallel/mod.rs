//! Column-partitioned parallel push-relabel.
//!
//! Each segment (a contiguous column range) is owned by one worker with
//! its own FIFO queue. Interior vertices are touched only by their owner
//! and need no locking; vertices in boundary columns are lockable and all
//! mutation of their excess, labels or incident residuals happens under
//! their mutex. A second lock on a discharge path is always a try-lock:
//! on failure the vertex saves its edge cursor and goes back to its local
//! queue, which rules out lock-order deadlocks.
//!
//! Global relabeling runs as numbered waves concurrent with discharging. A
//! supervisor thread starts a wave once enough discharges have ticked in,
//! then advances the reverse-BFS frontier one level at a time: every
//! worker processes its own level queue and reports done; no one works on
//! level L+1 before all finished L. A wave has two phases mirroring the
//! serial global relabel: distances to the sink first, then N + distances
//! back to the source for what remains, so trapped excess drains without
//! label creep. Pushes touching a lockable vertex are admissible only
//! between equal wave numbers; a label-admissible pair whose wave numbers
//! disagree gets its target relabeled and restamped instead, so stale
//! cohorts cannot park flow forever.
//!
//! Termination follows the shared empty-flag protocol: a worker that
//! drains its queue raises its flag under the writer lock and scans all
//! flags under the reader lock; whoever sees them all raised sets the
//! terminate flag, which everyone else polls without locking.

pub mod partition;

pub use partition::Partition;

use crate::error::Result;
use crate::gen::SplitMix64;
use crate::graph::{CapacityStore, GraphTopology};
use crate::serial::{self, FlowState};
use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::{Mutex, MutexGuard, RwLock};
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct ParallelConfig {
    pub segments: usize,
    /// Global-relabel factor; `None` picks 2 below 20M vertices, 1 above.
    pub gr_factor: Option<f64>,
    /// Discharges accumulated locally before hitting the shared counter.
    pub tick: u64,
    /// Scheduling-jitter knob for stress testing: roughly one forced yield
    /// per `jitter` operations. 0 disables it.
    pub jitter: u32,
}

impl ParallelConfig {
    pub fn with_segments(segments: usize) -> ParallelConfig {
        ParallelConfig {
            segments,
            gr_factor: None,
            tick: 1000,
            jitter: 0,
        }
    }

    pub fn effective_gr_factor(&self, n: usize) -> f64 {
        self.gr_factor
            .unwrap_or(if n < 20_000_000 { 2.0 } else { 1.0 })
    }
}

#[derive(Debug, Clone)]
pub struct ParallelOutcome {
    pub flow: u64,
    pub waves: u32,
    pub discharges: u64,
}

const NO_LOCK: u32 = u32::MAX;

const PHASE_SINK: u32 = 0;
const PHASE_SOURCE: u32 = 1;

/// Packed wave coordination word: wave number, active bit, phase bit,
/// frontier level.
#[derive(Clone, Copy, PartialEq, Eq)]
struct WaveSt {
    wave: u32,
    phase: u32,
    level: u32,
    active: bool,
}

impl WaveSt {
    fn pack(self) -> u64 {
        ((self.wave as u64) << 32)
            | ((self.active as u64) << 31)
            | ((self.phase as u64) << 30)
            | (self.level as u64)
    }

    fn unpack(x: u64) -> WaveSt {
        WaveSt {
            wave: (x >> 32) as u32,
            level: (x & 0x3fff_ffff) as u32,
            phase: ((x >> 30) & 1) as u32,
            active: (x >> 31) & 1 == 1,
        }
    }
}

struct Shared<'a> {
    topo: &'a GraphTopology,
    part: &'a Partition,
    caps: Vec<AtomicU32>,
    returnable: Vec<AtomicU32>,
    excess: Vec<AtomicU64>,
    label: Vec<AtomicU32>,
    wave: Vec<AtomicU32>,
    cursor: Vec<AtomicU32>,
    wave_cursor: Vec<AtomicU32>,
    in_queue: Vec<AtomicBool>,
    lock_idx: Vec<u32>,
    locks: Vec<Mutex<()>>,
    queues: Vec<Mutex<VecDeque<u32>>>,
    rqueues: Vec<[Mutex<VecDeque<u32>>; 2]>,
    empty_flags: RwLock<Vec<bool>>,
    terminate: AtomicBool,
    sink_excess: AtomicU64,
    source_excess: AtomicU64,
    discharge_counter: AtomicU64,
    total_discharges: AtomicU64,
    wave_state: AtomicU64,
    completed_wave: AtomicU32,
    waves_run: AtomicU32,
    level_done: Vec<AtomicBool>,
    n_label: u32,
    sentinel: u32,
    tick: u64,
    jitter: u32,
}

impl<'a> Shared<'a> {
    fn new(
        topo: &'a GraphTopology,
        part: &'a Partition,
        raw_caps: Vec<u32>,
        init: FlowState,
        cfg: &ParallelConfig,
    ) -> Shared<'a> {
        let n = topo.vertex_count();
        let mut lock_idx = vec![NO_LOCK; n];
        let mut locks = Vec::new();
        for v in 0..n as u32 {
            if part.lockable(v) {
                lock_idx[v as usize] = locks.len() as u32;
                locks.push(Mutex::new(()));
            }
        }
        let segs = part.segment_count();
        Shared {
            topo,
            part,
            caps: raw_caps.into_iter().map(AtomicU32::new).collect(),
            returnable: init.returnable.into_iter().map(AtomicU32::new).collect(),
            excess: init.excess.into_iter().map(AtomicU64::new).collect(),
            label: init.label.into_iter().map(AtomicU32::new).collect(),
            wave: init.wave.into_iter().map(AtomicU32::new).collect(),
            cursor: (0..n).map(|_| AtomicU32::new(0)).collect(),
            wave_cursor: (0..n).map(|_| AtomicU32::new(0)).collect(),
            in_queue: (0..n).map(|_| AtomicBool::new(false)).collect(),
            lock_idx,
            locks,
            queues: (0..segs).map(|_| Mutex::new(VecDeque::new())).collect(),
            rqueues: (0..segs)
                .map(|_| [Mutex::new(VecDeque::new()), Mutex::new(VecDeque::new())])
                .collect(),
            empty_flags: RwLock::new(vec![false; segs]),
            terminate: AtomicBool::new(false),
            sink_excess: AtomicU64::new(init.flow_value),
            source_excess: AtomicU64::new(0),
            discharge_counter: AtomicU64::new(0),
            total_discharges: AtomicU64::new(0),
            wave_state: AtomicU64::new(
                WaveSt {
                    wave: init.wave_number,
                    phase: PHASE_SINK,
                    level: 0,
                    active: false,
                }
                .pack(),
            ),
            completed_wave: AtomicU32::new(init.wave_number),
            waves_run: AtomicU32::new(0),
            level_done: (0..segs).map(|_| AtomicBool::new(false)).collect(),
            n_label: FlowState::source_label(n),
            sentinel: FlowState::sentinel_label(n),
            tick: cfg.tick.max(1),
            jitter: cfg.jitter,
        }
    }

    #[inline]
    fn lockable(&self, v: u32) -> bool {
        self.lock_idx[v as usize] != NO_LOCK
    }

    #[inline]
    fn lock(&self, v: u32) -> MutexGuard<'_, ()> {
        self.locks[self.lock_idx[v as usize] as usize]
            .lock()
            .unwrap()
    }

    #[inline]
    fn try_lock(&self, v: u32) -> Option<MutexGuard<'_, ()>> {
        self.locks[self.lock_idx[v as usize] as usize]
            .try_lock()
            .ok()
    }

    #[inline]
    fn lock_if_lockable(&self, v: u32) -> Option<MutexGuard<'_, ()>> {
        if self.lockable(v) {
            Some(self.lock(v))
        } else {
            None
        }
    }

    #[inline]
    fn cap_at(&self, v: u32, slot: u32) -> usize {
        self.topo.edge_base_idx(v) + slot as usize
    }

    /// Level 1 of a wave phase: claim this segment's frontier seeds. The
    /// sink phase seeds vertices with residual arcs into the sink at label
    /// 1; the source phase seeds vertices that still hold returnable flow
    /// at label N+1.
    fn wave_seed(&self, seg: usize, wave_no: u32, phase: u32) {
        let sink = self.topo.sink_slot();
        let (lo, hi) = self.part.vertex_range(seg);
        let mut found = Vec::new();
        for v in lo..hi {
            let is_seed = if phase == PHASE_SINK {
                self.caps[self.cap_at(v, sink)].load(Ordering::Relaxed) > 0
            } else {
                self.returnable[v as usize].load(Ordering::Relaxed) > 0
            };
            if !is_seed || self.wave[v as usize].load(Ordering::Relaxed) >= wave_no {
                continue;
            }
            let guard = self.lock_if_lockable(v);
            if self.wave[v as usize].load(Ordering::Relaxed) < wave_no {
                self.wave[v as usize].store(wave_no, Ordering::Relaxed);
                let lab = if phase == PHASE_SINK { 1 } else { self.n_label + 1 };
                // a wave never lowers a label
                if lab > self.label[v as usize].load(Ordering::Relaxed) {
                    self.label[v as usize].store(lab, Ordering::Relaxed);
                }
                self.wave_cursor[v as usize].store(0, Ordering::Relaxed);
                found.push(v);
            }
            drop(guard);
        }
        self.rqueues[seg][0].lock().unwrap().extend(found);
    }

    /// One level of frontier advancement over this segment's level queue.
    /// A failed try-lock parks the vertex back in the same queue with its
    /// scan position saved.
    fn wave_drain_level(
        &self,
        seg: usize,
        level: u32,
        wave_no: u32,
        label_base: u32,
        rng: &mut SplitMix64,
    ) {
        let qn = (level % 2) as usize;
        let src = self.topo.source_slot();
        loop {
            let popped = self.rqueues[seg][qn].lock().unwrap().pop_front();
            let Some(v) = popped else { break };
            self.maybe_jitter(rng);
            let vguard = self.lock_if_lockable(v);
            let (_, s, r) = self.topo.coords(v);
            let mut e = self.wave_cursor[v as usize].load(Ordering::Relaxed);
            let mut parked = false;
            while e < src {
                if let Some((w, ws)) = self.topo.mate_cached(v, r, s, e) {
                    let can_reach_v = self.caps[self.cap_at(w, ws)].load(Ordering::Relaxed) > 0;
                    if can_reach_v && self.wave[w as usize].load(Ordering::Relaxed) < wave_no {
                        if self.lockable(w) {
                            match self.try_lock(w) {
                                None => {
                                    self.wave_cursor[v as usize].store(e, Ordering::Relaxed);
                                    self.rqueues[seg][qn].lock().unwrap().push_back(v);
                                    parked = true;
                                    break;
                                }
                                Some(wguard) => {
                                    if self.wave[w as usize].load(Ordering::Relaxed) < wave_no {
                                        self.claim_for_wave(w, level, wave_no, label_base);
                                    }
                                    drop(wguard);
                                }
                            }
                        } else {
                            self.claim_for_wave(w, level, wave_no, label_base);
                        }
                    }
                }
                e += 1;
            }
            if !parked {
                self.wave_cursor[v as usize].store(0, Ordering::Relaxed);
            }
            drop(vguard);
        }
    }

    fn claim_for_wave(&self, w: u32, level: u32, wave_no: u32, label_base: u32) {
        self.wave[w as usize].store(wave_no, Ordering::Relaxed);
        // a wave never lowers a label: concurrent pushes may have made the
        // frontier level stale relative to a validly higher label
        if label_base + level > self.label[w as usize].load(Ordering::Relaxed) {
            self.label[w as usize].store(label_base + level, Ordering::Relaxed);
        }
        self.wave_cursor[w as usize].store(0, Ordering::Relaxed);
        let owner = self.part.segment_of(w);
        self.rqueues[owner][((level + 1) % 2) as usize]
            .lock()
            .unwrap()
            .push_back(w);
    }

    /// Quiescent reachability from the source over the final residuals:
    /// the source side plus whether the sink is still reachable. Called
    /// between rounds with no worker running.
    fn residual_source_side(&self) -> (Vec<bool>, bool) {
        let n = self.topo.vertex_count();
        let src = self.topo.source_slot();
        let sink = self.topo.sink_slot();
        let mut side = vec![false; n];
        let mut sink_reachable = false;
        let mut q = VecDeque::new();
        for v in 0..n as u32 {
            if self.caps[self.cap_at(v, src)].load(Ordering::Relaxed) > 0 {
                side[v as usize] = true;
                q.push_back(v);
            }
        }
        while let Some(v) = q.pop_front() {
            if self.caps[self.cap_at(v, sink)].load(Ordering::Relaxed) > 0 {
                sink_reachable = true;
            }
            let (_, s, r) = self.topo.coords(v);
            for slot in 0..src {
                if self.caps[self.cap_at(v, slot)].load(Ordering::Relaxed) > 0 {
                    if let Some((w, _)) = self.topo.mate_cached(v, r, s, slot) {
                        if !side[w as usize] {
                            side[w as usize] = true;
                            q.push_back(w);
                        }
                    }
                }
            }
        }
        (side, sink_reachable)
    }

    /// Exact two-phase global relabel over the shared arrays, run
    /// single-threaded between rounds: distance to the sink where
    /// reachable, N + distance to the source where flow can still return,
    /// sentinel otherwise. Every vertex joins the new uniform cohort.
    fn quiescent_exact_relabel(&self, wave_no: u32) {
        let n = self.topo.vertex_count();
        let src = self.topo.source_slot();
        let sink = self.topo.sink_slot();
        let mut assigned = vec![false; n];
        let mut q = VecDeque::new();
        for v in 0..n as u32 {
            if self.caps[self.cap_at(v, sink)].load(Ordering::Relaxed) > 0 {
                assigned[v as usize] = true;
                self.label[v as usize].store(1, Ordering::Relaxed);
                q.push_back(v);
            }
        }
        while let Some(v) = q.pop_front() {
            let lab = self.label[v as usize].load(Ordering::Relaxed);
            let (_, s, r) = self.topo.coords(v);
            for slot in 0..src {
                if let Some((w, ws)) = self.topo.mate_cached(v, r, s, slot) {
                    if !assigned[w as usize]
                        && self.caps[self.cap_at(w, ws)].load(Ordering::Relaxed) > 0
                    {
                        assigned[w as usize] = true;
                        self.label[w as usize].store(lab + 1, Ordering::Relaxed);
                        q.push_back(w);
                    }
                }
            }
        }
        for v in 0..n as u32 {
            if !assigned[v as usize] && self.returnable[v as usize].load(Ordering::Relaxed) > 0 {
                assigned[v as usize] = true;
                self.label[v as usize].store(self.n_label + 1, Ordering::Relaxed);
                q.push_back(v);
            }
        }
        while let Some(v) = q.pop_front() {
            let lab = self.label[v as usize].load(Ordering::Relaxed);
            let (_, s, r) = self.topo.coords(v);
            for slot in 0..src {
                if let Some((w, ws)) = self.topo.mate_cached(v, r, s, slot) {
                    if !assigned[w as usize]
                        && self.caps[self.cap_at(w, ws)].load(Ordering::Relaxed) > 0
                    {
                        assigned[w as usize] = true;
                        self.label[w as usize].store(lab + 1, Ordering::Relaxed);
                        q.push_back(w);
                    }
                }
            }
        }
        for v in 0..n {
            if !assigned[v] {
                self.label[v].store(self.sentinel, Ordering::Relaxed);
            }
            self.wave[v].store(wave_no, Ordering::Relaxed);
            self.cursor[v].store(0, Ordering::Relaxed);
        }
    }

    #[inline]
    fn maybe_jitter(&self, rng: &mut SplitMix64) {
        if self.jitter > 0 && rng.next_below(self.jitter as u64) == 0 {
            std::thread::yield_now();
        }
    }
}

struct Worker<'a, 'b> {
    sh: &'b Shared<'a>,
    seg: usize,
    seen_wave: u32,
    done_phase: u32,
    done_level: u32,
    discharges: u64,
    unreported: u64,
    rng: SplitMix64,
}

impl<'a, 'b> Worker<'a, 'b> {
    fn new(sh: &'b Shared<'a>, seg: usize) -> Worker<'a, 'b> {
        let seen_wave = WaveSt::unpack(sh.wave_state.load(Ordering::Acquire)).wave;
        Worker {
            sh,
            seg,
            seen_wave,
            done_phase: 0,
            done_level: 0,
            discharges: 0,
            unreported: 0,
            rng: SplitMix64::new(0x6a09e667f3bcc908 ^ seg as u64),
        }
    }

    fn run(&mut self) {
        let mut global_check = true;
        let mut idle_rounds = 0u32;
        loop {
            // drain the local queue
            loop {
                if self.sh.terminate.load(Ordering::Relaxed) {
                    self.flush_ticks();
                    return;
                }
                self.wave_poll();
                let Some(v) = self.pop_local() else { break };
                idle_rounds = 0;
                self.sh.maybe_jitter(&mut self.rng);
                {
                    let _guard = self.sh.lock_if_lockable(v);
                    self.apply_vertex(v);
                }
                global_check = true;
                self.discharges += 1;
                self.unreported += 1;
                if self.unreported >= self.sh.tick {
                    self.sh
                        .discharge_counter
                        .fetch_add(self.unreported, Ordering::Relaxed);
                    self.unreported = 0;
                }
            }
            if self.sh.terminate.load(Ordering::Relaxed) {
                break;
            }
            if global_check {
                self.set_empty_flag();
                if self.is_queue_empty_check() {
                    break;
                }
                global_check = false;
            }
            self.wave_poll();
            // polling is lock-free; back off once it is clearly idle so
            // busy workers keep the cores
            idle_rounds += 1;
            if idle_rounds > 32 {
                std::thread::sleep(Duration::from_micros(50));
            } else {
                std::thread::yield_now();
            }
        }
        self.flush_ticks();
    }

    fn flush_ticks(&mut self) {
        if self.unreported > 0 {
            self.sh
                .discharge_counter
                .fetch_add(self.unreported, Ordering::Relaxed);
            self.unreported = 0;
        }
        self.sh
            .total_discharges
            .fetch_add(self.discharges, Ordering::Relaxed);
        self.discharges = 0;
    }

    fn pop_local(&self) -> Option<u32> {
        let v = self.sh.queues[self.seg].lock().unwrap().pop_front()?;
        self.sh.in_queue[v as usize].store(false, Ordering::Release);
        Some(v)
    }

    /// Queue a newly active vertex on its owner. A worker's own flag is
    /// false whenever it is mid-discharge, so only cross-segment additions
    /// need the writer lock that clears the target's empty flag.
    fn enqueue(&self, w: u32) {
        if self.sh.in_queue[w as usize].swap(true, Ordering::AcqRel) {
            return;
        }
        let seg = self.sh.part.segment_of(w);
        if seg == self.seg {
            self.sh.queues[seg].lock().unwrap().push_back(w);
        } else {
            let mut flags = self.sh.empty_flags.write().unwrap();
            flags[seg] = false;
            self.sh.queues[seg].lock().unwrap().push_back(w);
        }
    }

    fn set_empty_flag(&self) {
        let mut flags = self.sh.empty_flags.write().unwrap();
        let q = self.sh.queues[self.seg].lock().unwrap();
        if q.is_empty() {
            flags[self.seg] = true;
        }
    }

    fn is_queue_empty_check(&self) -> bool {
        let flags = self.sh.empty_flags.read().unwrap();
        if flags.iter().all(|&f| f) {
            self.sh.terminate.store(true, Ordering::Relaxed);
            true
        } else {
            false
        }
    }

    /// Discharge one vertex: scan its edge block from the saved cursor,
    /// push along admissible slots, relabel at the block end. The caller
    /// holds the vertex's mutex when it is lockable.
    fn apply_vertex(&mut self, v: u32) {
        let sh = self.sh;
        let topo = sh.topo;
        if sh.excess[v as usize].load(Ordering::Relaxed) == 0 {
            return;
        }
        let src = topo.source_slot();
        let sink = topo.sink_slot();
        let epn = topo.edges_per_node();
        let (_, s, r) = topo.coords(v);
        let v_lockable = sh.lockable(v);
        let mut e = sh.cursor[v as usize].load(Ordering::Relaxed);

        while e < epn {
            if sh.excess[v as usize].load(Ordering::Relaxed) == 0 {
                // deactivated mid-block: keep the cursor for the next pass
                sh.cursor[v as usize].store(e, Ordering::Relaxed);
                return;
            }
            if e == sink {
                let at = sh.cap_at(v, sink);
                let res = sh.caps[at].load(Ordering::Relaxed);
                if res > 0 && sh.label[v as usize].load(Ordering::Relaxed) == 1 {
                    let ex = sh.excess[v as usize].load(Ordering::Relaxed);
                    let delta = ex.min(res as u64) as u32;
                    sh.caps[at].fetch_sub(delta, Ordering::Relaxed);
                    sh.excess[v as usize].fetch_sub(delta as u64, Ordering::Relaxed);
                    sh.sink_excess.fetch_add(delta as u64, Ordering::Relaxed);
                }
            } else if e == src {
                let ret = sh.returnable[v as usize].load(Ordering::Relaxed);
                if ret > 0 && sh.label[v as usize].load(Ordering::Relaxed) == sh.n_label + 1 {
                    let ex = sh.excess[v as usize].load(Ordering::Relaxed);
                    let delta = ex.min(ret as u64) as u32;
                    sh.returnable[v as usize].fetch_sub(delta, Ordering::Relaxed);
                    sh.caps[sh.cap_at(v, src)].fetch_add(delta, Ordering::Relaxed);
                    sh.excess[v as usize].fetch_sub(delta as u64, Ordering::Relaxed);
                    sh.source_excess.fetch_add(delta as u64, Ordering::Relaxed);
                }
            } else if sh.caps[sh.cap_at(v, e)].load(Ordering::Relaxed) > 0 {
                if let Some((w, ws)) = topo.mate_cached(v, r, s, e) {
                    if sh.lockable(w) {
                        self.sh.maybe_jitter(&mut self.rng);
                        match sh.try_lock(w) {
                            None => {
                                // deadlock avoidance: park v with its cursor
                                sh.cursor[v as usize].store(e, Ordering::Relaxed);
                                self.enqueue(v);
                                return;
                            }
                            Some(wguard) => {
                                if sh.label[v as usize].load(Ordering::Relaxed)
                                    == sh.label[w as usize]
                                        .load(Ordering::Relaxed)
                                        .wrapping_add(1)
                                {
                                    let wv = sh.wave[v as usize].load(Ordering::Relaxed);
                                    let ww = sh.wave[w as usize].load(Ordering::Relaxed);
                                    if wv == ww {
                                        self.push_grid(v, e, w, ws);
                                    } else {
                                        // cohort mismatch: freshen the
                                        // target's label and wave under its
                                        // lock, then let the scan move on
                                        self.refresh_cohort(w, wv.max(ww));
                                    }
                                }
                                drop(wguard);
                            }
                        }
                    } else if sh.label[v as usize].load(Ordering::Relaxed)
                        == sh.label[w as usize].load(Ordering::Relaxed).wrapping_add(1)
                    {
                        if v_lockable {
                            let wv = sh.wave[v as usize].load(Ordering::Relaxed);
                            let ww = sh.wave[w as usize].load(Ordering::Relaxed);
                            if wv == ww {
                                self.push_grid(v, e, w, ws);
                            } else {
                                self.refresh_cohort(w, wv.max(ww));
                            }
                        } else {
                            self.push_grid(v, e, w, ws);
                        }
                    }
                }
            }
            e += 1;
        }

        // block end: relabel (the caller already holds v's lock when it is
        // lockable) and requeue if still active
        self.relabel(v);
        sh.cursor[v as usize].store(0, Ordering::Relaxed);
        if sh.excess[v as usize].load(Ordering::Relaxed) > 0 {
            self.enqueue(v);
        }
    }

    fn push_grid(&self, v: u32, slot: u32, w: u32, ws: u32) {
        let sh = self.sh;
        let at = sh.cap_at(v, slot);
        let res = sh.caps[at].load(Ordering::Relaxed);
        let ex = sh.excess[v as usize].load(Ordering::Relaxed);
        let delta = ex.min(res as u64) as u32;
        if delta == 0 {
            return;
        }
        sh.caps[at].fetch_sub(delta, Ordering::Relaxed);
        sh.caps[sh.cap_at(w, ws)].fetch_add(delta, Ordering::Relaxed);
        sh.excess[v as usize].fetch_sub(delta as u64, Ordering::Relaxed);
        let was = sh.excess[w as usize].fetch_add(delta as u64, Ordering::Relaxed);
        if was == 0 {
            self.enqueue(w);
        }
    }

    fn relabel(&self, v: u32) {
        let sh = self.sh;
        let topo = sh.topo;
        let src = topo.source_slot();
        let (_, s, r) = topo.coords(v);
        let mut newd = sh.sentinel;
        for slot in 0..src {
            if sh.caps[sh.cap_at(v, slot)].load(Ordering::Relaxed) > 0 {
                if let Some((w, _)) = topo.mate_cached(v, r, s, slot) {
                    let lw = sh.label[w as usize].load(Ordering::Relaxed);
                    newd = newd.min(lw.saturating_add(1));
                }
            }
        }
        if sh.caps[sh.cap_at(v, topo.sink_slot())].load(Ordering::Relaxed) > 0 {
            newd = newd.min(1);
        }
        if sh.returnable[v as usize].load(Ordering::Relaxed) > 0 {
            newd = newd.min(sh.n_label + 1);
        }
        if newd > sh.label[v as usize].load(Ordering::Relaxed) {
            sh.label[v as usize].store(newd.min(sh.sentinel), Ordering::Relaxed);
        }
        // a freshly relabeled vertex joins the last completed cohort so
        // stale wave numbers cannot block its pushes indefinitely; using
        // the completed wave keeps an in-flight wave able to claim it
        let current = sh.completed_wave.load(Ordering::Relaxed);
        if current > sh.wave[v as usize].load(Ordering::Relaxed) {
            sh.wave[v as usize].store(current, Ordering::Relaxed);
        }
    }

    /// Recomputes the label of a push target whose wave number disagrees
    /// with the pusher's, then stamps it into the newer cohort. The caller
    /// guarantees exclusive access to `w` (its lock, or same-owner
    /// interior).
    fn refresh_cohort(&self, w: u32, wave_no: u32) {
        self.relabel(w);
        if wave_no > self.sh.wave[w as usize].load(Ordering::Relaxed) {
            self.sh.wave[w as usize].store(wave_no, Ordering::Relaxed);
        }
    }

    /// Participates in any published wave level not yet processed. Called
    /// between discharges and while idle-polling, so a long discharge
    /// finishes before its worker joins the level.
    fn wave_poll(&mut self) {
        let st = WaveSt::unpack(self.sh.wave_state.load(Ordering::Acquire));
        if !st.active {
            return;
        }
        if st.wave != self.seen_wave {
            self.seen_wave = st.wave;
            self.done_phase = PHASE_SINK;
            self.done_level = 0;
        }
        if st.phase != self.done_phase {
            self.done_phase = st.phase;
            self.done_level = 0;
        }
        if st.level <= self.done_level {
            return;
        }
        debug_assert_eq!(st.level, self.done_level + 1);
        let base = if st.phase == PHASE_SINK {
            0
        } else {
            self.sh.n_label
        };
        if st.level == 1 {
            self.sh.wave_seed(self.seg, st.wave, st.phase);
        } else {
            self.sh
                .wave_drain_level(self.seg, st.level, st.wave, base, &mut self.rng);
        }
        self.done_level = st.level;
        self.sh.level_done[self.seg].store(true, Ordering::Release);
    }
}

/// Supervisory loop: tracks the discharge counter, starts waves, advances
/// levels once every worker reports done, and flips a wave from the sink
/// phase to the source phase when the first frontier is exhausted.
fn supervise(sh: &Shared<'_>, gr_threshold: u64) {
    let mut wave_no = WaveSt::unpack(sh.wave_state.load(Ordering::Acquire)).wave;
    let mut idle = 0u32;
    loop {
        if sh.terminate.load(Ordering::Relaxed) {
            return;
        }
        let st = WaveSt::unpack(sh.wave_state.load(Ordering::Acquire));
        if !st.active {
            if sh.discharge_counter.load(Ordering::Relaxed) >= gr_threshold {
                wave_no += 1;
                sh.discharge_counter.store(0, Ordering::Relaxed);
                for f in &sh.level_done {
                    f.store(false, Ordering::Relaxed);
                }
                sh.wave_state.store(
                    WaveSt {
                        wave: wave_no,
                        phase: PHASE_SINK,
                        level: 1,
                        active: true,
                    }
                    .pack(),
                    Ordering::Release,
                );
            } else {
                idle += 1;
                if idle % 16 == 0 {
                    std::thread::sleep(Duration::from_micros(100));
                } else {
                    std::thread::yield_now();
                }
            }
        } else if sh.level_done.iter().all(|f| f.load(Ordering::Acquire)) {
            let next_qn = ((st.level + 1) % 2) as usize;
            let pending: usize = (0..sh.part.segment_count())
                .map(|i| sh.rqueues[i][next_qn].lock().unwrap().len())
                .sum();
            let next = if pending > 0 {
                Some(WaveSt {
                    wave: wave_no,
                    phase: st.phase,
                    level: st.level + 1,
                    active: true,
                })
            } else if st.phase == PHASE_SINK {
                Some(WaveSt {
                    wave: wave_no,
                    phase: PHASE_SOURCE,
                    level: 1,
                    active: true,
                })
            } else {
                None
            };
            match next {
                Some(state) => {
                    for f in &sh.level_done {
                        f.store(false, Ordering::Relaxed);
                    }
                    sh.wave_state.store(state.pack(), Ordering::Release);
                }
                None => {
                    sh.completed_wave.store(wave_no, Ordering::Relaxed);
                    sh.waves_run.fetch_add(1, Ordering::Relaxed);
                    sh.wave_state.store(
                        WaveSt {
                            wave: wave_no,
                            phase: PHASE_SINK,
                            level: 0,
                            active: false,
                        }
                        .pack(),
                        Ordering::Release,
                    );
                }
            }
        } else {
            std::thread::yield_now();
        }
    }
}

/// Parallel solve. The store is left as the final residual graph, exactly
/// as the serial solver leaves it.
pub fn solve(
    topo: &GraphTopology,
    caps: &mut CapacityStore,
    cfg: &ParallelConfig,
) -> Result<ParallelOutcome> {
    let part = Partition::new(topo.dims(), cfg.segments)?;
    let n = topo.vertex_count();

    // single-threaded preflow init and exact initial labels
    let mut state = FlowState::new(n);
    let mut q0 = VecDeque::new();
    let mut inq0 = vec![false; n];
    serial::initialize_preflow(topo, caps, &mut state, &mut q0, &mut inq0);
    // the initial labels all come from one snapshot: one uniform cohort
    let base_wave = state.wave_number;
    state.wave.fill(base_wave);

    let raw = std::mem::take(caps).into_raw();
    let shared = Shared::new(topo, &part, raw, state, cfg);
    for v in q0 {
        shared.in_queue[v as usize].store(true, Ordering::Relaxed);
        shared.queues[part.segment_of(v)]
            .lock()
            .unwrap()
            .push_back(v);
    }

    let gr_threshold = ((cfg.effective_gr_factor(n) * shared.n_label as f64).ceil() as u64).max(1);
    let mut round = 0u32;
    loop {
        round += 1;
        // repair rounds run wave-free: without concurrent frontier writes
        // the labeling stays valid throughout, so the round is guaranteed
        // to exhaust its re-primed preflow
        let threshold = if round == 1 { gr_threshold } else { u64::MAX };
        std::thread::scope(|scope| {
            for seg in 0..part.segment_count() {
                let sh = &shared;
                scope.spawn(move || Worker::new(sh, seg).run());
            }
            let sh = &shared;
            scope.spawn(move || supervise(sh, threshold));
        });

        for v in 0..n {
            assert_eq!(
                shared.excess[v].load(Ordering::Relaxed),
                0,
                "terminated with excess at vertex {}",
                v
            );
        }
        // quiescent maximality audit: concurrent wave writes can leave
        // labels that let the protocol stop early, so confirm the sink is
        // unreachable and otherwise re-prime the remaining source arcs
        // under exact labels and run another round
        let (side, sink_reachable) = shared.residual_source_side();
        if !sink_reachable {
            break;
        }
        let src = shared.topo.source_slot();
        for v in 0..n as u32 {
            if !side[v as usize] {
                continue;
            }
            let at = shared.cap_at(v, src);
            let cap = shared.caps[at].load(Ordering::Relaxed);
            if cap > 0 {
                shared.caps[at].store(0, Ordering::Relaxed);
                shared.returnable[v as usize].fetch_add(cap, Ordering::Relaxed);
                shared.excess[v as usize].fetch_add(cap as u64, Ordering::Relaxed);
            }
        }
        let next_wave = shared.completed_wave.load(Ordering::Relaxed) + 1;
        shared.quiescent_exact_relabel(next_wave);
        shared.completed_wave.store(next_wave, Ordering::Relaxed);
        shared.wave_state.store(
            WaveSt {
                wave: next_wave,
                phase: PHASE_SINK,
                level: 0,
                active: false,
            }
            .pack(),
            Ordering::Release,
        );
        shared.terminate.store(false, Ordering::Relaxed);
        shared.discharge_counter.store(0, Ordering::Relaxed);
        {
            let mut flags = shared.empty_flags.write().unwrap();
            flags.iter_mut().for_each(|f| *f = false);
        }
        for v in 0..n as u32 {
            if shared.excess[v as usize].load(Ordering::Relaxed) > 0 {
                shared.in_queue[v as usize].store(true, Ordering::Relaxed);
                shared.queues[part.segment_of(v)]
                    .lock()
                    .unwrap()
                    .push_back(v);
            }
        }
    }

    let flow = shared.sink_excess.load(Ordering::Relaxed);
    *caps = CapacityStore::from_raw(
        shared
            .caps
            .into_iter()
            .map(|a| a.into_inner())
            .collect(),
    );
    Ok(ParallelOutcome {
        flow,
        waves: shared.waves_run.load(Ordering::Relaxed),
        discharges: shared.total_discharges.load(Ordering::Relaxed),
    })
}

/// Runs exactly one level-synchronized wave (both phases) over a frozen
/// state with one worker per segment, no discharging. Labels and wave
/// numbers are read and written in place; `returnable` is the per-vertex
/// flow still borrowed from the source, which seeds the second phase.
/// Returns the wave-visited mask. This drives the same seed and
/// level-drain code as the live engine.
pub fn run_quiescent_wave(
    topo: &GraphTopology,
    caps: &CapacityStore,
    part: &Partition,
    labels: &mut [u32],
    waves: &mut [u32],
    returnable: &[u32],
) -> Vec<bool> {
    let n = topo.vertex_count();
    assert_eq!(labels.len(), n);
    let mut init = FlowState::new(n);
    init.label = labels.to_vec();
    init.wave = waves.to_vec();
    init.returnable = returnable.to_vec();
    let wave_no = init.wave.iter().copied().max().unwrap_or(0) + 1;
    init.wave_number = wave_no - 1;
    let cfg = ParallelConfig::with_segments(part.segment_count());
    let shared = Shared::new(topo, part, caps.raw().to_vec(), init, &cfg);

    let segs = part.segment_count();
    let barrier = std::sync::Barrier::new(segs);
    // packed decision word set by the leader after each level: phase in the
    // high bit, next level below, or DONE
    const DONE: u64 = u64::MAX;
    let decision = AtomicU64::new(0);
    std::thread::scope(|scope| {
        for seg in 0..segs {
            let sh = &shared;
            let barrier = &barrier;
            let decision = &decision;
            scope.spawn(move || {
                let mut rng = SplitMix64::new(seg as u64);
                let mut phase = PHASE_SINK;
                let mut level = 1u32;
                loop {
                    if level == 1 {
                        sh.wave_seed(seg, wave_no, phase);
                    } else {
                        let base = if phase == PHASE_SINK { 0 } else { sh.n_label };
                        sh.wave_drain_level(seg, level, wave_no, base, &mut rng);
                    }
                    // all workers finish the level before anyone advances
                    let leader = barrier.wait();
                    if leader.is_leader() {
                        let next_qn = ((level + 1) % 2) as usize;
                        let pending: usize = (0..segs)
                            .map(|i| sh.rqueues[i][next_qn].lock().unwrap().len())
                            .sum();
                        let next = if pending > 0 {
                            ((phase as u64) << 32) | (level + 1) as u64
                        } else if phase == PHASE_SINK {
                            ((PHASE_SOURCE as u64) << 32) | 1
                        } else {
                            DONE
                        };
                        decision.store(next, Ordering::Release);
                    }
                    barrier.wait();
                    let next = decision.load(Ordering::Acquire);
                    if next == DONE {
                        return;
                    }
                    phase = (next >> 32) as u32;
                    level = (next & 0xffff_ffff) as u32;
                }
            });
        }
    });

    let mut visited = vec![false; n];
    for v in 0..n {
        labels[v] = shared.label[v].load(Ordering::Relaxed);
        waves[v] = shared.wave[v].load(Ordering::Relaxed);
        visited[v] = waves[v] == wave_no;
    }
    visited
}
