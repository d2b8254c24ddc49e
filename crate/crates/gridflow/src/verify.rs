//! Backend dispatch, cross-checking, and the bench harness.
//!
//! Verification always runs every requested backend on a fresh copy of the
//! instance, checks each result against the flow axioms (pair sums,
//! conservation, terminal bounds), derives the cut by reachability and
//! requires cut == flow, and insists all backends agree on the value; the
//! explicit-graph reference solver joins in when the instance is small
//! enough.

use crate::cut;
use crate::error::{Error, Result};
use crate::graph::{CapacityStore, GraphTopology};
use crate::oracle;
use crate::parallel::{self, ParallelConfig};
use crate::parallel_bk::{self, TileConfig};
use crate::report::{RunReport, BASELINE_HALF_EDGE_BYTES, BASELINE_NODE_BYTES};
use crate::serial::{self, SerialConfig};
use crate::surface::{self, SurfaceWeights};
use crate::{bk, io};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    PrSerial,
    PrParallel,
    BkSerial,
    BkParallel,
    Oracle,
}

impl Backend {
    pub const ALL: [Backend; 5] = [
        Backend::PrSerial,
        Backend::PrParallel,
        Backend::BkSerial,
        Backend::BkParallel,
        Backend::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Backend::PrSerial => "pr-serial",
            Backend::PrParallel => "pr-parallel",
            Backend::BkSerial => "bk-serial",
            Backend::BkParallel => "bk-parallel",
            Backend::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Backend> {
        Backend::ALL.into_iter().find(|b| b.name() == s)
    }
}

/// Tunables shared by solve, verify, and bench.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub segments: usize,
    pub tiles: (u32, u32),
    pub gr_factor: Option<f64>,
    pub tick: u64,
    pub jitter: u32,
    /// Hard cap on concurrent execution contexts (from GRIDFLOW_THREADS).
    pub max_threads: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            segments: 1,
            tiles: (1, 1),
            gr_factor: None,
            tick: 1000,
            jitter: 0,
            max_threads: usize::MAX,
        }
    }
}

impl SolveOptions {
    pub fn effective_segments(&self) -> usize {
        self.segments.min(self.max_threads).max(1)
    }
}

/// Runs one backend in place; the store ends as the final residual graph.
/// The explicit-graph reference backend is dispatched separately because
/// it does not operate on the structured store.
pub fn run_backend(
    backend: Backend,
    topo: &GraphTopology,
    caps: &mut CapacityStore,
    opts: &SolveOptions,
) -> Result<u64> {
    match backend {
        Backend::PrSerial => Ok(serial::solve(
            topo,
            caps,
            &SerialConfig {
                gr_factor: opts.gr_factor.unwrap_or(2.0),
            },
        )),
        Backend::BkSerial => Ok(bk::solve(topo, caps)),
        Backend::PrParallel => {
            let cfg = ParallelConfig {
                segments: opts.effective_segments(),
                gr_factor: opts.gr_factor,
                tick: opts.tick,
                jitter: opts.jitter,
            };
            Ok(parallel::solve(topo, caps, &cfg)?.flow)
        }
        Backend::BkParallel => {
            let cfg = TileConfig {
                tiles_c: opts.tiles.0,
                tiles_s: opts.tiles.1,
                max_threads: opts.max_threads,
            };
            parallel_bk::solve(topo, caps, &cfg)
        }
        Backend::Oracle => {
            let mut g = oracle::from_structured(topo, caps)?;
            Ok(g.max_flow())
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per failed check, naming the violated invariant.
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect()
    }
}

/// Full cross-check of a structured flow instance over the given backends.
pub fn verify_flow_instance(
    topo: &GraphTopology,
    original: &CapacityStore,
    backends: &[Backend],
    opts: &SolveOptions,
) -> VerifyReport {
    let mut report = VerifyReport::default();
    let mut values: Vec<(String, u64)> = Vec::new();

    for &backend in backends {
        if backend == Backend::Oracle {
            continue;
        }
        let mut caps = original.clone();
        match run_backend(backend, topo, &mut caps, opts) {
            Err(e) => report.push(format!("{}/run", backend.name()), false, e.to_string()),
            Ok(flow) => {
                values.push((backend.name().to_string(), flow));
                match cut::check_flow(topo, original, &caps, flow) {
                    Ok(()) => report.push(
                        format!("{}/flow-validity", backend.name()),
                        true,
                        "conservation and capacity bounds hold",
                    ),
                    Err(msg) => {
                        report.push(format!("{}/flow-validity", backend.name()), false, msg)
                    }
                }
                match cut::min_cut(topo, original, &caps) {
                    Ok(c) => report.push(
                        format!("{}/cut-equals-flow", backend.name()),
                        c.cut_capacity == flow,
                        format!("cut {} flow {}", c.cut_capacity, flow),
                    ),
                    Err(e) => report.push(
                        format!("{}/cut-equals-flow", backend.name()),
                        false,
                        e.to_string(),
                    ),
                }
            }
        }
    }

    let oracle_wanted = backends.contains(&Backend::Oracle);
    let n = topo.vertex_count();
    if oracle_wanted {
        if n + 2 <= oracle::ORACLE_VERTEX_LIMIT {
            match oracle::oracle_maxflow(topo, original) {
                Ok(flow) => values.push(("oracle".into(), flow)),
                Err(e) => report.push("oracle/run", false, e.to_string()),
            }
        } else {
            report.push(
                "oracle/skipped",
                true,
                format!("{} vertices exceed the reference-solver limit", n),
            );
        }
    }

    if let Some((first_name, first)) = values.first().cloned() {
        let agree = values.iter().all(|(_, v)| *v == first);
        report.push(
            "value-agreement",
            agree,
            values
                .iter()
                .map(|(n, v)| format!("{}={}", n, v))
                .collect::<Vec<_>>()
                .join(" "),
        );
        let _ = (first_name, first);
    }
    report
}

/// Verification for weight volumes: build the instance, run backends,
/// then check the extracted surface. Enumeration joins for tiny volumes.
pub fn verify_weight_instance(
    sw: &SurfaceWeights,
    scale: i64,
    backends: &[Backend],
    opts: &SolveOptions,
) -> VerifyReport {
    let mut report = VerifyReport::default();
    let (inst, info) = match surface::build_st_graph(sw, scale) {
        Ok(x) => x,
        Err(e) => {
            report.push("reduction/build", false, e.to_string());
            return report;
        }
    };
    report.push("reduction/build", true, "instance built");
    let mut sub = verify_flow_instance(&inst.topo, &inst.caps, backends, opts);
    report.checks.append(&mut sub.checks);

    // surface extraction from one solved copy
    let mut caps = inst.caps.clone();
    let solver = backends
        .iter()
        .copied()
        .find(|b| *b != Backend::Oracle)
        .unwrap_or(Backend::PrSerial);
    match run_backend(solver, &inst.topo, &mut caps, opts) {
        Err(e) => report.push("surface/solve", false, e.to_string()),
        Ok(flow) => match cut::min_cut(&inst.topo, &inst.caps, &caps) {
            Err(e) => report.push("surface/cut", false, e.to_string()),
            Ok(c) => match surface::extract_surface(&inst.topo, &c.source_side) {
                Err(e) => report.push("surface/extract", false, e.to_string()),
                Ok(net) => {
                    report.push(
                        "surface/feasible",
                        net.is_feasible(&sw.dims),
                        "one vertex per column, adjacent heights within the interval",
                    );
                    let from_cut = info.objective_from_cut(flow);
                    let direct = net.objective(sw);
                    report.push(
                        "surface/objective-consistent",
                        from_cut == direct,
                        format!("cut-derived {} direct {}", from_cut, direct),
                    );
                    let cols = sw.column_count();
                    let space = (sw.dims.rows as u64).saturating_pow(cols as u32);
                    if space <= 1_000_000 {
                        let (best, _) = surface::enumerate_optimal(sw);
                        report.push(
                            "surface/optimal",
                            direct == best,
                            format!("extracted {} enumerated {}", direct, best),
                        );
                    }
                }
            },
        },
    }
    report
}

fn mem_estimate(topo: &GraphTopology) -> u64 {
    let n = topo.vertex_count() as u64;
    let edge = n * topo.edges_per_node() as u64 * 4;
    let cache = topo.offset_cache_entries() as u64 * 16;
    // excess, label, wave, cursors, returnable, queue flags
    let per_vertex = 8 + 4 + 4 + 4 + 4 + 4 + 1;
    edge + cache + n * per_vertex
}

/// Solves once and produces the report row. The cut is always derived and
/// compared against the flow before the report is emitted.
pub fn solve_with_report(
    instance_name: &str,
    topo: &GraphTopology,
    original: &CapacityStore,
    backend: Backend,
    opts: &SolveOptions,
    rep: u32,
) -> Result<(RunReport, CapacityStore)> {
    let started = Instant::now();
    let (flow, final_caps, cut_value) = if backend == Backend::Oracle {
        let mut g = oracle::from_structured(topo, original)?;
        let flow = g.max_flow();
        let (_, cut_value) = g.min_cut()?;
        (flow, original.clone(), cut_value)
    } else {
        let mut caps = original.clone();
        let flow = run_backend(backend, topo, &mut caps, opts)?;
        let cut = cut::min_cut(topo, original, &caps)?;
        (flow, caps, cut.cut_capacity)
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    if cut_value != flow {
        return Err(Error::FlowNotMaximal);
    }
    let d = topo.dims();
    let n = topo.vertex_count() as u64;
    let report = RunReport {
        instance: instance_name.to_string(),
        rows: d.rows,
        columns: d.columns,
        slices: d.slices,
        edge_interval: d.edge_interval,
        backend: backend.name().to_string(),
        segments: opts.effective_segments() as u32,
        tiles: format!("{}x{}", opts.tiles.0, opts.tiles.1),
        gr_factor: opts
            .gr_factor
            .unwrap_or(if (n as usize) < 20_000_000 { 2.0 } else { 1.0 }),
        rep,
        wall_ms,
        flow,
        cut: cut_value,
        edge_storage_bytes: original.edge_storage_bytes() as u64,
        offset_cache_entries: topo.offset_cache_entries() as u64,
        mem_estimate_bytes: mem_estimate(topo),
        baseline_edge_bytes: n * topo.edges_per_node() as u64 * BASELINE_HALF_EDGE_BYTES,
        baseline_node_bytes: n * BASELINE_NODE_BYTES,
    };
    Ok((report, final_caps))
}

/// Time-vs-segments sweep for one backend, one row per (segment count,
/// repetition), with the memory comparison columns filled in.
pub fn bench(
    instance_name: &str,
    topo: &GraphTopology,
    original: &CapacityStore,
    backend: Backend,
    segment_counts: &[usize],
    reps: u32,
    opts: &SolveOptions,
) -> Result<Vec<RunReport>> {
    let mut out = Vec::new();
    for &segs in segment_counts {
        let mut o = opts.clone();
        o.segments = segs;
        o.tiles = (segs.min(u32::MAX as usize) as u32, 1);
        for rep in 0..reps.max(1) {
            let (report, _) = solve_with_report(instance_name, topo, original, backend, &o, rep)?;
            out.push(report);
        }
    }
    Ok(out)
}

/// Backend set for a loaded input kind, used by the CLI's verify command.
pub fn default_backends_for(input: &io::LoadedInput) -> Vec<Backend> {
    match input {
        io::LoadedInput::Explicit(_) => vec![Backend::Oracle],
        _ => vec![
            Backend::PrSerial,
            Backend::PrParallel,
            Backend::BkSerial,
            Backend::BkParallel,
            Backend::Oracle,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::graph::VolumeDims;

    #[test]
    fn verify_passes_on_sound_instance() {
        let dims = VolumeDims::new(3, 4, 1, 1).unwrap();
        let inst = gen::generate_pogf(dims, 21, 9).unwrap();
        let opts = SolveOptions {
            segments: 2,
            tiles: (2, 1),
            ..SolveOptions::default()
        };
        let report = verify_flow_instance(
            &inst.topo,
            &inst.caps,
            &[
                Backend::PrSerial,
                Backend::PrParallel,
                Backend::BkSerial,
                Backend::BkParallel,
                Backend::Oracle,
            ],
            &opts,
        );
        assert!(report.passed(), "{:?}", report.failures());
    }

    #[test]
    fn verify_detects_injected_corruption() {
        // a pr-serial run on corrupted capacities: corrupt the ORIGINAL
        // after solving by checking final against a tweaked original
        let dims = VolumeDims::new(2, 2, 1, 1).unwrap();
        let inst = gen::generate_pogf(dims, 4, 9).unwrap();
        let mut caps = inst.caps.clone();
        let flow = run_backend(
            Backend::PrSerial,
            &inst.topo,
            &mut caps,
            &SolveOptions::default(),
        )
        .unwrap();
        let mut corrupted = inst.caps.clone();
        let idx = (0..corrupted.len()).find(|&i| corrupted.get(i) > 0).unwrap();
        corrupted.set(idx, corrupted.get(idx) + 1);
        // either the pair sums or the cut/flow equality must fail
        let flow_ok = cut::check_flow(&inst.topo, &corrupted, &caps, flow).is_ok();
        let cut_ok = cut::min_cut(&inst.topo, &corrupted, &caps)
            .map(|c| c.cut_capacity == flow)
            .unwrap_or(false);
        assert!(!(flow_ok && cut_ok));
    }

    #[test]
    fn weight_verification_small() {
        let dims = VolumeDims::new(4, 3, 1, 1).unwrap();
        let sw = gen::generate_pogw(dims, 8, 0, 9).unwrap();
        let report = verify_weight_instance(
            &sw,
            1,
            &[Backend::PrSerial, Backend::BkSerial, Backend::Oracle],
            &SolveOptions::default(),
        );
        assert!(report.passed(), "{:?}", report.failures());
    }

    #[test]
    fn report_gate_rejects_nothing_on_good_runs() {
        let dims = VolumeDims::new(3, 3, 1, 1).unwrap();
        let inst = gen::generate_pogf(dims, 77, 9).unwrap();
        for backend in Backend::ALL {
            let (report, _) = solve_with_report(
                "t",
                &inst.topo,
                &inst.caps,
                backend,
                &SolveOptions {
                    segments: 2,
                    tiles: (2, 1),
                    ..SolveOptions::default()
                },
                0,
            )
            .unwrap();
            assert_eq!(report.flow, report.cut);
        }
    }
}
