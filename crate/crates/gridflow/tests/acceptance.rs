//! Acceptance suite. Each test prints one PASS/FAIL line; tolerances are
//! pinned in code. Values are integers throughout, so every equality here
//! is exact.

use gridflow::graph::{CapacityStore, GraphTopology, VolumeDims};
use gridflow::parallel::{self, Partition};
use gridflow::report;
use gridflow::serial::{self, SerialConfig};
use gridflow::verify::{Backend, SolveOptions};
use gridflow::{cut, gen, oracle, surface, verify};
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Timing-sensitive tests take this so they never overlap.
static TIMING: Mutex<()> = Mutex::new(());

fn pass(n: u32, name: &str, detail: String) {
    println!("ACCEPT {:2} {}: PASS ({})", n, name, detail);
}

fn sweep_dims(seed: u64) -> VolumeDims {
    let mut r = gen::SplitMix64::new(seed.wrapping_mul(0x9e37) ^ 0xabcdef);
    let rows = 1 + (r.next_below(6)) as u32;
    let cols = 1 + (r.next_below(4)) as u32;
    let slices = 1 + (r.next_below(4)) as u32;
    let k = r.next_below(3) as u32;
    VolumeDims::new(rows, cols, slices, k).unwrap()
}

/// Criteria 1-3 share one sweep: exact oracle equivalence for every
/// backend, cut == flow on every solved instance, and recovered-flow
/// validity (capacity bounds, antisymmetric pair sums, conservation).
#[test]
fn acceptance_1_2_3_oracle_equivalence_sweep() {
    let started = Instant::now();
    let mut runs = 0u64;
    let mut instances = 0u64;

    let mut check_backend =
        |topo: &GraphTopology, caps: &CapacityStore, backend: Backend, opts: &SolveOptions, expected: u64, tag: &str| {
            let mut work = caps.clone();
            let flow = verify::run_backend(backend, topo, &mut work, opts).unwrap();
            assert_eq!(flow, expected, "{} on {}", backend.name(), tag);
            // criterion 2: reachability cut capacity equals flow, exactly
            let cutr = cut::min_cut(topo, caps, &work).unwrap();
            assert_eq!(cutr.cut_capacity, flow, "cut gate: {} on {}", backend.name(), tag);
            // criterion 3: capacity bounds and conservation, exactly
            cut::check_flow(topo, caps, &work, flow).unwrap_or_else(|m| {
                panic!("flow validity: {} on {}: {}", backend.name(), tag, m)
            });
            runs += 1;
        };

    for seed in 0..1000u64 {
        let dims = sweep_dims(seed);
        let inst = gen::generate_pogf(dims, seed, 20).unwrap();
        let expected = oracle::oracle_maxflow(&inst.topo, &inst.caps).unwrap();
        let tag = format!("seed {} dims {}", seed, dims);
        instances += 1;

        let base = SolveOptions::default();
        check_backend(&inst.topo, &inst.caps, Backend::PrSerial, &base, expected, &tag);
        check_backend(&inst.topo, &inst.caps, Backend::BkSerial, &base, expected, &tag);
        for segs in [1usize, 2, 4, 8] {
            if segs > dims.columns as usize {
                continue;
            }
            let opts = SolveOptions {
                segments: segs,
                ..SolveOptions::default()
            };
            check_backend(&inst.topo, &inst.caps, Backend::PrParallel, &opts, expected, &tag);
        }
        for tiles in [(1u32, 1u32), (2, 1), (2, 2)] {
            if tiles.0 > dims.columns || tiles.1 > dims.slices {
                continue;
            }
            let opts = SolveOptions {
                tiles,
                ..SolveOptions::default()
            };
            check_backend(&inst.topo, &inst.caps, Backend::BkParallel, &opts, expected, &tag);
        }
    }

    // wider volumes so the full 8-way segmentation and 4-tile grids run too
    for seed in 0..100u64 {
        let mut r = gen::SplitMix64::new(seed ^ 0x51de);
        let dims = VolumeDims::new(
            1 + r.next_below(3) as u32,
            8 + r.next_below(3) as u32,
            1 + r.next_below(2) as u32,
            r.next_below(3) as u32,
        )
        .unwrap();
        let inst = gen::generate_pogf(dims, seed.wrapping_add(5000), 20).unwrap();
        let expected = oracle::oracle_maxflow(&inst.topo, &inst.caps).unwrap();
        let tag = format!("wide seed {} dims {}", seed, dims);
        instances += 1;
        for segs in [2usize, 8] {
            let opts = SolveOptions {
                segments: segs,
                ..SolveOptions::default()
            };
            check_backend(&inst.topo, &inst.caps, Backend::PrParallel, &opts, expected, &tag);
        }
        let opts = SolveOptions {
            tiles: (4, 1),
            ..SolveOptions::default()
        };
        check_backend(&inst.topo, &inst.caps, Backend::BkParallel, &opts, expected, &tag);
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "sweep exceeded its 2-minute budget: {:?}",
        elapsed
    );
    pass(
        1,
        "oracle equivalence sweep",
        format!("{} instances, {} backend runs, {:?}", instances, runs, elapsed),
    );
    pass(2, "cut equals flow on every run", format!("{} runs", runs));
    pass(3, "flow validity on every run", format!("{} runs", runs));
}

/// Criterion 4: surface extraction matches exhaustive enumeration exactly
/// on at least 200 seeded weight volumes.
#[test]
fn acceptance_4_net_surface_equivalence() {
    let shapes = [(5u32, 4u32, 1u32), (5, 2, 2), (4, 3, 1), (5, 1, 1), (3, 2, 2)];
    let mut count = 0u64;
    for seed in 0..220u64 {
        let (rows, cols, slices) = shapes[(seed % shapes.len() as u64) as usize];
        let k = (seed % 3).min(rows as u64 - 1) as u32;
        let dims = VolumeDims::new(rows, cols, slices, k).unwrap();
        let sw = gen::generate_pogw(dims, seed, -9, 9).unwrap();

        let (inst, info) = surface::build_st_graph(&sw, 1).unwrap();
        let mut caps = inst.caps.clone();
        let flow = serial::solve(&inst.topo, &mut caps, &SerialConfig::default());
        let cutr = cut::min_cut(&inst.topo, &inst.caps, &caps).unwrap();
        assert_eq!(cutr.cut_capacity, flow);
        let net = surface::extract_surface(&inst.topo, &cutr.source_side).unwrap();

        // exactly one height per column, within the interval bound
        assert_eq!(net.heights.len(), sw.column_count(), "seed {}", seed);
        assert!(net.is_feasible(&dims), "seed {}", seed);

        let (best, _) = surface::enumerate_optimal(&sw);
        assert_eq!(net.objective(&sw), best, "seed {} dims {}", seed, dims);
        assert_eq!(info.objective_from_cut(flow), best, "seed {} dims {}", seed, dims);
        count += 1;
    }
    pass(4, "net-surface equivalence", format!("{} instances exact", count));
}

/// Criterion 5: on quiescent states, wave-visited sink-reachable vertices
/// get exactly the residual BFS distance to the sink, and the whole wave
/// output matches the serial global relabel on the frozen state, for 1, 2
/// and 4 segments.
#[test]
fn acceptance_5_level_synchronized_relabel() {
    let mut states = 0u64;
    for seed in 0..60u64 {
        let mut r = gen::SplitMix64::new(seed ^ 0xfeed);
        let dims = VolumeDims::new(
            2 + r.next_below(3) as u32,
            4 + r.next_below(5) as u32,
            1 + r.next_below(2) as u32,
            r.next_below(2) as u32,
        )
        .unwrap();
        let inst = gen::generate_pogf(dims, seed, 9).unwrap();
        let n = inst.topo.vertex_count();

        // two quiescent states per instance: fresh capacities (no borrowed
        // flow) and the residual graph left by a completed solve
        let mut solved = inst.caps.clone();
        let (_, end_state) = serial::solve_with_state(&inst.topo, &mut solved, &SerialConfig::default());
        let fresh_returnable = vec![0u32; n];
        for (caps, returnable) in [(&inst.caps, &fresh_returnable), (&solved, &end_state.returnable)]
        {
            let dist = serial::bfs_distance_to_sink(&inst.topo, caps);
            let mut reference = serial::FlowState::new(n);
            reference.returnable = returnable.clone();
            serial::global_relabel(&inst.topo, caps, &mut reference);
            for segs in [1usize, 2, 4] {
                if segs > dims.columns as usize {
                    continue;
                }
                let part = Partition::new(&dims, segs).unwrap();
                let mut labels = vec![0u32; n];
                let mut waves = vec![0u32; n];
                let visited = parallel::run_quiescent_wave(
                    &inst.topo, caps, &part, &mut labels, &mut waves, returnable,
                );
                for v in 0..n {
                    if dist[v] != u32::MAX {
                        // the stated bar: exact distance to the sink
                        assert!(visited[v], "seed {} segs {} v {}", seed, segs, v);
                        assert_eq!(labels[v], dist[v], "seed {} segs {} v {}", seed, segs, v);
                    }
                    if visited[v] {
                        // and the full wave agrees with the serial global
                        // relabel on the same frozen state
                        assert_eq!(
                            labels[v], reference.label[v],
                            "seed {} segs {} v {}",
                            seed, segs, v
                        );
                    }
                }
                states += 1;
            }
        }
    }
    assert!(states >= 100, "need at least 100 quiescent states, got {}", states);
    pass(
        5,
        "level-synchronized relabel exactness",
        format!("{} quiescent states exact", states),
    );
}

/// Criterion 6: with scheduling jitter injected, 500 instances at 8
/// segments finish inside 10x the single-thread time (with a 10 ms
/// scheduling floor per instance) and leave no unconserved excess behind.
#[test]
fn acceptance_6_termination_soundness_under_stress() {
    let _guard = TIMING.lock().unwrap();
    let mut worst_ratio = 0.0f64;
    for seed in 0..500u64 {
        let mut r = gen::SplitMix64::new(seed ^ 0x7357);
        let dims = VolumeDims::new(
            2 + r.next_below(2) as u32,
            8 + r.next_below(3) as u32,
            1 + r.next_below(2) as u32,
            r.next_below(3) as u32,
        )
        .unwrap();
        let inst = gen::generate_pogf(dims, seed.wrapping_add(9000), 9).unwrap();

        let t0 = Instant::now();
        let mut serial_caps = inst.caps.clone();
        let expected = serial::solve(&inst.topo, &mut serial_caps, &SerialConfig::default());
        let serial_time = t0.elapsed();

        let budget = (serial_time.max(Duration::from_millis(10))) * 10;
        let t1 = Instant::now();
        let mut caps = inst.caps.clone();
        let cfg = parallel::ParallelConfig {
            segments: 8,
            gr_factor: Some(1.0),
            tick: 1,
            jitter: 4,
        };
        let out = parallel::solve(&inst.topo, &mut caps, &cfg).unwrap();
        let parallel_time = t1.elapsed();

        assert_eq!(out.flow, expected, "seed {}", seed);
        assert!(
            parallel_time <= budget,
            "seed {}: {:?} exceeded 10x budget {:?}",
            seed,
            parallel_time,
            budget
        );
        // the post-exit scan: all excess drained to the terminals, so the
        // recovered flow conserves at every vertex
        cut::check_flow(&inst.topo, &inst.caps, &caps, out.flow).unwrap();
        worst_ratio = worst_ratio
            .max(parallel_time.as_secs_f64() / serial_time.max(Duration::from_millis(10)).as_secs_f64());
    }
    pass(
        6,
        "termination soundness under stress",
        format!("500 jittered instances, worst slowdown {:.2}x", worst_ratio),
    );
}

/// Criterion 7: the implicit layout's exact footprint at edge interval 10:
/// 88 half-edges of 4 bytes per vertex, and a (rows x slices x 88) offset
/// cache — smaller than per-edge mate storage by exactly the column count.
#[test]
fn acceptance_7_memory_layout() {
    let dims = VolumeDims::new(30, 6, 5, 10).unwrap();
    assert_eq!(dims.edges_per_node(), 88);
    let inst = gen::generate_pogf(dims, 3, 20).unwrap();
    let n = inst.topo.vertex_count();
    assert_eq!(inst.caps.edge_storage_bytes(), n * 88 * 4);
    assert_eq!(
        inst.topo.offset_cache_entries(),
        30 * 5 * 88,
        "cache is keyed by row, slice and slot only"
    );
    let per_edge_mate_entries = n * 88;
    assert_eq!(
        per_edge_mate_entries / inst.topo.offset_cache_entries(),
        dims.columns as usize
    );
    pass(
        7,
        "memory layout",
        format!(
            "edge storage {} B = {}*88*4, cache {} entries = n*88/C",
            inst.caps.edge_storage_bytes(),
            n,
            inst.topo.offset_cache_entries()
        ),
    );
}

/// Criterion 8 (soft, report-only): scaling smoke test on the 16x256x256
/// volume. The ratio is recorded in the bench CSV; the 0.8x bar applies on
/// machines with at least 4 cores and is reported rather than asserted.
#[test]
fn acceptance_8_scaling_smoke() {
    let _guard = TIMING.lock().unwrap();
    let dims = VolumeDims::new(16, 256, 256, 2).unwrap();
    let inst = gen::generate_pogf(dims, 7, 20).unwrap();
    let opts = SolveOptions::default();
    let reports = verify::bench("scaling16x256x256", &inst.topo, &inst.caps, Backend::PrParallel, &[1, 4], 1, &opts)
        .unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].flow, reports[1].flow);
    let t1 = reports[0].wall_ms;
    let t4 = reports[1].wall_ms;
    let ratio = t4 / t1;
    let csv = report::to_csv(&reports);
    let out = format!("{}/bench_scaling.csv", env!("CARGO_TARGET_TMPDIR"));
    std::fs::write(&out, csv).unwrap();
    let cores = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1);
    let verdict = if cores < 4 {
        format!("recorded only ({} cores < 4)", cores)
    } else if ratio <= 0.8 {
        "meets the 0.8x bar".to_string()
    } else {
        format!("above the 0.8x bar on {} cores (soft criterion, recorded)", cores)
    };
    pass(
        8,
        "scaling smoke test (soft)",
        format!("1 seg {:.0} ms, 4 seg {:.0} ms, ratio {:.2}; {}; csv {}", t1, t4, ratio, verdict, out),
    );
}

/// Criterion 9: generator determinism (byte-identical repeats) and value
/// invariance across segment counts on a ~10^5-vertex instance.
#[test]
fn acceptance_9_determinism() {
    let _guard = TIMING.lock().unwrap();
    let dims = VolumeDims::new(2, 2, 1, 1).unwrap();
    let mut bufs = Vec::new();
    for _ in 0..2 {
        let inst = gen::generate_pogf(dims, 42, 20).unwrap();
        let mut buf = Vec::new();
        gridflow::io::write_pogf(&mut buf, &inst.topo, &inst.caps).unwrap();
        bufs.push(buf);
    }
    assert_eq!(bufs[0], bufs[1], "same seed must give identical bytes");

    let dims = VolumeDims::new(10, 100, 100, 1).unwrap();
    assert_eq!(dims.vertex_count(), 100_000);
    let inst = gen::generate_pogf(dims, 11, 20).unwrap();
    let mut serial_caps = inst.caps.clone();
    let expected = serial::solve(&inst.topo, &mut serial_caps, &SerialConfig::default());
    let mut values = vec![("pr-serial".to_string(), expected)];
    for segs in [1usize, 2, 4, 8] {
        let mut caps = inst.caps.clone();
        let out = parallel::solve(
            &inst.topo,
            &mut caps,
            &parallel::ParallelConfig::with_segments(segs),
        )
        .unwrap();
        values.push((format!("pr-parallel/{}", segs), out.flow));
        assert_eq!(out.flow, expected, "segments {}", segs);
    }
    pass(
        9,
        "determinism",
        format!(
            "byte-identical generation; 100k-vertex value {} invariant over segments 1/2/4/8",
            expected
        ),
    );
}
