//! Tiled augmenting-path backend: the volume is split over the column and
//! slice axes into uniform tiles, each solved to exhaustion in isolation,
//! then tiles are pairwise merged — columns axis first, then slices,
//! alternating — doubling tile size until one tile covers the volume.
//! Trees persist across rounds; a merge only reactivates vertices on the
//! old seam whose tree tags differ across it. Tiles within a round touch
//! disjoint vertex ranges, so rounds run without locking.

use crate::bk::{BkState, TileBounds, TileRun};
use crate::error::{Error, Result};
use crate::graph::{CapacityStore, GraphTopology, LateralGroup};
use std::sync::atomic::AtomicU32;

#[derive(Debug, Clone, Copy)]
pub struct TileConfig {
    pub tiles_c: u32,
    pub tiles_s: u32,
    /// Maximum tiles processed concurrently.
    pub max_threads: usize,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            tiles_c: 2,
            tiles_s: 1,
            max_threads: usize::MAX,
        }
    }
}

/// Contiguous ranges of near-equal size, larger ones first.
fn split_ranges(total: u32, parts: u32) -> Vec<(u32, u32)> {
    let base = total / parts;
    let rem = total % parts;
    let mut out = Vec::with_capacity(parts as usize);
    let mut at = 0;
    for i in 0..parts {
        let len = base + (i < rem) as u32;
        out.push((at, at + len));
        at += len;
    }
    out
}

/// The axis merged in a given round, alternating columns-first among the
/// axes that still have more than one tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Columns,
    Slices,
}

struct MergeTask {
    bounds: TileBounds,
    /// Seam between the two merged halves: the first column (or slice) of
    /// the right/back half, if this task actually merged two tiles.
    seam: Option<(Axis, u32)>,
}

/// Runs the tiled solve and returns the maxflow value.
pub fn solve(topo: &GraphTopology, caps: &mut CapacityStore, cfg: &TileConfig) -> Result<u64> {
    let dims = *topo.dims();
    if cfg.tiles_c == 0 || cfg.tiles_s == 0 {
        return Err(Error::EmptySegmentation);
    }
    if cfg.tiles_c > dims.columns || cfg.tiles_s > dims.slices {
        return Err(Error::BadDims {
            reason: format!(
                "{}x{} tiles do not fit a {}x{} column/slice grid",
                cfg.tiles_c, cfg.tiles_s, dims.columns, dims.slices
            ),
        });
    }
    let max_threads = cfg.max_threads.max(1);

    let raw = std::mem::take(caps).into_raw();
    let atomic: Vec<AtomicU32> = raw.into_iter().map(AtomicU32::new).collect();
    let st = BkState::new(topo.vertex_count());

    // round 0: every tile from terminal seeds
    let col_ranges = split_ranges(dims.columns, cfg.tiles_c);
    let slice_ranges = split_ranges(dims.slices, cfg.tiles_s);
    let mut tiles: Vec<Vec<TileBounds>> = col_ranges
        .iter()
        .map(|&(c0, c1)| {
            slice_ranges
                .iter()
                .map(|&(s0, s1)| TileBounds { c0, c1, s0, s1 })
                .collect()
        })
        .collect();

    let round0: Vec<MergeTask> = tiles
        .iter()
        .flatten()
        .map(|&bounds| MergeTask { bounds, seam: None })
        .collect();
    let mut flow = run_round(topo, &atomic, &st, round0, max_threads, true);

    // pairwise merges until one tile remains
    let mut axis = if tiles.len() > 1 {
        Axis::Columns
    } else {
        Axis::Slices
    };
    while tiles.len() > 1 || tiles[0].len() > 1 {
        let mut tasks = Vec::new();
        match axis {
            Axis::Columns if tiles.len() > 1 => {
                let mut merged: Vec<Vec<TileBounds>> = Vec::new();
                let mut i = 0;
                while i < tiles.len() {
                    if i + 1 < tiles.len() {
                        let row: Vec<TileBounds> = tiles[i]
                            .iter()
                            .zip(tiles[i + 1].iter())
                            .map(|(a, b)| {
                                let u = a.union(b);
                                tasks.push(MergeTask {
                                    bounds: u,
                                    seam: Some((Axis::Columns, b.c0)),
                                });
                                u
                            })
                            .collect();
                        merged.push(row);
                        i += 2;
                    } else {
                        merged.push(tiles[i].clone());
                        i += 1;
                    }
                }
                tiles = merged;
            }
            _ => {
                // merge along slices within each column band
                for row in tiles.iter_mut() {
                    if row.len() <= 1 {
                        continue;
                    }
                    let mut merged_row = Vec::new();
                    let mut i = 0;
                    while i < row.len() {
                        if i + 1 < row.len() {
                            let u = row[i].union(&row[i + 1]);
                            tasks.push(MergeTask {
                                bounds: u,
                                seam: Some((Axis::Slices, row[i + 1].s0)),
                            });
                            merged_row.push(u);
                            i += 2;
                        } else {
                            merged_row.push(row[i]);
                            i += 1;
                        }
                    }
                    *row = merged_row;
                }
            }
        }
        flow += run_round(topo, &atomic, &st, tasks, max_threads, false);
        axis = match axis {
            Axis::Columns if tiles[0].len() > 1 => Axis::Slices,
            Axis::Slices if tiles.len() > 1 => Axis::Columns,
            a => a,
        };
    }

    *caps = CapacityStore::from_raw(atomic.into_iter().map(|a| a.into_inner()).collect());
    Ok(flow)
}

fn run_round(
    topo: &GraphTopology,
    caps: &[AtomicU32],
    st: &BkState,
    tasks: Vec<MergeTask>,
    max_threads: usize,
    seed: bool,
) -> u64 {
    if tasks.is_empty() {
        return 0;
    }
    if max_threads == 1 || tasks.len() == 1 {
        return tasks
            .into_iter()
            .map(|t| run_task(topo, caps, st, t, seed))
            .sum();
    }
    let mut total = 0;
    for chunk in tasks.chunks(max_threads) {
        total += std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|t| scope.spawn(move || run_task(topo, caps, st, MergeTask { bounds: t.bounds, seam: t.seam }, seed)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum::<u64>()
        });
    }
    total
}

fn run_task(
    topo: &GraphTopology,
    caps: &[AtomicU32],
    st: &BkState,
    task: MergeTask,
    seed: bool,
) -> u64 {
    let mut run = TileRun::new(topo, caps, st, task.bounds);
    if seed {
        run.seed_terminals();
    }
    if let Some((axis, boundary)) = task.seam {
        reactivate_seam(topo, st, &mut run, &task.bounds, axis, boundary);
    }
    run.run()
}

/// Wakes the vertices adjacent across an old tile boundary whose tree tags
/// differ: any new augmenting path in the merged tile must cross the seam
/// at such a pair. A seam whose sides agree everywhere costs only the scan.
fn reactivate_seam(
    topo: &GraphTopology,
    st: &BkState,
    run: &mut TileRun<'_>,
    bounds: &TileBounds,
    axis: Axis,
    boundary: u32,
) {
    let dims = *topo.dims();
    let k = dims.edge_interval as i32;
    let group = match axis {
        Axis::Columns => LateralGroup::Right,
        Axis::Slices => LateralGroup::Back,
    };
    let near_side: Vec<(u32, u32)> = match axis {
        Axis::Columns => (bounds.s0..bounds.s1).map(|s| (boundary - 1, s)).collect(),
        Axis::Slices => (bounds.c0..bounds.c1).map(|c| (c, boundary - 1)).collect(),
    };
    for (c, s) in near_side {
        for r in 0..dims.rows {
            let u = topo.index_of(c, s, r);
            for dv in -k..=k {
                if let Some((w, _)) = topo.mate_idx(u, topo.lateral_slot(group, dv)) {
                    let tu = st.terminal_tag(u);
                    let tw = st.terminal_tag(w);
                    if tu != tw {
                        if tu != 0 {
                            run.activate(u);
                        }
                        if tw != 0 {
                            run.activate(w);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bk;
    use crate::gen;
    use crate::graph::{GraphTopology, LateralGroup, VolumeDims};
    use crate::oracle;

    fn topo(r: u32, c: u32, s: u32, k: u32) -> GraphTopology {
        GraphTopology::new(VolumeDims::new(r, c, s, k).unwrap()).unwrap()
    }

    #[test]
    fn split_ranges_larger_first() {
        assert_eq!(split_ranges(8, 4), vec![(0, 2), (2, 4), (4, 6), (6, 8)]);
        assert_eq!(split_ranges(7, 2), vec![(0, 4), (4, 7)]);
    }

    #[test]
    fn one_tile_equals_serial_bk() {
        let t = topo(3, 3, 2, 1);
        for seed in 0..50u64 {
            let inst = gen::generate_pogf(*t.dims(), seed, 9).unwrap();
            let mut a = inst.caps.clone();
            let serial_flow = bk::solve(&t, &mut a);
            let mut b = inst.caps.clone();
            let tiled = solve(
                &t,
                &mut b,
                &TileConfig {
                    tiles_c: 1,
                    tiles_s: 1,
                    max_threads: 1,
                },
            )
            .unwrap();
            assert_eq!(tiled, serial_flow, "seed {}", seed);
        }
    }

    #[test]
    fn cross_boundary_path_found_after_merge() {
        // sources live in column 0, sinks in column 1: per-tile flows are
        // zero with a 2x1 tiling and the whole flow appears at the merge
        let t = topo(2, 2, 1, 0);
        let mut caps = CapacityStore::new_zeroed(&t);
        let a = t.index_of(0, 0, 0);
        let b = t.index_of(1, 0, 0);
        caps.set_cap(&t, a, t.source_slot(), 3);
        caps.set_cap(&t, a, t.lateral_slot(LateralGroup::Right, 0), 2);
        caps.set_cap(&t, b, t.sink_slot(), 5);
        let expected = oracle::oracle_maxflow(&t, &caps).unwrap();
        assert_eq!(expected, 2);
        let flow = solve(
            &t,
            &mut caps,
            &TileConfig {
                tiles_c: 2,
                tiles_s: 1,
                max_threads: 2,
            },
        )
        .unwrap();
        assert_eq!(flow, expected);
    }

    #[test]
    fn tilings_match_oracle() {
        for (r, c, s, k) in [(2, 4, 2, 1), (3, 4, 4, 1), (4, 3, 3, 2), (2, 5, 1, 1)] {
            let t = topo(r, c, s, k);
            for seed in 0..100u64 {
                let inst = gen::generate_pogf(*t.dims(), seed, 9).unwrap();
                let expected = oracle::oracle_maxflow(&t, &inst.caps).unwrap();
                for (tc, ts) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
                    if tc > t.dims().columns || ts > t.dims().slices {
                        continue;
                    }
                    let mut caps = inst.caps.clone();
                    let flow = solve(
                        &t,
                        &mut caps,
                        &TileConfig {
                            tiles_c: tc,
                            tiles_s: ts,
                            max_threads: 4,
                        },
                    )
                    .unwrap();
                    assert_eq!(flow, expected, "dims {} seed {} tiles {}x{}", t.dims(), seed, tc, ts);
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_tiling() {
        let t = topo(2, 2, 1, 0);
        let mut caps = CapacityStore::new_zeroed(&t);
        let err = solve(
            &t,
            &mut caps,
            &TileConfig {
                tiles_c: 3,
                tiles_s: 1,
                max_threads: 1,
            },
        );
        assert!(err.is_err());
    }
}
