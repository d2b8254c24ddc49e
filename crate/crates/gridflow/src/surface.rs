//! Net-surface front end: build an s-t instance from per-vertex weights
//! plus a convex inter-column cost profile, and read an optimal surface
//! back out of a minimum cut.
//!
//! The construction is the usual one for convex priors. Per column the
//! weights are first-differenced into terminal arcs with a large base
//! source arc keeping row 0 on the source side; downward intra-column arcs
//! are saturating-max so the source side of any finite cut is a
//! downward-closed run of rows. Between adjacent columns the cost profile
//! appears as second differences on the interval slots, with one
//! saturating-max blocker per direction enforcing |dh| <= K. Linear
//! remainders of the cost profile and the row-boundary clipping of the
//! interval arcs are folded back into the column weights, so the cut value
//! equals the surface objective plus a constant that the builder reports.

use crate::error::{Error, Result};
use crate::graph::{
    CapacityStore, GraphTopology, Instance, LateralGroup, VolumeDims, SLOT_DOWN,
};

pub const INF_CAP: u32 = u32::MAX;

/// Vertex weights plus one shared convex cost profile over the interval
/// offsets `[-K, K]`.
#[derive(Debug, Clone)]
pub struct SurfaceWeights {
    pub dims: VolumeDims,
    /// One weight per grid vertex, in vertex-index order.
    pub weights: Vec<i64>,
    /// `costs[dv + K]` is the cost of a net edge whose far end sits `dv`
    /// rows above the near end (ordered pairs: right/back neighbor minus
    /// this column).
    pub costs: Vec<i64>,
}

impl SurfaceWeights {
    pub fn new(dims: VolumeDims, weights: Vec<i64>, costs: Vec<i64>) -> Result<SurfaceWeights> {
        let k = dims.edge_interval as usize;
        if weights.len() != dims.vertex_count() {
            return Err(Error::BadDims {
                reason: format!(
                    "{} weights for {} vertices",
                    weights.len(),
                    dims.vertex_count()
                ),
            });
        }
        if costs.len() != 2 * k + 1 {
            return Err(Error::BadDims {
                reason: format!("cost profile must have {} entries", 2 * k + 1),
            });
        }
        // convex in dv: nonnegative second differences
        for i in 1..costs.len().saturating_sub(1) {
            if costs[i - 1] + costs[i + 1] < 2 * costs[i] {
                return Err(Error::NonConvexPrior {
                    offset: i as i32 - k as i32,
                });
            }
        }
        Ok(SurfaceWeights {
            dims,
            weights,
            costs,
        })
    }

    pub fn column_count(&self) -> usize {
        self.dims.columns as usize * self.dims.slices as usize
    }

    #[inline]
    pub fn weight(&self, c: u32, s: u32, r: u32) -> i64 {
        let d = &self.dims;
        self.weights[((c * d.slices + s) * d.rows + r) as usize]
    }

    #[inline]
    pub fn cost(&self, dv: i64) -> i64 {
        self.costs[(dv + self.dims.edge_interval as i64) as usize]
    }
}

/// A surface: one chosen row per (column, slice) position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetSurface {
    /// `heights[c * S + s]` is the chosen row of column (c, s).
    pub heights: Vec<u32>,
}

impl NetSurface {
    /// Checks the net invariants: within the row range and with adjacent
    /// heights differing by at most K.
    pub fn is_feasible(&self, dims: &VolumeDims) -> bool {
        let (c_n, s_n, k) = (dims.columns, dims.slices, dims.edge_interval as i64);
        if self.heights.len() != (c_n * s_n) as usize {
            return false;
        }
        let h = |c: u32, s: u32| self.heights[(c * s_n + s) as usize] as i64;
        for c in 0..c_n {
            for s in 0..s_n {
                if h(c, s) >= dims.rows as i64 {
                    return false;
                }
                if c + 1 < c_n && (h(c, s) - h(c + 1, s)).abs() > k {
                    return false;
                }
                if s + 1 < s_n && (h(c, s) - h(c, s + 1)).abs() > k {
                    return false;
                }
            }
        }
        true
    }

    /// Total weight plus inter-column cost of this surface.
    pub fn objective(&self, w: &SurfaceWeights) -> i128 {
        let dims = &w.dims;
        let h = |c: u32, s: u32| self.heights[(c * dims.slices + s) as usize];
        let mut total: i128 = 0;
        for c in 0..dims.columns {
            for s in 0..dims.slices {
                total += w.weight(c, s, h(c, s)) as i128;
                if c + 1 < dims.columns {
                    total += w.cost(h(c + 1, s) as i64 - h(c, s) as i64) as i128;
                }
                if s + 1 < dims.slices {
                    total += w.cost(h(c, s + 1) as i64 - h(c, s) as i64) as i128;
                }
            }
        }
        total
    }
}

/// Byproducts of the reduction needed to map a cut value back to a surface
/// objective: `objective * scale = cut - constant`.
#[derive(Debug, Clone, Copy)]
pub struct BuildInfo {
    pub constant: i128,
    pub scale: i64,
    pub base_row_constant: i64,
}

fn cap_u32(x: i128, what: &str) -> Result<u32> {
    if x < 0 || x >= INF_CAP as i128 {
        return Err(Error::CapacityOverflow {
            what: format!("{} = {}", what, x),
        });
    }
    Ok(x as u32)
}

/// Builds the structured maxflow instance for a weight volume. The minimum
/// cut of the result equals `scale * (optimal net objective) + constant`.
pub fn build_st_graph(sw: &SurfaceWeights, scale: i64) -> Result<(Instance, BuildInfo)> {
    if scale <= 0 {
        return Err(Error::BadDims {
            reason: "scale must be positive".into(),
        });
    }
    let dims = sw.dims;
    if dims.edge_interval >= dims.rows {
        return Err(Error::BadDims {
            reason: "the reduction requires edge interval < rows".into(),
        });
    }
    let topo = GraphTopology::new(dims)?;
    let k = dims.edge_interval as i64;
    let rows = dims.rows as i64;
    // With K = 0 the two feasibility blockers of a pair are mates of each
    // other, so each must leave room for the other in the 4-byte pair sum.
    let blocker = if k == 0 { u32::MAX / 2 } else { INF_CAP };

    let g = |dv: i64| -> i128 { sw.cost(dv) as i128 * scale as i128 };
    // second difference of the profile, the capacity of interval slot dv
    let d2g = |dv: i64| -> i128 { g(dv + 1) - 2 * g(dv) + g(dv - 1) };
    // cut mass of the interval arcs as a function of the height gap
    let big_g = |z: i128| -> i128 {
        let mut acc = 0i128;
        for u in (-k + 1)..=(k - 1) {
            let q = d2g(-u);
            if z > u as i128 {
                acc += q * (z - u as i128);
            }
        }
        acc
    };
    // linear remainder of the profile not captured by second differences
    let b_lin: i128 = if k >= 1 { g(k - 1) - g(k) } else { 0 };
    let pair_const: i128 = g(k) + b_lin * k as i128;

    // effective per-vertex weight after folding pair slopes and the
    // row-boundary clipping corrections into the columns
    let times_a = |c: u32, s: u32| -> i128 {
        (c + 1 < dims.columns) as i128 + (s + 1 < dims.slices) as i128
    };
    let times_b = |c: u32, s: u32| -> i128 { (c > 0) as i128 + (s > 0) as i128 };
    let eff = |c: u32, s: u32, r: u32| -> i128 {
        let base = sw.weight(c, s, r) as i128 * scale as i128;
        base
            + (times_a(c, s) - times_b(c, s)) * b_lin * r as i128
            + times_a(c, s) * big_g(r as i128 - rows as i128 + 1)
            + times_b(c, s) * big_g(-1 - r as i128)
    };

    let mut abs_sum: i128 = 0;
    for c in 0..dims.columns {
        for s in 0..dims.slices {
            for r in 0..dims.rows {
                abs_sum += eff(c, s, r).abs();
            }
        }
    }
    let m: i128 = 1 + abs_sum;
    cap_u32(2 * m, "base source arc")?;

    let mut caps = CapacityStore::new_zeroed(&topo);
    let src_slot = topo.source_slot();
    let sink_slot = topo.sink_slot();
    let mut kappa_total: i128 = 0;
    let mut pair_count: i128 = 0;

    for c in 0..dims.columns {
        for s in 0..dims.slices {
            let mut kappa = m;
            for r in 0..dims.rows {
                let v = topo.index_of(c, s, r);
                if r == 0 {
                    caps.set_cap(&topo, v, src_slot, cap_u32(2 * m, "base source arc")?);
                    caps.set_cap(&topo, v, sink_slot, cap_u32(eff(c, s, 0) + m, "row-0 sink arc")?);
                } else {
                    let d = eff(c, s, r) - eff(c, s, r - 1);
                    if d < 0 {
                        caps.set_cap(&topo, v, src_slot, cap_u32(-d, "source arc")?);
                        kappa += -d;
                    } else {
                        caps.set_cap(&topo, v, sink_slot, cap_u32(d, "sink arc")?);
                    }
                    caps.set_cap(&topo, v, SLOT_DOWN, INF_CAP);
                }
            }
            kappa_total += kappa;

            for group in [LateralGroup::Right, LateralGroup::Back] {
                let in_grid = match group {
                    LateralGroup::Right => c + 1 < dims.columns,
                    _ => s + 1 < dims.slices,
                };
                if !in_grid {
                    continue;
                }
                pair_count += 1;
                let (nc, ns) = match group {
                    LateralGroup::Right => (c + 1, s),
                    _ => (c, s + 1),
                };
                for r in 0..dims.rows {
                    let v = topo.index_of(c, s, r);
                    for dv in (-k + 1)..=(k - 1) {
                        let slot = topo.lateral_slot(group, dv as i32);
                        if topo.mate_idx(v, slot).is_some() {
                            caps.set_cap(&topo, v, slot, cap_u32(d2g(dv), "interval arc")?);
                        }
                    }
                    // feasibility blockers, one per direction of the pair
                    let slot = topo.lateral_slot(group, -(k as i32));
                    if topo.mate_idx(v, slot).is_some() {
                        caps.set_cap(&topo, v, slot, blocker);
                    }
                    let w = topo.index_of(nc, ns, r);
                    let back = topo.lateral_slot(group.opposite(), -(k as i32));
                    if topo.mate_idx(w, back).is_some() {
                        caps.set_cap(&topo, w, back, blocker);
                    }
                }
            }
        }
    }

    let total_source = caps.total_source_capacity(&topo);
    if total_source >= blocker as u64 {
        return Err(Error::CapacityOverflow {
            what: format!(
                "total source capacity {} reaches the saturating bound",
                total_source
            ),
        });
    }

    let info = BuildInfo {
        constant: kappa_total - pair_count * pair_const,
        scale,
        base_row_constant: i64::try_from(m).map_err(|_| Error::CapacityOverflow {
            what: "base row constant".into(),
        })?,
    };
    Ok((Instance { topo, caps }, info))
}

impl BuildInfo {
    /// Recovers the surface objective from a cut value. The division is
    /// exact for any cut of an instance this builder produced.
    pub fn objective_from_cut(&self, cut_value: u64) -> i128 {
        let num = cut_value as i128 - self.constant;
        debug_assert_eq!(num % self.scale as i128, 0);
        num / self.scale as i128
    }
}

/// Reads the surface out of a cut: per column, the highest row on the
/// source side.
pub fn extract_surface(topo: &GraphTopology, source_side: &[bool]) -> Result<NetSurface> {
    let dims = *topo.dims();
    let mut heights = Vec::with_capacity(dims.columns as usize * dims.slices as usize);
    for c in 0..dims.columns {
        for s in 0..dims.slices {
            let mut height = None;
            for r in (0..dims.rows).rev() {
                if source_side[topo.index_of(c, s, r) as usize] {
                    height = Some(r);
                    break;
                }
            }
            match height {
                Some(h) => {
                    // saturating downward arcs force a downward-closed run
                    debug_assert!(
                        (0..=h).all(|r| source_side[topo.index_of(c, s, r) as usize]),
                        "source side not downward closed in column ({}, {})",
                        c,
                        s
                    );
                    heights.push(h);
                }
                None => return Err(Error::EmptyColumn { col: c, slice: s }),
            }
        }
    }
    let surface = NetSurface { heights };
    debug_assert!(surface.is_feasible(&dims));
    Ok(surface)
}

/// Brute-force reference: the minimum objective over every feasible
/// surface, by direct enumeration. Only usable for tiny volumes.
pub fn enumerate_optimal(sw: &SurfaceWeights) -> (i128, NetSurface) {
    let dims = &sw.dims;
    let cols = sw.column_count();
    let rows = dims.rows;
    assert!(
        (rows as u64).pow(cols as u32) <= 200_000_000,
        "enumeration space too large"
    );
    let mut heights = vec![0u32; cols];
    let mut best: Option<(i128, Vec<u32>)> = None;
    loop {
        let cand = NetSurface {
            heights: heights.clone(),
        };
        if cand.is_feasible(dims) {
            let obj = cand.objective(sw);
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, heights.clone()));
            }
        }
        // odometer
        let mut i = 0;
        loop {
            if i == cols {
                let (obj, hs) = best.expect("row 0 everywhere is always feasible");
                return (obj, NetSurface { heights: hs });
            }
            heights[i] += 1;
            if heights[i] < rows {
                break;
            }
            heights[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle;
    use crate::serial::{self, SerialConfig};
    use crate::cut;

    fn dims(r: u32, c: u32, s: u32, k: u32) -> VolumeDims {
        VolumeDims::new(r, c, s, k).unwrap()
    }

    fn solve_and_extract(sw: &SurfaceWeights) -> (u64, NetSurface, BuildInfo) {
        let (inst, info) = build_st_graph(sw, 1).unwrap();
        let original = inst.caps.clone();
        let mut caps = inst.caps;
        let flow = serial::solve(&inst.topo, &mut caps, &SerialConfig::default());
        let cut = cut::min_cut(&inst.topo, &original, &caps).unwrap();
        assert_eq!(cut.cut_capacity, flow);
        let surface = extract_surface(&inst.topo, &cut.source_side).unwrap();
        (flow, surface, info)
    }

    #[test]
    fn rejects_non_convex_profile() {
        let d = dims(3, 2, 1, 1);
        let err = SurfaceWeights::new(d, vec![0; 6], vec![0, 5, 0]);
        assert!(matches!(err, Err(Error::NonConvexPrior { offset: 0 })));
    }

    #[test]
    fn degenerate_all_zero_cut_is_m_per_column() {
        let d = dims(3, 2, 1, 1);
        let sw = SurfaceWeights::new(d, vec![0; 6], vec![0, 0, 0]).unwrap();
        let (flow, surface, info) = solve_and_extract(&sw);
        // zero weights: M = 1, the cut pays exactly M per column
        assert_eq!(info.base_row_constant, 1);
        assert_eq!(flow, 2);
        assert!(surface.is_feasible(&d));
        assert_eq!(info.objective_from_cut(flow), 0);
    }

    #[test]
    fn single_column_picks_cheapest_row() {
        let d = dims(3, 1, 1, 0);
        let sw = SurfaceWeights::new(d, vec![5, 1, 3], vec![0]).unwrap();
        let (expected, oracle_surface) = enumerate_optimal(&sw);
        assert_eq!(expected, 1);
        assert_eq!(oracle_surface.heights, vec![1]);
        let (flow, surface, info) = solve_and_extract(&sw);
        assert_eq!(info.objective_from_cut(flow), 1);
        assert_eq!(surface.heights, vec![1]);
    }

    #[test]
    fn random_3x4_matches_enumeration() {
        // 3 columns x 4 rows, K=1, |dv| cost profile
        let d = dims(4, 3, 1, 1);
        for seed in 0..60u64 {
            let mut rng = gen::SplitMix64::new(seed);
            let weights: Vec<i64> = (0..d.vertex_count()).map(|_| rng.next_in(0, 9)).collect();
            let sw = SurfaceWeights::new(d, weights, vec![1, 0, 1]).unwrap();
            let (best, _) = enumerate_optimal(&sw);
            let (flow, surface, info) = solve_and_extract(&sw);
            assert_eq!(info.objective_from_cut(flow), best, "seed {}", seed);
            assert_eq!(surface.objective(&sw), best, "seed {}", seed);
        }
    }

    #[test]
    fn slices_and_negative_weights_match_enumeration() {
        let d = dims(5, 2, 2, 2);
        for seed in 0..40u64 {
            let sw = gen::generate_pogw(d, 500 + seed, -9, 9).unwrap();
            let (best, _) = enumerate_optimal(&sw);
            let (flow, surface, info) = solve_and_extract(&sw);
            assert_eq!(info.objective_from_cut(flow), best, "seed {}", seed);
            assert_eq!(surface.objective(&sw), best, "seed {}", seed);
            assert!(surface.is_feasible(&d));
        }
    }

    #[test]
    fn oracle_agrees_with_push_relabel_on_reduction_instances() {
        let d = dims(4, 2, 2, 1);
        for seed in 0..20u64 {
            let sw = gen::generate_pogw(d, 900 + seed, -5, 5).unwrap();
            let (inst, _) = build_st_graph(&sw, 1).unwrap();
            let expected = oracle::oracle_maxflow(&inst.topo, &inst.caps).unwrap();
            let mut caps = inst.caps.clone();
            let flow = serial::solve(&inst.topo, &mut caps, &SerialConfig::default());
            assert_eq!(flow, expected, "seed {}", seed);
        }
    }

    #[test]
    fn scale_factor_scales_cut_exactly() {
        let d = dims(4, 3, 1, 1);
        let sw = gen::generate_pogw(d, 7, 0, 9).unwrap();
        let (best, _) = enumerate_optimal(&sw);
        for scale in [1i64, 3, 10] {
            let (inst, info) = build_st_graph(&sw, scale).unwrap();
            let mut caps = inst.caps.clone();
            let flow = serial::solve(&inst.topo, &mut caps, &SerialConfig::default());
            assert_eq!(info.objective_from_cut(flow), best, "scale {}", scale);
        }
    }
}
