//! Instance file formats.
//!
//! POGF (flow instance): magic `POGF`, version u32, then R, C, S, K as
//! little-endian u32, then n*edges_per_node residual capacities as
//! little-endian u32 in vertex-index-major, slot-minor order.
//!
//! POGW (weight volume): magic `POGW`, version u32, then R, C, S, K, then
//! the convex cost table as 2K+1 little-endian i32 (offsets -K..=K), then
//! n vertex weights as little-endian i32 in vertex-index order.
//!
//! A small text form of POGW exists for hand-written fixtures, plus the
//! classic DIMACS max-flow text format for the explicit-graph reference
//! solver.

use crate::error::{Error, Result};
use crate::graph::{CapacityStore, GraphTopology, Instance, VolumeDims};
use crate::oracle::EdgeListGraph;
use crate::surface::SurfaceWeights;
use std::io::Write;
use std::path::Path;

pub const POGF_MAGIC: &[u8; 4] = b"POGF";
pub const POGW_MAGIC: &[u8; 4] = b"POGW";
pub const FORMAT_VERSION: u32 = 1;

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8]) -> Cursor<'a> {
        Cursor { data, at: 0 }
    }

    fn fail<T>(&self, message: &str) -> Result<T> {
        Err(Error::Parse {
            offset: self.at as u64,
            message: message.to_string(),
        })
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.data.len() {
            return self.fail("unexpected end of file");
        }
        let out = &self.data[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.bytes(4)? != magic {
            self.at -= 4;
            return self.fail("bad magic");
        }
        Ok(())
    }

    fn header_dims(&mut self) -> Result<VolumeDims> {
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            self.at -= 4;
            return self.fail(&format!("unsupported format version {}", version));
        }
        let rows = self.u32()?;
        let columns = self.u32()?;
        let slices = self.u32()?;
        let k = self.u32()?;
        VolumeDims::new(rows, columns, slices, k).map_err(|e| Error::Parse {
            offset: self.at as u64,
            message: e.to_string(),
        })
    }
}

pub fn write_pogf<W: Write>(w: &mut W, topo: &GraphTopology, caps: &CapacityStore) -> Result<()> {
    let d = topo.dims();
    w.write_all(POGF_MAGIC)?;
    for x in [FORMAT_VERSION, d.rows, d.columns, d.slices, d.edge_interval] {
        w.write_all(&x.to_le_bytes())?;
    }
    for &c in caps.raw() {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_pogf(data: &[u8]) -> Result<Instance> {
    let mut cur = Cursor::new(data);
    cur.expect_magic(POGF_MAGIC)?;
    let dims = cur.header_dims()?;
    let topo = GraphTopology::new(dims)?;
    let count = topo.vertex_count() * topo.edges_per_node() as usize;
    let mut residual = Vec::with_capacity(count);
    for _ in 0..count {
        residual.push(cur.u32()?);
    }
    if cur.at != data.len() {
        return cur.fail("trailing bytes after capacity table");
    }
    let caps = CapacityStore::from_raw(residual);
    caps.validate(&topo)?;
    Ok(Instance { topo, caps })
}

pub fn write_pogw<W: Write>(w: &mut W, sw: &SurfaceWeights) -> Result<()> {
    let d = &sw.dims;
    w.write_all(POGW_MAGIC)?;
    for x in [FORMAT_VERSION, d.rows, d.columns, d.slices, d.edge_interval] {
        w.write_all(&x.to_le_bytes())?;
    }
    for &c in &sw.costs {
        let c = i32::try_from(c).map_err(|_| Error::CapacityOverflow {
            what: format!("cost {} does not fit the i32 file format", c),
        })?;
        w.write_all(&c.to_le_bytes())?;
    }
    for &wt in &sw.weights {
        let wt = i32::try_from(wt).map_err(|_| Error::CapacityOverflow {
            what: format!("weight {} does not fit the i32 file format", wt),
        })?;
        w.write_all(&wt.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_pogw(data: &[u8]) -> Result<SurfaceWeights> {
    let mut cur = Cursor::new(data);
    cur.expect_magic(POGW_MAGIC)?;
    let dims = cur.header_dims()?;
    let mut costs = Vec::with_capacity(dims.interval_width() as usize);
    for _ in 0..dims.interval_width() {
        costs.push(cur.i32()? as i64);
    }
    let mut weights = Vec::with_capacity(dims.vertex_count());
    for _ in 0..dims.vertex_count() {
        weights.push(cur.i32()? as i64);
    }
    if cur.at != data.len() {
        return cur.fail("trailing bytes after weight table");
    }
    SurfaceWeights::new(dims, weights, costs)
}

/// Hand-editable text form of a weight volume:
///
/// ```text
/// pogw-text v1
/// dims R C S K
/// costs <2K+1 integers>
/// weights <R*C*S integers in vertex-index order>
/// ```
pub fn read_pogw_text(text: &str) -> Result<SurfaceWeights> {
    struct Toks<'a> {
        items: Vec<&'a str>,
        at: usize,
    }
    impl<'a> Toks<'a> {
        fn fail<T>(&self, message: &str) -> Result<T> {
            Err(Error::Parse {
                offset: self.at as u64,
                message: message.to_string(),
            })
        }
        fn word(&mut self, expect: &str) -> Result<()> {
            if self.items.get(self.at) != Some(&expect) {
                return self.fail(&format!("expected '{}'", expect));
            }
            self.at += 1;
            Ok(())
        }
        fn int(&mut self, what: &str) -> Result<i64> {
            let Some(t) = self.items.get(self.at) else {
                return self.fail(&format!("missing {}", what));
            };
            self.at += 1;
            t.parse::<i64>()
                .map_err(|_| Error::Parse {
                    offset: self.at as u64 - 1,
                    message: format!("bad {}", what),
                })
        }
    }

    let mut t = Toks {
        items: text.split_whitespace().collect(),
        at: 0,
    };
    t.word("pogw-text")?;
    t.word("v1")?;
    t.word("dims")?;
    let rows = t.int("rows")? as u32;
    let columns = t.int("columns")? as u32;
    let slices = t.int("slices")? as u32;
    let k = t.int("edge interval")? as u32;
    let dims = VolumeDims::new(rows, columns, slices, k)?;
    t.word("costs")?;
    let mut costs = Vec::new();
    for _ in 0..dims.interval_width() {
        costs.push(t.int("cost entry")?);
    }
    t.word("weights")?;
    let mut weights = Vec::new();
    for _ in 0..dims.vertex_count() {
        weights.push(t.int("weight entry")?);
    }
    if t.at != t.items.len() {
        return t.fail("trailing tokens");
    }
    SurfaceWeights::new(dims, weights, costs)
}

pub fn write_pogw_text<W: Write>(w: &mut W, sw: &SurfaceWeights) -> Result<()> {
    let d = &sw.dims;
    writeln!(w, "pogw-text v1")?;
    writeln!(
        w,
        "dims {} {} {} {}",
        d.rows, d.columns, d.slices, d.edge_interval
    )?;
    let join = |xs: &[i64]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(w, "costs {}", join(&sw.costs))?;
    writeln!(w, "weights {}", join(&sw.weights))?;
    Ok(())
}

/// DIMACS max-flow reader: `p max n m`, `n <id> s|t`, `a <u> <v> <cap>`,
/// comments on `c` lines. Node ids are 1-based.
pub fn read_dimacs(text: &str) -> Result<EdgeListGraph> {
    let fail = |line_no: usize, message: String| Error::Parse {
        offset: line_no as u64,
        message: format!("line {}: {}", line_no, message),
    };
    let mut n: Option<usize> = None;
    let mut source = None;
    let mut sink = None;
    let mut arcs: Vec<(usize, usize, u64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            None | Some("c") => continue,
            Some("p") => {
                if it.next() != Some("max") {
                    return Err(fail(line_no, "expected 'p max'".into()));
                }
                let nodes: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| fail(line_no, "bad node count".into()))?;
                let _edges: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| fail(line_no, "bad edge count".into()))?;
                n = Some(nodes);
            }
            Some("n") => {
                let id: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| fail(line_no, "bad node id".into()))?;
                match it.next() {
                    Some("s") => source = Some(id),
                    Some("t") => sink = Some(id),
                    _ => return Err(fail(line_no, "expected 's' or 't'".into())),
                }
            }
            Some("a") => {
                let mut num = || -> Result<u64> {
                    it.next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(line_no, "bad arc field".into()))
                };
                let u = num()? as usize;
                let v = num()? as usize;
                let cap = num()?;
                arcs.push((u, v, cap));
            }
            Some(other) => {
                return Err(fail(line_no, format!("unknown line type '{}'", other)));
            }
        }
    }
    let n = n.ok_or_else(|| fail(0, "missing problem line".into()))?;
    let source = source.ok_or_else(|| fail(0, "missing source designator".into()))?;
    let sink = sink.ok_or_else(|| fail(0, "missing sink designator".into()))?;
    if source == 0 || source > n || sink == 0 || sink > n {
        return Err(fail(0, "terminal id out of range".into()));
    }
    let mut g = EdgeListGraph::new(n, source - 1, sink - 1);
    for (u, v, cap) in arcs {
        if u == 0 || u > n || v == 0 || v > n {
            return Err(fail(0, format!("arc ({}, {}) out of range", u, v)));
        }
        g.add_edge(u - 1, v - 1, cap);
    }
    Ok(g)
}

/// Anything the CLI can load.
pub enum LoadedInput {
    Flow(Instance),
    Weights(SurfaceWeights),
    Explicit(EdgeListGraph),
}

/// Sniffs the format from content: binary magics first, then the text
/// forms.
pub fn load_path(path: &Path) -> Result<LoadedInput> {
    let data = std::fs::read(path)?;
    if data.starts_with(POGF_MAGIC) {
        return Ok(LoadedInput::Flow(read_pogf(&data)?));
    }
    if data.starts_with(POGW_MAGIC) {
        return Ok(LoadedInput::Weights(read_pogw(&data)?));
    }
    let text = String::from_utf8(data).map_err(|e| Error::Parse {
        offset: e.utf8_error().valid_up_to() as u64,
        message: "not a recognized binary format and not valid UTF-8".into(),
    })?;
    if text.trim_start().starts_with("pogw-text") {
        return Ok(LoadedInput::Weights(read_pogw_text(&text)?));
    }
    Ok(LoadedInput::Explicit(read_dimacs(&text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use proptest::prelude::*;

    #[test]
    fn pogf_round_trip() {
        let dims = VolumeDims::new(3, 2, 2, 1).unwrap();
        let inst = gen::generate_pogf(dims, 11, 9).unwrap();
        let mut buf = Vec::new();
        write_pogf(&mut buf, &inst.topo, &inst.caps).unwrap();
        let back = read_pogf(&buf).unwrap();
        assert_eq!(back.caps.raw(), inst.caps.raw());
        assert_eq!(back.topo.dims(), inst.topo.dims());
    }

    #[test]
    fn pogf_error_reports_offset() {
        let dims = VolumeDims::new(2, 2, 1, 0).unwrap();
        let inst = gen::generate_pogf(dims, 3, 5).unwrap();
        let mut buf = Vec::new();
        write_pogf(&mut buf, &inst.topo, &inst.caps).unwrap();
        buf.truncate(buf.len() - 2);
        match read_pogf(&buf) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
        match read_pogf(b"NOPE") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            _ => panic!("expected magic error"),
        }
    }

    #[test]
    fn pogw_round_trip_binary_and_text() {
        let dims = VolumeDims::new(4, 3, 1, 1).unwrap();
        let sw = gen::generate_pogw(dims, 9, -5, 5).unwrap();
        let mut buf = Vec::new();
        write_pogw(&mut buf, &sw).unwrap();
        let back = read_pogw(&buf).unwrap();
        assert_eq!(back.weights, sw.weights);
        assert_eq!(back.costs, sw.costs);

        let mut txt = Vec::new();
        write_pogw_text(&mut txt, &sw).unwrap();
        let back = read_pogw_text(std::str::from_utf8(&txt).unwrap()).unwrap();
        assert_eq!(back.weights, sw.weights);
        assert_eq!(back.costs, sw.costs);
    }

    #[test]
    fn dimacs_diamond() {
        let text = "c diamond\np max 4 4\nn 1 s\nn 4 t\na 1 2 1\na 1 3 1\na 2 4 1\na 3 4 1\n";
        let mut g = read_dimacs(text).unwrap();
        assert_eq!(g.max_flow(), 2);
    }

    #[test]
    fn dimacs_rejects_garbage() {
        assert!(read_dimacs("p max x y\n").is_err());
        assert!(read_dimacs("a 1 2 3\n").is_err());
        assert!(read_dimacs("p max 2 1\nn 1 s\nn 2 t\nq\n").is_err());
    }

    proptest! {
        #[test]
        fn pogf_round_trips_any_generated_instance(seed in 0u64..500, cap in 1u32..30) {
            let dims = VolumeDims::new(2, 2, 2, 1).unwrap();
            let inst = gen::generate_pogf(dims, seed, cap).unwrap();
            let mut buf = Vec::new();
            write_pogf(&mut buf, &inst.topo, &inst.caps).unwrap();
            let back = read_pogf(&buf).unwrap();
            prop_assert_eq!(back.caps.raw(), inst.caps.raw());
        }
    }
}
