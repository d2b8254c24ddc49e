//! Run reports and the fixed CSV schema shared by solve and bench output.

use serde::Serialize;

/// Per-run record. `flow == cut` is asserted by every producer before a
/// report is emitted.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub rows: u32,
    pub columns: u32,
    pub slices: u32,
    pub edge_interval: u32,
    pub backend: String,
    pub segments: u32,
    pub tiles: String,
    pub gr_factor: f64,
    pub rep: u32,
    pub wall_ms: f64,
    pub flow: u64,
    pub cut: u64,
    pub edge_storage_bytes: u64,
    pub offset_cache_entries: u64,
    pub mem_estimate_bytes: u64,
    pub baseline_edge_bytes: u64,
    pub baseline_node_bytes: u64,
}

/// Explicit-representation baseline: bytes per half-edge and per node of a
/// pointer-based edge-list layout, for the memory comparison columns.
pub const BASELINE_HALF_EDGE_BYTES: u64 = 32;
pub const BASELINE_NODE_BYTES: u64 = 128;

pub const CSV_HEADER: &str = "instance,rows,columns,slices,edge_interval,backend,segments,tiles,\
gr_factor,rep,wall_ms,flow,cut,edge_storage_bytes,offset_cache_entries,mem_estimate_bytes,\
baseline_edge_bytes,baseline_node_bytes";

impl RunReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3},{},{},{},{},{},{},{}",
            self.instance,
            self.rows,
            self.columns,
            self.slices,
            self.edge_interval,
            self.backend,
            self.segments,
            self.tiles,
            self.gr_factor,
            self.rep,
            self.wall_ms,
            self.flow,
            self.cut,
            self.edge_storage_bytes,
            self.offset_cache_entries,
            self.mem_estimate_bytes,
            self.baseline_edge_bytes,
            self.baseline_node_bytes
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn to_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            instance: "x".into(),
            rows: 2,
            columns: 2,
            slices: 1,
            edge_interval: 1,
            backend: "pr-serial".into(),
            segments: 1,
            tiles: String::new(),
            gr_factor: 2.0,
            rep: 0,
            wall_ms: 1.5,
            flow: 3,
            cut: 3,
            edge_storage_bytes: 256,
            offset_cache_entries: 32,
            mem_estimate_bytes: 1024,
            baseline_edge_bytes: 2048,
            baseline_node_bytes: 512,
        }
    }

    #[test]
    fn csv_schema_is_stable() {
        // golden header: any change here is a breaking schema change
        assert_eq!(
            CSV_HEADER,
            "instance,rows,columns,slices,edge_interval,backend,segments,tiles,gr_factor,rep,\
wall_ms,flow,cut,edge_storage_bytes,offset_cache_entries,mem_estimate_bytes,baseline_edge_bytes,\
baseline_node_bytes"
        );
        let csv = to_csv(&[sample()]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn json_contains_fields() {
        let j = sample().to_json();
        assert!(j.contains("\"flow\": 3"));
        assert!(j.contains("\"backend\": \"pr-serial\""));
    }
}
