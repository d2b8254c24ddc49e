//! Column-range work partitioning. Segments are contiguous column
//! intervals, so each segment's vertices occupy one contiguous index
//! range. A vertex is lockable exactly when one of its interval edges
//! crosses a segment boundary, which for column-contiguous segments means
//! it sits in the first or last column of a segment facing another one.

use crate::error::{Error, Result};
use crate::graph::VolumeDims;

pub struct Partition {
    dims: VolumeDims,
    /// Column ranges, one per segment, larger ones first.
    ranges: Vec<(u32, u32)>,
    seg_of_col: Vec<u32>,
    lockable_col: Vec<bool>,
}

impl Partition {
    pub fn new(dims: &VolumeDims, segment_count: usize) -> Result<Partition> {
        if segment_count == 0 {
            return Err(Error::EmptySegmentation);
        }
        if segment_count > dims.columns as usize {
            return Err(Error::TooManySegments {
                requested: segment_count,
                columns: dims.columns,
            });
        }
        let parts = segment_count as u32;
        let base = dims.columns / parts;
        let rem = dims.columns % parts;
        let mut ranges = Vec::with_capacity(segment_count);
        let mut seg_of_col = vec![0u32; dims.columns as usize];
        let mut at = 0;
        for i in 0..parts {
            let len = base + (i < rem) as u32;
            for c in at..at + len {
                seg_of_col[c as usize] = i;
            }
            ranges.push((at, at + len));
            at += len;
        }
        let mut lockable_col = vec![false; dims.columns as usize];
        for (i, &(c0, c1)) in ranges.iter().enumerate() {
            if i > 0 {
                lockable_col[c0 as usize] = true;
            }
            if i + 1 < ranges.len() {
                lockable_col[(c1 - 1) as usize] = true;
            }
        }
        Ok(Partition {
            dims: *dims,
            ranges,
            seg_of_col,
            lockable_col,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn column_range(&self, seg: usize) -> (u32, u32) {
        self.ranges[seg]
    }

    /// Contiguous vertex index range of a segment.
    pub fn vertex_range(&self, seg: usize) -> (u32, u32) {
        let per_col = self.dims.rows * self.dims.slices;
        let (c0, c1) = self.ranges[seg];
        (c0 * per_col, c1 * per_col)
    }

    #[inline]
    pub fn segment_of(&self, v: u32) -> usize {
        let col = v / (self.dims.rows * self.dims.slices);
        self.seg_of_col[col as usize] as usize
    }

    #[inline]
    pub fn lockable(&self, v: u32) -> bool {
        let col = v / (self.dims.rows * self.dims.slices);
        self.lockable_col[col as usize]
    }

    pub fn lockable_column(&self, col: u32) -> bool {
        self.lockable_col[col as usize]
    }
}
