//! Layer partitions: contiguous half-open index ranges that carve a flat
//! parameter vector into per-layer blocks. The trust-ratio update computes
//! its norms block by block, so a partition must cover `0..dim` exactly,
//! in order, with no gaps, overlaps, or empty blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerPartition {
    /// Half-open `[start, end)` ranges, in ascending order.
    ranges: Vec<(usize, usize)>,
}

impl LayerPartition {
    pub fn new(ranges: Vec<(usize, usize)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::structural("partition has no layers"));
        }
        let mut expected_start = 0usize;
        for &(start, end) in &ranges {
            if start != expected_start {
                return Err(Error::structural(format!(
                    "partition ranges must tile the vector: expected start {expected_start}, got {start}"
                )));
            }
            if end <= start {
                return Err(Error::structural(format!(
                    "empty partition range [{start}, {end})"
                )));
            }
            expected_start = end;
        }
        Ok(LayerPartition { ranges })
    }

    /// One block spanning the whole vector.
    pub fn single(dim: usize) -> Result<Self> {
        LayerPartition::new(vec![(0, dim)])
    }

    pub fn num_layers(&self) -> usize {
        self.ranges.len()
    }

    /// Total number of parameters covered.
    pub fn dim(&self) -> usize {
        self.ranges.last().map(|&(_, end)| end).unwrap_or(0)
    }

    pub fn ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.ranges.iter().map(|&(start, end)| start..end)
    }

    pub fn range(&self, layer: usize) -> Option<std::ops::Range<usize>> {
        self.ranges.get(layer).map(|&(start, end)| start..end)
    }
}

/// Builds a partition from per-layer block sizes.
pub fn make_layer_partition(layer_sizes: &[usize]) -> Result<LayerPartition> {
    if layer_sizes.is_empty() {
        return Err(Error::structural("no layer sizes given"));
    }
    let mut ranges = Vec::with_capacity(layer_sizes.len());
    let mut start = 0usize;
    for (i, &size) in layer_sizes.iter().enumerate() {
        if size == 0 {
            return Err(Error::structural(format!("layer {i} has size 0")));
        }
        ranges.push((start, start + size));
        start += size;
    }
    LayerPartition::new(ranges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_contiguous_ranges() {
        let p = make_layer_partition(&[3, 2]).unwrap();
        assert_eq!(p.num_layers(), 2);
        assert_eq!(p.dim(), 5);
        let ranges: Vec<_> = p.ranges().collect();
        assert_eq!(ranges, vec![0..3, 3..5]);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(make_layer_partition(&[]).is_err());
        assert!(make_layer_partition(&[2, 0, 1]).is_err());
        assert!(LayerPartition::new(vec![(0, 2), (3, 4)]).is_err()); // gap
        assert!(LayerPartition::new(vec![(0, 2), (1, 4)]).is_err()); // overlap
        assert!(LayerPartition::new(vec![(1, 3)]).is_err()); // does not start at 0
    }

    #[test]
    fn single_spans_everything() {
        let p = LayerPartition::single(7).unwrap();
        assert_eq!(p.num_layers(), 1);
        assert_eq!(p.dim(), 7);
        assert!(LayerPartition::single(0).is_err());
    }
}
