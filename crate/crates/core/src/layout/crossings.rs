use std::collections::BTreeMap;

use super::{LayoutGeometry, Side};

/// The parts of an arc segment that matter for crossings. A floor is the
/// slot a drop ends on: 0 for text, the referenced arc's slot for a handle,
/// `None` where the segment leaves the row instead of dropping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSegment {
    pub left: f64,
    pub right: f64,
    pub slot: u32,
    pub left_floor: Option<u32>,
    pub right_floor: Option<u32>,
}

/// Whether two segments with `a.left < b.left < a.right < b.right` cross:
/// the higher one's drop inside the other reaches below the other's run.
pub fn interleaved_pair_crosses(a: &CrossingSegment, b: &CrossingSegment) -> bool {
    match a.slot.cmp(&b.slot) {
        std::cmp::Ordering::Equal => true,
        std::cmp::Ordering::Greater => a.right_floor.is_some_and(|f| f < b.slot),
        std::cmp::Ordering::Less => b.left_floor.is_some_and(|f| f < a.slot),
    }
}

/// Counts crossing pairs among segments sharing one row side.
pub fn count_segment_crossings(segments: &[CrossingSegment]) -> usize {
    let mut sorted: Vec<&CrossingSegment> = segments.iter().collect();
    sorted.sort_by(|a, b| a.left.total_cmp(&b.left));
    let mut count = 0;
    for (i, a) in sorted.iter().enumerate() {
        // first segment starting strictly right of a.left
        let from = i + 1 + sorted[i + 1..].partition_point(|b| b.left <= a.left);
        for b in &sorted[from..] {
            if b.left >= a.right {
                break;
            }
            if a.right < b.right && interleaved_pair_crosses(a, b) {
                count += 1;
            }
        }
    }
    count
}

/// Total crossings over every row side of a geometry.
pub fn count_crossings(geometry: &LayoutGeometry) -> usize {
    let mut groups: BTreeMap<(usize, Side), Vec<CrossingSegment>> = BTreeMap::new();
    for arc in &geometry.arcs {
        for seg in &arc.segments {
            groups.entry((seg.row, arc.side)).or_default().push(seg.crossing_view());
        }
    }
    groups.values().map(|g| count_segment_crossings(g)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(left: f64, right: f64, slot: u32) -> CrossingSegment {
        CrossingSegment { left, right, slot, left_floor: Some(0), right_floor: Some(0) }
    }

    #[test]
    fn disjoint_pair() {
        assert_eq!(count_segment_crossings(&[seg(0.0, 10.0, 1), seg(20.0, 30.0, 1)]), 0);
    }

    #[test]
    fn minimal_interleave() {
        assert_eq!(count_segment_crossings(&[seg(0.0, 20.0, 1), seg(10.0, 30.0, 2)]), 1);
        assert_eq!(count_segment_crossings(&[seg(0.0, 20.0, 2), seg(10.0, 30.0, 1)]), 1);
    }

    #[test]
    fn handle_drop_above_other_run() {
        // the upper arc's inner drop lands on an arc at slot 2, above the
        // lower arc's run at slot 1
        let a = CrossingSegment { left: 0.0, right: 20.0, slot: 3, left_floor: Some(0), right_floor: Some(2) };
        assert_eq!(count_segment_crossings(&[a, seg(10.0, 30.0, 1)]), 0);
        assert_eq!(count_segment_crossings(&[a, seg(10.0, 30.0, 2)]), 0);
        let b = CrossingSegment { right_floor: Some(1), ..a };
        assert_eq!(count_segment_crossings(&[b, seg(10.0, 30.0, 2)]), 1);
    }

    #[test]
    fn row_exit_does_not_drop() {
        let exit = CrossingSegment { left: 0.0, right: 100.0, slot: 2, left_floor: Some(0), right_floor: None };
        assert_eq!(count_segment_crossings(&[exit, seg(50.0, 150.0, 1)]), 0);
        let low_exit = CrossingSegment { slot: 1, ..exit };
        assert_eq!(count_segment_crossings(&[low_exit, seg(50.0, 150.0, 2)]), 1);
    }
}
