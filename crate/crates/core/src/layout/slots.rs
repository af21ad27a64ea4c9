//! Slot assignment for the arcs of one row side.

use super::crossings::{count_segment_crossings, CrossingSegment};

/// One arc (segment) competing for a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotItem {
    /// Horizontal extent, including the label box and the extents of
    /// referenced arcs on the same row side.
    pub left: f64,
    pub right: f64,
    /// Indices of items this one attaches to; they must sit strictly lower.
    pub refs: Vec<usize>,
    /// Tie-breaker after width: reference depth, then a stable key.
    pub depth: usize,
    pub key: String,
}

impl SlotItem {
    fn width(&self) -> f64 {
        self.right - self.left
    }

    fn overlaps(&self, other: &SlotItem) -> bool {
        self.left <= other.right && other.left <= self.right
    }

    fn encloses(&self, other: &SlotItem) -> bool {
        self.left <= other.left && other.right <= self.right && (self.left, self.right) != (other.left, other.right)
    }
}

/// Processes items narrowest first and gives each the lowest slot (from 1)
/// that is above everything it encloses or attaches to and shares no
/// horizontal overlap with another item in the same slot.
pub fn assign_slots(items: &[SlotItem]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&items[a], &items[b]);
        x.width().total_cmp(&y.width()).then(x.depth.cmp(&y.depth)).then_with(|| super::natural_cmp(&x.key, &y.key))
    });
    let mut slots = vec![0u32; items.len()];
    let mut by_slot: Vec<Vec<usize>> = Vec::new();
    let mut placed: Vec<usize> = Vec::new();
    for &i in &order {
        let item = &items[i];
        let mut min = 1u32;
        for &r in &item.refs {
            if slots[r] > 0 {
                min = min.max(slots[r] + 1);
            }
        }
        for &p in &placed {
            if item.encloses(&items[p]) {
                min = min.max(slots[p] + 1);
            }
        }
        let mut slot = min;
        loop {
            let level = slot as usize - 1;
            if level >= by_slot.len() {
                by_slot.resize_with(level + 1, Vec::new);
            }
            if !by_slot[level].iter().any(|&o| items[o].overlaps(item)) {
                break;
            }
            slot += 1;
        }
        slots[i] = slot;
        by_slot[slot as usize - 1].push(i);
        placed.push(i);
    }
    slots
}

/// What one end of a run drops onto.
#[derive(Debug, Clone, PartialEq)]
pub enum RunEnd {
    /// The run continues onto the next or previous row.
    Open,
    /// Text or a mention label.
    Text,
    /// The runs of these items (indices into the slot items).
    Items(Vec<usize>),
}

/// The horizontal run of an item, as drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub left: f64,
    pub right: f64,
    pub left_end: RunEnd,
    pub right_end: RunEnd,
}

impl Run {
    fn view(&self, slot: u32, slots: &[u32]) -> CrossingSegment {
        let floor = |end: &RunEnd| match end {
            RunEnd::Open => None,
            RunEnd::Text => Some(0),
            RunEnd::Items(items) => items.iter().map(|&k| slots[k]).min(),
        };
        CrossingSegment {
            left: self.left,
            right: self.right,
            slot,
            left_floor: floor(&self.left_end),
            right_floor: floor(&self.right_end),
        }
    }
}

fn crossings(runs: &[Run], slots: &[u32]) -> usize {
    let segs: Vec<CrossingSegment> = runs.iter().zip(slots).map(|(r, &s)| r.view(s, slots)).collect();
    count_segment_crossings(&segs)
}

fn valid(items: &[SlotItem], slots: &[u32]) -> bool {
    for (i, a) in items.iter().enumerate() {
        if a.refs.iter().any(|&r| slots[r] >= slots[i]) {
            return false;
        }
        for (j, b) in items.iter().enumerate().skip(i + 1) {
            let clash = match slots[i].cmp(&slots[j]) {
                std::cmp::Ordering::Equal => a.overlaps(b),
                std::cmp::Ordering::Less => a.encloses(b),
                std::cmp::Ordering::Greater => b.encloses(a),
            };
            if clash {
                return false;
            }
        }
    }
    true
}

/// Renumbers used levels to 1..=k, keeping their order.
fn compact(slots: &mut [u32]) {
    let mut used: Vec<u32> = slots.to_vec();
    used.sort_unstable();
    used.dedup();
    for s in slots.iter_mut() {
        *s = used.partition_point(|&u| u < *s) as u32 + 1;
    }
}

/// Rows with more items than this keep the greedy assignment.
const REFINE_LIMIT: usize = 24;

/// Moves single items to another level, or to a new level of their own,
/// while that strictly lowers the crossing count and keeps every
/// constraint of [`assign_slots`].
pub fn refine_slots(items: &[SlotItem], runs: &[Run], slots: &mut Vec<u32>) {
    let n = items.len();
    if !(2..=REFINE_LIMIT).contains(&n) {
        return;
    }
    let mut best = crossings(runs, slots);
    for _ in 0..4 {
        let mut improved = false;
        for i in 0..n {
            if best == 0 {
                return;
            }
            let top = slots.iter().copied().max().unwrap_or(1);
            for level in 1..=top + 1 {
                // into an existing level, then as a new level just below it
                for insert in [false, true] {
                    if !insert && (level > top || level == slots[i]) {
                        continue;
                    }
                    let mut trial = slots.clone();
                    if insert {
                        for (j, s) in trial.iter_mut().enumerate() {
                            if j != i && *s >= level {
                                *s += 1;
                            }
                        }
                    }
                    trial[i] = level;
                    compact(&mut trial);
                    if trial == *slots || !valid(items, &trial) {
                        continue;
                    }
                    let c = crossings(runs, &trial);
                    if c < best {
                        best = c;
                        *slots = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(key: &str, left: f64, right: f64) -> SlotItem {
        SlotItem { left, right, refs: Vec::new(), depth: 0, key: key.into() }
    }

    #[test]
    fn disjoint_share_slot_one() {
        assert_eq!(assign_slots(&[item("A", 0.0, 10.0), item("B", 20.0, 30.0)]), vec![1, 1]);
    }

    #[test]
    fn enclosing_goes_higher() {
        assert_eq!(assign_slots(&[item("A", 0.0, 30.0), item("B", 10.0, 20.0)]), vec![2, 1]);
    }

    #[test]
    fn reference_raises_slot() {
        let mut a = item("A", 0.0, 50.0);
        a.refs = vec![1];
        a.depth = 1;
        let b = item("B", 0.0, 50.0);
        assert_eq!(assign_slots(&[a, b]), vec![2, 1]);
    }

    #[test]
    fn enclosure_is_transitive_in_height() {
        let s =
            assign_slots(&[item("A", 0.0, 100.0), item("B", 10.0, 90.0), item("C", 40.0, 50.0), item("D", 60.0, 70.0)]);
        assert_eq!(s, vec![3, 2, 1, 1]);
    }

    fn run(left: f64, right: f64) -> Run {
        Run { left, right, left_end: RunEnd::Text, right_end: RunEnd::Text }
    }

    #[test]
    fn refinement_lowers_arc_under_a_reference_drop() {
        // B drops onto A at its left end; C interleaves with both
        let mut b = item("B", 40.0, 90.0);
        b.refs = vec![0];
        let items = vec![item("A", 30.0, 80.0), b, item("C", 0.0, 60.0)];
        let mut runs = vec![run(30.0, 80.0), run(40.0, 90.0), run(0.0, 60.0)];
        runs[1].left_end = RunEnd::Items(vec![0]);
        let mut slots = vec![1, 2, 3];
        let before = crossings(&runs, &slots);
        refine_slots(&items, &runs, &mut slots);
        assert!(crossings(&runs, &slots) < before, "{slots:?}");
        assert!(valid(&items, &slots));
    }
}
