//! Flip metric and the dynamic flip-set queue.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{invalid, Result};

/// Path-metric split recorded at one sorting index during a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortRecord {
    pub index: usize,
    /// Smallest candidate metric.
    pub best: f64,
    /// Metric of the best discarded candidate (position `L` after sorting).
    pub first_discarded: f64,
}

impl SortRecord {
    #[inline]
    pub fn flip_metric(&self, alpha: f64) -> f64 {
        -self.best + alpha * self.first_discarded
    }
}

/// `-pms[0] + alpha * pms[L]` for candidate metrics sorted ascending.
pub fn flip_metric(sorted_pms: &[f64], list_size: usize, alpha: f64) -> Result<f64> {
    if sorted_pms.len() <= list_size {
        return Err(invalid(format!(
            "flip metric needs more than {list_size} sorted metrics, got {}",
            sorted_pms.len()
        )));
    }
    Ok(-sorted_pms[0] + alpha * sorted_pms[list_size])
}

/// A set of sorting indices whose selection is inverted in a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipNode {
    pub flip_set: Vec<usize>,
    pub metric: f64,
}

impl FlipNode {
    /// The empty set: a plain list-decoding trial.
    pub fn root() -> Self {
        Self { flip_set: Vec::new(), metric: 0.0 }
    }

    pub fn order(&self) -> usize {
        self.flip_set.len()
    }
}

#[derive(Debug, Clone)]
struct Entry(FlipNode);

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .metric
            .total_cmp(&other.0.metric)
            .then_with(|| self.0.flip_set.cmp(&other.0.flip_set))
    }
}

/// Bounded min-queue of flip sets ordered by (metric, set).
#[derive(Debug, Clone)]
pub struct FlipQueue {
    items: BTreeSet<Entry>,
    capacity: usize,
}

impl FlipQueue {
    pub fn new(capacity: usize) -> Self {
        Self { items: BTreeSet::new(), capacity: capacity.max(1) }
    }

    /// Default capacity for a trial budget: `max(4 * t_max, 1024)`.
    pub fn for_trials(t_max: usize) -> Self {
        Self::new((4 * t_max).max(1024))
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn push(&mut self, node: FlipNode) {
        if self.items.len() == self.capacity {
            match self.items.last() {
                Some(worst) if Entry(node.clone()) < *worst => {
                    self.items.pop_last();
                }
                _ => return,
            }
        }
        self.items.insert(Entry(node));
    }

    pub fn pop(&mut self) -> Option<FlipNode> {
        self.items.pop_first().map(|e| e.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FlipNode> {
        self.items.iter().map(|e| &e.0)
    }
}

/// Adds the children of a failed flip set to `queue`.
///
/// Each child appends one sorting index beyond the parent's last one; its
/// metric is the parent's plus the flip metric at that index taken from the
/// failed trial. Parents already holding `omega` indices have no children.
pub fn build_flip_candidates(
    records: &[SortRecord],
    queue: &mut FlipQueue,
    parent: &FlipNode,
    omega: usize,
    alpha: f64,
) {
    if parent.order() >= omega {
        return;
    }
    let after = parent.flip_set.last().copied();
    for r in records {
        if after.is_some_and(|a| r.index <= a) {
            continue;
        }
        let mut flip_set = Vec::with_capacity(parent.order() + 1);
        flip_set.extend_from_slice(&parent.flip_set);
        flip_set.push(r.index);
        queue.push(FlipNode { flip_set, metric: parent.metric + r.flip_metric(alpha) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_arithmetic() {
        assert_eq!(flip_metric(&[3.0, 3.0, 3.0], 1, 1.0).unwrap(), 0.0);
        assert!((flip_metric(&[2.5, 3.0, 7.0, 9.0], 2, 1.0).unwrap() - 4.5).abs() < 1e-12);
        assert!((flip_metric(&[2.5, 3.0, 7.0, 9.0], 2, 1.2).unwrap() - 5.9).abs() < 1e-12);
        assert!(flip_metric(&[1.0, 2.0], 2, 1.0).is_err());
    }

    fn rec(index: usize, fm: f64) -> SortRecord {
        SortRecord { index, best: 1.0, first_discarded: 1.0 + fm }
    }

    #[test]
    fn order_one_initialisation() {
        let records = [rec(4, 3.0), rec(7, 0.5), rec(9, 2.0)];
        let mut q = FlipQueue::new(16);
        build_flip_candidates(&records, &mut q, &FlipNode::root(), 1, 1.0);
        let sets: Vec<_> = q.iter().map(|n| n.flip_set.clone()).collect();
        assert_eq!(sets, vec![vec![7], vec![9], vec![4]]);
    }

    #[test]
    fn order_bound_and_suffix_rule() {
        let records = [rec(4, 3.0), rec(7, 0.5), rec(9, 2.0)];
        let mut q = FlipQueue::new(16);
        let parent = FlipNode { flip_set: vec![7], metric: 0.5 };
        build_flip_candidates(&records, &mut q, &parent, 1, 1.0);
        assert!(q.is_empty());
        build_flip_candidates(&records, &mut q, &parent, 2, 1.0);
        let only = q.pop().unwrap();
        assert_eq!(only.flip_set, vec![7, 9]);
        assert!((only.metric - 2.5).abs() < 1e-12);
        assert!(q.is_empty());
    }

    #[test]
    fn capacity_keeps_smallest() {
        let mut q = FlipQueue::new(2);
        for (i, m) in [(1, 5.0), (2, 1.0), (3, 3.0), (4, 0.5)] {
            q.push(FlipNode { flip_set: vec![i], metric: m });
        }
        assert_eq!(q.pop().unwrap().flip_set, vec![4]);
        assert_eq!(q.pop().unwrap().flip_set, vec![2]);
        assert!(q.pop().is_none());
        assert_eq!(FlipQueue::for_trials(20).capacity(), 1024);
        assert_eq!(FlipQueue::for_trials(300).capacity(), 1200);
    }
}
