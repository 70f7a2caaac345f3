//! Min-heap over a mutable value vector with lazy invalidation.
//!
//! Updating a value pushes a fresh heap entry and bumps the index's version;
//! stale entries are discarded when they surface at the top.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy)]
struct Entry {
    value: f64,
    index: usize,
    version: u32,
}

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
        self.value
            .total_cmp(&other.value)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LazyArgmin {
    heap: BinaryHeap<Reverse<Entry>>,
    values: Vec<f64>,
    versions: Vec<u32>,
}

impl LazyArgmin {
    pub fn new(values: Vec<f64>) -> Self {
        let mut out = Self {
            heap: BinaryHeap::new(),
            versions: vec![0; values.len()],
            values,
        };
        out.rebuild();
        out
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Replaces every value.
    pub fn reset(&mut self, values: &[f64]) {
        self.values.copy_from_slice(values);
        for v in &mut self.values {
            *v += 0.0;
        }
        self.rebuild();
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: f64) {
        // −0.0 and 0.0 must tie
        let value = value + 0.0;
        if value.to_bits() == self.values[i].to_bits() {
            return;
        }
        self.values[i] = value;
        self.versions[i] = self.versions[i].wrapping_add(1);
        self.heap.push(Reverse(Entry {
            value,
            index: i,
            version: self.versions[i],
        }));
        if self.heap.len() > 4 * self.values.len() + 1024 {
            self.rebuild();
        }
    }

    fn rebuild(&mut self) {
        let entries: Vec<_> = self
            .values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                Reverse(Entry {
                    value: value + 0.0,
                    index,
                    version: self.versions[index],
                })
            })
            .collect();
        self.heap = BinaryHeap::from(entries);
    }

    #[inline]
    fn is_fresh(&self, e: &Entry) -> bool {
        self.versions[e.index] == e.version
    }

    fn drop_stale(&mut self) {
        while let Some(Reverse(top)) = self.heap.peek() {
            if self.is_fresh(top) {
                break;
            }
            self.heap.pop();
        }
    }

    /// Smallest value, lowest index among exact ties.
    pub fn argmin(&mut self) -> (usize, f64) {
        self.drop_stale();
        let Reverse(top) = *self.heap.peek().expect("argmin over an empty vector");
        (top.index, top.value)
    }

    /// Smallest value among indices other than the current argmin.
    pub fn runner_up(&mut self) -> Option<(usize, f64)> {
        self.drop_stale();
        let first = self.heap.pop()?;
        self.drop_stale();
        let second = self.heap.peek().map(|Reverse(e)| (e.index, e.value));
        self.heap.push(first);
        second
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_resolve_to_lowest_index() {
        let mut h = LazyArgmin::new(vec![0.0, -0.0, 1.0, -2.0, -2.0]);
        assert_eq!(h.argmin(), (3, -2.0));
        h.set(3, 5.0);
        assert_eq!(h.argmin(), (4, -2.0));
        h.set(4, 0.0);
        assert_eq!(h.argmin(), (0, 0.0));
        assert_eq!(h.runner_up(), Some((1, 0.0)));
        assert_eq!(h.argmin(), (0, 0.0));
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            init in prop::collection::vec(-5i32..5, 1..20),
            updates in prop::collection::vec((0usize..20, -5i32..5), 0..200),
        ) {
            let mut values: Vec<f64> = init.iter().map(|&v| f64::from(v)).collect();
            let mut h = LazyArgmin::new(values.clone());
            for (i, v) in updates {
                let i = i % values.len();
                values[i] = f64::from(v);
                h.set(i, values[i]);
                let expected = values
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |best, (k, &x)| if x < best.1 { (k, x) } else { best });
                prop_assert_eq!(h.argmin(), expected);
            }
        }
    }
}
