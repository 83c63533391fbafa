//! Bounded record of past synchronization points.

use std::collections::VecDeque;

use thiserror::Error;

/// What the master remembers about one synchronization point.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub t: f64,
    /// Length of the step that ended at `t` (zero for the initial point).
    pub dt: f64,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("history times must increase strictly: {previous} followed by {next}")]
    NonIncreasing { previous: f64, next: f64 },
}

/// Ring of the most recent synchronization points, oldest first.
#[derive(Debug, Clone)]
pub struct StepHistory {
    capacity: usize,
    entries: VecDeque<HistoryEntry>,
}

impl StepHistory {
    /// Capacity for predictors up to order `max_order`: `max_order + 2` records.
    pub fn for_order(max_order: usize) -> Self {
        Self::with_capacity(max_order + 2)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: HistoryEntry) -> Result<(), HistoryError> {
        if let Some(last) = self.entries.back() {
            if entry.t <= last.t {
                return Err(HistoryError::NonIncreasing {
                    previous: last.t,
                    next: entry.t,
                });
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
        Ok(())
    }

    pub fn latest(&self) -> Option<&HistoryEntry> {
        self.entries.back()
    }

    /// The `n` most recent entries, oldest first, or `None` if fewer exist.
    pub fn last_n(&self, n: usize) -> Option<impl Iterator<Item = &HistoryEntry>> {
        (n <= self.entries.len()).then(|| self.entries.range(self.entries.len() - n..))
    }

    pub fn iter(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(t: f64) -> HistoryEntry {
        HistoryEntry {
            t,
            dt: 0.0,
            u: vec![],
            y: vec![t],
            eps: 0.0,
        }
    }

    #[test]
    fn rejects_non_increasing_time() {
        let mut h = StepHistory::with_capacity(3);
        h.push(entry(1.0)).unwrap();
        assert!(h.push(entry(1.0)).is_err());
        assert!(h.push(entry(0.5)).is_err());
    }

    #[test]
    fn capacity_follows_order() {
        assert_eq!(StepHistory::for_order(1).capacity(), 3);
        assert_eq!(StepHistory::for_order(3).capacity(), 5);
    }

    #[test]
    fn last_n_needs_enough_entries() {
        let mut h = StepHistory::with_capacity(4);
        h.push(entry(0.0)).unwrap();
        assert!(h.last_n(2).is_none());
        h.push(entry(1.0)).unwrap();
        let ts: Vec<f64> = h.last_n(2).unwrap().map(|e| e.t).collect();
        assert_eq!(ts, vec![0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn keeps_most_recent_window(
            cap in 1usize..8,
            steps in proptest::collection::vec(1e-6f64..1.0, 0..30),
        ) {
            let mut h = StepHistory::with_capacity(cap);
            let mut t = 0.0;
            let mut times = Vec::new();
            for dt in &steps {
                t += dt;
                times.push(t);
                h.push(entry(t)).unwrap();
            }
            let keep = times.len().min(cap);
            let expected = &times[times.len() - keep..];
            let got: Vec<f64> = h.iter().map(|e| e.t).collect();
            prop_assert_eq!(got.as_slice(), expected);
        }
    }
}
