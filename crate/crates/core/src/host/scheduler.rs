use std::collections::{BTreeSet, HashMap, VecDeque};

use super::job::JobId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QueueEntry {
    pub priority: u8,
    pub seq: u64,
    pub id: JobId,
}

/// Owns the set of QUEUED jobs and decides which one goes to the device next.
pub trait SchedulingPolicy: Send {
    fn push(&mut self, entry: QueueEntry);
    fn pop(&mut self) -> Option<QueueEntry>;
    /// Removes a queued job; false if it was not queued.
    fn remove(&mut self, id: JobId) -> bool;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Smallest `(priority, seq)` first. Non-preemptive.
#[derive(Debug, Default)]
pub struct StrictPriority {
    order: BTreeSet<QueueEntry>,
    by_id: HashMap<JobId, QueueEntry>,
}

impl SchedulingPolicy for StrictPriority {
    fn push(&mut self, entry: QueueEntry) {
        if let Some(old) = self.by_id.insert(entry.id, entry) {
            self.order.remove(&old);
        }
        self.order.insert(entry);
    }

    fn pop(&mut self) -> Option<QueueEntry> {
        let e = self.order.pop_first()?;
        self.by_id.remove(&e.id);
        Some(e)
    }

    fn remove(&mut self, id: JobId) -> bool {
        match self.by_id.remove(&id) {
            Some(e) => self.order.remove(&e),
            None => false,
        }
    }

    fn len(&self) -> usize {
        self.order.len()
    }
}

/// Submission order, priorities ignored.
#[derive(Debug, Default)]
pub struct Fifo {
    queue: VecDeque<QueueEntry>,
}

impl SchedulingPolicy for Fifo {
    fn push(&mut self, entry: QueueEntry) {
        let at = self.queue.partition_point(|e| e.seq < entry.seq);
        self.queue.insert(at, entry);
    }

    fn pop(&mut self) -> Option<QueueEntry> {
        self.queue.pop_front()
    }

    fn remove(&mut self, id: JobId) -> bool {
        match self.queue.iter().position(|e| e.id == id) {
            Some(i) => self.queue.remove(i).is_some(),
            None => false,
        }
    }

    fn len(&self) -> usize {
        self.queue.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(priority: u8, seq: u64) -> QueueEntry {
        QueueEntry { priority, seq, id: seq }
    }

    #[test]
    fn priority_then_seq() {
        let mut p = StrictPriority::default();
        p.push(e(2, 5));
        p.push(e(0, 9));
        p.push(e(2, 3));
        assert_eq!(p.pop(), Some(e(0, 9)));
        assert_eq!(p.pop(), Some(e(2, 3)));
        assert!(p.remove(5));
        assert!(!p.remove(5));
        assert_eq!(p.pop(), None);
    }

    #[test]
    fn fifo_ignores_priority() {
        let mut p = Fifo::default();
        p.push(e(7, 1));
        p.push(e(0, 2));
        assert_eq!(p.pop().map(|x| x.seq), Some(1));
        assert_eq!(p.len(), 1);
    }
}
