use std::cmp::Ordering;
use std::collections::BinaryHeap;

use fade_core::Nanos;

struct Entry<E> {
    at: Nanos,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, insertion order)
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Virtual clock plus pending events, executed in `(time, insertion)` order.
pub struct EventQueue<E> {
    now: Nanos,
    seq: u64,
    heap: BinaryHeap<Entry<E>>,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue { now: 0, seq: 0, heap: BinaryHeap::new() }
    }

    pub fn now(&self) -> Nanos {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Panics if `at` lies in the past: that is a simulator logic error.
    pub fn schedule(&mut self, at: Nanos, event: E) {
        assert!(at >= self.now, "event scheduled in the past ({at} < {})", self.now);
        self.heap.push(Entry { at, seq: self.seq, event });
        self.seq += 1;
    }

    pub fn schedule_in(&mut self, delay: Nanos, event: E) {
        self.schedule(self.now + delay, event);
    }

    pub fn peek_time(&self) -> Option<Nanos> {
        self.heap.peek().map(|e| e.at)
    }

    /// Removes the next event due at or before `t_end`, advancing the clock to it.
    pub fn pop_until(&mut self, t_end: Nanos) -> Option<(Nanos, E)> {
        if self.heap.peek()?.at > t_end {
            return None;
        }
        let e = self.heap.pop()?;
        self.now = e.at;
        Some((e.at, e.event))
    }

    /// Runs `handler` on every event due at or before `t_end`, then leaves the
    /// clock at `t_end`. The handler may schedule further events.
    pub fn run_until(&mut self, t_end: Nanos, mut handler: impl FnMut(&mut Self, Nanos, E)) {
        while let Some((at, event)) = self.pop_until(t_end) {
            handler(self, at, event);
        }
        self.now = self.now.max(t_end);
    }
}
