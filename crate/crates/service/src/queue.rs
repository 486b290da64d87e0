use std::collections::VecDeque;

use crate::protocol::Push;

/// Per-client outbound push buffer. When a slow client lets it fill up,
/// the oldest push is discarded; discarded tick reports are counted into
/// the `dropped` field of the next tick report the client receives.
#[derive(Debug)]
pub struct ReportQueue {
    items: VecDeque<Push>,
    capacity: usize,
    pending_dropped: u64,
}

impl ReportQueue {
    pub fn new(capacity: usize) -> ReportQueue {
        ReportQueue { items: VecDeque::new(), capacity: capacity.max(1), pending_dropped: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, push: Push) {
        if self.items.len() >= self.capacity {
            if let Some(Push::TickReport { dropped, .. }) = self.items.pop_front() {
                self.pending_dropped += 1 + dropped;
            }
        }
        self.items.push_back(push);
    }

    pub fn pop(&mut self) -> Option<Push> {
        let mut next = self.items.pop_front()?;
        if let Push::TickReport { dropped, .. } = &mut next {
            *dropped += std::mem::take(&mut self.pending_dropped);
        }
        Some(next)
    }

    pub fn drain(&mut self) -> Vec<Push> {
        std::iter::from_fn(|| self.pop()).collect()
    }
}
