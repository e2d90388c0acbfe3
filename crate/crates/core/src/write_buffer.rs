//! Posted-write buffer.
//!
//! A write whose master loses arbitration may be parked here; the master
//! sees it complete immediately. While non-empty, the buffer competes for
//! the bus as a pseudo-master and drains its entries in FIFO order.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::types::{Cycle, Op, Transaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WriteBufferConfig {
    #[serde(default = "default_enabled")]
    pub enabled: bool,
    #[serde(default = "default_depth")]
    pub depth: u32,
}

fn default_enabled() -> bool {
    true
}

fn default_depth() -> u32 {
    4
}

impl Default for WriteBufferConfig {
    fn default() -> Self {
        WriteBufferConfig {
            enabled: default_enabled(),
            depth: default_depth(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteBufferEntry {
    pub txn: Transaction,
    pub enqueue_cycle: Cycle,
}

#[derive(Debug, Clone)]
pub struct WriteBuffer {
    config: WriteBufferConfig,
    entries: VecDeque<WriteBufferEntry>,
    occupancy_histogram: Vec<u64>,
}

impl WriteBuffer {
    pub fn new(config: WriteBufferConfig) -> Self {
        WriteBuffer {
            config,
            entries: VecDeque::with_capacity(config.depth as usize),
            occupancy_histogram: vec![0; config.depth as usize + 1],
        }
    }

    pub fn config(&self) -> WriteBufferConfig {
        self.config
    }

    pub fn occupancy(&self) -> u32 {
        self.entries.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Occupancy at which the buffer is drained ahead of other traffic.
    pub fn high_watermark(&self) -> u32 {
        self.config.depth.saturating_sub(1)
    }

    /// Parks a write that lost arbitration. Returns false when the buffer
    /// is disabled or full; the master then keeps requesting.
    pub fn try_posted_write(&mut self, txn: Transaction, cycle: Cycle) -> bool {
        debug_assert_eq!(txn.op, Op::Write);
        if !self.config.enabled || self.occupancy() >= self.config.depth {
            return false;
        }
        self.entries.push_back(WriteBufferEntry {
            txn,
            enqueue_cycle: cycle,
        });
        true
    }

    /// The head write, surfaced as the pseudo-master's pending request.
    pub fn drain_request(&self) -> Option<&Transaction> {
        self.entries.front().map(|e| &e.txn)
    }

    /// Removes the head once the pseudo-master has been granted.
    pub fn pop_head(&mut self) -> Option<WriteBufferEntry> {
        self.entries.pop_front()
    }

    /// True if `txn` touches bytes of any buffered write.
    pub fn conflicts_with(&self, txn: &Transaction, bus_bytes: u64) -> bool {
        self.entries.iter().any(|e| e.txn.overlaps(txn, bus_bytes))
    }

    pub fn entries(&self) -> impl Iterator<Item = &WriteBufferEntry> {
        self.entries.iter()
    }

    pub fn record_occupancy(&mut self) {
        let level = self.entries.len();
        self.occupancy_histogram[level] += 1;
    }

    pub fn occupancy_histogram(&self) -> &[u64] {
        &self.occupancy_histogram
    }
}
