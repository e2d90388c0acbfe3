//! The AHB+ main bus: request pool, filtered arbitration, a two-deep
//! request pipeline toward the DDR controller and the posted-write buffer.
//!
//! Pipeline slots:
//!
//! * `addr` holds the transaction handed to the controller that is still
//!   waiting for its column command;
//! * `next` holds the following grant. Its bank and row are sent ahead as
//!   a [`NextTxnInfo`] hint so the controller can open the row early.
//!
//! When the controller reports the column command for `addr`, `next` is
//! promoted and forwarded. Arbitration only runs while `next` is free.

pub mod arbiter;
pub mod port;

use std::any::Any;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arbiter::{apply_filter, arbitrate, round_robin, Candidate, FilterContext, GrantDecision, FILTER_COUNT, FILTER_NAMES};
pub use port::{Completion, CompletionDescriptor, MasterPort, PortError, PortEvent};

use crate::checker::{Rule, Violation};
use crate::ddrc::{AddressMap, NextTxnInfo};
use crate::kernel::Component;
use crate::signals::{BusSignals, Forwarded, SystemBoard};
use crate::types::{CandidateSet, Cycle, MasterId, Op, Slot, Transaction};
use crate::write_buffer::{WriteBuffer, WriteBufferConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusConfig {
    pub bus_width_bits: u32,
    pub filter_enabled: [bool; FILTER_COUNT],
    pub rr_pointer_init: u8,
    pub qos_urgency_threshold: u32,
    /// Static rank per master; missing entries rank 0.
    pub static_priority: Vec<u32>,
    pub next_info_hints: bool,
    pub write_buffer: WriteBufferConfig,
    /// Cycles a non-real-time requester may wait before bank preferences
    /// stop applying to it.
    pub starvation_guard: Cycle,
}

impl Default for BusConfig {
    fn default() -> Self {
        BusConfig {
            bus_width_bits: 64,
            filter_enabled: [true; FILTER_COUNT],
            rr_pointer_init: 0,
            qos_urgency_threshold: DEFAULT_QOS_URGENCY_THRESHOLD,
            static_priority: Vec::new(),
            next_info_hints: true,
            write_buffer: WriteBufferConfig::default(),
            starvation_guard: DEFAULT_STARVATION_GUARD,
        }
    }
}

pub const DEFAULT_QOS_URGENCY_THRESHOLD: u32 = 24;
pub const DEFAULT_STARVATION_GUARD: Cycle = 5_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("unknown master {0}")]
    UnknownMaster(MasterId),
    #[error("real-time master {0} needs a positive QoS objective")]
    ZeroObjective(MasterId),
    #[error("at most {} masters are supported", Slot::MAX_MASTERS)]
    TooManyMasters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QosRecord {
    pub rt: bool,
    /// Longest tolerated wait, in cycles, between grants while requesting.
    pub objective: u32,
    pub since_last_grant: u32,
    pub violations: u64,
}

impl QosRecord {
    pub fn slack(&self) -> i64 {
        i64::from(self.objective) - i64::from(self.since_last_grant)
    }
}

#[derive(Debug, Clone, Copy)]
struct Granted {
    txn: Transaction,
    requester: Slot,
}

#[derive(Clone)]
pub struct Bus {
    config: BusConfig,
    map: AddressMap,
    qos: Vec<QosRecord>,
    rr_next: u8,
    pending: Vec<Option<Transaction>>,
    addr_slot: Option<Granted>,
    next_slot: Option<Granted>,
    wb: WriteBuffer,
    candidates: Vec<Candidate>,
    /// Cycles each slot has been in the pool without a grant or post.
    wait: Vec<Cycle>,
    grants: u64,
    out: BusSignals,
}

impl Bus {
    pub fn new(config: BusConfig, map: AddressMap, masters: usize) -> Result<Self, BusError> {
        if masters > Slot::MAX_MASTERS {
            return Err(BusError::TooManyMasters);
        }
        Ok(Bus {
            rr_next: config.rr_pointer_init % 64,
            wb: WriteBuffer::new(config.write_buffer),
            config,
            map,
            qos: vec![QosRecord::default(); masters],
            pending: vec![None; masters],
            addr_slot: None,
            next_slot: None,
            candidates: Vec::with_capacity(masters + 1),
            wait: vec![0; 64],
            grants: 0,
            out: BusSignals::default(),
        })
    }

    pub fn set_qos(&mut self, master: MasterId, rt: bool, objective: u32) -> Result<(), BusError> {
        let record = self.qos.get_mut(master.index()).ok_or(BusError::UnknownMaster(master))?;
        if rt && objective == 0 {
            return Err(BusError::ZeroObjective(master));
        }
        *record = QosRecord {
            rt,
            objective,
            since_last_grant: 0,
            violations: 0,
        };
        Ok(())
    }

    pub fn qos(&self, master: MasterId) -> Option<&QosRecord> {
        self.qos.get(master.index())
    }

    pub fn qos_records(&self) -> &[QosRecord] {
        &self.qos
    }

    pub fn write_buffer(&self) -> &WriteBuffer {
        &self.wb
    }

    pub fn grants(&self) -> u64 {
        self.grants
    }

    fn candidate(&self, slot: Slot, txn: &Transaction) -> Result<Candidate, Violation> {
        let d = self.map.decode(txn.addr).map_err(|e| {
            Violation::fatal(txn.issue_cycle.unwrap_or(0), Rule::PortProtocol, format!("request {}: {e}", txn.id))
        })?;
        let (rt, slack, priority) = match slot.master() {
            Some(m) => {
                let q = &self.qos[m.index()];
                (q.rt, q.slack(), self.config.static_priority.get(m.index()).copied().unwrap_or(0))
            }
            None => (false, i64::MAX, 0),
        };
        let hazard = !slot.is_write_buffer() && self.wb.conflicts_with(txn, self.map.bus_bytes());
        let overdue = if rt {
            slack <= i64::from(self.config.qos_urgency_threshold)
        } else {
            self.wait[slot.0 as usize] >= self.config.starvation_guard
        };
        Ok(Candidate {
            slot,
            op: txn.op,
            bank: d.bank,
            row: d.row,
            rt,
            slack,
            priority,
            hazard,
            overdue,
        })
    }

    fn hint_for(&self, g: &Granted) -> Option<NextTxnInfo> {
        let d = self.map.decode(g.txn.addr).ok()?;
        Some(NextTxnInfo {
            txn: g.txn.id,
            bank: d.bank,
            row: d.row,
            op: g.txn.op,
            master: g.requester,
        })
    }

    fn step(&mut self, cycle: Cycle, board: &SystemBoard) -> Result<(), Violation> {
        for (i, signals) in board.masters.iter().enumerate() {
            if let Some(txn) = signals.request {
                if self.pending[i].is_some() {
                    return Err(Violation::fatal(
                        cycle,
                        Rule::PortProtocol,
                        format!("master {i} raised {} while {} is still pending", txn.id, self.pending[i].unwrap().id),
                    ));
                }
                self.pending[i] = Some(txn);
            }
        }

        let mut forward = None;
        if let (Some(issued), Some(addr)) = (board.ddrc.col_issued, self.addr_slot) {
            if issued == addr.txn.id {
                self.addr_slot = self.next_slot.take();
                forward = self.addr_slot;
            }
        }

        let mut pool = CandidateSet::EMPTY;
        self.candidates.clear();
        for i in 0..self.pending.len() {
            if let Some(txn) = self.pending[i] {
                let slot = MasterId(i as u16).slot();
                let c = self.candidate(slot, &txn)?;
                self.candidates.push(c);
                pool.insert(slot);
            }
        }
        if let Some(head) = self.wb.drain_request() {
            let c = self.candidate(Slot::WRITE_BUFFER, head)?;
            self.candidates.push(c);
            pool.insert(Slot::WRITE_BUFFER);
        }

        let mut decision = None;
        let mut granted_slot = None;
        let mut hint = None;
        let mut wb_drained = None;
        if self.next_slot.is_none() && !pool.is_empty() {
            let ctx = FilterContext {
                candidates: &self.candidates,
                report: &board.ddrc.report,
                enabled: self.config.filter_enabled,
                qos_urgency_threshold: self.config.qos_urgency_threshold,
                wb_occupancy: self.wb.occupancy(),
                wb_high_watermark: self.wb.high_watermark(),
                wb_hazard: self.candidates.iter().any(|c| c.hazard),
                rr_next: self.rr_next,
            };
            let d = arbitrate(pool, &ctx, cycle);
            if let Some(slot) = d.granted {
                let mut txn = match slot.master() {
                    Some(m) => self.pending[m.index()].take().expect("granted master is pending"),
                    None => {
                        let entry = self.wb.pop_head().expect("granted write buffer is non-empty");
                        wb_drained = Some(entry.txn.id);
                        entry.txn
                    }
                };
                txn.grant_cycle = Some(cycle);
                let g = Granted { txn, requester: slot };
                if self.addr_slot.is_none() {
                    self.addr_slot = Some(g);
                    forward = Some(g);
                } else {
                    self.next_slot = Some(g);
                    if self.config.next_info_hints {
                        hint = self.hint_for(&g);
                    }
                }
                // the write buffer does not take a turn in the master rotation
                if let Some(m) = slot.master() {
                    self.qos[m.index()].since_last_grant = 0;
                    self.rr_next = (slot.0 + 1) % 64;
                }
                self.grants += 1;
                granted_slot = Some(slot);
            }
            decision = Some(d);
        }

        let mut posted = Vec::new();
        for i in 0..self.pending.len() {
            let Some(txn) = self.pending[i] else { continue };
            if txn.op != Op::Write || !self.wb.try_posted_write(txn, cycle) {
                continue;
            }
            self.pending[i] = None;
            self.qos[i].since_last_grant = 0;
            let mut done = txn;
            done.first_data_cycle = Some(cycle);
            done.done_cycle = Some(cycle);
            posted.push(done);
        }

        for (i, w) in self.wait.iter_mut().enumerate() {
            let slot = Slot(i as u8);
            let served = granted_slot == Some(slot) || posted.iter().any(|t| t.master.slot() == slot);
            *w = if pool.contains(slot) && !served { *w + 1 } else { 0 };
        }

        let mut crossings = CandidateSet::EMPTY;
        for (i, q) in self.qos.iter_mut().enumerate() {
            if q.rt && self.pending[i].is_some() {
                q.since_last_grant += 1;
                if q.since_last_grant == q.objective + 1 {
                    q.violations += 1;
                    crossings.insert(MasterId(i as u16).slot());
                }
            }
        }

        self.wb.record_occupancy();

        let busy = !self.is_idle();
        let out = &mut self.out;
        out.pool = pool;
        out.decision = decision;
        out.granted = granted_slot.map(CandidateSet::single).unwrap_or_default();
        out.forward = forward.map(|g| Forwarded {
            txn: g.txn,
            requester: g.requester,
        });
        out.hint = hint;
        out.posted = posted;
        out.wb_occupancy = self.wb.occupancy();
        out.wb_drained = wb_drained;
        out.qos_crossings = crossings;
        out.busy = busy;
        Ok(())
    }

    fn is_idle(&self) -> bool {
        self.addr_slot.is_none() && self.next_slot.is_none() && self.wb.is_empty() && self.pending.iter().all(Option::is_none)
    }
}

impl Component<SystemBoard> for Bus {
    fn name(&self) -> &str {
        "bus"
    }

    fn eval(&mut self, cycle: Cycle, committed: &SystemBoard) -> Result<(), Violation> {
        self.step(cycle, committed)
    }

    fn commit(&mut self, next: &mut SystemBoard) {
        next.bus.clone_from(&self.out);
    }

    fn is_quiescent(&self) -> bool {
        self.is_idle()
    }

    fn box_clone(&self) -> Box<dyn Component<SystemBoard>> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
