//! The committed signal board shared by masters, bus and DDR controller.
//!
//! Each field group is written by exactly one component during commit.

use serde::Serialize;

use crate::bus::GrantDecision;
use crate::ddrc::{BankReport, BankState, BeatEvent, CompletedTxn, DdrCommand, NextTxnInfo};
use crate::types::{CandidateSet, Slot, Transaction, TxnId};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SystemBoard {
    pub masters: Vec<MasterSignals>,
    pub bus: BusSignals,
    pub ddrc: DdrcSignals,
}

impl SystemBoard {
    pub fn new(masters: usize, banks: usize) -> Self {
        SystemBoard {
            masters: vec![MasterSignals::default(); masters],
            bus: BusSignals::default(),
            ddrc: DdrcSignals {
                banks: vec![BankState::default(); banks],
                report: vec![BankReport::default(); banks],
                ..DdrcSignals::default()
            },
        }
    }
}

/// Written by one master port.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MasterSignals {
    /// New request raised this cycle (one-cycle pulse).
    pub request: Option<Transaction>,
    /// Transaction the master saw complete this cycle.
    pub completed: Option<Transaction>,
    pub completed_count: u64,
    pub done: bool,
}

/// Written by the bus (arbiter, pipeline and write buffer).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BusSignals {
    /// Requesters pending this cycle, including the write-buffer pseudo-master.
    pub pool: CandidateSet,
    /// Arbitration result, when the pipeline had room to arbitrate.
    pub decision: Option<GrantDecision>,
    /// Slots granted this cycle.
    pub granted: CandidateSet,
    /// Transaction entering its address phase at the DDR controller.
    pub forward: Option<Forwarded>,
    /// Advance notice of the next granted transaction.
    pub hint: Option<NextTxnInfo>,
    /// Writes absorbed by the write buffer this cycle.
    pub posted: Vec<Transaction>,
    pub wb_occupancy: u32,
    pub wb_drained: Option<TxnId>,
    /// RT masters whose grant gap crossed their objective this cycle.
    pub qos_crossings: CandidateSet,
    pub busy: bool,
}

/// A granted transaction handed to the DDR controller, tagged with the
/// slot that won it (the write buffer for drained writes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Forwarded {
    pub txn: Transaction,
    pub requester: Slot,
}

/// Written by the DDR controller.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DdrcSignals {
    pub command: DdrCommand,
    pub banks: Vec<BankState>,
    pub report: Vec<BankReport>,
    pub beat: Option<BeatEvent>,
    pub col_issued: Option<TxnId>,
    pub completed: Option<CompletedTxn>,
    pub busy: bool,
}
