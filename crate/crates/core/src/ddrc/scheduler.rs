//! Single-command-bus scheduler: column hits first, then activates, then
//! precharges, with demand traffic ahead of lookahead hints.

use super::bank::{BankPhase, BankState, DdrTiming};
use super::{DdrCommand, NextTxnInfo};
use crate::types::{Cycle, Op, TxnId};

/// A granted transaction waiting for its column command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingAccess {
    pub txn: TxnId,
    pub op: Op,
    pub bank: usize,
    pub row: u32,
    pub col: u32,
    pub beats: u32,
}

/// Cycle at which a column command issued at `cycle` puts its first beat on the data bus.
pub fn first_beat_cycle(op: Op, cycle: Cycle, timing: &DdrTiming) -> Cycle {
    match op {
        Op::Read => cycle + Cycle::from(timing.t_cl),
        Op::Write => cycle + 1,
    }
}

fn head(demand: &[PendingAccess], bank: usize) -> Option<&PendingAccess> {
    demand.iter().find(|d| d.bank == bank)
}

fn tras_met(bank: &BankState, cycle: Cycle, timing: &DdrTiming) -> bool {
    bank.active_since
        .is_none_or(|since| cycle >= since + Cycle::from(timing.t_ras))
}

/// Picks the highest-priority legal command for this cycle. `demand` is in
/// grant order; only the oldest entry per bank is eligible. Ties go to the
/// lowest bank index.
pub fn schedule_command(
    demand: &[PendingAccess],
    hints: &[Option<NextTxnInfo>],
    banks: &[BankState],
    data_bus_free_at: Cycle,
    cycle: Cycle,
    timing: &DdrTiming,
) -> DdrCommand {
    for (b, bank) in banks.iter().enumerate() {
        let Some(h) = head(demand, b) else { continue };
        if bank.phase == (BankPhase::Active { row: h.row }) && first_beat_cycle(h.op, cycle, timing) >= data_bus_free_at {
            return match h.op {
                Op::Read => DdrCommand::ColRead {
                    bank: b,
                    col: h.col,
                    beats: h.beats,
                    txn: h.txn,
                },
                Op::Write => DdrCommand::ColWrite {
                    bank: b,
                    col: h.col,
                    beats: h.beats,
                    txn: h.txn,
                },
            };
        }
    }
    for (b, bank) in banks.iter().enumerate() {
        if let Some(h) = head(demand, b) {
            if bank.is_idle() {
                return DdrCommand::Activate { bank: b, row: h.row };
            }
        }
    }
    for (b, bank) in banks.iter().enumerate() {
        if let Some(Some(hint)) = hints.get(b) {
            if head(demand, b).is_none() && bank.is_idle() {
                return DdrCommand::Activate { bank: b, row: hint.row };
            }
        }
    }
    for (b, bank) in banks.iter().enumerate() {
        if let (Some(h), BankPhase::Active { row }) = (head(demand, b), bank.phase) {
            if row != h.row && tras_met(bank, cycle, timing) {
                return DdrCommand::Precharge { bank: b };
            }
        }
    }
    for (b, bank) in banks.iter().enumerate() {
        if let (Some(Some(hint)), BankPhase::Active { row }) = (hints.get(b), bank.phase) {
            if head(demand, b).is_none() && row != hint.row && tras_met(bank, cycle, timing) {
                return DdrCommand::Precharge { bank: b };
            }
        }
    }
    DdrCommand::Nop
}
