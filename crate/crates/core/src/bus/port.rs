//! Transaction-level master port.
//!
//! A master drives the bus through four calls instead of pin wiggling:
//! `request`, `check_grant`, then `read` or `write` once granted (or once a
//! write has been posted), and `observe` to pick up completions.

use thiserror::Error;

use crate::ddrc::{AddressError, AddressMap};
use crate::signals::SystemBoard;
use crate::types::{Burst, Cycle, MasterId, Op, Transaction, TxnError, TxnId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortError {
    #[error("master {0} already has an outstanding request")]
    OutstandingRequest(MasterId),
    #[error("master {0} does not hold the grant")]
    NotGranted(MasterId),
    #[error(transparent)]
    Misaligned(#[from] TxnError),
    #[error(transparent)]
    AddressOutOfRange(#[from] AddressError),
    #[error("{call} does not match the outstanding request {expected}")]
    Mismatch { call: &'static str, expected: TxnId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompletionDescriptor {
    pub first_data_cycle: Cycle,
    pub done_cycle: Cycle,
    pub beats: u32,
}

impl CompletionDescriptor {
    fn of(txn: &Transaction) -> Option<Self> {
        Some(CompletionDescriptor {
            first_data_cycle: txn.first_data_cycle?,
            done_cycle: txn.done_cycle?,
            beats: txn.beats(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Pending(TxnId),
    Done(CompletionDescriptor),
}

/// What a master learns from one committed board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortEvent {
    Granted(TxnId),
    Posted(Transaction),
    Completed(Transaction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PortState {
    Idle,
    Requested(Transaction),
    Granted(Transaction),
    Posted(Transaction),
    InFlight(Transaction),
}

#[derive(Debug, Clone)]
pub struct MasterPort {
    id: MasterId,
    map: AddressMap,
    bus_width_bits: u32,
    state: PortState,
    /// Request raised this cycle, not yet published.
    raised: Option<Transaction>,
}

impl MasterPort {
    pub fn new(id: MasterId, map: AddressMap, bus_width_bits: u32) -> Self {
        MasterPort {
            id,
            map,
            bus_width_bits,
            state: PortState::Idle,
            raised: None,
        }
    }

    pub fn id(&self) -> MasterId {
        self.id
    }

    pub fn is_idle(&self) -> bool {
        self.state == PortState::Idle
    }

    /// True while a request is waiting for a grant.
    pub fn is_requesting(&self) -> bool {
        matches!(self.state, PortState::Requested(_))
    }

    /// Raises a request; it joins the arbitration pool next cycle.
    pub fn request(&mut self, seq: u32, op: Op, addr: u64, burst: Burst, cycle: Cycle) -> Result<TxnId, PortError> {
        if self.state != PortState::Idle {
            return Err(PortError::OutstandingRequest(self.id));
        }
        let mut txn = Transaction::new(TxnId::new(self.id, seq), self.id, op, addr, burst, self.bus_width_bits)?;
        self.map.check_range(addr, burst.beats())?;
        txn.issue_cycle = Some(cycle);
        self.state = PortState::Requested(txn);
        self.raised = Some(txn);
        Ok(txn.id)
    }

    /// The request pulse to publish this cycle.
    pub fn take_request(&mut self) -> Option<Transaction> {
        self.raised.take()
    }

    /// True iff the last committed arbitration granted this master.
    pub fn check_grant(&self, board: &SystemBoard) -> bool {
        board
            .bus
            .decision
            .and_then(|d| d.granted)
            .is_some_and(|s| s == self.id.slot())
    }

    /// Latches grant, posting and completion news from the committed board.
    pub fn observe(&mut self, board: &SystemBoard) -> Option<PortEvent> {
        match self.state {
            PortState::Requested(txn) => {
                if self.check_grant(board) {
                    self.state = PortState::Granted(txn);
                    return Some(PortEvent::Granted(txn.id));
                }
                let posted = board.bus.posted.iter().find(|t| t.id == txn.id)?;
                self.state = PortState::Posted(*posted);
                Some(PortEvent::Posted(*posted))
            }
            PortState::InFlight(txn) => {
                let done = board.ddrc.completed.filter(|c| c.txn.id == txn.id)?;
                self.state = PortState::Idle;
                Some(PortEvent::Completed(done.txn))
            }
            _ => None,
        }
    }

    fn start(&mut self, call: &'static str, op: Op, addr: u64, burst: Burst) -> Result<Completion, PortError> {
        self.map.check_range(addr, burst.beats())?;
        let txn = match self.state {
            PortState::Granted(t) | PortState::Posted(t) => t,
            PortState::Requested(t) if op == Op::Write => return Ok(Completion::Pending(t.id)),
            _ => return Err(PortError::NotGranted(self.id)),
        };
        if txn.op != op || txn.addr != addr || txn.burst != burst {
            return Err(PortError::Mismatch { call, expected: txn.id });
        }
        if let PortState::Posted(t) = self.state {
            self.state = PortState::Idle;
            let d = CompletionDescriptor::of(&t).expect("posted writes are stamped");
            return Ok(Completion::Done(d));
        }
        self.state = PortState::InFlight(txn);
        Ok(Completion::Pending(txn.id))
    }

    /// Starts the data phase of a granted read.
    pub fn read(&mut self, addr: u64, burst: Burst) -> Result<Completion, PortError> {
        self.start("read", Op::Read, addr, burst)
    }

    /// Starts a granted write, or collects the completion of a posted one.
    /// Before either has happened the write simply stays pending.
    pub fn write(&mut self, addr: u64, burst: Burst, beats: u32) -> Result<Completion, PortError> {
        if beats != burst.beats() {
            return Err(PortError::Mismatch {
                call: "write",
                expected: self.current().map(|t| t.id).unwrap_or(TxnId(0)),
            });
        }
        self.start("write", Op::Write, addr, burst)
    }

    fn current(&self) -> Option<Transaction> {
        match self.state {
            PortState::Idle => None,
            PortState::Requested(t) | PortState::Granted(t) | PortState::Posted(t) | PortState::InFlight(t) => Some(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::GrantDecision;
    use crate::ddrc::CompletedTxn;
    use crate::types::{CandidateSet, Slot};

    fn port() -> MasterPort {
        MasterPort::new(MasterId(3), AddressMap::new(64, 8, 2, 13).unwrap(), 64)
    }

    fn granted_board(slot: Option<Slot>) -> SystemBoard {
        let mut b = SystemBoard::new(4, 4);
        b.bus.decision = Some(GrantDecision {
            granted: slot,
            filter_trace: [slot.map(CandidateSet::single).unwrap_or_default(); 7],
            cycle: 0,
        });
        b
    }

    #[test]
    fn one_outstanding_request() {
        let mut p = port();
        p.request(0, Op::Read, 0x40, Burst::Incr4, 0).unwrap();
        assert_eq!(p.request(1, Op::Read, 0x80, Burst::Incr4, 0), Err(PortError::OutstandingRequest(MasterId(3))));
        assert!(p.take_request().is_some());
        assert!(p.take_request().is_none());
    }

    #[test]
    fn misaligned_and_out_of_range() {
        let mut p = port();
        assert!(matches!(p.request(0, Op::Read, 0x41, Burst::Single, 0), Err(PortError::Misaligned(_))));
        assert!(matches!(
            p.request(0, Op::Read, 64 << 20, Burst::Single, 0),
            Err(PortError::AddressOutOfRange(_))
        ));
        assert!(p.is_idle());
    }

    #[test]
    fn check_grant_is_pure() {
        let p = port();
        assert!(p.check_grant(&granted_board(Some(Slot(3)))));
        assert!(!p.check_grant(&granted_board(Some(Slot(1)))));
        assert!(!p.check_grant(&granted_board(None)));
        assert!(!p.check_grant(&SystemBoard::new(4, 4)));
    }

    #[test]
    fn read_requires_grant() {
        let mut p = port();
        assert_eq!(p.read(0, Burst::Single), Err(PortError::NotGranted(MasterId(3))));
        p.request(0, Op::Read, 0, Burst::Single, 0).unwrap();
        assert_eq!(p.read(0, Burst::Single), Err(PortError::NotGranted(MasterId(3))));
        assert_eq!(p.observe(&granted_board(Some(Slot(3)))), Some(PortEvent::Granted(TxnId::new(MasterId(3), 0))));
        assert_eq!(p.read(0, Burst::Single), Ok(Completion::Pending(TxnId::new(MasterId(3), 0))));
    }

    #[test]
    fn read_completes_on_final_beat() {
        let mut p = port();
        let id = p.request(0, Op::Read, 0, Burst::Incr4, 0).unwrap();
        p.observe(&granted_board(Some(Slot(3))));
        p.read(0, Burst::Incr4).unwrap();
        let mut b = SystemBoard::new(4, 4);
        assert_eq!(p.observe(&b), None);
        let mut done = Transaction::new(id, MasterId(3), Op::Read, 0, Burst::Incr4, 64).unwrap();
        done.first_data_cycle = Some(8);
        done.done_cycle = Some(11);
        b.ddrc.completed = Some(CompletedTxn {
            txn: done,
            requester: Slot(3),
        });
        assert_eq!(p.observe(&b), Some(PortEvent::Completed(done)));
        assert!(p.is_idle());
    }

    #[test]
    fn posted_write_resolves_immediately() {
        let mut p = port();
        let id = p.request(0, Op::Write, 0x80, Burst::Incr8, 2).unwrap();
        assert_eq!(p.write(0x80, Burst::Incr8, 8), Ok(Completion::Pending(id)));
        let mut b = SystemBoard::new(4, 4);
        let mut t = Transaction::new(id, MasterId(3), Op::Write, 0x80, Burst::Incr8, 64).unwrap();
        t.first_data_cycle = Some(4);
        t.done_cycle = Some(4);
        b.bus.posted.push(t);
        assert_eq!(p.observe(&b), Some(PortEvent::Posted(t)));
        let c = p.write(0x80, Burst::Incr8, 8).unwrap();
        assert_eq!(
            c,
            Completion::Done(CompletionDescriptor {
                first_data_cycle: 4,
                done_cycle: 4,
                beats: 8
            })
        );
        assert!(p.is_idle());
    }
}
