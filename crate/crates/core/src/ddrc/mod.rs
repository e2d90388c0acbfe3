//! Transaction-level DDR controller.
//!
//! Granted transactions arrive from the bus in grant order. Each bank runs
//! its own state machine; one command per cycle is chosen by
//! [`schedule_command`]. Next-transaction hints let the controller
//! precharge and activate a bank ahead of demand while another bank is
//! bursting. Data beats are tokens; with functional memory enabled, write
//! beats store address-tagged values and read beats check them.

mod address;
mod bank;
mod scheduler;

use std::any::Any;
use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

pub use address::{AddressError, AddressMap, DecodedAddr};
pub use bank::{bank_step, BankPhase, BankState, DdrTiming, IllegalCommand};
pub use scheduler::{first_beat_cycle, schedule_command, PendingAccess};

use crate::checker::{Rule, Violation};
use crate::kernel::Component;
use crate::signals::{DdrcSignals, SystemBoard};
use crate::types::{Cycle, Op, Slot, Transaction, TxnId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum DdrCommand {
    Activate {
        bank: usize,
        row: u32,
    },
    ColRead {
        bank: usize,
        col: u32,
        beats: u32,
        txn: TxnId,
    },
    ColWrite {
        bank: usize,
        col: u32,
        beats: u32,
        txn: TxnId,
    },
    Precharge {
        bank: usize,
    },
    #[default]
    Nop,
}

impl DdrCommand {
    pub fn bank(&self) -> Option<usize> {
        match *self {
            DdrCommand::Activate { bank, .. }
            | DdrCommand::ColRead { bank, .. }
            | DdrCommand::ColWrite { bank, .. }
            | DdrCommand::Precharge { bank } => Some(bank),
            DdrCommand::Nop => None,
        }
    }
}

/// Bus-interface notice about a granted transaction that has not started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextTxnInfo {
    pub txn: TxnId,
    pub bank: usize,
    pub row: u32,
    pub op: Op,
    pub master: Slot,
}

/// Bus-interface bank status consumed by the arbiter one cycle later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BankReport {
    pub idle: bool,
    pub open_row: Option<u32>,
    /// Access permission denied: bank is bursting or precharging.
    pub blocked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatEvent {
    pub txn: TxnId,
    pub index: u32,
    pub cycle: Cycle,
    pub op: Op,
    pub requester: Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletedTxn {
    pub txn: Transaction,
    pub requester: Slot,
}

/// A burst whose column command has been issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveBurst {
    pub txn: Transaction,
    pub requester: Slot,
    pub first_beat: Cycle,
    pub next_index: u32,
}

/// Test-only faults that make the controller misbehave on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdrcFault {
    /// Schedule and sequence banks with this timing instead of the declared one.
    TimingSkew(DdrTiming),
    /// Issue a column read to an idle bank at the first idle opportunity from this cycle on.
    IllegalCommandFrom(Cycle),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DdrcConfig {
    pub map: AddressMap,
    pub timing: DdrTiming,
    pub functional_memory: bool,
}

/// Per-bank status snapshot for the arbiter's access-permission and idle-bank filters.
pub fn idle_bank_report(banks: &[BankState], demand: &[PendingAccess], hints: &[Option<NextTxnInfo>]) -> Vec<BankReport> {
    banks
        .iter()
        .enumerate()
        .map(|(b, bank)| {
            let queued = hints
                .get(b)
                .copied()
                .flatten()
                .map(|h| h.row)
                .or_else(|| demand.iter().rev().find(|d| d.bank == b).map(|d| d.row));
            BankReport {
                idle: bank.is_idle() && queued.is_none(),
                open_row: queued.or(bank.open_row()),
                blocked: bank.is_blocked(),
            }
        })
        .collect()
}

/// Emits the beat due at `cycle`, if any, stamping the owning transaction.
/// Bursts occupy disjoint data-bus windows in issue order, so only the
/// front burst can be delivering.
pub fn deliver_beats(bursts: &mut VecDeque<ActiveBurst>, cycle: Cycle) -> (Option<BeatEvent>, Option<CompletedTxn>) {
    let Some(front) = bursts.front_mut() else {
        return (None, None);
    };
    if front.first_beat + Cycle::from(front.next_index) != cycle {
        return (None, None);
    }
    let beat = BeatEvent {
        txn: front.txn.id,
        index: front.next_index,
        cycle,
        op: front.txn.op,
        requester: front.requester,
    };
    if front.next_index == 0 {
        front.txn.first_data_cycle = Some(cycle);
    }
    front.next_index += 1;
    if front.next_index < front.txn.beats() {
        return (Some(beat), None);
    }
    let mut done = bursts.pop_front().expect("front exists");
    done.txn.done_cycle = Some(cycle);
    (
        Some(beat),
        Some(CompletedTxn {
            txn: done.txn,
            requester: done.requester,
        }),
    )
}

/// Value stored by a functional write beat: the beat address in the high
/// bits, the writer in the low bits.
pub fn beat_token(addr: u64, txn: &Transaction) -> u64 {
    (addr << 24) | (u64::from(txn.master.0 & 0xfff) << 12) | u64::from(txn.id.seq() & 0xfff)
}

#[derive(Clone)]
pub struct Ddrc {
    map: AddressMap,
    timing: DdrTiming,
    banks: Vec<BankState>,
    demand: Vec<PendingAccess>,
    demand_txns: Vec<(Transaction, Slot)>,
    hints: Vec<Option<NextTxnInfo>>,
    bursts: VecDeque<ActiveBurst>,
    data_bus_free_at: Cycle,
    memory: Option<HashMap<u64, u64>>,
    read_mismatches: u64,
    fault: Option<DdrcFault>,
    out: DdrcSignals,
}

impl Ddrc {
    pub fn new(config: DdrcConfig) -> Self {
        let banks = config.map.banks();
        Ddrc {
            map: config.map,
            timing: config.timing,
            banks: vec![BankState::default(); banks],
            demand: Vec::new(),
            demand_txns: Vec::new(),
            hints: vec![None; banks],
            bursts: VecDeque::new(),
            data_bus_free_at: 0,
            memory: config.functional_memory.then(HashMap::new),
            read_mismatches: 0,
            fault: None,
            out: DdrcSignals {
                banks: vec![BankState::default(); banks],
                report: vec![BankReport::default(); banks],
                ..DdrcSignals::default()
            },
        }
    }

    pub fn with_fault(mut self, fault: DdrcFault) -> Self {
        if let DdrcFault::TimingSkew(t) = fault {
            self.timing = t;
        }
        self.fault = Some(fault);
        self
    }

    pub fn banks(&self) -> &[BankState] {
        &self.banks
    }

    /// Functional memory contents sorted by address, when enabled.
    pub fn memory_snapshot(&self) -> Option<Vec<(u64, u64)>> {
        self.memory.as_ref().map(|m| {
            let mut v: Vec<_> = m.iter().map(|(a, t)| (*a, *t)).collect();
            v.sort_unstable();
            v
        })
    }

    pub fn read_mismatches(&self) -> u64 {
        self.read_mismatches
    }

    /// Takes a granted transaction into the demand queue.
    pub fn accept_transaction(&mut self, txn: Transaction, requester: Slot) -> Result<(), AddressError> {
        let d = self.map.decode(txn.addr)?;
        if let Some(hint) = self.hints[d.bank] {
            if hint.txn == txn.id {
                self.hints[d.bank] = None;
            }
        }
        self.demand.push(PendingAccess {
            txn: txn.id,
            op: txn.op,
            bank: d.bank,
            row: d.row,
            col: d.col,
            beats: txn.beats(),
        });
        self.demand_txns.push((txn, requester));
        Ok(())
    }

    /// Records advance notice of the next transaction; replaces any
    /// earlier hint for the same bank.
    pub fn accept_next_info(&mut self, info: NextTxnInfo) {
        if let Some(slot) = self.hints.get_mut(info.bank) {
            *slot = Some(info);
        }
    }

    fn functional_beat(&mut self, beat: &BeatEvent) {
        let Some(memory) = self.memory.as_mut() else { return };
        let txn = match self.bursts.front() {
            Some(b) if b.txn.id == beat.txn => b.txn,
            _ => return,
        };
        let addr = txn.addr + u64::from(beat.index) * self.map.bus_bytes();
        match beat.op {
            Op::Write => {
                memory.insert(addr, beat_token(addr, &txn));
            }
            Op::Read => {
                if let Some(v) = memory.get(&addr) {
                    if v >> 24 != addr {
                        self.read_mismatches += 1;
                    }
                }
            }
        }
    }

    fn injected_command(&self, cycle: Cycle) -> Option<DdrCommand> {
        match self.fault {
            Some(DdrcFault::IllegalCommandFrom(from)) if cycle >= from => {
                self.banks.iter().position(|b| b.is_idle()).map(|bank| DdrCommand::ColRead {
                    bank,
                    col: 0,
                    beats: 1,
                    txn: TxnId(u64::MAX),
                })
            }
            _ => None,
        }
    }

    fn step(&mut self, cycle: Cycle, board: &SystemBoard) -> Result<(), Violation> {
        if let Some(fwd) = board.bus.forward {
            self.accept_transaction(fwd.txn, fwd.requester).map_err(|e| {
                Violation::fatal(cycle, Rule::IllegalCommand, format!("forwarded transaction: {e}"))
            })?;
        }
        if let Some(info) = board.bus.hint {
            self.accept_next_info(info);
        }

        for bank in &mut self.banks {
            *bank = bank_step(bank, None, cycle, &self.timing).expect("tick is infallible");
        }

        let cmd = self.injected_command(cycle).unwrap_or_else(|| {
            schedule_command(&self.demand, &self.hints, &self.banks, self.data_bus_free_at, cycle, &self.timing)
        });
        let mut col_issued = None;
        if let Some(b) = cmd.bank() {
            self.banks[b] = bank_step(&self.banks[b], Some(&cmd), cycle, &self.timing)
                .map_err(|e| Violation::fatal(cycle, Rule::IllegalCommand, e.to_string()))?;
            if let DdrCommand::ColRead { txn, .. } | DdrCommand::ColWrite { txn, .. } = cmd {
                let idx = self.demand.iter().position(|d| d.txn == txn).expect("column for queued txn");
                let access = self.demand.remove(idx);
                let (txn, requester) = self.demand_txns.remove(idx);
                let first_beat = first_beat_cycle(access.op, cycle, &self.timing);
                self.data_bus_free_at = first_beat + Cycle::from(access.beats);
                self.bursts.push_back(ActiveBurst {
                    txn,
                    requester,
                    first_beat,
                    next_index: 0,
                });
                col_issued = Some(txn.id);
            }
        }

        let beat = match self.bursts.front() {
            Some(front) if front.first_beat + Cycle::from(front.next_index) == cycle => {
                let ev = BeatEvent {
                    txn: front.txn.id,
                    index: front.next_index,
                    cycle,
                    op: front.txn.op,
                    requester: front.requester,
                };
                self.functional_beat(&ev);
                Some(ev)
            }
            _ => None,
        };
        let (delivered, completed) = deliver_beats(&mut self.bursts, cycle);
        debug_assert_eq!(beat, delivered);

        self.out.command = cmd;
        self.out.banks.clone_from(&self.banks);
        self.out.report = idle_bank_report(&self.banks, &self.demand, &self.hints);
        self.out.beat = delivered;
        self.out.col_issued = col_issued;
        self.out.completed = completed;
        self.out.busy = !self.demand.is_empty() || !self.bursts.is_empty();
        Ok(())
    }
}

impl Component<SystemBoard> for Ddrc {
    fn name(&self) -> &str {
        "ddrc"
    }

    fn eval(&mut self, cycle: Cycle, committed: &SystemBoard) -> Result<(), Violation> {
        self.step(cycle, committed)
    }

    fn commit(&mut self, next: &mut SystemBoard) {
        next.ddrc.clone_from(&self.out);
    }

    fn is_quiescent(&self) -> bool {
        self.demand.is_empty() && self.bursts.is_empty()
    }

    fn box_clone(&self) -> Box<dyn Component<SystemBoard>> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::World;
    use crate::signals::Forwarded;
    use crate::types::{Burst, MasterId};

    fn config() -> DdrcConfig {
        DdrcConfig {
            map: AddressMap::new(64, 8, 2, 13).unwrap(),
            timing: DdrTiming::default(),
            functional_memory: false,
        }
    }

    fn txn(seq: u32, op: Op, addr: u64, burst: Burst) -> Transaction {
        let mut t = Transaction::new(TxnId::new(MasterId(0), seq), MasterId(0), op, addr, burst, 64).unwrap();
        t.issue_cycle = Some(0);
        t
    }

    /// Drives a lone controller; `forward`/`hint` entries are what the bus
    /// committed at that cycle, so the controller sees them one cycle later.
    fn drive(mut ddrc: Ddrc, inputs: &[(Cycle, Transaction)], hint: Option<(Cycle, NextTxnInfo)>, cycles: Cycle) -> Vec<SystemBoard> {
        let mut board = SystemBoard::new(0, 4);
        let mut boards = Vec::new();
        for cycle in 0..cycles {
            board.bus.forward = inputs.iter().find(|(c, _)| *c + 1 == cycle).map(|(_, t)| Forwarded {
                txn: *t,
                requester: t.master.slot(),
            });
            board.bus.hint = hint.filter(|(c, _)| *c + 1 == cycle).map(|(_, h)| h);
            ddrc.eval(cycle, &board).unwrap();
            let mut next = board.clone();
            ddrc.commit(&mut next);
            board = next;
            boards.push(board.clone());
        }
        boards
    }

    #[test]
    fn single_read_hand_trace() {
        // grant at g = 10 means the bus forwards at 10, controller sees it at 11
        let t = txn(0, Op::Read, 0, Burst::Single);
        let boards = drive(Ddrc::new(config()), &[(10, t)], None, 20);
        assert_eq!(boards[11].ddrc.command, DdrCommand::Activate { bank: 0, row: 0 });
        assert_eq!(boards[13].ddrc.banks[0].phase, BankPhase::Activating { row: 0, remaining: 1 });
        assert!(matches!(boards[14].ddrc.command, DdrCommand::ColRead { bank: 0, .. }));
        let beat = boards[17].ddrc.beat.unwrap();
        assert_eq!((beat.index, beat.cycle), (0, 17));
        let done = boards[17].ddrc.completed.unwrap().txn;
        assert_eq!(done.first_data_cycle, Some(17));
        assert_eq!(done.done_cycle, Some(17));
        assert!(boards[18..].iter().all(|b| b.ddrc.beat.is_none()));
    }

    #[test]
    fn incr8_beats_stream_back_to_back() {
        let t = txn(0, Op::Read, 0x40, Burst::Incr8);
        let boards = drive(Ddrc::new(config()), &[(10, t)], None, 30);
        let beats: Vec<_> = boards.iter().filter_map(|b| b.ddrc.beat).map(|b| (b.index, b.cycle)).collect();
        assert_eq!(beats, (0..8).map(|i| (i, 17 + i as Cycle)).collect::<Vec<_>>());
        let done = boards.iter().find_map(|b| b.ddrc.completed).unwrap().txn;
        assert_eq!(done.done_cycle.unwrap() - done.first_data_cycle.unwrap(), 7);
    }

    #[test]
    fn write_beats_start_after_column() {
        let t = txn(0, Op::Write, 0, Burst::Incr8);
        let boards = drive(Ddrc::new(config()), &[(10, t)], None, 30);
        assert!(matches!(boards[14].ddrc.command, DdrCommand::ColWrite { .. }));
        let done = boards.iter().find_map(|b| b.ddrc.completed).unwrap().txn;
        assert_eq!(done.first_data_cycle, Some(15));
        assert_eq!(done.done_cycle, Some(22));
    }

    #[test]
    fn hint_activates_second_bank_during_burst() {
        let map = config().map;
        let a = txn(0, Op::Read, map.encode(0, 0, 0), Burst::Incr8);
        let b_addr = map.encode(3, 2, 0);
        let info = NextTxnInfo {
            txn: TxnId::new(MasterId(0), 1),
            bank: 2,
            row: 3,
            op: Op::Read,
            master: Slot(0),
        };
        let boards = drive(Ddrc::new(config()), &[(0, a)], Some((5, info)), 30);
        let act = boards
            .iter()
            .position(|b| b.ddrc.command == DdrCommand::Activate { bank: 2, row: 3 })
            .expect("lookahead activate");
        let last_beat_a = boards.iter().filter_map(|b| b.ddrc.beat).map(|b| b.cycle).max().unwrap();
        assert!((act as Cycle) < last_beat_a, "activate {act} should precede end of burst {last_beat_a}");
        assert!(b_addr > 0);
    }

    #[test]
    fn report_reflects_state() {
        let banks = vec![
            BankState::default(),
            BankState {
                phase: BankPhase::Bursting {
                    row: 1,
                    remaining: 2,
                    txn: TxnId(0),
                },
                active_since: Some(0),
            },
            BankState {
                phase: BankPhase::Active { row: 5 },
                active_since: Some(0),
            },
        ];
        let report = idle_bank_report(&banks, &[], &[None, None, None]);
        assert!(report[0].idle && !report[0].blocked);
        assert!(report[1].blocked && !report[1].idle);
        assert_eq!(report[2].open_row, Some(5));
        let all_idle = idle_bank_report(&[BankState::default(); 4], &[], &[None; 4]);
        assert!(all_idle.iter().all(|r| r.idle && !r.blocked && r.open_row.is_none()));
    }

    #[test]
    fn functional_memory_round_trip() {
        let mut cfg = config();
        cfg.functional_memory = true;
        let w = txn(0, Op::Write, 0x100, Burst::Incr4);
        let r = txn(1, Op::Read, 0x100, Burst::Incr4);
        let mut world = World::new(SystemBoard::new(0, 4));
        let mut ddrc = Ddrc::new(cfg);
        ddrc.accept_transaction(w, Slot(0)).unwrap();
        ddrc.accept_transaction(r, Slot(0)).unwrap();
        world.register(Box::new(ddrc)).unwrap();
        world.run(60, true, |_, _| Ok(())).unwrap();
        let ddrc = world.component::<Ddrc>().unwrap();
        let mem = ddrc.memory_snapshot().unwrap();
        assert_eq!(mem.len(), 4);
        assert_eq!(mem[1], (0x108, beat_token(0x108, &w)));
        assert_eq!(ddrc.read_mismatches(), 0);
    }
}
