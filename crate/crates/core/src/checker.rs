//! Assertions over the committed signal board.
//!
//! Two families:
//!
//! * fatal self-checks catch states a correct model never produces (double
//!   grants, illegal bank transitions, timing breaches...). The first one
//!   aborts the run.
//! * protocol properties (QoS deadlines, starvation) are legal but
//!   undesirable outcomes. They are recorded and the run continues.
//!
//! The checker keeps its own shadow state (last activate/precharge per
//! bank, a FIFO model of the write buffer, per-slot wait counters) so it
//! does not trust the model's bookkeeping.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bus::FILTER_COUNT;
use crate::ddrc::{BankPhase, BankState, DdrCommand, DdrTiming};
use crate::signals::SystemBoard;
use crate::types::{Cycle, Op, Slot, TxnId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    FatalSelfCheck,
    ProtocolProperty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    GrantExclusivity,
    GrantRequester,
    FilterChain,
    FsmTransition,
    TimingTrcd,
    TimingTrp,
    TimingTras,
    TimingTcl,
    BufferBounds,
    BufferFifo,
    BeatConservation,
    IllegalCommand,
    PortProtocol,
    QosDeadline,
    Starvation,
}

impl Rule {
    pub const ALL: [Rule; 15] = [
        Rule::GrantExclusivity,
        Rule::GrantRequester,
        Rule::FilterChain,
        Rule::FsmTransition,
        Rule::TimingTrcd,
        Rule::TimingTrp,
        Rule::TimingTras,
        Rule::TimingTcl,
        Rule::BufferBounds,
        Rule::BufferFifo,
        Rule::BeatConservation,
        Rule::IllegalCommand,
        Rule::PortProtocol,
        Rule::QosDeadline,
        Rule::Starvation,
    ];

    pub fn kind(self) -> ViolationKind {
        match self {
            Rule::QosDeadline | Rule::Starvation => ViolationKind::ProtocolProperty,
            _ => ViolationKind::FatalSelfCheck,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Rule::GrantExclusivity => "grant-exclusivity",
            Rule::GrantRequester => "grant-requester",
            Rule::FilterChain => "filter-chain",
            Rule::FsmTransition => "fsm-transition",
            Rule::TimingTrcd => "timing-trcd",
            Rule::TimingTrp => "timing-trp",
            Rule::TimingTras => "timing-tras",
            Rule::TimingTcl => "timing-tcl",
            Rule::BufferBounds => "buffer-bounds",
            Rule::BufferFifo => "buffer-fifo",
            Rule::BeatConservation => "beat-conservation",
            Rule::IllegalCommand => "illegal-command",
            Rule::PortProtocol => "port-protocol",
            Rule::QosDeadline => "qos-deadline",
            Rule::Starvation => "starvation",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub cycle: Cycle,
    pub kind: ViolationKind,
    pub rule: Rule,
    pub message: String,
}

impl Violation {
    pub fn new(cycle: Cycle, rule: Rule, message: impl Into<String>) -> Self {
        Violation {
            cycle,
            kind: rule.kind(),
            rule,
            message: message.into(),
        }
    }

    pub fn fatal(cycle: Cycle, rule: Rule, message: impl Into<String>) -> Self {
        Violation {
            cycle,
            kind: ViolationKind::FatalSelfCheck,
            rule,
            message: message.into(),
        }
    }

    pub fn is_fatal(&self) -> bool {
        self.kind == ViolationKind::FatalSelfCheck
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cycle {}: {} ({})", self.cycle, self.rule, self.message)
    }
}

/// Faults injected into the checker's copy of each committed board. The
/// model itself runs unchanged; only what the checker sees is corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ViewFault {
    /// Report a second slot as granted alongside the real winner.
    DoubleGrant { after: Cycle },
    /// Hide the winner from the request pool.
    GrantNonRequester { after: Cycle },
    /// Let filter 4 output a slot filter 3 had removed.
    FilterExpand { after: Cycle },
    /// Flip an idle bank straight to Active.
    IllegalTransition { after: Cycle },
    /// Report one more buffered write than the depth allows.
    BufferOverflow { after: Cycle },
    /// Report the wrong transaction leaving the write buffer.
    FifoReorder { after: Cycle },
    /// Repeat the previous beat index of a burst.
    BeatDuplicate { after: Cycle },
    /// Keep `slot` in the request pool without ever granting it.
    PhantomRequest { slot: u8, after: Cycle, cycles: Cycle },
}

impl ViewFault {
    fn after(&self) -> Cycle {
        match *self {
            ViewFault::DoubleGrant { after }
            | ViewFault::GrantNonRequester { after }
            | ViewFault::FilterExpand { after }
            | ViewFault::IllegalTransition { after }
            | ViewFault::BufferOverflow { after }
            | ViewFault::FifoReorder { after }
            | ViewFault::BeatDuplicate { after }
            | ViewFault::PhantomRequest { after, .. } => after,
        }
    }

    /// Corrupts `board` in place; returns true if anything changed.
    pub fn apply(&self, cycle: Cycle, board: &mut SystemBoard, wb_depth: u32) -> bool {
        if cycle < self.after() {
            return false;
        }
        let bus = &mut board.bus;
        match *self {
            ViewFault::DoubleGrant { .. } => match bus.granted.only() {
                Some(g) => {
                    bus.granted.insert(Slot((g.0 + 1) % 63));
                    true
                }
                None => false,
            },
            ViewFault::GrantNonRequester { .. } => match bus.decision.and_then(|d| d.granted) {
                Some(g) => {
                    bus.pool.remove(g);
                    true
                }
                None => false,
            },
            ViewFault::FilterExpand { .. } => {
                let Some(d) = bus.decision.as_mut() else { return false };
                let Some(extra) = (0..64).map(Slot).find(|s| !d.filter_trace[2].contains(*s)) else {
                    return false;
                };
                d.filter_trace[3].insert(extra);
                true
            }
            ViewFault::IllegalTransition { .. } => match board.ddrc.banks.iter_mut().find(|b| b.is_idle()) {
                Some(bank) => {
                    bank.phase = BankPhase::Active { row: 0 };
                    true
                }
                None => false,
            },
            ViewFault::BufferOverflow { .. } => {
                bus.wb_occupancy = wb_depth + 1;
                true
            }
            ViewFault::FifoReorder { .. } => match bus.wb_drained {
                Some(_) => {
                    bus.wb_drained = Some(TxnId(u64::MAX));
                    true
                }
                None => false,
            },
            ViewFault::BeatDuplicate { .. } => match board.ddrc.beat.as_mut() {
                Some(beat) if beat.index > 0 => {
                    beat.index -= 1;
                    true
                }
                _ => false,
            },
            ViewFault::PhantomRequest { slot, after, cycles } => {
                if cycle >= after + cycles {
                    return false;
                }
                bus.pool.insert(Slot(slot));
                true
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckerConfig {
    pub timing: DdrTiming,
    pub banks: usize,
    pub wb_depth: u32,
    /// QoS objective per master slot for real-time masters.
    pub rt_objectives: Vec<Option<u32>>,
    pub starvation_bound: u64,
}

/// Starvation bound used when no master is real-time.
pub const DEFAULT_STARVATION_BOUND: u64 = 10_000;

impl CheckerConfig {
    /// Ten times the largest RT objective, or a fixed fallback.
    pub fn default_starvation_bound(rt_objectives: &[Option<u32>]) -> u64 {
        rt_objectives
            .iter()
            .flatten()
            .max()
            .map(|m| 10 * u64::from(*m))
            .unwrap_or(DEFAULT_STARVATION_BOUND)
    }
}

#[derive(Debug, Clone, Copy)]
struct ColRecord {
    cycle: Cycle,
    op: Op,
    beats: u32,
    delivered: u32,
}

#[derive(Debug, Clone)]
pub struct Checker {
    config: CheckerConfig,
    prev_banks: Vec<BankState>,
    last_activate: Vec<Option<Cycle>>,
    last_precharge: Vec<Option<Cycle>>,
    columns: HashMap<TxnId, ColRecord>,
    wb_model: VecDeque<TxnId>,
    qos_gap: [u64; 64],
    wait: [u64; 64],
    violations: Vec<Violation>,
}

fn phase_kind(p: &BankPhase) -> u8 {
    match p {
        BankPhase::Idle => 0,
        BankPhase::Activating { .. } => 1,
        BankPhase::Active { .. } => 2,
        BankPhase::Bursting { .. } => 3,
        BankPhase::Precharging { .. } => 4,
    }
}

/// Kinds a bank may reach from `prev` in one cycle given the command it
/// received: a tick, then the command applied to the ticked state.
fn transition_legal(prev: &BankPhase, next: &BankPhase, cmd: Option<&DdrCommand>) -> bool {
    const IDLE: u8 = 0;
    const ACTIVATING: u8 = 1;
    const ACTIVE: u8 = 2;
    const BURSTING: u8 = 3;
    const PRECHARGING: u8 = 4;
    let ticked: &[u8] = match phase_kind(prev) {
        IDLE => &[IDLE],
        ACTIVATING => &[ACTIVATING, ACTIVE],
        ACTIVE => &[ACTIVE],
        BURSTING => &[BURSTING, ACTIVE],
        _ => &[PRECHARGING, IDLE],
    };
    let next = phase_kind(next);
    match cmd {
        None | Some(DdrCommand::Nop) => ticked.contains(&next),
        Some(DdrCommand::Activate { .. }) => ticked.contains(&IDLE) && next == ACTIVATING,
        Some(DdrCommand::ColRead { .. } | DdrCommand::ColWrite { .. }) => ticked.contains(&ACTIVE) && next == BURSTING,
        Some(DdrCommand::Precharge { .. }) => ticked.contains(&ACTIVE) && next == PRECHARGING,
    }
}

impl Checker {
    pub fn new(config: CheckerConfig) -> Self {
        let banks = config.banks;
        Checker {
            config,
            prev_banks: vec![BankState::default(); banks],
            last_activate: vec![None; banks],
            last_precharge: vec![None; banks],
            columns: HashMap::new(),
            wb_model: VecDeque::new(),
            qos_gap: [0; 64],
            wait: [0; 64],
            violations: Vec::new(),
        }
    }

    pub fn config(&self) -> &CheckerConfig {
        &self.config
    }

    /// Every violation seen so far, fatal ones included.
    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn into_violations(self) -> Vec<Violation> {
        self.violations
    }

    /// Adds a violation raised elsewhere (e.g. a component self-check).
    pub fn record(&mut self, v: Violation) {
        self.violations.push(v);
    }

    /// Checks the board committed at the end of `cycle`. Returns the
    /// violations found this cycle; they are also kept in the log.
    pub fn check_cycle(&mut self, cycle: Cycle, board: &SystemBoard) -> Vec<Violation> {
        let mut found = Vec::new();
        let mut flag = |rule: Rule, msg: String| found.push(Violation::new(cycle, rule, msg));
        self.check_grants(board, &mut flag);
        self.check_banks(cycle, board, &mut flag);
        self.check_beats(cycle, board, &mut flag);
        self.check_buffer(board, &mut flag);
        self.check_waits(board, &mut flag);
        self.violations.extend(found.iter().cloned());
        found
    }

    fn check_grants(&self, board: &SystemBoard, flag: &mut impl FnMut(Rule, String)) {
        let bus = &board.bus;
        let winner = bus.decision.and_then(|d| d.granted);
        if bus.granted.len() > 1 || bus.granted.only() != winner {
            flag(Rule::GrantExclusivity, format!("granted {:?}, decision {:?}", bus.granted, winner));
        }
        if let Some(w) = winner {
            if !bus.pool.contains(w) {
                flag(Rule::GrantRequester, format!("slot {w} granted without a pending request"));
            }
        }
        if let Some(d) = bus.decision {
            let mut ok = true;
            for k in 1..FILTER_COUNT {
                let (prev, cur) = (d.filter_trace[k - 1], d.filter_trace[k]);
                ok &= cur.is_subset(prev) && (prev.is_empty() || !cur.is_empty());
            }
            ok &= d.filter_trace[0].is_empty() || d.filter_trace[FILTER_COUNT - 1].len() == 1;
            ok &= d.granted == d.filter_trace[FILTER_COUNT - 1].only();
            if !ok {
                flag(Rule::FilterChain, format!("unsound filter trace {:?}", d.filter_trace));
            }
        }
    }

    fn check_banks(&mut self, cycle: Cycle, board: &SystemBoard, flag: &mut impl FnMut(Rule, String)) {
        let t = self.config.timing;
        let cmd = board.ddrc.command;
        for (b, bank) in board.ddrc.banks.iter().enumerate() {
            let prev = self.prev_banks.get(b).copied().unwrap_or_default();
            let bank_cmd = (cmd.bank() == Some(b)).then_some(&cmd);
            if !transition_legal(&prev.phase, &bank.phase, bank_cmd) {
                flag(
                    Rule::FsmTransition,
                    format!("bank {b}: {:?} -> {:?} under {:?}", prev.phase, bank.phase, bank_cmd),
                );
            }
        }
        if let Some(b) = cmd.bank() {
            if b < self.last_activate.len() {
                let since = |last: Option<Cycle>| last.map(|l| cycle - l);
                match cmd {
                    DdrCommand::Activate { .. } => {
                        if let Some(d) = since(self.last_precharge[b]) {
                            if d < Cycle::from(t.t_rp) {
                                flag(Rule::TimingTrp, format!("bank {b}: activate {d} cycles after precharge"));
                            }
                        }
                        self.last_activate[b] = Some(cycle);
                    }
                    DdrCommand::ColRead { txn, beats, .. } | DdrCommand::ColWrite { txn, beats, .. } => {
                        if let Some(d) = since(self.last_activate[b]) {
                            if d < Cycle::from(t.t_rcd) {
                                flag(Rule::TimingTrcd, format!("bank {b}: column {d} cycles after activate"));
                            }
                        }
                        let op = if matches!(cmd, DdrCommand::ColRead { .. }) { Op::Read } else { Op::Write };
                        self.columns.insert(
                            txn,
                            ColRecord {
                                cycle,
                                op,
                                beats,
                                delivered: 0,
                            },
                        );
                    }
                    DdrCommand::Precharge { .. } => {
                        if let Some(d) = since(self.last_activate[b]) {
                            if d < Cycle::from(t.t_ras) {
                                flag(Rule::TimingTras, format!("bank {b}: precharge {d} cycles after activate"));
                            }
                        }
                        self.last_precharge[b] = Some(cycle);
                    }
                    DdrCommand::Nop => {}
                }
            }
        }
        self.prev_banks.clone_from(&board.ddrc.banks);
    }

    fn check_beats(&mut self, cycle: Cycle, board: &SystemBoard, flag: &mut impl FnMut(Rule, String)) {
        if let Some(beat) = board.ddrc.beat {
            match self.columns.get_mut(&beat.txn) {
                None => flag(Rule::BeatConservation, format!("beat for {} without a column command", beat.txn)),
                Some(rec) => {
                    if beat.index != rec.delivered || beat.index >= rec.beats {
                        flag(
                            Rule::BeatConservation,
                            format!("{}: beat {} where {} was due", beat.txn, beat.index, rec.delivered),
                        );
                    } else if rec.delivered == 0 {
                        let lead = match rec.op {
                            Op::Read => Cycle::from(self.config.timing.t_cl),
                            Op::Write => 1,
                        };
                        if cycle != rec.cycle + lead {
                            flag(
                                Rule::TimingTcl,
                                format!("{}: first beat {} cycles after column", beat.txn, cycle - rec.cycle),
                            );
                        }
                    }
                    rec.delivered += 1;
                }
            }
        }
        if let Some(done) = board.ddrc.completed {
            match self.columns.remove(&done.txn.id) {
                Some(rec) if rec.delivered == done.txn.beats() => {}
                Some(rec) => flag(
                    Rule::BeatConservation,
                    format!("{} completed after {} of {} beats", done.txn.id, rec.delivered, done.txn.beats()),
                ),
                None => flag(Rule::BeatConservation, format!("{} completed without a column command", done.txn.id)),
            }
        }
    }

    fn check_buffer(&mut self, board: &SystemBoard, flag: &mut impl FnMut(Rule, String)) {
        let bus = &board.bus;
        if let Some(id) = bus.wb_drained {
            let head = self.wb_model.pop_front();
            if head != Some(id) {
                flag(Rule::BufferFifo, format!("drained {id}, expected {head:?}"));
            }
        }
        self.wb_model.extend(bus.posted.iter().map(|t| t.id));
        let held = self.wb_model.len() as u32;
        if bus.wb_occupancy > self.config.wb_depth || bus.wb_occupancy != held {
            flag(
                Rule::BufferBounds,
                format!("occupancy {} (depth {}, {held} entries tracked)", bus.wb_occupancy, self.config.wb_depth),
            );
        }
    }

    fn check_waits(&mut self, board: &SystemBoard, flag: &mut impl FnMut(Rule, String)) {
        let bus = &board.bus;
        let mut served = bus.granted;
        for t in &bus.posted {
            served.insert(t.master.slot());
        }
        for s in 0..64u8 {
            let slot = Slot(s);
            let i = usize::from(s);
            if !bus.pool.contains(slot) || served.contains(slot) {
                self.wait[i] = 0;
                if served.contains(slot) {
                    self.qos_gap[i] = 0;
                }
                continue;
            }
            self.wait[i] += 1;
            if self.wait[i] == self.config.starvation_bound + 1 {
                flag(Rule::Starvation, format!("slot {slot} waited more than {} cycles", self.config.starvation_bound));
            }
            if let Some(Some(objective)) = self.config.rt_objectives.get(i) {
                self.qos_gap[i] += 1;
                if self.qos_gap[i] == u64::from(*objective) + 1 {
                    flag(Rule::QosDeadline, format!("slot {slot} not granted within {objective} cycles"));
                }
            }
        }
    }
}
