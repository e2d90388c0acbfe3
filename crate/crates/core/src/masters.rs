//! Seeded traffic generators.
//!
//! Every master owns a ChaCha stream seeded from the run seed and its id.
//! Per transaction the stream is consulted in a fixed order (burst kind,
//! address, gap), so the request sequence does not depend on bus timing.

use std::any::Any;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{MasterPort, PortEvent};
use crate::checker::{Rule, Violation};
use crate::ddrc::AddressMap;
use crate::kernel::Component;
use crate::signals::{MasterSignals, SystemBoard};
use crate::types::{Burst, Cycle, MasterId, Op, Transaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Single,
    Burst4,
    Burst8,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpMix {
    #[serde(alias = "readonly")]
    Read,
    #[serde(alias = "writeonly")]
    Write,
}

impl OpMix {
    pub fn op(self) -> Op {
        match self {
            OpMix::Read => Op::Read,
            OpMix::Write => Op::Write,
        }
    }
}

/// Address progression within a master's region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stride {
    Bytes(u64),
    Named(StrideMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrideMode {
    /// Advance by the bytes of the previous burst.
    Sequential,
    /// Uniform within the region, aligned to an 8-beat burst.
    Random,
}

impl Default for Stride {
    fn default() -> Self {
        Stride::Named(StrideMode::Sequential)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterArrival {
    Fixed(u32),
    Range([u32; 2]),
}

impl Default for InterArrival {
    fn default() -> Self {
        InterArrival::Fixed(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidSpec {
    #[error("txn_count must be positive")]
    ZeroTxnCount,
    #[error("inter-arrival range [{0}, {1}] is empty")]
    EmptyRange(u32, u32),
    #[error("stride {stride} is not a multiple of the {bus_bytes}-byte bus")]
    MisalignedStride { stride: u64, bus_bytes: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub op_mix: OpMix,
    pub txn_count: u32,
    pub addr_stride: Stride,
    pub inter_arrival: InterArrival,
    pub seed: u64,
}

pub fn make_pattern(kind: PatternKind, op_mix: OpMix, txn_count: u32, seed: u64) -> Result<PatternSpec, InvalidSpec> {
    PatternSpec {
        kind,
        op_mix,
        txn_count,
        addr_stride: Stride::default(),
        inter_arrival: InterArrival::default(),
        seed,
    }
    .validated()
}

impl PatternSpec {
    pub fn validated(self) -> Result<Self, InvalidSpec> {
        if self.txn_count == 0 {
            return Err(InvalidSpec::ZeroTxnCount);
        }
        if let InterArrival::Range([lo, hi]) = self.inter_arrival {
            if lo > hi {
                return Err(InvalidSpec::EmptyRange(lo, hi));
            }
        }
        Ok(self)
    }

    pub fn with_stride(mut self, stride: Stride) -> Self {
        self.addr_stride = stride;
        self
    }

    pub fn with_inter_arrival(mut self, gap: InterArrival) -> Self {
        self.inter_arrival = gap;
        self
    }
}

/// Next transaction to issue, before it becomes a bus request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stimulus {
    pub seq: u32,
    pub op: Op,
    pub addr: u64,
    pub burst: Burst,
}

/// Region of memory a master walks through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub base: u64,
    pub len: u64,
}

impl Region {
    /// Regions start on distinct rows and rotate across banks so a dozen
    /// masters spread over every bank.
    pub fn for_master(map: &AddressMap, index: usize, masters: usize) -> Region {
        let masters = masters.max(1) as u64;
        let rows_per_master = (map.rows() / masters).max(1);
        let row = (index as u64 * rows_per_master) % map.rows();
        let bank = index % map.banks();
        let base = map.encode(row as u32, bank, 0);
        let len = (map.memory_size() / masters).max(map.bus_bytes() * 8);
        Region { base, len }
    }
}

fn seed_for(seed: u64, master: MasterId) -> u64 {
    seed ^ (u64::from(master.0) + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

#[derive(Debug, Clone)]
pub struct MasterModel {
    pub id: MasterId,
    pub pattern: PatternSpec,
    pub issued: u32,
    pub completed: u32,
    rng: ChaCha8Rng,
    region: Region,
    memory_size: u64,
    bus_bytes: u64,
    offset: u64,
    next_at: Cycle,
}

impl MasterModel {
    pub fn new(id: MasterId, pattern: PatternSpec, map: &AddressMap, region: Region) -> Result<Self, InvalidSpec> {
        let pattern = pattern.validated()?;
        if let Stride::Bytes(stride) = pattern.addr_stride {
            if stride % map.bus_bytes() != 0 {
                return Err(InvalidSpec::MisalignedStride {
                    stride,
                    bus_bytes: map.bus_bytes(),
                });
            }
        }
        Ok(MasterModel {
            id,
            rng: ChaCha8Rng::seed_from_u64(seed_for(pattern.seed, id)),
            pattern,
            issued: 0,
            completed: 0,
            region,
            memory_size: map.memory_size(),
            bus_bytes: map.bus_bytes(),
            offset: 0,
            next_at: 0,
        })
    }

    pub fn is_done(&self) -> bool {
        self.completed >= self.pattern.txn_count
    }

    pub fn draw_burst(&mut self) -> Burst {
        match self.pattern.kind {
            PatternKind::Single => Burst::Single,
            PatternKind::Burst4 => Burst::Incr4,
            PatternKind::Burst8 => Burst::Incr8,
            PatternKind::Mixed => match self.rng.random_range(0..3u8) {
                0 => Burst::Single,
                1 => Burst::Incr4,
                _ => Burst::Incr8,
            },
        }
    }

    fn draw_addr(&mut self, burst: Burst) -> u64 {
        let span = self.bus_bytes * u64::from(burst.beats());
        let offset = match self.pattern.addr_stride {
            Stride::Named(StrideMode::Random) => {
                let unit = self.bus_bytes * 8;
                let slots = (self.region.len / unit).max(1);
                self.rng.random_range(0..slots) * unit
            }
            Stride::Named(StrideMode::Sequential) => {
                let o = self.offset;
                self.offset = (self.offset + span) % self.region.len;
                o
            }
            Stride::Bytes(stride) => {
                let o = self.offset;
                self.offset = (self.offset + stride) % self.region.len;
                o
            }
        };
        let addr = (self.region.base + offset) % self.memory_size;
        if addr + span > self.memory_size {
            0
        } else {
            addr
        }
    }

    fn draw_gap(&mut self) -> u32 {
        match self.pattern.inter_arrival {
            InterArrival::Fixed(g) => g,
            InterArrival::Range([lo, hi]) => self.rng.random_range(lo..=hi),
        }
    }

    /// Draws the next transaction regardless of timing.
    pub fn generate(&mut self) -> Option<Stimulus> {
        if self.issued >= self.pattern.txn_count {
            return None;
        }
        let burst = self.draw_burst();
        let addr = self.draw_addr(burst);
        let seq = self.issued;
        self.issued += 1;
        Some(Stimulus {
            seq,
            op: self.pattern.op_mix.op(),
            addr,
            burst,
        })
    }

    /// Emits the next stimulus once the inter-arrival gap has elapsed.
    /// Callers must not hold an outstanding request.
    pub fn next_stimulus(&mut self, cycle: Cycle) -> Option<Stimulus> {
        if cycle < self.next_at {
            return None;
        }
        self.generate()
    }

    /// Records a completion observed at `cycle` and schedules the next issue.
    pub fn complete(&mut self, cycle: Cycle) {
        self.completed += 1;
        let gap = self.draw_gap();
        self.next_at = cycle + Cycle::from(gap);
    }
}

/// Test-only misbehaviour of a master port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterFault {
    /// Start the data phase without holding the grant, from this cycle on.
    ReadWithoutGrant { after: Cycle },
}

/// A traffic generator wired to a master port.
#[derive(Clone)]
pub struct Master {
    name: String,
    model: MasterModel,
    port: MasterPort,
    outstanding: Option<Stimulus>,
    fault: Option<MasterFault>,
    out: MasterSignals,
}

impl Master {
    pub fn new(model: MasterModel, map: AddressMap, bus_width_bits: u32) -> Self {
        Master {
            name: format!("master{}", model.id.0),
            port: MasterPort::new(model.id, map, bus_width_bits),
            model,
            outstanding: None,
            fault: None,
            out: MasterSignals::default(),
        }
    }

    pub fn with_fault(mut self, fault: MasterFault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn model(&self) -> &MasterModel {
        &self.model
    }

    fn protocol(&self, cycle: Cycle, e: impl std::fmt::Display) -> Violation {
        Violation::fatal(cycle, Rule::PortProtocol, format!("master {}: {e}", self.model.id))
    }

    fn step(&mut self, cycle: Cycle, board: &SystemBoard) -> Result<(), Violation> {
        let mut completed: Option<Transaction> = None;
        match self.port.observe(board) {
            Some(PortEvent::Granted(_)) => {
                let s = self.outstanding.expect("granted request is remembered");
                let r = match s.op {
                    Op::Read => self.port.read(s.addr, s.burst),
                    Op::Write => self.port.write(s.addr, s.burst, s.burst.beats()),
                };
                r.map_err(|e| self.protocol(cycle, e))?;
            }
            Some(PortEvent::Posted(t)) => {
                self.port
                    .write(t.addr, t.burst, t.beats())
                    .map_err(|e| self.protocol(cycle, e))?;
                completed = Some(t);
            }
            Some(PortEvent::Completed(t)) => completed = Some(t),
            None => {}
        }
        self.out.completed = completed;
        if completed.is_some() {
            self.model.complete(cycle);
            self.outstanding = None;
            self.out.completed_count += 1;
        }

        if let (Some(MasterFault::ReadWithoutGrant { after }), Some(s)) = (self.fault, self.outstanding) {
            if cycle >= after && self.port.is_requesting() {
                self.port.read(s.addr, s.burst).map_err(|e| self.protocol(cycle, e))?;
            }
        }

        self.out.request = None;
        if self.port.is_idle() {
            if let Some(s) = self.model.next_stimulus(cycle) {
                self.port
                    .request(s.seq, s.op, s.addr, s.burst, cycle)
                    .map_err(|e| self.protocol(cycle, e))?;
                self.outstanding = Some(s);
                self.out.request = self.port.take_request();
            }
        }
        self.out.done = self.model.is_done();
        Ok(())
    }
}

impl Component<SystemBoard> for Master {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&mut self, cycle: Cycle, committed: &SystemBoard) -> Result<(), Violation> {
        self.step(cycle, committed)
    }

    fn commit(&mut self, next: &mut SystemBoard) {
        next.masters[self.model.id.index()].clone_from(&self.out);
    }

    fn is_quiescent(&self) -> bool {
        self.model.is_done()
    }

    fn completed(&self) -> u64 {
        u64::from(self.model.completed)
    }

    fn box_clone(&self) -> Box<dyn Component<SystemBoard>> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
