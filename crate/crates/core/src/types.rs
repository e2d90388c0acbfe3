//! Identifiers, transactions and candidate sets shared by every component.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulation time in bus clock cycles.
pub type Cycle = u64;

/// Index of a bus master port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MasterId(pub u16);

impl MasterId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn slot(self) -> Slot {
        Slot(self.0 as u8)
    }
}

impl fmt::Display for MasterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

/// Arbitration slot: a master port or the write-buffer pseudo-master.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot(pub u8);

impl Slot {
    /// Slot reserved for the write buffer when it competes for the bus.
    pub const WRITE_BUFFER: Slot = Slot(63);
    /// Highest slot usable by a real master.
    pub const MAX_MASTERS: usize = 63;

    pub fn is_write_buffer(self) -> bool {
        self == Slot::WRITE_BUFFER
    }

    pub fn master(self) -> Option<MasterId> {
        if self.is_write_buffer() {
            None
        } else {
            Some(MasterId(self.0 as u16))
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_write_buffer() {
            f.write_str("wb")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// A set of arbitration slots stored as a 64-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateSet(pub u64);

impl CandidateSet {
    pub const EMPTY: CandidateSet = CandidateSet(0);

    pub fn single(slot: Slot) -> Self {
        CandidateSet(1u64 << slot.0)
    }

    pub fn insert(&mut self, slot: Slot) {
        self.0 |= 1u64 << slot.0;
    }

    pub fn remove(&mut self, slot: Slot) {
        self.0 &= !(1u64 << slot.0);
    }

    pub fn contains(self, slot: Slot) -> bool {
        self.0 & (1u64 << slot.0) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: CandidateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: CandidateSet) -> Self {
        CandidateSet(self.0 | other.0)
    }

    pub fn intersection(self, other: CandidateSet) -> Self {
        CandidateSet(self.0 & other.0)
    }

    /// The only member, if the set is a singleton.
    pub fn only(self) -> Option<Slot> {
        (self.len() == 1).then(|| Slot(self.0.trailing_zeros() as u8))
    }

    pub fn iter(self) -> impl Iterator<Item = Slot> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let idx = bits.trailing_zeros();
            bits &= bits - 1;
            Some(Slot(idx as u8))
        })
    }
}

impl FromIterator<Slot> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = Slot>>(iter: I) -> Self {
        let mut set = CandidateSet::EMPTY;
        for slot in iter {
            set.insert(slot);
        }
        set
    }
}

impl fmt::Debug for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|s| s.to_string())).finish()
    }
}

/// Unique transaction identifier: master index in the high half, per-master sequence in the low half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxnId(pub u64);

impl TxnId {
    pub fn new(master: MasterId, seq: u32) -> Self {
        TxnId(((master.0 as u64) << 32) | seq as u64)
    }

    pub fn master(self) -> MasterId {
        MasterId((self.0 >> 32) as u16)
    }

    pub fn seq(self) -> u32 {
        self.0 as u32
    }
}

impl fmt::Display for TxnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Read,
    Write,
}

/// AHB burst kinds exercised by the workloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Burst {
    Single,
    Incr4,
    Incr8,
}

impl Burst {
    pub fn beats(self) -> u32 {
        match self {
            Burst::Single => 1,
            Burst::Incr4 => 4,
            Burst::Incr8 => 8,
        }
    }

    pub fn from_beats(beats: u32) -> Option<Burst> {
        match beats {
            1 => Some(Burst::Single),
            4 => Some(Burst::Incr4),
            8 => Some(Burst::Incr8),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxnError {
    #[error("address {addr:#x} is not aligned to the {width_bits}-bit bus")]
    Misaligned { addr: u64, width_bits: u32 },
}

/// One bus read or write request and its lifecycle timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxnId,
    pub master: MasterId,
    pub op: Op,
    pub addr: u64,
    pub burst: Burst,
    pub issue_cycle: Option<Cycle>,
    pub grant_cycle: Option<Cycle>,
    pub first_data_cycle: Option<Cycle>,
    pub done_cycle: Option<Cycle>,
}

impl Transaction {
    pub fn new(
        id: TxnId,
        master: MasterId,
        op: Op,
        addr: u64,
        burst: Burst,
        bus_width_bits: u32,
    ) -> Result<Self, TxnError> {
        let bytes = u64::from(bus_width_bits / 8);
        if addr % bytes != 0 {
            return Err(TxnError::Misaligned {
                addr,
                width_bits: bus_width_bits,
            });
        }
        Ok(Transaction {
            id,
            master,
            op,
            addr,
            burst,
            issue_cycle: None,
            grant_cycle: None,
            first_data_cycle: None,
            done_cycle: None,
        })
    }

    pub fn beats(&self) -> u32 {
        self.burst.beats()
    }

    /// Byte span `[addr, addr + len)` touched by the burst.
    pub fn span(&self, bus_bytes: u64) -> (u64, u64) {
        (self.addr, self.addr + bus_bytes * u64::from(self.beats()))
    }

    pub fn overlaps(&self, other: &Transaction, bus_bytes: u64) -> bool {
        let (a0, a1) = self.span(bus_bytes);
        let (b0, b1) = other.span(bus_bytes);
        a0 < b1 && b0 < a1
    }

    /// Checks `issue <= grant <= first_data <= done` over whichever stamps are set.
    pub fn timestamps_ordered(&self) -> bool {
        let stamps = [
            self.issue_cycle,
            self.grant_cycle,
            self.first_data_cycle,
            self.done_cycle,
        ];
        stamps
            .iter()
            .flatten()
            .zip(stamps.iter().flatten().skip(1))
            .all(|(a, b)| a <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_set_basics() {
        let set: CandidateSet = [Slot(1), Slot(5), Slot::WRITE_BUFFER].into_iter().collect();
        assert_eq!(set.len(), 3);
        assert!(set.contains(Slot(5)));
        assert!(!set.contains(Slot(2)));
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![Slot(1), Slot(5), Slot(63)]);
        assert_eq!(CandidateSet::single(Slot(4)).only(), Some(Slot(4)));
        assert_eq!(set.only(), None);
        assert!(CandidateSet::single(Slot(5)).is_subset(set));
    }

    #[test]
    fn misaligned_address_rejected() {
        let id = TxnId::new(MasterId(0), 0);
        let err = Transaction::new(id, MasterId(0), Op::Read, 0x4, Burst::Single, 64).unwrap_err();
        assert_eq!(
            err,
            TxnError::Misaligned {
                addr: 4,
                width_bits: 64
            }
        );
        assert!(Transaction::new(id, MasterId(0), Op::Read, 0x4, Burst::Single, 32).is_ok());
    }

    #[test]
    fn txn_id_round_trip() {
        let id = TxnId::new(MasterId(11), 199);
        assert_eq!(id.master(), MasterId(11));
        assert_eq!(id.seq(), 199);
    }

    #[test]
    fn overlap() {
        let id = TxnId::new(MasterId(0), 0);
        let a = Transaction::new(id, MasterId(0), Op::Write, 0x100, Burst::Incr4, 64).unwrap();
        let b = Transaction::new(id, MasterId(0), Op::Read, 0x118, Burst::Single, 64).unwrap();
        let c = Transaction::new(id, MasterId(0), Op::Read, 0x120, Burst::Single, 64).unwrap();
        assert!(a.overlaps(&b, 8));
        assert!(!a.overlaps(&c, 8));
    }
}
