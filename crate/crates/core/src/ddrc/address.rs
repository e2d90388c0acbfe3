//! Byte address to (row, bank, column) decoding.
//!
//! Layout, from least significant bit upward:
//! `[beat offset | column | bank | row]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddressError {
    #[error("address {addr:#x} beyond memory size {size:#x}")]
    AddressOutOfRange { addr: u64, size: u64 },
    #[error("address map does not fit in 64 bits")]
    TooWide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressMap {
    pub beat_offset_bits: u32,
    pub col_bits: u32,
    pub bank_bits: u32,
    pub row_bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecodedAddr {
    pub row: u32,
    pub bank: usize,
    pub col: u32,
}

impl AddressMap {
    pub fn new(bus_width_bits: u32, col_bits: u32, bank_bits: u32, row_bits: u32) -> Result<Self, AddressError> {
        let beat_offset_bits = (bus_width_bits / 8).trailing_zeros();
        if beat_offset_bits + col_bits + bank_bits + row_bits >= 64 || row_bits > 32 || col_bits > 32 {
            return Err(AddressError::TooWide);
        }
        Ok(AddressMap {
            beat_offset_bits,
            col_bits,
            bank_bits,
            row_bits,
        })
    }

    pub fn banks(&self) -> usize {
        1 << self.bank_bits
    }

    pub fn rows(&self) -> u64 {
        1 << self.row_bits
    }

    pub fn bus_bytes(&self) -> u64 {
        1 << self.beat_offset_bits
    }

    pub fn memory_size(&self) -> u64 {
        1 << (self.beat_offset_bits + self.col_bits + self.bank_bits + self.row_bits)
    }

    /// Bytes covered by one row of one bank.
    pub fn bank_span(&self) -> u64 {
        1 << (self.beat_offset_bits + self.col_bits)
    }

    /// Bytes covered by one row index across all banks.
    pub fn row_span(&self) -> u64 {
        self.bank_span() << self.bank_bits
    }

    pub fn decode(&self, addr: u64) -> Result<DecodedAddr, AddressError> {
        let size = self.memory_size();
        if addr >= size {
            return Err(AddressError::AddressOutOfRange { addr, size });
        }
        let beat = addr >> self.beat_offset_bits;
        let col = beat & ((1 << self.col_bits) - 1);
        let bank = (beat >> self.col_bits) & ((1 << self.bank_bits) - 1);
        let row = beat >> (self.col_bits + self.bank_bits);
        Ok(DecodedAddr {
            row: row as u32,
            bank: bank as usize,
            col: col as u32,
        })
    }

    pub fn encode(&self, row: u32, bank: usize, col: u32) -> u64 {
        let beat = ((u64::from(row) << self.bank_bits | bank as u64) << self.col_bits) | u64::from(col);
        beat << self.beat_offset_bits
    }

    /// Checks that a whole burst of `beats` starting at `addr` lies in memory.
    pub fn check_range(&self, addr: u64, beats: u32) -> Result<(), AddressError> {
        let size = self.memory_size();
        let end = addr + u64::from(beats) * self.bus_bytes();
        if end > size {
            return Err(AddressError::AddressOutOfRange { addr, size });
        }
        Ok(())
    }
}
