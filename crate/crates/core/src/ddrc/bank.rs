//! Per-bank DDR state machine.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::DdrCommand;
use crate::types::{Cycle, TxnId};

/// DDR timing constraints in bus cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdrTiming {
    /// Activate to column command.
    pub t_rcd: u32,
    /// Precharge to activate.
    pub t_rp: u32,
    /// Read column command to first data beat.
    pub t_cl: u32,
    /// Minimum activate to precharge.
    pub t_ras: u32,
}

impl Default for DdrTiming {
    fn default() -> Self {
        DdrTiming {
            t_rcd: 3,
            t_rp: 3,
            t_cl: 3,
            t_ras: 7,
        }
    }
}

impl DdrTiming {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.t_rcd == 0 || self.t_rp == 0 || self.t_cl == 0 || self.t_ras == 0 {
            return Err("all timing parameters must be at least 1");
        }
        if self.t_ras < self.t_rcd {
            return Err("t_ras must be at least t_rcd");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum BankPhase {
    Idle,
    Activating { row: u32, remaining: u32 },
    Active { row: u32 },
    Bursting { row: u32, remaining: u32, txn: TxnId },
    Precharging { remaining: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankState {
    pub phase: BankPhase,
    /// Cycle of the last Activate, cleared by Precharge.
    pub active_since: Option<Cycle>,
}

impl Default for BankState {
    fn default() -> Self {
        BankState {
            phase: BankPhase::Idle,
            active_since: None,
        }
    }
}

impl BankState {
    /// Row that is open or opening.
    pub fn open_row(&self) -> Option<u32> {
        match self.phase {
            BankPhase::Activating { row, .. } | BankPhase::Active { row } | BankPhase::Bursting { row, .. } => Some(row),
            BankPhase::Idle | BankPhase::Precharging { .. } => None,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.phase == BankPhase::Idle
    }

    /// Bursting or precharging banks deny new column access.
    pub fn is_blocked(&self) -> bool {
        matches!(self.phase, BankPhase::Bursting { .. } | BankPhase::Precharging { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal {command} on bank in state {state:?} at cycle {cycle}")]
pub struct IllegalCommand {
    pub command: &'static str,
    pub state: BankPhase,
    pub cycle: Cycle,
}

/// Advances the bank by one cycle when `cmd` is `None`, otherwise applies
/// `cmd` issued at `cycle` to the (already advanced) state.
pub fn bank_step(bank: &BankState, cmd: Option<&DdrCommand>, cycle: Cycle, timing: &DdrTiming) -> Result<BankState, IllegalCommand> {
    let Some(cmd) = cmd else {
        return Ok(tick(bank));
    };
    let illegal = |command| IllegalCommand {
        command,
        state: bank.phase,
        cycle,
    };
    match (*cmd, bank.phase) {
        (DdrCommand::Nop, _) => Ok(*bank),
        (DdrCommand::Activate { row, .. }, BankPhase::Idle) => Ok(BankState {
            phase: BankPhase::Activating {
                row,
                remaining: timing.t_rcd,
            },
            active_since: Some(cycle),
        }),
        (DdrCommand::Activate { .. }, _) => Err(illegal("Activate")),
        (DdrCommand::ColRead { beats, txn, .. }, BankPhase::Active { row }) => Ok(BankState {
            phase: BankPhase::Bursting {
                row,
                remaining: timing.t_cl + beats,
                txn,
            },
            ..*bank
        }),
        (DdrCommand::ColRead { .. }, _) => Err(illegal("ColRead")),
        (DdrCommand::ColWrite { beats, txn, .. }, BankPhase::Active { row }) => Ok(BankState {
            phase: BankPhase::Bursting {
                row,
                remaining: 1 + beats,
                txn,
            },
            ..*bank
        }),
        (DdrCommand::ColWrite { .. }, _) => Err(illegal("ColWrite")),
        (DdrCommand::Precharge { .. }, BankPhase::Active { .. }) => {
            let since = bank.active_since.unwrap_or(0);
            if cycle < since + Cycle::from(timing.t_ras) {
                return Err(illegal("Precharge"));
            }
            Ok(BankState {
                phase: BankPhase::Precharging {
                    remaining: timing.t_rp,
                },
                active_since: None,
            })
        }
        (DdrCommand::Precharge { .. }, _) => Err(illegal("Precharge")),
    }
}

fn tick(bank: &BankState) -> BankState {
    let phase = match bank.phase {
        BankPhase::Activating { row, remaining } if remaining <= 1 => BankPhase::Active { row },
        BankPhase::Activating { row, remaining } => BankPhase::Activating {
            row,
            remaining: remaining - 1,
        },
        BankPhase::Bursting { row, remaining, .. } if remaining <= 1 => BankPhase::Active { row },
        BankPhase::Bursting { row, remaining, txn } => BankPhase::Bursting {
            row,
            remaining: remaining - 1,
            txn,
        },
        BankPhase::Precharging { remaining } if remaining <= 1 => BankPhase::Idle,
        BankPhase::Precharging { remaining } => BankPhase::Precharging {
            remaining: remaining - 1,
        },
        other => other,
    };
    BankState { phase, ..*bank }
}
