//! Cycle-accurate transaction-level model of a QoS-aware AHB-style bus in
//! front of a banked DDR controller.
//!
//! Start with [`sim::Simulation`] and a [`config::SimConfig`], or one of the
//! built-in [`presets`].

pub mod bus;
pub mod checker;
pub mod config;
pub mod ddrc;
pub mod kernel;
pub mod masters;
pub mod presets;
pub mod profiling;
pub mod report;
pub mod signals;
pub mod sim;
pub mod types;
pub mod write_buffer;

pub use config::{MasterSpec, SimConfig};
pub use kernel::{KernelMode, SimSummary, TerminationReason};
pub use report::Report;
pub use sim::{run_config, RunOutcome, SimError, SimOptions, Simulation};
pub use types::{Burst, MasterId, Op, Slot, Transaction, TxnId};
