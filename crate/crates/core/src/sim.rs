//! Builds a world from a [`SimConfig`] and runs it with the checker and
//! profiler attached.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bus::{Bus, BusError, QosRecord};
use crate::checker::{Checker, ViewFault, Violation};
use crate::config::{ConfigError, SimConfig};
use crate::ddrc::{Ddrc, DdrcConfig};
use crate::kernel::{Component, KernelError, KernelMode, SimSummary, TerminationReason, World};
use crate::masters::{InvalidSpec, Master, MasterModel, PatternSpec, Region};
use crate::profiling::{MetricsReport, ProfileEvent, Profiler};
use crate::signals::SystemBoard;
use crate::types::Cycle;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Pattern(#[from] InvalidSpec),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("registration order must be a permutation of 0..{0}")]
    BadOrder(usize),
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    pub mode: KernelMode,
    /// Registration order as a permutation of the default order
    /// (masters by id, then bus, then controller).
    pub order: Option<Vec<usize>>,
    /// Keep a copy of every committed board.
    pub record_boards: bool,
    /// Keep every profiling event (for trace files).
    pub keep_events: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: SimSummary,
    pub metrics: MetricsReport,
    pub qos: Vec<QosRecord>,
    pub violations: Vec<Violation>,
    pub read_mismatches: u64,
    pub memory: Option<Vec<(u64, u64)>>,
    pub boards: Vec<SystemBoard>,
    pub events: Vec<ProfileEvent>,
    pub elapsed: Duration,
}

impl RunOutcome {
    pub fn aborted(&self) -> bool {
        self.summary.terminated_reason == TerminationReason::AssertionAbort
    }

    pub fn fatal(&self) -> Option<&Violation> {
        self.violations.iter().find(|v| v.is_fatal())
    }

    /// Simulated cycles per wall-clock second.
    pub fn cycles_per_sec(&self) -> f64 {
        self.summary.total_cycles as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }

    pub fn write_trace<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", crate::profiling::TRACE_HEADER)?;
        for e in &self.events {
            writeln!(out, "{}", e.csv_line())?;
        }
        Ok(())
    }
}

pub struct Simulation {
    config: SimConfig,
    world: World<SystemBoard>,
    checker: Checker,
    profiler: Profiler,
    view_fault: Option<ViewFault>,
    record_boards: bool,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        Self::with_options(config, SimOptions::default())
    }

    pub fn with_options(config: SimConfig, options: SimOptions) -> Result<Self, SimError> {
        config.validate()?;
        let map = config.address_map()?;
        let masters = config.resolved_masters();
        let fault = config.fault;

        let mut components: Vec<Box<dyn Component<SystemBoard>>> = Vec::new();
        for m in &masters {
            let pattern = PatternSpec {
                kind: m.spec.pattern,
                op_mix: m.spec.op,
                txn_count: m.spec.txn_count,
                addr_stride: m.spec.stride,
                inter_arrival: m.spec.inter_arrival,
                seed: config.seed,
            };
            let region = Region::for_master(&map, m.id.index(), masters.len());
            let model = MasterModel::new(m.id, pattern, &map, region)?;
            let mut master = Master::new(model, map, config.bus.width_bits);
            if let Some((id, f)) = fault.and_then(|f| f.master_fault()) {
                if id == m.id {
                    master = master.with_fault(f);
                }
            }
            components.push(Box::new(master));
        }

        let mut bus = Bus::new(config.bus_config(), map, masters.len())?;
        for m in &masters {
            bus.set_qos(m.id, m.spec.rt, m.spec.qos_objective)?;
        }
        components.push(Box::new(bus));

        let mut ddrc = Ddrc::new(DdrcConfig {
            map,
            timing: config.ddr.timing,
            functional_memory: config.ddr.functional_memory,
        });
        if let Some(f) = fault.and_then(|f| f.ddrc_fault(config.ddr.timing)) {
            ddrc = ddrc.with_fault(f);
        }
        components.push(Box::new(ddrc));

        let mut world = World::new(SystemBoard::new(masters.len(), map.banks())).with_mode(options.mode);
        let n = components.len();
        let order: Vec<usize> = options.order.clone().unwrap_or_else(|| (0..n).collect());
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(SimError::BadOrder(n));
        }
        let mut slots: Vec<Option<Box<dyn Component<SystemBoard>>>> = components.into_iter().map(Some).collect();
        for i in order {
            world.register(slots[i].take().expect("permutation"))?;
        }

        Ok(Simulation {
            checker: Checker::new(config.checker_config()),
            profiler: Profiler::new(masters.len(), map.bus_bytes(), config.write_buffer.depth).keep_events(options.keep_events),
            view_fault: fault.and_then(|f| f.view_fault()),
            record_boards: options.record_boards,
            world,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn world(&self) -> &World<SystemBoard> {
        &self.world
    }

    /// Runs to completion. A fatal assertion ends the run early but still
    /// yields an outcome; only setup errors are returned as `Err`.
    pub fn run(mut self) -> Result<RunOutcome, SimError> {
        let max_cycles = self.config.max_cycles;
        let stop_when_idle = self.config.stop_when_idle;
        let wb_depth = self.config.write_buffer.depth;
        let Simulation {
            world,
            checker,
            profiler,
            view_fault,
            record_boards,
            ..
        } = &mut self;
        let mut boards = Vec::new();
        let mut view = SystemBoard::default();
        let started = Instant::now();
        let result = world.run(max_cycles, stop_when_idle, |cycle: Cycle, board: &SystemBoard| {
            profiler.observe(cycle, board).expect("cycles are monotonic");
            if *record_boards {
                boards.push(board.clone());
            }
            let seen = match view_fault {
                Some(f) => {
                    view.clone_from(board);
                    f.apply(cycle, &mut view, wb_depth);
                    &view
                }
                None => board,
            };
            match checker.check_cycle(cycle, seen).into_iter().find(Violation::is_fatal) {
                Some(v) => Err(v),
                None => Ok(()),
            }
        });
        let elapsed = started.elapsed();
        let summary = match result {
            Ok(s) => s,
            Err(KernelError::AssertionAbort(v)) => {
                if checker.violations().last() != Some(&v) {
                    checker.record(v);
                }
                SimSummary {
                    total_cycles: world.cycle(),
                    completed_transactions: world.completed_transactions(),
                    terminated_reason: TerminationReason::AssertionAbort,
                }
            }
            Err(e) => return Err(e.into()),
        };
        let total = summary.total_cycles.max(1);
        let metrics = profiler.finalize(total).expect("positive cycle count");
        let ddrc = world.component::<Ddrc>().expect("controller registered");
        let bus = world.component::<Bus>().expect("bus registered");
        Ok(RunOutcome {
            summary,
            metrics,
            qos: bus.qos_records().to_vec(),
            violations: checker.violations().to_vec(),
            read_mismatches: ddrc.read_mismatches(),
            memory: ddrc.memory_snapshot(),
            boards,
            events: profiler.events().to_vec(),
            elapsed,
        })
    }
}

/// Builds and runs `config` with default options.
pub fn run_config(config: &SimConfig) -> Result<RunOutcome, SimError> {
    Simulation::new(config.clone())?.run()
}
