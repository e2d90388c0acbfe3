//! Bus and master-port profiling.
//!
//! Events are derived from each committed board, accumulated in a
//! [`Profiler`] and optionally streamed as CSV with the columns
//! `cycle,event,master,txn,arg`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signals::SystemBoard;
use crate::types::{Cycle, Slot, Transaction, TxnId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProfileEvent {
    RequestPending { cycle: Cycle, master: Slot },
    Granted { cycle: Cycle, master: Slot },
    BeatDelivered { cycle: Cycle, txn: TxnId, master: Slot, index: u32 },
    BufferOccupancy { cycle: Cycle, level: u32 },
    QosViolation { cycle: Cycle, master: Slot },
}

impl ProfileEvent {
    pub fn cycle(&self) -> Cycle {
        match *self {
            ProfileEvent::RequestPending { cycle, .. }
            | ProfileEvent::Granted { cycle, .. }
            | ProfileEvent::BeatDelivered { cycle, .. }
            | ProfileEvent::BufferOccupancy { cycle, .. }
            | ProfileEvent::QosViolation { cycle, .. } => cycle,
        }
    }

    /// One trace line, without the newline.
    pub fn csv_line(&self) -> String {
        match *self {
            ProfileEvent::RequestPending { cycle, master } => format!("{cycle},request,{master},,"),
            ProfileEvent::Granted { cycle, master } => format!("{cycle},grant,{master},,"),
            ProfileEvent::BeatDelivered {
                cycle,
                txn,
                master,
                index,
            } => format!("{cycle},beat,{master},{},{index}", txn.0),
            ProfileEvent::BufferOccupancy { cycle, level } => format!("{cycle},buffer,,,{level}"),
            ProfileEvent::QosViolation { cycle, master } => format!("{cycle},qos_violation,{master},,"),
        }
    }
}

pub const TRACE_HEADER: &str = "cycle,event,master,txn,arg";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("cannot finalize a run of zero cycles")]
    ZeroCycles,
    #[error("event at cycle {got} recorded after cycle {last}")]
    TimeWentBackwards { last: Cycle, got: Cycle },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MasterMetrics {
    pub completed: u64,
    pub bytes: u64,
    /// Bytes per cycle.
    pub throughput: f64,
    pub mean_grant_latency: f64,
    pub max_grant_latency: u64,
    pub mean_completion_latency: f64,
    pub max_completion_latency: u64,
    pub qos_violations: u64,
    pub posted_writes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total_cycles: Cycle,
    pub utilization: f64,
    pub contention: f64,
    pub beats: u64,
    pub bus_bytes: u64,
    pub grants: u64,
    pub masters: Vec<MasterMetrics>,
    /// Cycles spent at each write-buffer occupancy level.
    pub buffer_histogram: Vec<u64>,
}

#[derive(Debug, Clone, Default)]
struct MasterAcc {
    completed: u64,
    bytes: u64,
    grant_sum: u64,
    grant_n: u64,
    grant_max: u64,
    done_sum: u64,
    done_max: u64,
    qos: u64,
    posted: u64,
}

/// In-run accumulator.
#[derive(Debug, Clone)]
pub struct Profiler {
    bus_bytes: u64,
    last_cycle: Option<Cycle>,
    beat_cycles: u64,
    waiting_sum: u64,
    grants: u64,
    masters: Vec<MasterAcc>,
    histogram: Vec<u64>,
    last_level: Option<u32>,
    keep_events: bool,
    events: Vec<ProfileEvent>,
}

impl Profiler {
    pub fn new(masters: usize, bus_bytes: u64, wb_depth: u32) -> Self {
        Profiler {
            bus_bytes,
            last_cycle: None,
            beat_cycles: 0,
            waiting_sum: 0,
            grants: 0,
            masters: vec![MasterAcc::default(); masters],
            histogram: vec![0; wb_depth as usize + 1],
            last_level: None,
            keep_events: false,
            events: Vec::new(),
        }
    }

    /// Keep every event in memory (needed for a trace file).
    pub fn keep_events(mut self, keep: bool) -> Self {
        self.keep_events = keep;
        self
    }

    pub fn events(&self) -> &[ProfileEvent] {
        &self.events
    }

    pub fn record(&mut self, event: ProfileEvent) -> Result<(), ProfileError> {
        let cycle = event.cycle();
        if let Some(last) = self.last_cycle {
            if cycle < last {
                return Err(ProfileError::TimeWentBackwards { last, got: cycle });
            }
        }
        self.last_cycle = Some(cycle);
        match event {
            ProfileEvent::BeatDelivered { .. } => self.beat_cycles += 1,
            ProfileEvent::Granted { .. } => self.grants += 1,
            ProfileEvent::QosViolation { master, .. } => {
                if let Some(m) = master.master().and_then(|m| self.masters.get_mut(m.index())) {
                    m.qos += 1;
                }
            }
            ProfileEvent::BufferOccupancy { level, .. } => {
                if let Some(h) = self.histogram.get_mut(level as usize) {
                    *h += 1;
                }
            }
            ProfileEvent::RequestPending { .. } => {}
        }
        if self.keep_events {
            self.events.push(event);
        }
        Ok(())
    }

    fn complete(&mut self, txn: &Transaction) {
        let Some(m) = self.masters.get_mut(txn.master.index()) else { return };
        let (Some(issue), Some(done)) = (txn.issue_cycle, txn.done_cycle) else { return };
        m.completed += 1;
        m.bytes += self.bus_bytes * u64::from(txn.beats());
        let lat = done - issue;
        m.done_sum += lat;
        m.done_max = m.done_max.max(lat);
        match txn.grant_cycle {
            Some(g) => {
                let gl = g - issue;
                m.grant_sum += gl;
                m.grant_n += 1;
                m.grant_max = m.grant_max.max(gl);
            }
            None => m.posted += 1,
        }
    }

    /// Derives this cycle's events from the committed board.
    pub fn observe(&mut self, cycle: Cycle, board: &SystemBoard) -> Result<(), ProfileError> {
        let bus = &board.bus;
        let waiting = bus.pool.len() as u64;
        self.waiting_sum += waiting.saturating_sub(bus.granted.len() as u64);
        for s in bus.pool.iter() {
            self.record(ProfileEvent::RequestPending { cycle, master: s })?;
        }
        for s in bus.granted.iter() {
            self.record(ProfileEvent::Granted { cycle, master: s })?;
        }
        if let Some(b) = board.ddrc.beat {
            self.record(ProfileEvent::BeatDelivered {
                cycle,
                txn: b.txn,
                master: b.requester,
                index: b.index,
            })?;
        }
        let level = bus.wb_occupancy;
        if self.keep_events && self.last_level != Some(level) {
            self.events.push(ProfileEvent::BufferOccupancy { cycle, level });
        }
        self.last_level = Some(level);
        if let Some(h) = self.histogram.get_mut(level as usize) {
            *h += 1;
        }
        for s in bus.qos_crossings.iter() {
            self.record(ProfileEvent::QosViolation { cycle, master: s })?;
        }
        for m in &board.masters {
            if let Some(t) = m.completed {
                self.complete(&t);
            }
        }
        Ok(())
    }

    pub fn finalize(&self, total_cycles: Cycle) -> Result<MetricsReport, ProfileError> {
        if total_cycles == 0 {
            return Err(ProfileError::ZeroCycles);
        }
        let total = total_cycles as f64;
        let mean = |sum: u64, n: u64| if n == 0 { 0.0 } else { sum as f64 / n as f64 };
        Ok(MetricsReport {
            total_cycles,
            utilization: self.beat_cycles as f64 / total,
            contention: self.waiting_sum as f64 / total,
            beats: self.beat_cycles,
            bus_bytes: self.beat_cycles * self.bus_bytes,
            grants: self.grants,
            masters: self
                .masters
                .iter()
                .map(|m| MasterMetrics {
                    completed: m.completed,
                    bytes: m.bytes,
                    throughput: m.bytes as f64 / total,
                    mean_grant_latency: mean(m.grant_sum, m.grant_n),
                    max_grant_latency: m.grant_max,
                    mean_completion_latency: mean(m.done_sum, m.completed),
                    max_completion_latency: m.done_max,
                    qos_violations: m.qos,
                    posted_writes: m.posted,
                })
                .collect(),
            buffer_histogram: self.histogram.clone(),
        })
    }

    /// Writes the kept events as CSV.
    pub fn write_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for e in &self.events {
            writeln!(out, "{}", e.csv_line())?;
        }
        Ok(())
    }
}

/// Recounts utilization from a trace file: beat lines over total cycles.
pub fn utilization_from_trace(trace: &str, total_cycles: Cycle) -> Result<f64, csv::Error> {
    let mut rdr = csv::Reader::from_reader(trace.as_bytes());
    let mut beat_cycles = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if &rec[1] == "beat" {
            *beat_cycles.entry(rec[0].to_string()).or_insert(0u64) += 1;
        }
    }
    Ok(beat_cycles.len() as f64 / total_cycles as f64)
}
