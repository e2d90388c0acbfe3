//! Run configuration: a TOML document with nested sections.
//!
//! ```toml
//! seed = 7
//! max_cycles = 1000000
//!
//! [bus]
//! width_bits = 64
//!
//! [write_buffer]
//! depth = 4
//!
//! [filters]
//! F5 = false
//!
//! [[masters]]
//! pattern = "burst4"
//! op = "read"
//! count = 12
//! ```
//!
//! Unknown keys are rejected. Every omitted key takes a documented default
//! and the resolved document is echoed in the report.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{BusConfig, DEFAULT_QOS_URGENCY_THRESHOLD, FILTER_COUNT};
use crate::checker::{CheckerConfig, ViewFault};
use crate::ddrc::{AddressMap, DdrTiming, DdrcFault};
use crate::masters::{InterArrival, MasterFault, OpMix, PatternKind, Stride};
use crate::types::{Cycle, MasterId, Slot};
use crate::write_buffer::WriteBufferConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: impl Into<String>, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        reason: reason.to_string(),
    }
}

const fn yes() -> bool {
    true
}

const fn default_max_cycles() -> Cycle {
    2_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: Cycle,
    #[serde(default = "yes")]
    pub stop_when_idle: bool,
    #[serde(default)]
    pub bus: BusSection,
    #[serde(default)]
    pub write_buffer: WriteBufferConfig,
    #[serde(default)]
    pub filters: FilterSection,
    #[serde(default)]
    pub ddr: DdrSection,
    #[serde(default)]
    pub masters: Vec<MasterSpec>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub checker: CheckerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BusSection {
    pub width_bits: u32,
    pub next_info_hints: bool,
    pub qos_urgency_threshold: u32,
    pub rr_pointer_init: u8,
}

impl Default for BusSection {
    fn default() -> Self {
        BusSection {
            width_bits: 64,
            next_info_hints: true,
            qos_urgency_threshold: DEFAULT_QOS_URGENCY_THRESHOLD,
            rr_pointer_init: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    #[serde(rename = "F1")]
    pub f1: bool,
    #[serde(rename = "F2")]
    pub f2: bool,
    #[serde(rename = "F3")]
    pub f3: bool,
    #[serde(rename = "F4")]
    pub f4: bool,
    #[serde(rename = "F5")]
    pub f5: bool,
    #[serde(rename = "F6")]
    pub f6: bool,
    #[serde(rename = "F7")]
    pub f7: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection {
            f1: true,
            f2: true,
            f3: true,
            f4: true,
            f5: true,
            f6: true,
            f7: true,
        }
    }
}

impl FilterSection {
    pub fn as_array(&self) -> [bool; FILTER_COUNT] {
        [self.f1, self.f2, self.f3, self.f4, self.f5, self.f6, self.f7]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AddressMapSection {
    pub col_bits: u32,
    pub bank_bits: u32,
    pub row_bits: u32,
}

impl Default for AddressMapSection {
    fn default() -> Self {
        AddressMapSection {
            col_bits: 8,
            bank_bits: 2,
            row_bits: 13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdrSection {
    pub timing: DdrTiming,
    pub address_map: AddressMapSection,
    pub functional_memory: bool,
}

const fn one() -> u32 {
    1
}

const fn default_txn_count() -> u32 {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterSpec {
    pub pattern: PatternKind,
    pub op: OpMix,
    /// Number of identical masters this entry expands to.
    #[serde(default = "one")]
    pub count: u32,
    #[serde(default = "default_txn_count")]
    pub txn_count: u32,
    #[serde(default)]
    pub rt: bool,
    #[serde(default)]
    pub qos_objective: u32,
    #[serde(default)]
    pub priority: u32,
    #[serde(default)]
    pub inter_arrival: InterArrival,
    #[serde(default)]
    pub stride: Stride,
}

impl MasterSpec {
    pub fn new(pattern: PatternKind, op: OpMix) -> Self {
        MasterSpec {
            pattern,
            op,
            count: 1,
            txn_count: default_txn_count(),
            rt: false,
            qos_objective: 0,
            priority: 0,
            inter_arrival: InterArrival::default(),
            stride: Stride::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Struct,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::report::ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "struct" | "json" => Ok(ReportFormat::Struct),
            "table" | "csv" => Ok(ReportFormat::Table),
            other => Err(crate::report::ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: ReportFormat,
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckerSection {
    /// Longest tolerated wait for any requester; defaults to ten times the
    /// largest real-time objective.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starvation_bound: Option<u64>,
}

/// Deliberate misbehaviour for exercising the checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FaultSpec {
    DoubleGrant {
        #[serde(default)]
        after: Cycle,
    },
    GrantNonRequester {
        #[serde(default)]
        after: Cycle,
    },
    FilterExpand {
        #[serde(default)]
        after: Cycle,
    },
    IllegalTransition {
        #[serde(default)]
        after: Cycle,
    },
    BufferOverflow {
        #[serde(default)]
        after: Cycle,
    },
    FifoReorder {
        #[serde(default)]
        after: Cycle,
    },
    BeatDuplicate {
        #[serde(default)]
        after: Cycle,
    },
    PhantomRequest {
        slot: u8,
        #[serde(default)]
        after: Cycle,
        cycles: Cycle,
    },
    /// The controller runs with these timings while the checker keeps the declared ones.
    TimingSkew {
        #[serde(default)]
        t_rcd: Option<u32>,
        #[serde(default)]
        t_rp: Option<u32>,
        #[serde(default)]
        t_cl: Option<u32>,
        #[serde(default)]
        t_ras: Option<u32>,
    },
    IllegalCommand {
        #[serde(default)]
        after: Cycle,
    },
    PortMisuse {
        master: u16,
        #[serde(default)]
        after: Cycle,
    },
}

impl FaultSpec {
    pub fn view_fault(&self) -> Option<ViewFault> {
        Some(match *self {
            FaultSpec::DoubleGrant { after } => ViewFault::DoubleGrant { after },
            FaultSpec::GrantNonRequester { after } => ViewFault::GrantNonRequester { after },
            FaultSpec::FilterExpand { after } => ViewFault::FilterExpand { after },
            FaultSpec::IllegalTransition { after } => ViewFault::IllegalTransition { after },
            FaultSpec::BufferOverflow { after } => ViewFault::BufferOverflow { after },
            FaultSpec::FifoReorder { after } => ViewFault::FifoReorder { after },
            FaultSpec::BeatDuplicate { after } => ViewFault::BeatDuplicate { after },
            FaultSpec::PhantomRequest { slot, after, cycles } => ViewFault::PhantomRequest { slot, after, cycles },
            _ => return None,
        })
    }

    pub fn ddrc_fault(&self, declared: DdrTiming) -> Option<DdrcFault> {
        match *self {
            FaultSpec::TimingSkew { t_rcd, t_rp, t_cl, t_ras } => Some(DdrcFault::TimingSkew(DdrTiming {
                t_rcd: t_rcd.unwrap_or(declared.t_rcd),
                t_rp: t_rp.unwrap_or(declared.t_rp),
                t_cl: t_cl.unwrap_or(declared.t_cl),
                t_ras: t_ras.unwrap_or(declared.t_ras),
            })),
            FaultSpec::IllegalCommand { after } => Some(DdrcFault::IllegalCommandFrom(after)),
            _ => None,
        }
    }

    pub fn master_fault(&self) -> Option<(MasterId, MasterFault)> {
        match *self {
            FaultSpec::PortMisuse { master, after } => Some((MasterId(master), MasterFault::ReadWithoutGrant { after })),
            _ => None,
        }
    }
}

/// One master after `count` expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedMaster {
    pub id: MasterId,
    pub spec: MasterSpec,
}

impl SimConfig {
    /// A config with defaults everywhere and the given masters.
    pub fn with_masters(masters: Vec<MasterSpec>) -> Self {
        SimConfig {
            seed: 0,
            max_cycles: default_max_cycles(),
            stop_when_idle: true,
            bus: BusSection::default(),
            write_buffer: WriteBufferConfig::default(),
            filters: FilterSection::default(),
            ddr: DdrSection::default(),
            masters,
            output: OutputSection::default(),
            checker: CheckerSection::default(),
            fault: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides, then validates.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, &e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: SimConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| invalid(field_of(&e), e.message()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_cycles == 0 {
            return Err(invalid("max_cycles", "must be positive"));
        }
        if ![32, 64, 128].contains(&self.bus.width_bits) {
            return Err(invalid("bus.width_bits", "must be 32, 64 or 128"));
        }
        if self.write_buffer.enabled && self.write_buffer.depth == 0 {
            return Err(invalid("write_buffer.depth", "must be positive when the buffer is enabled"));
        }
        if !self.filters.f1 {
            return Err(invalid("filters.F1", "request validation cannot be disabled"));
        }
        if !self.filters.f7 {
            return Err(invalid("filters.F7", "round robin cannot be disabled"));
        }
        self.ddr.timing.validate().map_err(|r| invalid("ddr.timing", r))?;
        self.address_map()?;
        let total: u32 = self.masters.iter().map(|m| m.count).sum();
        if total as usize > Slot::MAX_MASTERS {
            return Err(invalid("masters", format!("{total} masters, at most {}", Slot::MAX_MASTERS)));
        }
        for (i, m) in self.masters.iter().enumerate() {
            if m.count == 0 {
                return Err(invalid(format!("masters.{i}.count"), "must be positive"));
            }
            if m.txn_count == 0 {
                return Err(invalid(format!("masters.{i}.txn_count"), "must be positive"));
            }
            if m.rt && m.qos_objective == 0 {
                return Err(invalid(format!("masters.{i}.qos_objective"), "real-time masters need a positive objective"));
            }
            if let InterArrival::Range([lo, hi]) = m.inter_arrival {
                if lo > hi {
                    return Err(invalid(format!("masters.{i}.inter_arrival"), "empty range"));
                }
            }
            if let Stride::Bytes(s) = m.stride {
                if s % u64::from(self.bus.width_bits / 8) != 0 {
                    return Err(invalid(format!("masters.{i}.stride"), "must be a multiple of the bus width"));
                }
            }
        }
        if let Some(FaultSpec::PortMisuse { master, .. }) = self.fault {
            if u32::from(master) >= total {
                return Err(invalid("fault.master", "no such master"));
            }
        }
        Ok(())
    }

    pub fn address_map(&self) -> Result<AddressMap, ConfigError> {
        let a = self.ddr.address_map;
        AddressMap::new(self.bus.width_bits, a.col_bits, a.bank_bits, a.row_bits).map_err(|e| invalid("ddr.address_map", e))
    }

    pub fn resolved_masters(&self) -> Vec<ResolvedMaster> {
        let mut out = Vec::new();
        for spec in &self.masters {
            for _ in 0..spec.count {
                out.push(ResolvedMaster {
                    id: MasterId(out.len() as u16),
                    spec: MasterSpec { count: 1, ..*spec },
                });
            }
        }
        out
    }

    pub fn bus_config(&self) -> BusConfig {
        BusConfig {
            bus_width_bits: self.bus.width_bits,
            filter_enabled: self.filters.as_array(),
            rr_pointer_init: self.bus.rr_pointer_init,
            qos_urgency_threshold: self.bus.qos_urgency_threshold,
            static_priority: self.resolved_masters().iter().map(|m| m.spec.priority).collect(),
            next_info_hints: self.bus.next_info_hints,
            write_buffer: self.write_buffer,
            starvation_guard: self.checker_config().starvation_bound / 2,
        }
    }

    pub fn rt_objectives(&self) -> Vec<Option<u32>> {
        self.resolved_masters()
            .iter()
            .map(|m| m.spec.rt.then_some(m.spec.qos_objective))
            .collect()
    }

    pub fn checker_config(&self) -> CheckerConfig {
        let rt = self.rt_objectives();
        CheckerConfig {
            timing: self.ddr.timing,
            banks: 1 << self.ddr.address_map.bank_bits,
            wb_depth: self.write_buffer.depth,
            starvation_bound: self
                .checker
                .starvation_bound
                .unwrap_or_else(|| CheckerConfig::default_starvation_bound(&rt)),
            rt_objectives: rt,
        }
    }
}

fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let (line, col) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
            (line, col)
        }
        None => (0, 0),
    };
    ConfigError::Parse {
        line,
        col,
        message: e.message().to_string(),
    }
}

fn field_of(e: &toml::de::Error) -> String {
    let msg = e.message();
    msg.split('`').nth(1).unwrap_or("config").to_string()
}

/// Parses the right-hand side of an override: TOML literal syntax, with
/// `on`/`off` as booleans and anything unparsable taken as a string.
fn override_value(raw: &str) -> toml::Value {
    match raw {
        "on" => return toml::Value::Boolean(true),
        "off" => return toml::Value::Boolean(false),
        _ => {}
    }
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets a dotted path such as `filters.F5` or `masters.0.rt`.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(assignment.to_string()));
    }
    let (first, rest) = parts.split_first().expect("split yields one part");
    let node = table
        .entry(first.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    set_path(node, rest, override_value(raw.trim()), key)
}

fn set_path(node: &mut toml::Value, parts: &[&str], value: toml::Value, key: &str) -> Result<(), ConfigError> {
    let Some((part, rest)) = parts.split_first() else {
        *node = value;
        return Ok(());
    };
    let child = match node {
        toml::Value::Table(t) => t
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new())),
        toml::Value::Array(items) => {
            let idx: usize = part.parse().map_err(|_| invalid(key, format!("`{part}` is not a list index")))?;
            let len = items.len();
            items
                .get_mut(idx)
                .ok_or_else(|| invalid(key, format!("index {idx} out of range for {len} entries")))?
        }
        _ => return Err(invalid(key, format!("cannot descend into `{part}`"))),
    };
    set_path(child, rest, value, key)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[masters]]
pattern = "single"
op = "read"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = SimConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.bus.width_bits, 64);
        assert_eq!(c.write_buffer.depth, 4);
        assert!(c.write_buffer.enabled);
        assert_eq!(c.filters.as_array(), [true; 7]);
        assert_eq!(c.ddr.timing, DdrTiming::default());
        assert_eq!(c.masters[0].txn_count, 200);
    }

    #[test]
    fn zero_depth_rejected() {
        let err = SimConfig::parse(&format!("{MINIMAL}\n[write_buffer]\ndepth = 0\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref field, .. } if field == "write_buffer.depth"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = SimConfig::parse(&format!("{MINIMAL}\n[bus]\nwidth = 64\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { .. }), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = SimConfig::parse("seed = 1\nmax_cycles = = 3\n").unwrap_err();
        match err {
            ConfigError::Parse { line, col, .. } => {
                assert_eq!(line, 2);
                assert!(col > 1);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn read_write_mix_expands_to_twelve() {
        let text = r#"
[[masters]]
pattern = "mixed"
op = "read"
count = 8

[[masters]]
pattern = "mixed"
op = "write"
count = 4
"#;
        let c = SimConfig::parse(text).unwrap();
        let m = c.resolved_masters();
        assert_eq!(m.len(), 12);
        assert_eq!(m.iter().filter(|m| m.spec.op == OpMix::Write).count(), 4);
        assert_eq!(m[11].id, MasterId(11));
    }

    #[test]
    fn overrides() {
        let c = SimConfig::parse_with_overrides(
            MINIMAL,
            &[
                "filters.F5=off".into(),
                "seed=9".into(),
                "masters.0.rt=true".into(),
                "masters.0.qos_objective=40".into(),
                "ddr.timing.t_cl=4".into(),
            ],
        )
        .unwrap();
        assert!(!c.filters.f5);
        assert_eq!(c.seed, 9);
        assert!(c.masters[0].rt);
        assert_eq!(c.masters[0].qos_objective, 40);
        assert_eq!(c.ddr.timing.t_cl, 4);
        assert!(SimConfig::parse_with_overrides(MINIMAL, &["filters.F1=off".into()]).is_err());
        assert!(SimConfig::parse_with_overrides(MINIMAL, &["seed".into()]).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = SimConfig::parse(MINIMAL).unwrap();
        let again = SimConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SimConfig>(&json).unwrap(), c);
    }

    #[test]
    fn fault_section() {
        let c = SimConfig::parse(&format!("{MINIMAL}\n[fault]\nkind = \"timing-skew\"\nt_rcd = 1\n")).unwrap();
        let f = c.fault.unwrap().ddrc_fault(DdrTiming::default()).unwrap();
        assert_eq!(
            f,
            DdrcFault::TimingSkew(DdrTiming {
                t_rcd: 1,
                ..DdrTiming::default()
            })
        );
    }
}
