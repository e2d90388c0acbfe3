//! Built-in configurations.
//!
//! The twelve workload presets put twelve saturating masters on the bus:
//! all readers, all writers, or eight readers with four writers, each with
//! single, burst4, burst8 or mixed bursts. `qos-stress` adds one real-time
//! reader to eleven bulk readers.

use crate::config::{ConfigError, SimConfig};

pub struct Preset {
    pub name: &'static str,
    pub toml: &'static str,
}

impl Preset {
    /// First comment line of the file.
    pub fn description(&self) -> &'static str {
        self.toml.lines().next().and_then(|l| l.strip_prefix("# ")).unwrap_or("")
    }

    pub fn load(&self, overrides: &[String]) -> Result<SimConfig, ConfigError> {
        SimConfig::parse_with_overrides(self.toml, overrides)
    }
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        pub const PRESETS: &[Preset] = &[
            $(Preset { name: $name, toml: include_str!(concat!("../presets/", $name, ".toml")) },)*
        ];
    };
}

presets!(
    "read-single",
    "read-burst4",
    "read-burst8",
    "read-mixed",
    "write-single",
    "write-burst4",
    "write-burst8",
    "write-mixed",
    "rw-single",
    "rw-burst4",
    "rw-burst8",
    "rw-mixed",
    "qos-stress",
);

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.name)
}
