#![allow(dead_code)]

use ahbplus::checker::Rule;
use ahbplus::config::{MasterSpec, SimConfig};
use ahbplus::masters::{InterArrival, OpMix, PatternKind, Stride, StrideMode};
use ahbplus::presets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn preset(name: &str) -> SimConfig {
    presets::find(name).unwrap_or_else(|| panic!("preset {name}")).load(&[]).unwrap()
}

pub fn preset_with(name: &str, overrides: &[&str]) -> SimConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    presets::find(name).unwrap().load(&o).unwrap()
}

/// The twelve workload presets (everything except the QoS stress case).
pub fn workload_presets() -> Vec<&'static str> {
    presets::names().filter(|n| *n != "qos-stress").collect()
}

/// Small memory so random traffic keeps revisiting the same rows and addresses.
pub fn small_memory(c: &mut SimConfig) {
    c.ddr.address_map.row_bits = 2;
}

/// A random config with at most three masters and at most `max_cycles` cycles.
pub fn random_small_config(seed: u64, max_cycles: u64) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [PatternKind::Single, PatternKind::Burst4, PatternKind::Burst8, PatternKind::Mixed];
    let n = rng.random_range(1..=3);
    let masters = (0..n)
        .map(|_| {
            let mut m = MasterSpec::new(
                kinds[rng.random_range(0..4)],
                if rng.random_bool(0.5) { OpMix::Read } else { OpMix::Write },
            );
            m.txn_count = rng.random_range(1..=40);
            m.stride = if rng.random_bool(0.5) {
                Stride::Named(StrideMode::Random)
            } else {
                Stride::default()
            };
            m.inter_arrival = if rng.random_bool(0.5) {
                InterArrival::Fixed(rng.random_range(0..4))
            } else {
                InterArrival::Range([0, rng.random_range(1..10)])
            };
            if rng.random_bool(0.3) {
                m.rt = true;
                m.qos_objective = rng.random_range(10..80);
            }
            m.priority = rng.random_range(0..2);
            m
        })
        .collect();
    let mut c = SimConfig::with_masters(masters);
    c.seed = rng.random();
    c.max_cycles = rng.random_range(20..=max_cycles);
    c.stop_when_idle = rng.random_bool(0.5);
    c.write_buffer.enabled = rng.random_bool(0.7);
    c.write_buffer.depth = rng.random_range(1..=6);
    c.bus.next_info_hints = rng.random_bool(0.5);
    c.bus.rr_pointer_init = rng.random_range(0..4);
    c.filters.f2 = rng.random_bool(0.7);
    c.filters.f3 = rng.random_bool(0.7);
    c.filters.f4 = rng.random_bool(0.7);
    c.filters.f5 = rng.random_bool(0.7);
    c.filters.f6 = rng.random_bool(0.7);
    c.ddr.functional_memory = true;
    if rng.random_bool(0.5) {
        small_memory(&mut c);
    }
    c
}

const BURSTS_AND_WRITES: &str = r#"
seed = 3
[[masters]]
pattern = "burst4"
op = "read"
count = 2
txn_count = 40
[[masters]]
pattern = "mixed"
op = "write"
count = 2
txn_count = 40
"#;

const ROW_CONFLICTS: &str = r#"
seed = 3
[[masters]]
pattern = "single"
op = "write"
count = 3
txn_count = 60
stride = "random"
[[masters]]
pattern = "burst4"
op = "read"
txn_count = 60
stride = "random"
"#;

const SHORT_RT: &str = r#"
seed = 3
[[masters]]
pattern = "burst4"
op = "read"
rt = true
qos_objective = 20
txn_count = 5
[[masters]]
pattern = "burst8"
op = "read"
count = 2
txn_count = 60
"#;

/// One fault-injection scenario per checker rule: base traffic plus a
/// `[fault]` (and sometimes `[checker]`) section.
pub fn fault_matrix() -> Vec<(Rule, String)> {
    let with = |base: &str, extra: &str| format!("{base}\n{extra}\n");
    vec![
        (Rule::GrantExclusivity, with(BURSTS_AND_WRITES, "[fault]\nkind = \"double-grant\"\nafter = 50")),
        (Rule::GrantRequester, with(BURSTS_AND_WRITES, "[fault]\nkind = \"grant-non-requester\"\nafter = 50")),
        (Rule::FilterChain, with(BURSTS_AND_WRITES, "[fault]\nkind = \"filter-expand\"\nafter = 50")),
        (Rule::FsmTransition, with(BURSTS_AND_WRITES, "[fault]\nkind = \"illegal-transition\"")),
        (Rule::TimingTrcd, with(BURSTS_AND_WRITES, "[fault]\nkind = \"timing-skew\"\nt_rcd = 1")),
        (Rule::TimingTrp, with(ROW_CONFLICTS, "[fault]\nkind = \"timing-skew\"\nt_rp = 1")),
        (Rule::TimingTras, with(ROW_CONFLICTS, "[fault]\nkind = \"timing-skew\"\nt_ras = 3")),
        (Rule::TimingTcl, with(BURSTS_AND_WRITES, "[fault]\nkind = \"timing-skew\"\nt_cl = 2")),
        (Rule::BufferBounds, with(BURSTS_AND_WRITES, "[fault]\nkind = \"buffer-overflow\"\nafter = 50")),
        (Rule::BufferFifo, with(BURSTS_AND_WRITES, "[fault]\nkind = \"fifo-reorder\"\nafter = 50")),
        (Rule::BeatConservation, with(BURSTS_AND_WRITES, "[fault]\nkind = \"beat-duplicate\"\nafter = 50")),
        (Rule::IllegalCommand, with(BURSTS_AND_WRITES, "[fault]\nkind = \"illegal-command\"")),
        (Rule::PortProtocol, with(BURSTS_AND_WRITES, "[fault]\nkind = \"port-misuse\"\nmaster = 0\nafter = 50")),
        (
            Rule::QosDeadline,
            with(SHORT_RT, "[fault]\nkind = \"phantom-request\"\nslot = 0\nafter = 300\ncycles = 25"),
        ),
        (
            Rule::Starvation,
            with(
                BURSTS_AND_WRITES,
                "[checker]\nstarvation_bound = 100\n[fault]\nkind = \"phantom-request\"\nslot = 20\nafter = 10\ncycles = 102",
            ),
        ),
    ]
}

/// The fault-free traffic behind each fault scenario.
pub fn fault_baselines() -> [&'static str; 3] {
    [BURSTS_AND_WRITES, ROW_CONFLICTS, SHORT_RT]
}
