//! Injects deliberate faults and shows which checker rule catches each one.

use ahbplus::{run_config, SimConfig};

const TRAFFIC: &str = r#"
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

fn main() {
    let faults = [
        "kind = \"double-grant\"\nafter = 50",
        "kind = \"filter-expand\"\nafter = 50",
        "kind = \"fifo-reorder\"\nafter = 50",
        "kind = \"beat-duplicate\"\nafter = 50",
        "kind = \"timing-skew\"\nt_rcd = 1",
        "kind = \"port-misuse\"\nmaster = 0\nafter = 50",
    ];
    let clean = run_config(&SimConfig::parse(TRAFFIC).unwrap()).unwrap();
    println!("no fault: {} violations in {} cycles", clean.violations.len(), clean.summary.total_cycles);
    for f in faults {
        let c = SimConfig::parse(&format!("{TRAFFIC}\n[fault]\n{f}\n")).unwrap();
        let out = run_config(&c).unwrap();
        let first = f.lines().next().unwrap();
        match out.violations.first() {
            Some(v) => println!("{first:<32} -> {v}"),
            None => println!("{first:<32} -> nothing caught"),
        }
    }
}
