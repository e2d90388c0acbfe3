//! Write-buffer depth sweep on the mixed read/write workload, with the
//! buffer occupancy histogram and a memory-equivalence check.

use ahbplus::presets;
use ahbplus::run_config;

fn main() {
    let p = presets::find("rw-burst4").unwrap();
    let load = |extra: &[&str]| {
        let mut o: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
        o.push("ddr.functional_memory=true".into());
        p.load(&o).unwrap()
    };
    let direct = run_config(&load(&["write_buffer.enabled=false"])).unwrap();
    println!("no buffer: {} cycles", direct.summary.total_cycles);
    for depth in [1, 2, 4, 8] {
        let d = format!("write_buffer.depth={depth}");
        let out = run_config(&load(&[&d])).unwrap();
        let posted: u64 = out.metrics.masters.iter().map(|m| m.posted_writes).sum();
        println!(
            "depth {depth}: {} cycles, {posted} writes posted, occupancy histogram {:?}, memory {}",
            out.summary.total_cycles,
            out.metrics.buffer_histogram,
            if out.memory == direct.memory { "matches" } else { "DIFFERS" }
        );
    }
}
