//! Runs the twelve workload presets and prints total cycles plus the
//! burst8/burst4 ratio per traffic group.

use ahbplus::presets;
use ahbplus::run_config;

fn main() {
    let bursts = ["single", "burst4", "burst8", "mixed"];
    println!("{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}", "group", "single", "burst4", "burst8", "mixed", "b8/b4");
    for group in ["read", "write", "rw"] {
        let cycles: Vec<u64> = bursts
            .iter()
            .map(|b| {
                let c = presets::find(&format!("{group}-{b}")).unwrap().load(&[]).unwrap();
                run_config(&c).unwrap().summary.total_cycles
            })
            .collect();
        println!(
            "{group:<8} {:>8} {:>8} {:>8} {:>8} {:>8.3}",
            cycles[0],
            cycles[1],
            cycles[2],
            cycles[3],
            cycles[2] as f64 / cycles[1] as f64
        );
    }
}
