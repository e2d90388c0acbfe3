//! Compares the mixed-burst workloads with and without bank interleaving
//! (idle-bank filter plus next-transaction hints to the controller).

use ahbplus::presets;
use ahbplus::run_config;

fn main() {
    println!("{:<12} {:>10} {:>10} {:>8} {:>12}", "preset", "on", "off", "saving", "utilization");
    for name in ["read-mixed", "write-mixed", "rw-mixed"] {
        let p = presets::find(name).unwrap();
        let on = run_config(&p.load(&[]).unwrap()).unwrap();
        let off_overrides = ["filters.F5=off".to_string(), "bus.next_info_hints=off".to_string()];
        let off = run_config(&p.load(&off_overrides).unwrap()).unwrap();
        let saving = 1.0 - on.summary.total_cycles as f64 / off.summary.total_cycles as f64;
        println!(
            "{name:<12} {:>10} {:>10} {:>7.1}% {:>5.2} / {:.2}",
            on.summary.total_cycles,
            off.summary.total_cycles,
            saving * 100.0,
            on.metrics.utilization,
            off.metrics.utilization
        );
    }
}
