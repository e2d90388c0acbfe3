//! One real-time reader against eleven saturating bulk readers, with and
//! without the QoS urgency filter.

use ahbplus::presets;
use ahbplus::run_config;

fn main() {
    let p = presets::find("qos-stress").unwrap();
    for (label, overrides) in [("F3 on ", vec![]), ("F3 off", vec!["filters.F3=off".to_string()])] {
        let out = run_config(&p.load(&overrides).unwrap()).unwrap();
        let rt = out.qos.iter().position(|q| q.rt).unwrap();
        let m = &out.metrics.masters[rt];
        println!(
            "{label}: objective {} cycles, {} deadline misses, worst grant wait {} cycles, mean {:.1}",
            out.qos[rt].objective, out.qos[rt].violations, m.max_grant_latency, m.mean_grant_latency
        );
    }
}
