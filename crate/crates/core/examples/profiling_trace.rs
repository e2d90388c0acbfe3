//! Writes an event trace and a table report, then recomputes utilization
//! from the trace alone.

use ahbplus::config::ReportFormat;
use ahbplus::profiling::utilization_from_trace;
use ahbplus::sim::{SimOptions, Simulation};
use ahbplus::{presets, Report};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = presets::find("rw-mixed").unwrap().load(&[])?;
    let out = Simulation::with_options(
        config.clone(),
        SimOptions {
            keep_events: true,
            ..SimOptions::default()
        },
    )?
    .run()?;

    let dir = std::env::temp_dir().join("ahbplus-profiling");
    std::fs::create_dir_all(&dir)?;
    let trace_path = dir.join("trace.csv");
    out.write_trace(std::fs::File::create(&trace_path)?)?;
    let report_path = dir.join("report.csv");
    std::fs::write(&report_path, Report::new(&config, &[], &out).render(ReportFormat::Table)?)?;

    println!("{} cycles, utilization {:.3}, contention {:.2}", out.summary.total_cycles, out.metrics.utilization, out.metrics.contention);
    println!("master  completed  bytes   throughput  mean grant wait  max");
    for (i, m) in out.metrics.masters.iter().enumerate() {
        println!(
            "{i:>6}  {:>9}  {:>6}  {:>10.3}  {:>15.1}  {:>3}",
            m.completed, m.bytes, m.throughput, m.mean_grant_latency, m.max_grant_latency
        );
    }
    let trace = std::fs::read_to_string(&trace_path)?;
    let replayed = utilization_from_trace(&trace, out.summary.total_cycles)?;
    println!("utilization from {}: {replayed:.3}", trace_path.display());
    println!("table report: {}", report_path.display());
    Ok(())
}
