//! Parses a config with overrides, runs it and prints both report formats.

use ahbplus::config::ReportFormat;
use ahbplus::{run_config, Report, SimConfig};

const CONFIG: &str = r#"
seed = 42

[write_buffer]
depth = 2

[[masters]]
pattern = "burst4"
op = "read"
rt = true
qos_objective = 40
txn_count = 10

[[masters]]
pattern = "single"
op = "write"
txn_count = 10
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let overrides = vec!["filters.F6=off".to_string(), "masters.1.txn_count=4".to_string()];
    let config = SimConfig::parse_with_overrides(CONFIG, &overrides)?;
    let out = run_config(&config)?;
    let report = Report::new(&config, &overrides, &out);
    println!("{}", report.render(ReportFormat::Struct)?);
    for line in report.render(ReportFormat::Table)?.lines().filter(|l| l.starts_with("summary.")) {
        println!("{line}");
    }
    match SimConfig::parse("seed = 1\n[write_buffer]\ndepth = 0\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
