use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ahbplus::config::{ReportFormat, SimConfig};
use ahbplus::presets;
use ahbplus::sim::{SimOptions, Simulation};
use ahbplus::Report;
use clap::{Parser, Subcommand};

/// Directory for reports and traces when `--out` / `--trace` are not given.
const OUT_DIR_ENV: &str = "AHBSIM_OUT_DIR";

#[derive(Parser)]
#[command(name = "ahbsim", version, about = "AHB-style bus and DDR controller simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write its report.
    Run {
        /// Config file, or `preset:<name>` for a built-in one.
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_cycles: Option<u64>,
        /// Override a config key, e.g. `filters.F5=off` or `masters.0.txn_count=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Write the event trace here (implies tracing).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Built-in configurations.
    Presets {
        #[command(subcommand)]
        cmd: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    List,
    /// Print a preset's TOML.
    Show { name: String },
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn real_main(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Presets { cmd: PresetCmd::List } => {
            for p in presets::PRESETS {
                println!("{:<14} {}", p.name, p.description());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Presets {
            cmd: PresetCmd::Show { name },
        } => match presets::find(&name) {
            Some(p) => {
                print!("{}", p.toml);
                Ok(ExitCode::SUCCESS)
            }
            None => Err(format!("no preset named `{name}`").into()),
        },
        Cmd::Run {
            config,
            seed,
            max_cycles,
            set,
            trace,
            out,
            format,
        } => {
            let mut overrides = Vec::new();
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            if let Some(m) = max_cycles {
                overrides.push(format!("max_cycles={m}"));
            }
            overrides.extend(set);
            let (stem, cfg) = match config.strip_prefix("preset:") {
                Some(name) => {
                    let p = presets::find(name).ok_or_else(|| format!("no preset named `{name}`"))?;
                    (name.to_string(), p.load(&overrides)?)
                }
                None => {
                    let stem = Path::new(&config)
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "run".into());
                    (stem, SimConfig::load(&config, &overrides)?)
                }
            };
            let format = format.unwrap_or(cfg.output.format);
            let out_dir = PathBuf::from(std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| "out".into()));
            let base = format!("{stem}-seed{}", cfg.seed);
            let trace = trace.or_else(|| cfg.output.trace.then(|| out_dir.join(format!("{base}.trace.csv"))));
            let out = out.unwrap_or_else(|| {
                let ext = match format {
                    ReportFormat::Struct => "json",
                    ReportFormat::Table => "csv",
                };
                out_dir.join(format!("{base}.{ext}"))
            });

            let options = SimOptions {
                keep_events: trace.is_some(),
                ..SimOptions::default()
            };
            let outcome = Simulation::with_options(cfg.clone(), options)?.run()?;
            let report = Report::new(&cfg, &overrides, &outcome);
            write_file(&out, report.render(format)?.as_bytes())?;
            if let Some(path) = &trace {
                let mut buf = Vec::new();
                outcome.write_trace(&mut buf)?;
                write_file(path, &buf)?;
            }

            eprintln!(
                "{} cycles, {} transactions, {:.0} cycles/sec, report {}",
                outcome.summary.total_cycles,
                outcome.summary.completed_transactions,
                outcome.cycles_per_sec(),
                out.display()
            );
            match outcome.fatal() {
                Some(v) => {
                    eprintln!("aborted: {v}");
                    Ok(ExitCode::from(2))
                }
                None => Ok(ExitCode::SUCCESS),
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)
}
