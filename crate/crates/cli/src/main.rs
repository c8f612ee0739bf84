mod commands;
mod config;
mod report;

use clap::{Parser, ValueEnum};
use config::ExperimentConfig;
use report::{render_csv, render_json, Report, Versions};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Rare-event analytics for default-driven portfolio losses.
#[derive(Parser)]
#[command(name = "lossldp", version, arg_required_else_help = true)]
struct Cli {
    /// Analysis to run; an unknown name lists the available ones.
    command: String,
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, (u8, String)> {
    let started = Instant::now();

    let Some(cmd) = commands::find(&cli.command) else {
        let mut listing = format!("unknown command '{}'; available commands:\n", cli.command);
        for c in commands::registry() {
            listing.push_str(&format!("  {:<18} {}\n", c.name(), c.summary()));
        }
        return Err((2, listing));
    };

    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| (2, e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(tol) = cli.tol {
        cfg.tol = Some(tol);
    }

    let output = cmd
        .run(&cfg)
        .map_err(|e| (commands::exit_code(&e) as u8, e.to_string()))?;

    let rendered = match cli.format {
        OutputFormat::Json => {
            let report = Report {
                command: cmd.name(),
                config: &cfg,
                results: output.results,
                versions: Versions::current(),
                timing_ms: started.elapsed().as_millis(),
            };
            render_json(&report)
        }
        OutputFormat::Csv => match &output.table {
            Some(rows) => render_csv(rows),
            None => {
                return Err((
                    2,
                    format!(
                        "command '{}' has no size table; csv output is only available for \
                         barrier, increment, oracle-barrier, oracle-increment, and simulate",
                        cmd.name()
                    ),
                ))
            }
        },
    };

    match &cli.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| (2u8, format!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }

    Ok(output.exit_override.unwrap_or(0) as u8)
}
