use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twinsync_cli::commands::{self, SimulateRequest};
use twinsync_cli::validate::{self, Fault, Subjects, ValidateOptions};
use twinsync_cli::{CliError, RunConfig};
use twinsync_core::simulator::{PolicyKind, SweepAxis};

#[derive(Parser)]
#[command(
    name = "twinsync",
    version,
    about = "Digital-twin sync scheduling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its per-slot trace.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Overrides the first policy in the config, e.g. `online:1`.
        #[arg(long)]
        policy: Option<PolicyKind>,
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the config's `output`, then `trace.csv`.
        #[arg(short, long)]
        trace: Option<PathBuf>,
        /// Also write topology, profiles and channel gains as JSON lines.
        #[arg(long)]
        dump_episode: Option<PathBuf>,
    },
    /// Average every policy over many realizations at each value of one axis.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// servers, max_aoi or beta.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated, e.g. `20,30,40` or `0,0.5,inf`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Defaults to the config's `output`.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check every solver against brute force on small instances.
    Validate {
        #[arg(long, default_value_t = validate::MAX_SIZE_LIMIT)]
        size_limit: usize,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Print the default configuration.
    DefaultConfig {
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            policy,
            seed,
            trace,
            dump_episode,
        } => {
            let cfg = RunConfig::load(&config)?;
            let trace_path = trace
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("trace.csv"));
            let req = SimulateRequest {
                policy,
                seed,
                trace_path,
                episode_dump: dump_episode,
            };
            let outcome = commands::cmd_simulate(&cfg, &req)?;
            println!(
                "{}",
                commands::summary_line(outcome.trace.policy, &outcome.metrics)
            );
            println!("trace: {}", req.trace_path.display());
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
            realizations,
            threads,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(r) = realizations {
                cfg.realizations = r;
                cfg.check()?;
            }
            let out = out.or_else(|| cfg.output.clone()).ok_or_else(|| {
                CliError::Config("sweep needs --out or `output` in the config".into())
            })?;
            let values = commands::parse_values(&values)?;
            let rows = commands::cmd_sweep(&cfg, axis, &values, &out, threads)?;
            println!("{} rows -> {}", rows.len(), out.display());
        }
        Command::Validate {
            size_limit,
            instances,
            seed,
            json,
            inject_fault,
        } => {
            let subjects = match inject_fault {
                Some(f) => Subjects::with_fault(f.parse::<Fault>()?),
                None => Subjects::default(),
            };
            let opts = ValidateOptions {
                size_limit,
                instances,
                seed,
            };
            let report = validate::cmd_validate(&opts, &subjects)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", report.render());
            }
        }
        Command::DefaultConfig { out } => {
            let text = RunConfig::default().to_toml();
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
