use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use smforge::commands::{self, DiagFormat, Failure, RunOptions};

/// Toolchain for robot-controller state machines.
#[derive(Parser)]
#[command(name = "smforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and analyze a model, printing diagnostics.
    Check {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compile one machine to an IR document.
    Compile {
        model: PathBuf,
        /// Machine to compile; optional when the model has only one.
        #[arg(long)]
        machine: Option<String>,
        /// Output file; defaults to `<machine>.smir.json`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Emit `.gen.txt` source units for a machine and its interfaces.
    Codegen {
        model: PathBuf,
        /// Machine to emit; all machines when omitted.
        #[arg(long)]
        machine: Option<String>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Interpret an IR machine against an event script.
    Run {
        ir: PathBuf,
        #[arg(long)]
        machine: Option<String>,
        /// NDJSON of `{cycle, events}` records.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Number of cycles; defaults to the script length.
        #[arg(long)]
        max_cycles: Option<u64>,
        /// Model time units per cycle.
        #[arg(long, default_value_t = 1.0)]
        time_unit: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a swarm scenario and write its metrics.
    Sim {
        scenario: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Check { model, format } => commands::check(
            &model,
            match format {
                Format::Text => DiagFormat::Text,
                Format::Json => DiagFormat::Json,
            },
        ),
        Command::Compile {
            model,
            machine,
            out,
        } => commands::compile_cmd(&model, machine.as_deref(), out.as_deref()),
        Command::Codegen {
            model,
            machine,
            out,
        } => commands::codegen(&model, machine.as_deref(), &out),
        Command::Run {
            ir,
            machine,
            script,
            max_cycles,
            time_unit,
            out,
        } => commands::run(&RunOptions {
            ir: &ir,
            machine: machine.as_deref(),
            script: script.as_deref(),
            max_cycles,
            out: &out,
            time_unit,
        }),
        Command::Sim { scenario, seed } => {
            commands::sim(&scenario, seed).map(|line| println!("{line}"))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SMFORGE_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version are successes; bad invocations are usage errors.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("smforge: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
