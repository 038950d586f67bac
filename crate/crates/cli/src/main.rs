mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use psge_core::config::ConfigMap;

use args::{Cli, Command};
use output::{CliError, CliResult, Sink};

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            ConfigMap::parse(&text)?
        }
        None => ConfigMap::new(),
    };
    for (k, v) in cli.command.overrides().pairs() {
        cfg.set(k, v)?;
    }
    let (out, format, name) = (cli.out.clone(), cli.format, cli.command.name());
    let sink_for = move |cfg: &ConfigMap| Sink {
        path: out,
        format,
        command: name,
        config: cfg.clone(),
    };
    match cli.command {
        Command::Kernel(_) => commands::kernel(&mut cfg, sink_for, cli.verify),
        Command::Wave(_) => commands::wave(&mut cfg, sink_for, cli.verify, cli.strict),
        Command::Solve(_) => commands::solve(&mut cfg, sink_for, cli.verify, cli.strict),
        Command::Sweep(_) => commands::sweep(&mut cfg, sink_for),
        Command::Oracle(_) => commands::oracle(&mut cfg, sink_for),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(1)
        }
    }
}
