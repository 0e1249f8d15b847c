mod args;
mod commands;
mod config;
mod error;
mod input;
mod output;
mod plot;

use clap::error::ErrorKind;
use clap::Parser;
use gmwm::wv::ClusterStat;

use crate::args::{Cli, Command};
use crate::config::Settings;
use crate::error::{CliError, CliResult};

fn run(cli: &Cli) -> CliResult<()> {
    let s = Settings::new(&cli.global)?;
    if let Some(n) = s.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?;
    }
    match &cli.command {
        Command::Import(a) => commands::import(a, &s),
        Command::Wvar(a) => commands::wvar(a, &s),
        Command::Avar(a) => commands::cluster(a, &s, ClusterStat::Allan),
        Command::Hvar(a) => commands::cluster(a, &s, ClusterStat::Hadamard),
        Command::Fit(a) => commands::fit(a, &s),
        Command::Rank(a) => commands::rank(a, &s),
        Command::Auto(a) => commands::auto(a, &s),
        Command::Compare(a) => commands::compare(a, &s),
        Command::Simulate(a) => commands::simulate_cmd(a, &s),
        Command::Plot(a) => commands::plot_cmd(a, &s),
    }
}

fn fail(e: &CliError, json: bool) -> ! {
    if json {
        eprintln!("{}", e.to_json());
    } else {
        eprintln!("gmwm: {e}");
    }
    std::process::exit(e.exit_code());
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let json = std::env::args().any(|a| a == "--json");
            if !json {
                let _ = e.print();
                std::process::exit(1);
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            fail(&CliError::usage(first.trim_start_matches("error: ")), true);
        }
    };
    if let Err(e) = run(&cli) {
        fail(&e, cli.global.json);
    }
}
