use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bubble_cli::commands::{simulate, sweep, verify};
use bubble_cli::config::parse_config;
use bubble_core::acceptance::table;

#[derive(Parser)]
#[command(
    name = "bubble",
    version,
    about = "Radial bubble oscillations in a compressible liquid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one configuration per value of a parameter, in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma separated.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => {
            parse_config(&config)
                .and_then(|cfg| simulate(&cfg, &out))
                .map(|(_, m)| {
                    for w in &m.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("wrote {} files to {}", m.outputs.len(), out.display());
                    true
                })
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            // `--values ""` arrives as one blank entry
            let values: Vec<String> = values.into_iter().filter(|v| !v.trim().is_empty()).collect();
            parse_config(&config)
                .and_then(|cfg| sweep(&cfg, &param, &values, &out))
                .map(|rows| {
                    let mut ok = true;
                    for r in &rows {
                        match &r.error {
                            None => println!("{} = {}: max err {:e}", param, r.value, r.max_err),
                            Some(e) => {
                                ok = false;
                                eprintln!("{} = {}: {e}", param, r.value);
                            }
                        }
                    }
                    ok
                })
        }
        Command::Verify { out } => verify(&out).map(|outcomes| {
            print!("{}", table(&outcomes));
            outcomes.iter().all(|o| o.check.pass)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
