use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ris_pkg::cli::{run_command, EXIT_OK, EXIT_RUNTIME};
use ris_pkg::selftest;

#[derive(Parser)]
#[command(name = "ris-pkg", version, about = "RIS key-generation experiment runner")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario described by a config file and write its CSV.
    Run {
        config: PathBuf,
        /// Override the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the built-in example checks.
    Selftest,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let code = match args.cmd {
        Cmd::Run { config, seed, out } => run_command(&config, seed, &out),
        Cmd::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                println!("{} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {} failed", checks.len(), failed);
            if failed == 0 {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            }
        }
    };
    ExitCode::from(code as u8)
}
