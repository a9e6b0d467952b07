use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use essform_cli::{emit, run, Overrides, Table};

#[derive(Parser)]
#[command(
    name = "essform",
    version,
    about = "Form-triple analyses: association, numerical range, coercivity, semigroups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses of a configuration file.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for sampled checks, overriding `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Graph-relation tolerance, overriding `tolerances.graph`.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Write a plot table from a report.
    Emit {
        report: PathBuf,
        #[arg(long, value_enum)]
        which: Table,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run { config, out, seed, tol } => run(&config, &Overrides { out, seed, tol }).map(|outcome| {
            print!("{}", outcome.report.summary());
            println!("wrote {}", outcome.output_dir.display());
            outcome.exit_code()
        }),
        Command::Emit { report, which, out } => emit(&report, which, out.as_deref()).map(|path| {
            println!("wrote {}", path.display());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
