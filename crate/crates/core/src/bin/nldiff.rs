use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nldiff::experiment::{self, RunOptions};

#[derive(Parser)]
#[command(name = "nldiff", version, about = "Nonlocal-in-time degenerate diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; falls back to the config's output.dir, then NLDIFF_OUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run { config: PathBuf },
    /// Run one experiment per value of a config parameter.
    Sweep {
        config: PathBuf,
        /// Dotted path into the config, e.g. problem.kernel.alpha.
        #[arg(long)]
        param: String,
        /// Comma-separated values, each parsed as JSON and otherwise taken as a string.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<String>,
    },
}

fn clamp(code: i32) -> ExitCode {
    ExitCode::from(code.clamp(0, 255) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions {
        out: cli.out,
        seed: cli.seed,
    };
    let result = match &cli.command {
        Command::Run { config } => experiment::run(config, &options).map(|o| {
            if !cli.quiet {
                print!("{}", o.text);
                println!("wrote {} files to {}", o.files.len(), o.dir.display());
            }
            o.exit_code
        }),
        Command::Sweep { config, param, values } => experiment::sweep(config, param, values, &options).map(|o| {
            for (value, child) in &o.children {
                match child {
                    Err(msg) => eprintln!("{param} = {value}: {msg}"),
                    Ok(c) if !cli.quiet => println!("{param} = {value}: exit {}", c.exit_code),
                    Ok(_) => {}
                }
            }
            if !cli.quiet {
                println!("aggregate: {}", o.aggregate.display());
            }
            o.exit_code
        }),
    };
    match result {
        Ok(code) => clamp(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
