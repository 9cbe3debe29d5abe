use std::path::PathBuf;

use clap::{Parser, Subcommand};
use tunneling_times::{list_experiments, run_experiment, validate_config};

/// Run tunneling-time experiments from flat config files.
///
/// Exit codes: 0 success, 2 config parse error, 3 validation error,
/// 4 runtime or numerical error. Parallel sections honor
/// RAYON_NUM_THREADS; results are bit-identical regardless of the
/// thread count.
#[derive(Parser)]
#[command(name = "ttime", version, about, verbatim_doc_comment)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file and write CSV tables plus summary.txt.
    Run {
        /// Experiment config file.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Parse and validate a config file without running it.
    Validate {
        /// Experiment config file.
        config: PathBuf,
    },
    /// List the experiment kinds `experiment.kind` accepts.
    ListExperiments,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => run_experiment(&config, &output).map(|report| {
            println!("ran {}:", report.kind.as_str());
            for file in &report.files {
                println!("  {}", file.display());
            }
        }),
        Command::Validate { config } => validate_config(&config).map(|exp| {
            print!("{}", exp.describe());
            println!("ok");
        }),
        Command::ListExperiments => {
            for (name, description) in list_experiments() {
                println!("{name:15} {description}");
            }
            Ok(())
        }
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
