use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use suplab::report::{emit_summary, load_scenario, render_text, run_scenario, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "suplab", version, about = "Exact and Monte Carlo checks of empirical-process tail bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV/JSON results.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for parallel sections; results do not depend on it.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output directory; defaults to the scenario's `output`, then `suplab-out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Command::Run { scenario, seed, workers, out } = Cli::parse().command;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build_global();
    let input_error = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_INPUT as u8)
    };
    let parsed = match load_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => return input_error(format!("{}: {e}", scenario.display())),
    };
    let outcome = match run_scenario(&parsed, seed, workers) {
        Ok(o) => o,
        Err(e) => return input_error(e.to_string()),
    };
    let dir = out.or(parsed.output.clone()).unwrap_or_else(|| PathBuf::from("suplab-out"));
    if let Err(e) = emit_summary(&outcome, &dir) {
        return input_error(format!("cannot write to {}: {e}", dir.display()));
    }
    print!("{}", render_text(&outcome));
    println!("\nwrote {} tables to {}", outcome.tables.len(), dir.display());
    ExitCode::from(outcome.exit_code() as u8)
}
