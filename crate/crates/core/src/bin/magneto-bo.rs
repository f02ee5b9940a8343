use clap::{Parser, Subcommand};
use magneto_bo::experiment::{self, ExperimentConfig};
use magneto_bo::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "magneto-bo", version, about = "Born-Oppenheimer reduction experiments in a constant magnetic field")]
struct Cli {
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config.
    Run { config: PathBuf },
    /// Scan the config's `h_list` and fit slopes.
    ScanH { config: PathBuf },
    /// Check the config, models and grids without running anything.
    Validate { config: PathBuf },
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("magneto-bo: {err}");
    exit(err.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("magneto-bo: cannot start {n} threads: {e}");
            return exit(2);
        }
    }
    let (path, scan) = match &cli.command {
        Command::Run { config } => (config, false),
        Command::ScanH { config } => (config, true),
        Command::Validate { config } => {
            return match ExperimentConfig::load(config).and_then(|c| experiment::validate(&c)) {
                Ok(lines) => {
                    lines.iter().for_each(|l| println!("{l}"));
                    exit(0)
                }
                Err(e) => fail(&e),
            };
        }
    };
    let config = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let dir = cli
        .output_dir
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").to_path_buf());
    let start = Instant::now();
    let result = if scan { experiment::scan_h(&config) } else { experiment::run(&config) };
    match result {
        Ok(report) => {
            if let Err(e) = report.write(&dir) {
                return fail(&e);
            }
            for (k, v) in &report.results.metrics {
                println!("{k} = {v:.6e}");
            }
            for a in &report.assertions {
                println!("{}", a.describe());
            }
            println!("report written to {} in {:.2} s", dir.display(), report.wall_time);
            exit(report.exit_code())
        }
        Err(e) => {
            if let Err(w) = experiment::write_failure(&dir, &config, &e, start.elapsed().as_secs_f64()) {
                eprintln!("magneto-bo: {w}");
            }
            fail(&e)
        }
    }
}
