use clap::{Parser, Subcommand};
use halflie::harness::{catalog_text, list_experiments, run, ExperimentConfig, OUT_DIR_ENV};
use halflie::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Batch runner for the half-Lie group experiments.
#[derive(Parser)]
#[command(name = "halflie", version)]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Print progress and timings on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Output directory (falls back to $HALFLIE_OUT_DIR, then the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&list_experiments()).expect("catalog serializes"));
            } else {
                print!("{}", catalog_text());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => {
            let mut cfg = match ExperimentConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("halflie: {e}");
                    return ExitCode::from(2);
                }
            };
            if seed.is_some() {
                cfg.seed = seed;
            }
            let dir = out
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            if cli.verbose {
                eprintln!("running {} (seed {:?})", cfg.experiment, cfg.seed);
            }
            let start = Instant::now();
            let report = match run(&cfg) {
                Ok(r) => r,
                Err(Error::Config(m)) => {
                    eprintln!("halflie: configuration error: {m}");
                    return ExitCode::from(2);
                }
                Err(e) => {
                    eprintln!("halflie: {e}");
                    return ExitCode::from(1);
                }
            };
            if cli.verbose {
                eprintln!("finished in {:.2} s", start.elapsed().as_secs_f64());
            }
            match report.write(&dir, &cfg.stem()) {
                Ok(paths) if cli.verbose => {
                    for p in paths {
                        eprintln!("wrote {}", p.display());
                    }
                }
                Ok(_) => {}
                Err(e) => {
                    eprintln!("halflie: {e}");
                    return ExitCode::from(1);
                }
            }
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.summary());
            }
            ExitCode::from(report.exit_code() as u8)
        }
    }
}
