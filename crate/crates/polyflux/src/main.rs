use clap::Parser;
use polyflux::cli::{self, EXIT_USAGE};
use polyflux::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Variational solver for conservation laws with polygonal flux.
#[derive(Parser)]
#[command(name = "polyflux", version)]
struct Args {
    /// One of: conjugate, solve, discrete, mollify, verify, stochastic.
    command: String,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(args: &Args) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("config {}: {e}", args.config.display())))?;
    let mut cfg = cli::parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cli::execute(&cfg, &args.command, &args.out)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !cli::COMMANDS.contains(&args.command.as_str()) {
        eprintln!(
            "polyflux: unknown command '{}'; expected one of {:?}",
            args.command,
            cli::COMMANDS
        );
        return ExitCode::from(EXIT_USAGE as u8);
    }
    if let Ok(threads) = std::env::var("POLYFLUX_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            // ignore failure when a global pool already exists
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("polyflux: {e}");
            let code = match e {
                Error::Config(_)
                | Error::Json(_)
                | Error::Convexity(_)
                | Error::DegenerateSegment(_)
                | Error::Domain(_)
                | Error::FluxSigns(_)
                | Error::Overlap(_) => EXIT_USAGE,
                Error::Io(_) | Error::Divergence(_) => 1,
            };
            ExitCode::from(code as u8)
        }
    }
}
