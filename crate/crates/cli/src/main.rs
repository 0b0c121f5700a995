use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hexweb::cli_io::{load_config, run_pipeline, Command, Status};

#[derive(Parser)]
#[command(name = "hexweb", version, about = "Generate and certify metrics with hexagonal geodesic 3-webs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the configured family and write metric samples.
    Generate(RunArgs),
    /// Run every applicable check and write the report.
    Verify(RunArgs),
    /// Integrate geodesics and write trajectories.
    Trace(RunArgs),
    /// Certify a dual web and draw its dual scene.
    Dual(RunArgs),
    /// Trace leaves of the web and write an SVG.
    Plot(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated check names.
    #[arg(long)]
    checks: Option<String>,
}

fn threads() -> Option<usize> {
    std::env::var("HEXWEB_THREADS").ok()?.trim().parse().ok().filter(|n| *n > 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Generate(a) => (Command::Generate, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Trace(a) => (Command::Trace, a),
        Cmd::Dual(a) => (Command::Dual, a),
        Cmd::Plot(a) => (Command::Plot, a),
    };
    if let Some(n) = threads() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("hexweb: cannot size thread pool: {e}");
        }
    }
    let cfg = load_config(&args.config)
        .and_then(|c| c.with_overrides(Some(command), args.out, args.seed, args.checks.as_deref()));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hexweb: {e}");
            return ExitCode::from(2);
        }
    };
    match run_pipeline(&cfg) {
        Ok(out) => {
            for c in &out.report.checks {
                let tag = if c.status == Status::Pass { "PASS" } else { "FAIL" };
                let res = c.max_residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
                let err = c.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default();
                println!("{tag} {:<13} {res:>10} < {:.0e}{err}", c.name, c.tolerance);
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(out.report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("hexweb: {e}");
            ExitCode::from(2)
        }
    }
}
