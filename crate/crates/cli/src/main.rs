use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fracdir::harness::run::{run, Command, RunOptions};
use fracdir::harness::Scenario;

#[derive(Parser)]
#[command(name = "fracdir", version, about = "Solve and verify fractional Laplacian exterior Dirichlet problems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the elliptic problem at the configured points.
    SolveElliptic(Common),
    /// Solve the parabolic problem with zero initial data.
    SolveParabolic(Common),
    /// Exit-law and kernel-bound suites.
    VerifyKernels(Common),
    /// Estimate suites: point-mass headline, boundary decay, weighted estimates.
    VerifyEstimates(Common),
    /// Integral lemmas behind the kernel estimates.
    VerifyAppendix(Common),
    /// Weighted norms of the data and solution, and the norm suite.
    Norms(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `mc.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and CSVs.
    #[arg(long, default_value = "fracdir-out")]
    out: PathBuf,
    /// Overrides `mc.paths`.
    #[arg(long)]
    paths: Option<usize>,
    /// Also run the falsification probes (reported, never asserted).
    #[arg(long)]
    falsify: bool,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<u8> {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::SolveElliptic(a) => (Command::SolveElliptic, a),
        Cmd::SolveParabolic(a) => (Command::SolveParabolic, a),
        Cmd::VerifyKernels(a) => (Command::VerifyKernels, a),
        Cmd::VerifyEstimates(a) => (Command::VerifyEstimates, a),
        Cmd::VerifyAppendix(a) => (Command::VerifyAppendix, a),
        Cmd::Norms(a) => (Command::Norms, a),
    };
    let scenario = Scenario::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    let opts = RunOptions { seed: args.seed, paths: args.paths, falsify: args.falsify };
    let out = run(command, &scenario, &opts)?;
    out.write(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let r = &out.report;
    for s in &r.suites {
        println!("{:<16} {:<12} {:>8.1}s", s.suite, s.verdict.as_str(), s.elapsed_seconds);
        for f in s.failures() {
            println!("    {f}");
        }
    }
    println!("{} {} -> {}", command.as_str(), r.verdict.as_str(), args.out.join("report.json").display());
    Ok(r.exit_code() as u8)
}
