use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use ballslep_cli::commands::{self, SolveOptions, Source};
use ballslep_cli::{verify, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ballslep",
    version,
    about = "Vectorial Slepian functions on the ball"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the localisation matrix and write matrix.bin and matrix.json.
    Assemble {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Solve the eigenproblem; writes eigenvalues.json and coefficients.bin.
    Solve {
        #[command(flatten)]
        opts: Overrides,
        /// Also write eigenvalues.csv.
        #[arg(long)]
        csv: bool,
        /// Store only the first K coefficient vectors.
        #[arg(long, value_name = "K")]
        keep: Option<usize>,
    },
    /// Shannon number from the trace and from the closed form.
    Shannon {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Sample one Slepian function on the configured grid into samples.csv.
    Evaluate {
        #[command(flatten)]
        opts: Overrides,
        /// 1-based rank in the stored solution.
        #[arg(long, default_value_t = 1)]
        rank: usize,
        /// Read the vector from this coefficient file instead, at column --rank.
        #[arg(long)]
        coefficients: Option<PathBuf>,
    },
    /// Rotate stored coefficients by --euler-deg into rotated_coefficients.bin.
    Rotate {
        #[command(flatten)]
        opts: Overrides,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the oracle suite and write verify.json.
    Verify {
        #[command(flatten)]
        opts: Overrides,
        /// Perturb one matrix entry before checking it.
        #[arg(long)]
        inject_fault: bool,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Assemble { opts } => {
            let meta = commands::cmd_assemble(&opts.resolve()?)?;
            println!(
                "system {}: P {}x{}, Q {}x{}, trace {:.6}",
                meta.system, meta.p_size, meta.p_size, meta.q_size, meta.q_size, meta.trace
            );
        }
        Command::Solve { opts, csv, keep } => {
            let report = commands::cmd_solve(&opts.resolve()?, &SolveOptions { csv, keep })?;
            let s = &report.shannon;
            println!(
                "system {}: {} eigenvalues, largest {:.6}, S = {:.4}, {} at or above {}",
                report.system,
                report.eigenvalues.len(),
                report.eigenvalues.first().map_or(f64::NAN, |e| e.lambda),
                s.s,
                s.count_above_threshold.unwrap_or(0),
                s.threshold
            );
        }
        Command::Shannon { opts } => {
            let f = commands::cmd_shannon(&opts.resolve()?)?;
            println!(
                "system {} at {} deg: S = {:.6} (closed form {:.6})",
                f.system, f.theta_deg, f.shannon.s, f.shannon.s_closed_form
            );
        }
        Command::Evaluate {
            opts,
            rank,
            coefficients,
        } => {
            let source = match coefficients {
                Some(path) => Source::File(path, rank),
                None => Source::Rank(rank),
            };
            let rows = commands::cmd_evaluate(&opts.resolve()?, &source)?;
            let peak = rows.iter().map(|r| r.norm).fold(0.0, f64::max);
            println!("{} samples, max |f| {peak:.6}", rows.len());
        }
        Command::Rotate { opts, input } => {
            let path = commands::cmd_rotate(&opts.resolve()?, input.as_deref())?;
            println!("wrote {}", path.display());
        }
        Command::Verify { opts, inject_fault } => {
            let report = verify::cmd_verify(&opts.resolve()?, inject_fault)?;
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!(
                    "{status} {}: {:.3e} (tol {:.0e}) {}",
                    c.name, c.measured, c.tolerance, c.detail
                );
            }
            return Ok(report.all_passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
