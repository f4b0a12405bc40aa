use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lie_langevin::cli::presets::run_preset;
use lie_langevin::cli::verify::{verify, Suite, VerifyOptions};
use lie_langevin::cli::{run_config_file, workers_from_env, WORKERS_ENV};
use lie_langevin::Error;

#[derive(Parser)]
#[command(name = "lie-langevin", version, about = "Stochastic Lie-Poisson integrators with Gibbs-preserving dissipation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON config; outputs go next to the config unless --out is given.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite: invariants, gibbs, convergence or all.
    Verify {
        suite: String,
        /// Use a mis-tuned dissipation in the Gibbs criterion.
        #[arg(long)]
        tampered: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a shipped config to <dir>/config.json and run it there.
    Preset {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        _ => 1,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match workers_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {WORKERS_ENV}: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => return fail(e),
    }
    match cli.command {
        Command::Run { config, out } => match run_config_file(&config, out.as_deref()) {
            Ok((summary, dir)) => {
                println!("run: {} ({} files in {})", summary.status, summary.files.len(), dir.display());
                for f in &summary.failures {
                    eprintln!("member {} failed at step {}: {}", f.index, f.step, f.error);
                }
                if summary.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) }
            }
            Err(e) => fail(e),
        },
        Command::Verify { suite, tampered, report } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match verify(suite, VerifyOptions { tampered }) {
                Ok(r) => {
                    let text = serde_json::to_string_pretty(&r).expect("report serialises");
                    println!("{text}");
                    if let Some(p) = report {
                        if let Err(e) = std::fs::write(&p, &text) {
                            eprintln!("error: {}: {e}", p.display());
                            return ExitCode::from(1);
                        }
                    }
                    for c in &r.criteria {
                        eprintln!("{} criterion {} {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name);
                    }
                    if r.pass {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("failed criteria: {:?}", r.failures);
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Preset { name, out } => match run_preset(&name, &out) {
            Ok(summary) => {
                println!("{name}: {} ({} files in {})", summary.status, summary.files.len(), out.display());
                if summary.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) }
            }
            Err(e) => fail(e),
        },
    }
}
