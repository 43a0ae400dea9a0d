use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fcgrasp_cli::benchmark::{self, BenchmarkArgs};
use fcgrasp_cli::contact_gen::{self, ContactGenArgs};
use fcgrasp_cli::correlate::{self, CorrelateArgs};
use fcgrasp_cli::fc_test::{self, FcTestArgs};
use fcgrasp_cli::synthesize::{self, RefineArgs, SynthesizeArgs, DEFAULT_OBJECT_SAMPLES};
use fcgrasp_cli::CliResult;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fcgrasp", version, about = "Force-closure estimation and grasp synthesis experiments")]
struct Cli {
    /// Base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the estimator and the classic oracle on one contact set.
    FcTest {
        /// Shape JSON file or built-in name.
        #[arg(long)]
        shape: String,
        /// Contacts JSON: {"points": [...], "axes": [...], "mu": ...}; axes are optional.
        #[arg(long)]
        contacts: PathBuf,
        /// Estimator config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Residual versus minimum friction over random sphere tripods.
    Correlate {
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = correlate::DEFAULT_MU_CAP)]
        mu_cap: f64,
    },
    /// Gradient descent on contact positions from random starts.
    ContactGen {
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 3)]
        n_contacts: usize,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, default_value_t = contact_gen::MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Time the estimator against the number of contacts.
    Benchmark {
        #[arg(long, value_delimiter = ',', default_values_t = benchmark::DEFAULT_SIZES)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
    },
    /// Run sampling chains, filter, refine and export grasps.
    Synthesize {
        /// Hand JSON file or built-in name.
        #[arg(long)]
        hand: String,
        #[arg(long)]
        shape: String,
        /// Chain config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        chains: usize,
        /// Overrides the config's step count.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_OBJECT_SAMPLES)]
        object_samples: usize,
    },
    /// Refine a JSON-lines file of grasp records.
    Refine {
        #[arg(long)]
        hand: String,
        #[arg(long)]
        shape: String,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_OBJECT_SAMPLES)]
        object_samples: usize,
    },
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn out_dir(out: Option<PathBuf>, command: &str) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("runs").join(command))
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::FcTest { shape, contacts, config } => {
            let report = fc_test::fc_test(&FcTestArgs {
                shape,
                contacts,
                config,
                out: cli.out,
            })?;
            print_json(&report);
        }
        Command::Correlate { n, mu_cap } => {
            let summary = correlate::correlate(&CorrelateArgs {
                n,
                seed,
                mu_cap,
                threads: cli.threads,
                out: out_dir(cli.out, "correlate"),
            })?;
            print_json(&summary);
        }
        Command::ContactGen {
            shape,
            n_contacts,
            seeds,
            max_iters,
            config,
        } => {
            let summary = contact_gen::contact_gen(&ContactGenArgs {
                shape,
                n_contacts,
                seeds,
                seed,
                max_iters,
                config,
                threads: cli.threads,
                out: out_dir(cli.out, "contact-gen"),
            })?;
            print_json(&summary);
        }
        Command::Benchmark { sizes, iters } => {
            let summary = benchmark::benchmark(&BenchmarkArgs {
                sizes,
                iters,
                seed,
                out: out_dir(cli.out, "benchmark"),
            })?;
            print_json(&summary);
        }
        Command::Synthesize {
            hand,
            shape,
            config,
            chains,
            steps,
            object_samples,
        } => {
            let result = synthesize::synthesize(&SynthesizeArgs {
                hand,
                shape,
                config,
                chains,
                steps,
                seed: cli.seed,
                threads: cli.threads,
                object_samples,
                out: out_dir(cli.out, "synthesize"),
            })?;
            let s = &result.summary;
            print_json(&serde_json::json!({
                "chains": s.chains,
                "steps": s.steps,
                "n_filtered": s.n_filtered,
                "n_stable": s.n_stable,
                "first_success_step": s.first_success_step,
                "exports": s.exports,
            }));
        }
        Command::Refine {
            hand,
            shape,
            records,
            config,
            object_samples,
        } => {
            let refined = synthesize::refine_records(&RefineArgs {
                hand,
                shape,
                records,
                config,
                seed: cli.seed,
                threads: cli.threads,
                object_samples,
                out: out_dir(cli.out, "refine"),
            })?;
            let stable = refined.iter().filter(|(_, s)| *s).count();
            print_json(&serde_json::json!({ "refined": refined.len(), "stable": stable }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
