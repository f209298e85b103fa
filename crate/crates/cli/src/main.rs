use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infomgf_cli::commands::{cmd_eval, cmd_perturb, cmd_stats, cmd_synth, cmd_train, EvalTask};
use infomgf_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "infomgf", version, about = "Unsupervised multiplex graph fusion")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train on a dataset bundle and write checkpoint, fused graph,
    /// representations, loss CSV and manifest.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Rerun a previous training manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Five-seed clustering or classification report for a trained run.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "cluster")]
        task: EvalTask,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic multiplex SBM bundle.
    Synth {
        /// JSON SBM spec; missing fields take reference values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add or delete edges, or add feature noise, and write a new bundle.
    Perturb {
        bundle: PathBuf,
        #[arg(long)]
        rate: f64,
        /// add, delete or noise.
        #[arg(long)]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Node, view, edge, homophily and unique-relevant-edge statistics.
    Stats {
        bundle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("INFOMGF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("INFOMGF_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::input(e.to_string()))
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializes"));
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.cmd {
        Cmd::Train {
            config,
            manifest,
            seed,
            out,
        } => {
            let m = cmd_train(config.as_deref(), manifest.as_deref(), seed, out.as_deref())?;
            print_json(&m);
        }
        Cmd::Eval { manifest, task, out } => print_json(&cmd_eval(&manifest, task, out.as_deref())?),
        Cmd::Synth { config, seed, out } => {
            let b = cmd_synth(config.as_deref(), seed, &out)?;
            print_json(&b.meta());
        }
        Cmd::Perturb {
            bundle,
            rate,
            mode,
            seed,
            out,
        } => {
            let b = cmd_perturb(&bundle, rate, &mode, seed, &out)?;
            print_json(&b.meta());
        }
        Cmd::Stats { bundle, out } => print_json(&cmd_stats(&bundle, out.as_deref())?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("infomgf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
