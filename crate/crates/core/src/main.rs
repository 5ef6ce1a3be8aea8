use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shapecl::cli::{self, EXIT_CONFIG};
use shapecl::config::RunConfig;
use shapecl::continual::Mode;

#[derive(Parser)]
#[command(
    name = "shapecl",
    version,
    about = "Class-incremental point-cloud classification with shape-model replay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic benchmark and print its manifest path.
    Bench(Overrides),
    /// Build a shape model per class of the configured dataset.
    Models(Overrides),
    /// Run the incremental protocol and write metrics.
    Train(Overrides),
    /// Print a summary of a shape model file as JSON.
    Inspect { model: PathBuf },
    /// Print the effective configuration as canonical JSON.
    Config(Overrides),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// replay, finetune, joint or raw_exemplar
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "n-s")]
    n_s: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

impl Overrides {
    fn resolve(&self) -> shapecl::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(m) = &self.mode {
            cfg.mode = Mode::from_name(m)
                .ok_or_else(|| shapecl::Error::Config(format!("unknown mode `{m}`")))?;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.n_s {
            cfg.n_s = v;
        }
        if let Some(v) = self.lambda {
            cfg.loss.lambda = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn with_config(o: &Overrides, f: impl FnOnce(&RunConfig) -> i32) -> i32 {
    match o.resolve() {
        Ok(cfg) => f(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                shapecl::Error::Io { .. } => cli::exit_code(&e),
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let code = match &args.command {
        Command::Bench(o) => with_config(o, cli::cmd_bench),
        Command::Models(o) => with_config(o, cli::cmd_models),
        Command::Train(o) => with_config(o, cli::cmd_train),
        Command::Inspect { model } => cli::cmd_inspect(model),
        Command::Config(o) => with_config(o, |cfg| {
            print!("{}", cfg.to_canonical_json());
            0
        }),
    };
    ExitCode::from(code as u8)
}
