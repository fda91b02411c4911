//! `qsegf`: Matsubara Green's functions from VQE and subspace expansion.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use qsegf::ansatz::AnsatzMode;
use qsegf::pipeline::{self, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "qsegf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// VQE, subspace expansion, G, G₀ and Σ on the Matsubara grid.
    Gf(RunArgs),
    /// Exact-diagonalization G, Σ and sector spectra.
    Fci {
        #[command(flatten)]
        run: RunArgs,
        /// Frozen oracle record to check against.
        #[arg(long)]
        regression: Option<PathBuf>,
    },
    /// Element-wise difference of two Green's-function CSV files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long, default_value = "compare")]
        output: PathBuf,
    },
    /// Write the oracle regression record for a system.
    FreezeOracle {
        #[command(flatten)]
        run: RunArgs,
        /// Destination JSON file.
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnsatzArg {
    Auto,
    Full,
    SingleXxxy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Statevector,
    Shots,
}

/// Run settings. Flags override values read from `--config`.
#[derive(Args)]
struct RunArgs {
    /// TOML file with run settings.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fcidump: Option<PathBuf>,
    /// Orthogonal matrix applied to the molecular orbitals.
    #[arg(long)]
    rotation: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    /// Number of non-negative Matsubara frequencies.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_enum)]
    ansatz: Option<AnsatzArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Shots per Pauli string.
    #[arg(long)]
    shots: Option<u64>,
    /// Jackknife bins.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    overlap_threshold: Option<f64>,
    #[arg(long)]
    gtol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Skip the exact-diagonalization comparison.
    #[arg(long)]
    no_oracle: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, qsegf::Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            };
        }
        set!(fcidump);
        set!(beta);
        set!(n_max);
        set!(shots);
        set!(bins);
        set!(seed);
        set!(output);
        if let Some(p) = &self.rotation {
            cfg.rotation = Some(p.clone());
        }
        if let Some(t) = self.overlap_threshold {
            cfg.overlap_threshold = Some(t);
        }
        if let Some(a) = self.ansatz {
            cfg.ansatz = match a {
                AnsatzArg::Auto => AnsatzMode::Auto,
                AnsatzArg::Full => AnsatzMode::Full,
                AnsatzArg::SingleXxxy => AnsatzMode::SingleXxxy,
            };
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Statevector => Mode::Statevector,
                ModeArg::Shots => Mode::Shots,
            };
        }
        if let Some(g) = self.gtol {
            cfg.vqe.gtol = g;
        }
        if let Some(n) = self.max_iter {
            cfg.vqe.max_iter = n;
        }
        if self.no_oracle {
            cfg.oracle = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Gf(args) => {
            let cfg = args.resolve()?;
            let summary = pipeline::run_gf(&cfg).context("gf")?;
            log::info!("wrote results to {}", cfg.output.display());
            print_json(&summary)
        }
        Command::Fci { run, regression } => {
            let mut cfg = run.resolve()?;
            if regression.is_some() {
                cfg.regression = regression;
            }
            let summary = pipeline::run_fci(&cfg).context("fci")?;
            print_json(&summary)
        }
        Command::Compare { a, b, output } => {
            let report = pipeline::run_compare(&a, &b, &output).context("compare")?;
            print_json(&report)
        }
        Command::FreezeOracle { run, path } => {
            let cfg = run.resolve()?;
            pipeline::freeze_oracle(&cfg, &path).context("freeze-oracle")?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<qsegf::Error>() {
        Some(e) if !e.is_usage() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
