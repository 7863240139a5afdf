use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finflow::commands::{self, EvalInputs};
use finflow::config::{DataSource, RunConfig};
use finflow::{output, par, pipeline, Error, Result};

/// Market making with a MeanFlow action-chunk expert and noise-space PPO.
#[derive(Parser)]
#[command(name = "finflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; absent keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the expert tournament per scenario and collect demonstrations.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Demonstration episodes per scenario.
        #[arg(long)]
        episodes: Option<usize>,
        /// `grid` or a single market (HH, HL, LH, LL).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Pre-train the MeanFlow expert on a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Fine-tune a noise policy against a frozen expert, or train the
    /// direct PPO baseline with `--direct`.
    Finetune {
        #[command(flatten)]
        common: Common,
        #[arg(long, required_unless_present = "direct")]
        expert: Option<PathBuf>,
        #[arg(long)]
        direct: bool,
        #[arg(long)]
        updates: Option<usize>,
        /// Training market.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Benchmark the closed forms and any given checkpoints.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<usize>,
        /// HH, HL, LH, LL or all.
        #[arg(long)]
        mode: Option<String>,
        /// Also write per-episode wealth paths and one trace per cell.
        #[arg(long)]
        plot_data: bool,
        /// Pre-trained MeanFlow checkpoint.
        #[arg(long)]
        expert: Option<PathBuf>,
        /// Fine-tuned noise policy (needs --expert).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Direct PPO checkpoint.
        #[arg(long = "ppo")]
        direct: Option<PathBuf>,
    },
    /// Time the inference path per executed action.
    BenchLatency {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expert: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load_or_default(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn single_mode(s: &str) -> Result<finflow::core::evaluation::MarketMode> {
    Ok(s.parse()?)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    par::init_threads()?;
    match cli.command {
        Command::GenData { common, episodes, mode } => {
            let mut cfg = load(&common)?;
            if let Some(n) = episodes {
                cfg.data.episodes = n;
            }
            if let Some(m) = mode {
                cfg.data.source = m.parse::<DataSource>()?;
            }
            let summary = commands::gen_data(&cfg, &common.out)?;
            output::write_winners(std::io::stdout().lock(), &summary.winners)?;
            eprintln!(
                "{} scenarios, {} records -> {} (sha256 {})",
                summary.winners.len(),
                summary.records,
                summary.path.display(),
                summary.sha256
            );
        }
        Command::Train { common, dataset } => {
            let cfg = load(&common)?;
            print_json(&commands::train(&cfg, &dataset, &common.out)?)?;
        }
        Command::Finetune { common, expert, direct, updates, mode } => {
            let mut cfg = load(&common)?;
            if let Some(m) = mode.as_deref().map(single_mode).transpose()? {
                cfg.finetune.mode = m;
                cfg.direct.mode = m;
            }
            if let Some(n) = updates {
                cfg.finetune.updates = n;
                cfg.direct.updates = n;
            }
            let summary = match (direct, expert) {
                (true, _) => commands::finetune_direct(&cfg, &common.out)?,
                (false, Some(e)) => commands::finetune(&cfg, &e, &common.out)?,
                (false, None) => return Err(Error::Config("--expert is required".into())),
            };
            print_json(&summary)?;
        }
        Command::Eval { common, episodes, mode, plot_data, expert, policy, direct } => {
            let mut cfg = load(&common)?;
            if let Some(n) = episodes {
                cfg.eval.episodes = n;
            }
            if let Some(m) = mode {
                cfg.eval.modes = pipeline::parse_modes(&m)?;
            }
            let inputs = EvalInputs { expert, policy, direct };
            let report = commands::eval(&cfg, &inputs, &common.out, plot_data)?;
            let table = common.out.join(commands::REPORT_CSV);
            print!("{}", std::fs::read_to_string(&table).map_err(|e| Error::Io { path: table, source: e })?);
            log::info!("{} cells", report.rows.len());
        }
        Command::BenchLatency { common, expert, policy } => {
            let cfg = load(&common)?;
            print_json(&commands::bench_latency(&cfg, &expert, policy.as_deref(), &common.out)?)?;
        }
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} message={}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
