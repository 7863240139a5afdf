//! The pipeline commands: each writes its artifacts and the resolved
//! configuration into an output directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use finflow_core::evaluation::episode_seed;
use finflow_core::evaluation::run_episode;
use finflow_core::meanflow::Horizons;
use finflow_core::noise_rl::direct_obs_stats;
use serde::Serialize;

use crate::checkpoint::{self, PolicyCheckpoint};
use crate::config::RunConfig;
use crate::dataset_file;
use crate::output;
use crate::pipeline::{self, Contestants, LatencyReport};
use crate::{frame, par, Error, Result};

pub const DATASET_FILE: &str = "dataset.bin";
pub const WINNERS_FILE: &str = "winners.csv";
pub const EXPERT_FILE: &str = "expert.ckpt";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const FINETUNE_FILE: &str = "finetune.ckpt";
pub const FINETUNE_LOG: &str = "finetune_log.csv";
pub const DIRECT_FILE: &str = "direct.ckpt";
pub const DIRECT_LOG: &str = "direct_log.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const WEALTH_CSV: &str = "wealth_paths.csv";
pub const TRACE_CSV: &str = "traces.csv";
pub const LATENCY_JSON: &str = "latency.json";

fn prepare(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cfg.echo_into(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct GenDataSummary {
    pub path: PathBuf,
    pub sha256: String,
    pub records: usize,
    pub winners: Vec<pipeline::Winner>,
}

pub fn gen_data(cfg: &RunConfig, out: &Path) -> Result<GenDataSummary> {
    prepare(cfg, out)?;
    let (ds, winners) = pipeline::generate_dataset(cfg)?;
    let path = out.join(DATASET_FILE);
    let sha256 = dataset_file::save_dataset(&path, &ds)?;
    let table = out.join(WINNERS_FILE);
    let file = std::fs::File::create(&table).map_err(|e| Error::io(&table, e))?;
    output::write_winners(file, &winners)?;
    Ok(GenDataSummary { path, sha256, records: ds.records.len(), winners })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub path: PathBuf,
    pub sha256: String,
    pub param_count: usize,
    pub final_loss: f64,
}

pub fn train(cfg: &RunConfig, dataset: &Path, out: &Path) -> Result<TrainSummary> {
    let ds = dataset_file::load_dataset(dataset)?;
    prepare(cfg, out)?;
    let every = (cfg.train.steps / 20).max(1);
    let (policy, losses) = pipeline::train_expert(cfg, &ds, |step, loss| {
        if step % every == 0 {
            log::info!("step {step}: loss {loss:.5}");
        }
    })?;
    output::write_train_log(&out.join(TRAIN_LOG), &losses)?;
    let path = out.join(EXPERT_FILE);
    let sha256 = checkpoint::save_meanflow(&path, &policy)?;
    Ok(TrainSummary {
        path,
        sha256,
        param_count: policy.net().param_count(),
        final_loss: losses.last().copied().unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FinetuneSummary {
    pub path: PathBuf,
    pub sha256: String,
    pub expert_sha256: Option<String>,
    pub trainable_params: usize,
    pub first_mean_reward: f64,
    pub last_mean_reward: f64,
}

fn log_update(l: &finflow_core::noise_rl::UpdateLog) {
    log::info!(
        "update {}: r_total {:.5} surrogate {:.4} value {:.4} clip {:.3}",
        l.update,
        l.mean_reward,
        l.stats.policy_loss,
        l.stats.value_loss,
        l.stats.clip_fraction
    );
}

/// Noise-space PPO on the frozen expert at `expert`.
pub fn finetune(cfg: &RunConfig, expert: &Path, out: &Path) -> Result<FinetuneSummary> {
    let (policy, expert_sha256) = checkpoint::load_meanflow(expert)?;
    prepare(cfg, out)?;
    let (agent, logs) = pipeline::finetune_expert(&policy, &cfg.finetune, cfg.seed, log_update)?;
    if frame::sha256_hex(&checkpoint::encode_meanflow(&policy)) != expert_sha256 {
        return Err(Error::Config("frozen expert changed during fine-tuning".into()));
    }
    output::write_update_log(&out.join(FINETUNE_LOG), &logs)?;
    let trainable_params = agent.trainable_params();
    let ck = PolicyCheckpoint {
        policy: agent.policy,
        value: agent.value,
        expert_sha256: Some(expert_sha256.clone()),
        horizons: *policy.horizons(),
        stats: policy.stats().clone(),
        mode: cfg.finetune.mode,
        updates: cfg.finetune.updates,
    };
    let path = out.join(FINETUNE_FILE);
    let sha256 = ck.save(&path)?;
    Ok(FinetuneSummary {
        path,
        sha256,
        expert_sha256: Some(expert_sha256),
        trainable_params,
        first_mean_reward: logs.first().map_or(f64::NAN, |l| l.mean_reward),
        last_mean_reward: logs.last().map_or(f64::NAN, |l| l.mean_reward),
    })
}

/// The direct per-step PPO baseline.
pub fn finetune_direct(cfg: &RunConfig, out: &Path) -> Result<FinetuneSummary> {
    prepare(cfg, out)?;
    let scenario = cfg.direct.mode.config();
    let (agent, logs) = pipeline::train_direct(&scenario, &cfg.direct, cfg.seed, log_update)?;
    output::write_update_log(&out.join(DIRECT_LOG), &logs)?;
    let trainable_params = agent.trainable_params();
    let ck = PolicyCheckpoint {
        policy: agent.policy,
        value: agent.value,
        expert_sha256: None,
        horizons: Horizons { obs: 1, pred: 1, exec: 1 },
        stats: direct_obs_stats(&scenario),
        mode: cfg.direct.mode,
        updates: cfg.direct.updates,
    };
    let path = out.join(DIRECT_FILE);
    let sha256 = ck.save(&path)?;
    Ok(FinetuneSummary {
        path,
        sha256,
        expert_sha256: None,
        trainable_params,
        first_mean_reward: logs.first().map_or(f64::NAN, |l| l.mean_reward),
        last_mean_reward: logs.last().map_or(f64::NAN, |l| l.mean_reward),
    })
}

/// Checkpoints entered into an evaluation.
#[derive(Debug, Clone, Default)]
pub struct EvalInputs {
    pub expert: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub direct: Option<PathBuf>,
}

impl EvalInputs {
    pub fn load(&self) -> Result<Contestants> {
        let expert = match &self.expert {
            Some(p) => {
                let (policy, hash) = checkpoint::load_meanflow(p)?;
                Some((Arc::new(policy), hash))
            }
            None => None,
        };
        Ok(Contestants {
            expert,
            finflow: self.policy.as_deref().map(PolicyCheckpoint::load).transpose()?,
            direct: self.direct.as_deref().map(PolicyCheckpoint::load).transpose()?,
        })
    }
}

pub fn eval(
    cfg: &RunConfig,
    inputs: &EvalInputs,
    out: &Path,
    plot_data: bool,
) -> Result<finflow_core::evaluation::BenchmarkReport> {
    let contestants = inputs.load()?;
    prepare(cfg, out)?;
    let strategies = pipeline::eval_strategies(cfg.eval.random_range, &contestants)?;
    let refs: Vec<&dyn finflow_core::strategy::QuotingStrategy> = strategies.iter().map(|s| s.as_ref()).collect();
    let cells = par::run_benchmark(&refs, &cfg.eval.modes, cfg.eval.episodes, cfg.seed)?;
    let report = par::report_of(&cells);
    output::write_report_csv(&out.join(REPORT_CSV), &report)?;
    output::write_json(&out.join(REPORT_JSON), &report)?;
    if plot_data {
        output::write_wealth_paths(&out.join(WEALTH_CSV), &cells)?;
        let mut traces = Vec::with_capacity(cells.len());
        for c in &cells {
            let s = refs.iter().find(|s| s.name() == c.row.strategy).expect("cell strategy is in the list");
            let mut agent = s.fork();
            let mut rows = Vec::new();
            run_episode(agent.as_mut(), &c.row.mode.config(), episode_seed(cfg.seed, c.row.mode, 0), Some(&mut rows))?;
            traces.push((c.row.mode.as_str(), c.row.strategy.as_str(), rows));
        }
        output::write_traces(&out.join(TRACE_CSV), &traces)?;
    }
    Ok(report)
}

pub fn bench_latency(cfg: &RunConfig, expert: &Path, policy: Option<&Path>, out: &Path) -> Result<LatencyReport> {
    let (expert, hash) = checkpoint::load_meanflow(expert)?;
    let noise = policy.map(PolicyCheckpoint::load).transpose()?;
    if let Some(n) = &noise {
        if n.expert_sha256.as_deref() != Some(hash.as_str()) {
            return Err(Error::Config("noise policy was trained against a different expert checkpoint".into()));
        }
    }
    prepare(cfg, out)?;
    let report = pipeline::bench_latency(&expert, noise.as_ref().map(|n| &n.policy), &cfg.latency, cfg.seed)?;
    output::write_json(&out.join(LATENCY_JSON), &report)?;
    Ok(report)
}
