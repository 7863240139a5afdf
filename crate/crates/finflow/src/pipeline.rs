//! In-memory pipeline stages. The command layer adds files around these.

use std::hint::black_box;
use std::sync::Arc;
use std::time::Instant;

use finflow_core::dataset::{collect_demonstrations, evaluate_candidates, select_expert, Dataset, DemoRecord};
use finflow_core::evaluation::MarketMode;
use finflow_core::experts::ExpertKind;
use finflow_core::market::{QuoteAction, ScenarioConfig, STATE_DIM};
use finflow_core::meanflow::{train, ChunkedQuoter, MeanFlowPolicy, TrainingSet, VelocityNet};
use finflow_core::noise_rl::{
    direct_obs_stats, fine_tune, finflow_quoter, init_direct_agent, init_noise_agent, DirectDecoder, DirectQuoter,
    GaussianPolicy, PpoAgent, UpdateLog,
};
use finflow_core::seed::{self, tag};
use finflow_core::strategy::{ExpertStrategy, QuotingStrategy, RandomQuoter};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::PolicyCheckpoint;
use crate::config::{DataConfig, DataSource, DirectConfig, FinetuneConfig, LatencyConfig, RunConfig};
use crate::{par, Error, Result};

/// The closed-form teachers, in tournament order.
pub const CLOSED_FORM: [ExpertKind; 3] = [ExpertKind::AvellanedaStoikov, ExpertKind::Glft, ExpertKind::GlftDrift];

/// Markets demonstrations are collected in.
pub fn scenarios(data: &DataConfig) -> Vec<ScenarioConfig> {
    match data.source {
        DataSource::Grid => data.grid.expand(&data.base),
        DataSource::Mode(m) => vec![m.config()],
    }
}

/// Tournament outcome of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub scenario_id: usize,
    pub drift: f64,
    pub volatility: f64,
    pub jump_intensity: f64,
    pub dt: f64,
    pub liquidity: f64,
    pub winner: String,
    /// `(candidate, mean total reward)` in candidate order.
    pub scores: Vec<(String, f64)>,
}

/// Runs the tournament in every scenario, collects demonstrations from each
/// winner and assembles the normalized dataset. Scenarios run in parallel.
pub fn generate_dataset(cfg: &RunConfig) -> Result<(Dataset, Vec<Winner>)> {
    let scenarios = scenarios(&cfg.data);
    let per_scenario =
        scenarios.par_iter().enumerate().map(|(id, sc)| scenario_demos(cfg, id, sc)).collect::<Result<Vec<_>>>()?;
    let mut winners = Vec::with_capacity(per_scenario.len());
    let mut records = Vec::new();
    for (w, mut r) in per_scenario {
        log::info!("scenario {:3}: {} wins", w.scenario_id, w.winner);
        winners.push(w);
        records.append(&mut r);
    }
    let grid = (cfg.data.source == DataSource::Grid).then(|| cfg.data.grid.clone());
    Ok((Dataset::assemble(cfg.horizons, grid, records)?, winners))
}

fn scenario_demos(cfg: &RunConfig, id: usize, sc: &ScenarioConfig) -> Result<(Winner, Vec<DemoRecord>)> {
    let mut candidates: Vec<(ExpertKind, Box<dyn QuotingStrategy>)> = CLOSED_FORM
        .iter()
        .map(|&k| Ok((k, Box::new(ExpertStrategy::new(k)?) as Box<dyn QuotingStrategy>)))
        .collect::<Result<_>>()?;
    if cfg.data.ppo_candidate {
        let direct = DirectConfig { updates: cfg.data.ppo_candidate_updates, ..cfg.direct.clone() };
        let (agent, _) = train_direct(sc, &direct, seed::derive(cfg.seed, tag::PPO_CANDIDATE, id as u64), |_| {})?;
        let quoter = DirectQuoter::new(Arc::new(agent.policy), direct_obs_stats(sc))?;
        candidates.push((ExpertKind::DirectPpo, Box::new(quoter)));
    }
    let refs: Vec<&dyn QuotingStrategy> = candidates.iter().map(|(_, c)| c.as_ref()).collect();
    let board = evaluate_candidates(sc, id, &refs, cfg.data.tournament_episodes, cfg.seed)?;
    let best = select_expert(&board)?;
    let (kind, teacher) = &candidates[best];
    let records = collect_demonstrations(sc, id, teacher.as_ref(), *kind, &cfg.horizons, cfg.data.episodes, cfg.seed)?;
    let winner = Winner {
        scenario_id: id,
        drift: sc.drift,
        volatility: sc.volatility,
        jump_intensity: sc.jump_intensity,
        dt: sc.dt,
        liquidity: sc.base_intensity_buy,
        winner: kind.name().into(),
        scores: board.entries.iter().map(|e| (e.name.clone(), e.mean_score)).collect(),
    };
    Ok((winner, records))
}

/// Imitation pre-training on a dataset; returns the policy and per-step
/// losses.
pub fn train_expert(
    cfg: &RunConfig,
    ds: &Dataset,
    on_step: impl FnMut(usize, f64),
) -> Result<(MeanFlowPolicy, Vec<f64>)> {
    ds.validate()?;
    let arch = cfg.train.arch(&ds.horizons);
    let mut net = VelocityNet::new(arch, &mut seed::derived_rng(cfg.seed, tag::INIT, 0))?;
    let set = TrainingSet::from_dataset(ds);
    let losses = train(&mut net, &set, &cfg.train.trainer(), cfg.seed, on_step)?;
    Ok((MeanFlowPolicy::new(net, ds.stats.clone(), ds.horizons)?, losses))
}

/// Noise-space PPO against a frozen generator.
pub fn finetune_expert(
    expert: &MeanFlowPolicy,
    fc: &FinetuneConfig,
    seed: u64,
    on_update: impl FnMut(&UpdateLog),
) -> Result<(PpoAgent, Vec<UpdateLog>)> {
    let mut agent = init_noise_agent(expert, fc.ppo, seed)?;
    let scenario = fc.mode.config();
    let logs = fine_tune(
        &mut agent,
        fc.updates,
        seed,
        |a, s| par::collect_rollouts(a, expert, &scenario, &fc.rollout, s),
        on_update,
    )?;
    Ok((agent, logs))
}

/// The direct per-step PPO baseline.
pub fn train_direct(
    scenario: &ScenarioConfig,
    dc: &DirectConfig,
    seed: u64,
    on_update: impl FnMut(&UpdateLog),
) -> Result<(PpoAgent, Vec<UpdateLog>)> {
    let mut agent = init_direct_agent(dc.ppo, seed)?;
    let decoder = DirectDecoder { stats: direct_obs_stats(scenario) };
    let logs = fine_tune(
        &mut agent,
        dc.updates,
        seed,
        |a, s| par::collect_rollouts(a, &decoder, scenario, &dc.rollout, s),
        on_update,
    )?;
    Ok((agent, logs))
}

/// Trained artifacts entered into an evaluation next to the closed forms.
#[derive(Default)]
pub struct Contestants {
    /// Pre-trained generator and the hash of its checkpoint.
    pub expert: Option<(Arc<MeanFlowPolicy>, String)>,
    pub finflow: Option<PolicyCheckpoint>,
    pub direct: Option<PolicyCheckpoint>,
}

/// Strategies of the benchmark table, in row order.
pub fn eval_strategies(random_range: f64, c: &Contestants) -> Result<Vec<Box<dyn QuotingStrategy>>> {
    let mut out: Vec<Box<dyn QuotingStrategy>> = Vec::new();
    for k in CLOSED_FORM {
        out.push(Box::new(ExpertStrategy::new(k)?));
    }
    out.push(Box::new(RandomQuoter::new(random_range)));
    if let Some(d) = &c.direct {
        if d.expert_sha256.is_some() {
            return Err(Error::Config(
                "--direct expects a direct PPO checkpoint, got a fine-tuned noise policy".into(),
            ));
        }
        out.push(Box::new(DirectQuoter::new(Arc::new(d.policy.clone()), d.stats.clone())?));
    }
    if let Some((expert, _)) = &c.expert {
        out.push(Box::new(ChunkedQuoter::pretrained(Arc::clone(expert))));
    }
    if let Some(f) = &c.finflow {
        let Some((expert, hash)) = &c.expert else {
            return Err(Error::Config("evaluating a fine-tuned policy requires --expert".into()));
        };
        if f.expert_sha256.as_deref() != Some(hash.as_str()) {
            return Err(Error::Config("fine-tuned policy was trained against a different expert checkpoint".into()));
        }
        out.push(Box::new(finflow_quoter(Arc::clone(expert), Arc::new(f.policy.clone()))?));
    }
    Ok(out)
}

/// Timing of the inference path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub calls: usize,
    pub actions_per_call: usize,
    pub mean_us_per_call: f64,
    pub p99_us_per_call: f64,
    pub mean_us_per_action: f64,
    pub p99_us_per_action: f64,
}

/// One decision: `w = μ_φ(s)` (zero without a noise policy), one-step
/// generation, unnormalization and the executed slice.
pub fn infer_chunk(
    expert: &MeanFlowPolicy,
    noise: Option<&GaussianPolicy>,
    raw_window: &[f64],
    out: &mut Vec<QuoteAction>,
) -> Result<()> {
    let cond = expert.condition(raw_window);
    let w = match noise {
        Some(p) => p.mean(&cond)?,
        None => vec![0.0; expert.horizons().chunk_len()],
    };
    let mut chunk = expert.generate_normalized(&w, &cond)?;
    expert.stats().unnormalize_actions_in_place(&mut chunk);
    out.clear();
    out.extend(expert.exec_actions(&chunk));
    Ok(())
}

/// Times `calls` single-threaded decisions on synthetic windows drawn
/// around the expert's observation statistics.
pub fn bench_latency(
    expert: &MeanFlowPolicy,
    noise: Option<&GaussianPolicy>,
    cfg: &LatencyConfig,
    seed: u64,
) -> Result<LatencyReport> {
    let stats = expert.stats();
    let len = expert.horizons().obs_len();
    let mut rng = seed::derived_rng(seed, tag::BENCHMARK, 0);
    let windows: Vec<Vec<f64>> = (0..cfg.windows)
        .map(|_| {
            (0..len)
                .map(|i| {
                    let j = i % STATE_DIM;
                    stats.obs_mean[j] + stats.obs_std[j] * rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(expert.horizons().exec);
    for i in 0..cfg.warmup {
        infer_chunk(expert, noise, &windows[i % windows.len()], &mut out)?;
    }
    let mut ns = Vec::with_capacity(cfg.calls);
    for i in 0..cfg.calls {
        let window = black_box(&windows[i % windows.len()]);
        let start = Instant::now();
        infer_chunk(expert, noise, window, &mut out)?;
        black_box(&out);
        ns.push(start.elapsed().as_nanos() as f64);
    }
    let per_call = ns.iter().sum::<f64>() / ns.len() as f64 / 1e3;
    let k = ((ns.len() as f64 * 0.99).ceil() as usize).clamp(1, ns.len()) - 1;
    let p99 = *ns.select_nth_unstable_by(k, f64::total_cmp).1 / 1e3;
    let actions = expert.horizons().exec as f64;
    Ok(LatencyReport {
        calls: cfg.calls,
        actions_per_call: expert.horizons().exec,
        mean_us_per_call: per_call,
        p99_us_per_call: p99,
        mean_us_per_action: per_call / actions,
        p99_us_per_action: p99 / actions,
    })
}

/// Parses `--mode`: one market or `all`.
pub fn parse_modes(s: &str) -> Result<Vec<MarketMode>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(MarketMode::ALL.to_vec());
    }
    Ok(vec![s.parse::<MarketMode>()?])
}
