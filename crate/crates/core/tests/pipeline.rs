//! The core stages chained on a small LL run.

use std::sync::Arc;

use finflow_core::dataset::{collect_demonstrations, Dataset};
use finflow_core::evaluation::{run_benchmark, run_episode, MarketMode};
use finflow_core::experts::ExpertKind;
use finflow_core::market::TraceRow;
use finflow_core::meanflow::{
    train, ChunkedQuoter, Horizons, MeanFlowPolicy, TrainConfig, TrainingSet, VelocityArch, VelocityNet,
};
use finflow_core::noise_rl::{collect_rollouts, fine_tune, init_noise_agent, PpoHyper, RolloutConfig};
use finflow_core::seed;
use finflow_core::strategy::{ExpertStrategy, QuotingStrategy, RandomQuoter};

fn small_expert() -> MeanFlowPolicy {
    let horizons = Horizons::default();
    let teacher = ExpertStrategy::new(ExpertKind::Glft).unwrap();
    let records =
        collect_demonstrations(&MarketMode::LL.config(), 0, &teacher, ExpertKind::Glft, &horizons, 4, 1).unwrap();
    let ds = Dataset::assemble(horizons, None, records).unwrap();
    ds.validate().unwrap();
    assert_eq!(ds.records.len(), 400);

    let set = TrainingSet::from_dataset(&ds);
    let arch =
        VelocityArch { noise_dim: horizons.chunk_len(), cond_dim: horizons.obs_len(), hidden: 32, cond_hidden: 16 };
    let mut net = VelocityNet::new(arch, &mut seed::rng(2)).unwrap();
    let cfg = TrainConfig { steps: 400, batch_size: 32, ..TrainConfig::default() };
    let losses = train(&mut net, &set, &cfg, 3, |_, _| {}).unwrap();
    let head: f64 = losses[..50].iter().sum();
    let tail: f64 = losses[350..].iter().sum();
    assert!(tail < head, "loss did not fall: {head} -> {tail}");
    MeanFlowPolicy::new(net, ds.stats.clone(), horizons).unwrap()
}

#[test]
fn strategies_face_the_same_market() {
    let cfg = MarketMode::HL.config();
    let mut traces = Vec::new();
    for mut s in [
        Box::new(ExpertStrategy::new(ExpertKind::AvellanedaStoikov).unwrap()) as Box<dyn QuotingStrategy>,
        Box::new(RandomQuoter::new(20.0)),
    ] {
        let mut rows: Vec<TraceRow> = Vec::new();
        run_episode(s.as_mut(), &cfg, 99, Some(&mut rows)).unwrap();
        traces.push(rows.iter().map(|r| r.mid_price).collect::<Vec<_>>());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn benchmark_is_deterministic() {
    let glft = ExpertStrategy::new(ExpertKind::Glft).unwrap();
    let random = RandomQuoter::new(20.0);
    let strategies: [&dyn QuotingStrategy; 2] = [&glft, &random];
    let a = run_benchmark(&strategies, &MarketMode::ALL, 20, 5).unwrap();
    let b = run_benchmark(&strategies, &MarketMode::ALL, 20, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 8);
    assert!(a.rows.iter().all(|r| r.metrics.mean_pnl.is_finite() && r.metrics.mdd_percent >= 0.0));
}

#[test]
fn imitation_then_frozen_fine_tuning() {
    let expert = Arc::new(small_expert());
    let mut quoter = ChunkedQuoter::pretrained(Arc::clone(&expert));
    let episode = run_episode(&mut quoter, &MarketMode::LL.config(), 7, None).unwrap();
    assert_eq!(episode.wealth.len(), 101);
    assert!(episode.pnl.is_finite());

    let before = expert.net().clone();
    let hyper = PpoHyper { minibatch_size: 32, ..PpoHyper::default() };
    let mut agent = init_noise_agent(&expert, hyper, 11).unwrap();
    let rollout = RolloutConfig { envs: 2, chunks_per_env: 20, ..RolloutConfig::default() };
    let scenario = MarketMode::LL.config();
    let logs = fine_tune(
        &mut agent,
        3,
        11,
        |a, s| collect_rollouts(&a.policy, &a.value, expert.as_ref(), &scenario, &rollout, a.hyper.gamma, s),
        |_| {},
    )
    .unwrap();
    assert_eq!(logs.len(), 3);
    assert!(logs.iter().all(|l| (0.0..=1.0).contains(&l.stats.clip_fraction) && l.mean_reward.is_finite()));
    assert_eq!(expert.net(), &before);
}
