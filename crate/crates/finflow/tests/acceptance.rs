//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.
//!
//! The pipeline criteria share artifacts under one temporary directory.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use finflow::commands::{self, EvalInputs, FinetuneSummary};
use finflow::config::{DataSource, RunConfig};
use finflow::core::evaluation::{
    cumulative_return, max_drawdown, paired_t_statistic, sharpe, BenchmarkReport, MarketMode, MetricError,
};
use finflow::core::experts::{
    as_quotes_raw, glft_coefficients, glft_drift_quotes_raw, glft_quotes_raw, AsParams, GlftParams,
};
use finflow::core::market::{simulate_price_path, HawkesState, MarketEnv, QuoteAction, ScenarioConfig, Side};
use finflow::core::meanflow::{train, TrainConfig, TrainingSet, VelocityArch, VelocityNet};
use finflow::core::noise_rl::{GaussianPolicy, ValueNet};
use finflow::core::numerics::gradcheck::{central_difference, max_relative_error};
use finflow::core::numerics::{Activation, DenseNet};
use finflow::core::seed;
use finflow::core::strategy::{ExpertStrategy, QuotingStrategy, RandomQuoter};
use finflow::{frame, par, pipeline};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Outcome = Result<String, String>;

const PRETRAINED: &str = "Pretrained MeanFlow";
const FINETUNED: &str = "FinFlowRL";

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

struct Runner {
    failures: usize,
}

impl Runner {
    fn run(&mut self, id: u32, title: &str, budget: Option<Duration>, check: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| match budget {
            Some(b) if elapsed > b => Err(format!("{detail}; over the {} s budget", b.as_secs())),
            _ => Ok(detail),
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                self.failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{id:>2}] {title} ({:.1} s): {detail}", elapsed.as_secs_f64());
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- metrics

fn brute_force_mdd(v: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..v.len() {
        for j in i..v.len() {
            worst = worst.max((v[i] - v[j]) / v[i]);
        }
    }
    worst
}

fn metric_oracles() -> Outcome {
    ensure!(cumulative_return(&[]).map_err(err)? == 0.0, "empty cumulative return");
    ensure!(close(cumulative_return(&[0.1, -0.1]).map_err(err)?, -1.0, 1e-12), "CR of +10%/-10%");
    ensure!(close(cumulative_return(&[0.037]).map_err(err)?, 3.7, 1e-12), "CR of one period");
    ensure!(matches!(cumulative_return(&[0.1, -1.0]), Err(MetricError::TotalLoss { index: 1, .. })), "total loss");
    ensure!(sharpe(&[0.1, -0.1]).map_err(err)? == 0.0, "zero-mean Sharpe");
    ensure!(close(sharpe(&[0.02, 0.04, 0.06]).map_err(err)?, 2.0, 1e-12), "Sharpe with ddof 1");
    ensure!(sharpe(&[0.3, 0.3, 0.3]) == Err(MetricError::ZeroVariance), "zero variance");
    ensure!(sharpe(&[0.3]) == Err(MetricError::TooShort(1)), "single observation");
    ensure!(max_drawdown(&[1.0, 2.0, 3.0, 10.0]).map_err(err)? == 0.0, "monotone path");
    ensure!(max_drawdown(&[100.0, 50.0, 75.0]).map_err(err)? == 0.5, "half drawdown");
    ensure!(max_drawdown(&[]) == Err(MetricError::Empty), "empty path");

    let mut worst: f64 = 0.0;
    for stream in 0..100 {
        let mut rng = seed::derived_rng(2024, 1, stream);
        let mut x = 100.0;
        let walk: Vec<f64> = (0..1000)
            .map(|_| {
                x *= rng.random_range(-0.05..0.05f64).exp();
                x
            })
            .collect();
        worst = worst.max((max_drawdown(&walk).map_err(err)? - brute_force_mdd(&walk)).abs());
    }
    ensure!(worst <= 1e-12, "MDD differs from the quadratic oracle by {worst:e}");
    Ok(format!("examples exact, MDD vs O(n²) oracle on 100 walks: max |Δ| = {worst:e}"))
}

// ---------------------------------------------------------------- experts

fn expert_suite() -> Outcome {
    let asp = AsParams { risk_aversion: 0.1, volatility: 0.3, order_decay: 1.5, horizon: 1.0 };
    let (bid, ask) = as_quotes_raw(1, 0.5, &asp);
    ensure!(
        close(bid, 0.643_135_211_375_711_7, 1e-12) && close(ask, 0.652_135_211_375_711_7, 1e-12),
        "AS spot {bid} {ask}"
    );
    let glft = GlftParams { risk_aversion: 0.1, volatility: 0.3, order_decay: 1.5, base_arrival: 20.0, drift: 0.0 };
    let (c1, c2) = glft_coefficients(&glft);
    ensure!(close(c1, 0.645_385_211_375_711_7, 1e-12) && close(c2, 0.068_415_446_179_651_16, 1e-12), "GLFT c1 c2");
    let (bid, ask) = glft_quotes_raw(2, &glft);
    ensure!(close(bid, 0.696_696_796_010_450_1, 1e-12) && close(ask, 0.614_598_260_594_868_7, 1e-12), "GLFT spot");
    for (drift, q, bid, ask) in [
        (0.05, 0, 0.317_256_445_161_427_9, 1.038_418_568_709_304_4),
        (0.2, -3, -0.959_200_513_518_313_6, 2.314_875_527_389_046),
        (0.01, 10, 1.254_767_205_773_667_4, 0.100_907_808_097_064_91),
    ] {
        let (b, a) = glft_drift_quotes_raw(q, &GlftParams { drift, ..glft }).map_err(err)?;
        ensure!(close(b, bid, 1e-12) && close(a, ask, 1e-12), "GLFT-drift spot μ={drift} q={q}");
    }

    // 100-point sweep: 5 × 5 × 4 over (γ, σ, k), with t and μ varying alongside.
    let mut points = 0;
    for (i, gamma) in [0.01, 0.05, 0.1, 0.5, 1.0].into_iter().enumerate() {
        for (j, sigma) in [0.01, 0.02, 0.05, 0.2, 0.5].into_iter().enumerate() {
            for (l, k) in [0.3, 1.5, 3.0, 5.0].into_iter().enumerate() {
                let t = ((i + j + l) % 10) as f64 / 10.0;
                let drift = 0.02 * (l as f64 - 1.5);
                let asp = AsParams { risk_aversion: gamma, volatility: sigma, order_decay: k, horizon: 1.0 };
                let gp =
                    GlftParams { risk_aversion: gamma, volatility: sigma, order_decay: k, base_arrival: 25.0, drift };
                let (g0b, g0a) = glft_quotes_raw(0, &gp);
                ensure!(g0b == g0a, "GLFT asymmetric at q = 0");
                let sym = glft_drift_quotes_raw(0, &GlftParams { drift: 0.0, ..gp }).map_err(err)?;
                ensure!(sym.0 == sym.1, "GLFT-drift asymmetric at q = 0 without drift");
                for q in -10..=10 {
                    let (b, a) = as_quotes_raw(q, t, &asp);
                    let (mb, ma) = as_quotes_raw(-q, t, &asp);
                    ensure!((b, a) == (ma, mb), "AS mirror symmetry γ={gamma} σ={sigma} k={k} q={q}");
                    ensure!(q == 0 || (q > 0) == (b < a), "AS skew sign γ={gamma} σ={sigma} k={k} q={q}");
                    let (gb, ga) = glft_quotes_raw(q, &gp);
                    ensure!(close(gb + ga, g0b + g0a, 1e-12 * (1.0 + g0b.abs())), "GLFT spread sum q={q}");
                    ensure!(q == 0 || (q > 0) == (gb > ga), "GLFT skew sign q={q}");
                    let (db, da) = glft_drift_quotes_raw(q, &gp).map_err(err)?;
                    let (db0, da0) = glft_drift_quotes_raw(0, &gp).map_err(err)?;
                    ensure!(
                        close(db + da, db0 + da0, 1e-12 * (1.0 + db0.abs() + da0.abs())),
                        "GLFT-drift spread sum q={q}"
                    );
                }
                points += 1;
            }
        }
    }
    Ok(format!("spot values to 1e-12, invariants for |q| ≤ 10 on {points} parameter points"))
}

// ---------------------------------------------------------------- Hawkes

fn naive_intensity(cfg: &ScenarioConfig, now: f64, buys: &[f64], sells: &[f64]) -> (f64, f64) {
    let kernel =
        |times: &[f64], alpha: f64| -> f64 { times.iter().map(|&ti| alpha * (-cfg.decay * (now - ti)).exp()).sum() };
    (
        cfg.base_intensity_buy + kernel(buys, cfg.self_excite_bb) + kernel(sells, cfg.cross_excite_ba),
        cfg.base_intensity_sell + kernel(sells, cfg.self_excite_aa) + kernel(buys, cfg.cross_excite_ab),
    )
}

fn hawkes() -> Outcome {
    let mut worst: f64 = 0.0;
    for history in 0..1000u64 {
        let mut rng = seed::derived_rng(3, 1, history);
        let cfg = ScenarioConfig {
            self_excite_bb: rng.random_range(0.0..1.0),
            self_excite_aa: rng.random_range(0.0..1.0),
            cross_excite_ab: rng.random_range(0.0..1.0),
            cross_excite_ba: rng.random_range(0.0..1.0),
            decay: rng.random_range(0.05..3.0),
            ..ScenarioConfig::default()
        };
        let mut h = HawkesState::default();
        let (mut buys, mut sells) = (Vec::new(), Vec::new());
        let mut now = 0.0;
        while buys.len() + sells.len() < 60 {
            let gap = rng.random_range(0.0..0.5);
            let (buy, sell) = (rng.random_bool(0.5), rng.random_bool(0.3));
            h.advance(&cfg, gap, buy, sell);
            now += gap;
            if buy {
                buys.push(now);
            }
            if sell {
                sells.push(now);
            }
            let (nb, na) = naive_intensity(&cfg, now, &buys, &sells);
            worst =
                worst.max((h.intensity(Side::Buy, &cfg) - nb).abs()).max((h.intensity(Side::Sell, &cfg) - na).abs());
        }
    }
    ensure!(worst < 1e-10, "recursion differs from the naive sum by {worst:e}");

    let steps = 20_000_000usize;
    let dt = 1e-3;
    let cfg = ScenarioConfig {
        horizon: dt * steps as f64,
        dt,
        volatility: 0.0,
        base_intensity_buy: 1.0,
        base_intensity_sell: 1.0,
        self_excite_bb: 0.04,
        self_excite_aa: 0.04,
        cross_excite_ab: 0.04,
        cross_excite_ba: 0.04,
        decay: 0.1,
        inventory_cap: i32::MAX / 2,
        ..ScenarioConfig::default()
    };
    let stationary = 1.0 / (1.0 - (0.04 + 0.04) / 0.1);
    let mut env = MarketEnv::reset(&cfg, 11).map_err(err)?;
    let (mut bids, mut asks) = (0u64, 0u64);
    for _ in 0..steps {
        let o = env.step(QuoteAction::new(0.0, 0.0)).map_err(err)?;
        bids += u64::from(o.bid_filled);
        asks += u64::from(o.ask_filled);
    }
    let rate = |n: u64| n as f64 / cfg.horizon;
    let (rb, ra) = (rate(bids), rate(asks));
    for r in [rb, ra] {
        ensure!((r - stationary).abs() <= 0.05 * stationary, "event rate {r:.4} vs stationary {stationary}");
    }
    Ok(format!("1000 histories within {worst:.1e}; rates {rb:.4}/{ra:.4} vs λ̄ = {stationary} over {steps} steps"))
}

// ---------------------------------------------------------------- price paths

fn price_moments() -> Outcome {
    let paths = 100_000;
    let gbm = ScenarioConfig { drift: 0.05, volatility: 0.1, jump_intensity: 0.0, ..ScenarioConfig::default() };
    let mut rng = seed::derived_rng(4, 1, 0);
    let logs: Vec<f64> = (0..paths)
        .map(|_| (simulate_price_path(&gbm, &mut rng).prices[gbm.steps()] / gbm.initial_price).ln())
        .collect();
    let (mean, var) = finflow::core::evaluation::mean_and_variance(&logs);
    let se = (var / paths as f64).sqrt();
    let expect = (gbm.drift - 0.5 * gbm.volatility * gbm.volatility) * gbm.horizon;
    ensure!((mean - expect).abs() < 3.0 * se, "log-mean {mean} vs {expect} (se {se:e})");

    let jumpy = ScenarioConfig { jump_intensity: 5.0, jump_mean: -0.01, jump_std: 0.03, ..gbm.clone() };
    let mut rng = seed::derived_rng(4, 2, 0);
    let total: usize = (0..paths).map(|_| simulate_price_path(&jumpy, &mut rng).jump_count).sum();
    let p = jumpy.jump_intensity * jumpy.dt;
    let n = (jumpy.steps() * paths) as f64;
    let (expect_jumps, sd) = (n * p, (n * p * (1.0 - p)).sqrt());
    ensure!((total as f64 - expect_jumps).abs() < 3.0 * sd, "jumps {total} vs {expect_jumps} (sd {sd:.1})");
    Ok(format!(
        "log-mean {mean:.5} vs {expect:.5} ({:.2} se); jumps {total} vs {expect_jumps:.0} ({:.2} sd)",
        (mean - expect).abs() / se,
        (total as f64 - expect_jumps).abs() / sd
    ))
}

// ---------------------------------------------------------------- gradients

fn gradient_checks() -> Outcome {
    let mut worst = BTreeMap::<&str, f64>::new();
    let mut note = |name, e: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    for s in 0..10u64 {
        let mut rng = seed::derived_rng(5, 1, s);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();

        let dense =
            DenseNet::glorot(&[4, 7, 6, 3], &[Activation::Tanh, Activation::Relu, Activation::Identity], &mut rng)
                .map_err(err)?;
        let analytic = dense.param_gradient(&x, &g).map_err(err)?;
        let numeric = central_difference(dense.params(), 1e-6, |p| {
            let probe = DenseNet::from_params(dense.layer_dims(), dense.activations(), p.to_vec()).unwrap();
            probe.forward(&x).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum()
        });
        note("dense", max_relative_error(&analytic, &numeric));

        let arch = VelocityArch { noise_dim: 4, cond_dim: 3, hidden: 6, cond_hidden: 5 };
        let net = VelocityNet::new(arch, &mut rng).map_err(err)?;
        let z: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
        let t: f64 = rng.random_range(0.1..0.9);
        let r = rng.random_range(0.0..t);
        let c = &x[..3];
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot = |u: &[f64]| u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let trace = net.trace(&z, r, t, c).map_err(err)?;
        let mut analytic = vec![0.0; net.param_count()];
        net.backward(&trace, &w, &mut analytic).map_err(err)?;
        let flat: Vec<f64> = net.params().copied().collect();
        let numeric = central_difference(&flat, 1e-6, |p| {
            let mut probe = net.clone();
            let mut off = 0;
            for seg in probe.param_segments_mut() {
                seg.copy_from_slice(&p[off..off + seg.len()]);
                off += seg.len();
            }
            dot(&probe.forward(&z, r, t, c).unwrap())
        });
        note("velocity θ", max_relative_error(&analytic, &numeric));

        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tangent = net.tangent(&trace, &v, 0.0, 1.0).map_err(err)?;
        let along = central_difference(&[0.0], 1e-6, |e| {
            let shifted: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a + e[0] * b).collect();
            dot(&net.forward(&shifted, r, t + e[0], c).unwrap())
        });
        note("velocity du/dt", max_relative_error(&[dot(&tangent)], &along));

        let mut policy = GaussianPolicy::init(4, &[6, 5], 3, 1.0, 0.0, &mut rng).map_err(err)?;
        for (i, ls) in policy.log_std_mut().iter_mut().enumerate() {
            *ls = -0.4 + 0.3 * i as f64;
        }
        let (sample, _) = policy.sample(&x, &mut rng).map_err(err)?;
        let mut analytic = vec![0.0; policy.param_count()];
        policy.accumulate_log_prob_grad(&policy.trace(&x).map_err(err)?, &sample, 1.0, &mut analytic).map_err(err)?;
        let flat: Vec<f64> = policy.params().copied().collect();
        let numeric = central_difference(&flat, 1e-6, |p| {
            let mut probe = policy.clone();
            let n = probe.mean_net.param_count();
            probe.mean_net.params_mut().copy_from_slice(&p[..n]);
            probe.log_std_mut().copy_from_slice(&p[n..]);
            probe.log_prob(&x, &sample).unwrap()
        });
        note("gaussian policy", max_relative_error(&analytic, &numeric));

        let value = ValueNet::init(4, &[6, 5], &mut rng).map_err(err)?;
        let target = 0.7;
        let residual = value.value(&x).map_err(err)? - target;
        let analytic = value.net.param_gradient(&x, &[2.0 * residual]).map_err(err)?;
        let numeric = central_difference(value.net.params(), 1e-6, |p| {
            let probe = DenseNet::from_params(value.net.layer_dims(), value.net.activations(), p.to_vec()).unwrap();
            (probe.forward(&x).unwrap()[0] - target).powi(2)
        });
        note("value", max_relative_error(&analytic, &numeric));
    }
    let max = worst.values().copied().fold(0.0, f64::max);
    let summary: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    ensure!(max < 1e-4, "relative error {max:e}: {}", summary.join(", "));
    Ok(format!("10 seeds, worst relative error: {}", summary.join(", ")))
}

// ---------------------------------------------------------------- MeanFlow fixtures

/// Four-row chunk whose spreads lean linearly on the inventory feature.
fn teacher_chunk(q: f64, linear: bool) -> Vec<f64> {
    let lean = if linear { 0.5 * q } else { 0.0 };
    (0..4).flat_map(|k| [0.2 + lean + 0.01 * k as f64, -0.1 - lean]).collect()
}

fn fixture(n: usize, stream: u64, linear: bool) -> TrainingSet {
    let mut rng = seed::derived_rng(6, stream, 0);
    let (mut conds, mut actions) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let q: f64 = rng.random_range(-1.0..1.0);
        conds.extend([rng.random_range(-1.0..1.0), 0.3, q, rng.random_range(-1.0..1.0), 0.0]);
        actions.extend(teacher_chunk(q, linear));
    }
    TrainingSet::new(5, 8, conds, actions)
}

fn meanflow_fixtures() -> Outcome {
    let mut detail = Vec::new();
    for (name, linear) in [("constant", false), ("linear-teacher", true)] {
        let arch = VelocityArch { noise_dim: 8, cond_dim: 5, hidden: 64, cond_hidden: 32 };
        let mut net = VelocityNet::new(arch, &mut seed::derived_rng(6, 10, 0)).map_err(err)?;
        let cfg =
            TrainConfig { steps: 5000, batch_size: 64, learning_rate: 3e-3, forward_mode: true, cosine_decay: true };
        train(&mut net, &fixture(2000, 1, linear), &cfg, 3, |_, _| {}).map_err(err)?;
        let held_out = fixture(500, 2, linear);
        let mut rng = seed::derived_rng(6, 20, 0);
        let mut se = 0.0;
        for i in 0..held_out.len() {
            let w: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
            let u = net.forward(&w, 0.0, 1.0, held_out.cond(i)).map_err(err)?;
            se += w.iter().zip(&u).zip(held_out.action(i)).map(|((w, u), a)| (w - u - a).powi(2)).sum::<f64>();
        }
        let mse = se / (held_out.len() * 8) as f64;
        ensure!(mse < 1e-2, "{name}: one-step MSE {mse:.4}");
        detail.push(format!("{name} MSE {mse:.4}"));
    }
    Ok(format!("{} after 5000 steps", detail.join(", ")))
}

// ---------------------------------------------------------------- pipeline

fn mean_pnl(report: &BenchmarkReport, mode: MarketMode, strategy: &str) -> Result<f64, String> {
    report.cell(mode, strategy).map(|c| c.mean_pnl).ok_or_else(|| format!("no {mode:?} cell for {strategy}"))
}

fn imitation(root: &Path) -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.data.source = DataSource::Mode(MarketMode::LL);
    cfg.eval.modes = vec![MarketMode::LL];
    let dir = root.join("ll");
    let data = commands::gen_data(&cfg, &dir).map_err(err)?;
    let teacher = data.winners.first().ok_or("no tournament winner")?.winner.clone();
    let trained = commands::train(&cfg, &data.path, &dir).map_err(err)?;
    let inputs = EvalInputs { expert: Some(trained.path.clone()), ..EvalInputs::default() };
    let report = commands::eval(&cfg, &inputs, &dir, false).map_err(err)?;
    let student = mean_pnl(&report, MarketMode::LL, PRETRAINED)?;
    let teach = mean_pnl(&report, MarketMode::LL, &teacher)?;
    let gap = (student - teach).abs() / teach.abs();
    ensure!(gap <= 0.15, "pretrained {student:.3} vs {teacher} {teach:.3}: gap {:.1}%", 100.0 * gap);
    Ok(format!(
        "pretrained {student:.3} vs teacher {teacher} {teach:.3} (gap {:.2}%), {} episodes",
        100.0 * gap,
        cfg.eval.episodes
    ))
}

/// Artifacts of the default (scenario-grid) pipeline.
struct GridRun {
    expert: PathBuf,
    expert_sha_before: String,
    finetune: FinetuneSummary,
    report: BenchmarkReport,
}

fn finetune_improvement(root: &Path, slot: &mut Option<GridRun>) -> Outcome {
    let cfg = RunConfig::default();
    ensure!(
        cfg.finetune.rollout.envs == 16 && cfg.finetune.updates >= 200 && cfg.finetune.mode == MarketMode::LL,
        "default fine-tune is not the desk-scale LL run"
    );
    let dir = root.join("grid");
    let data = commands::gen_data(&cfg, &dir).map_err(err)?;
    let trained = commands::train(&cfg, &data.path, &dir).map_err(err)?;
    let expert_sha_before = frame::sha256_hex(&std::fs::read(&trained.path).map_err(err)?);
    let ft = commands::finetune(&cfg, &trained.path, &dir).map_err(err)?;
    let inputs = EvalInputs { expert: Some(trained.path.clone()), policy: Some(ft.path.clone()), direct: None };
    let report = commands::eval(&cfg, &inputs, &dir, false).map_err(err)?;

    let strategies = pipeline::eval_strategies(cfg.eval.random_range, &inputs.load().map_err(err)?).map_err(err)?;
    let pnls = |name: &str| -> Result<Vec<f64>, String> {
        let s = strategies.iter().find(|s| s.name() == name).ok_or_else(|| format!("{name} missing"))?;
        let runs = par::run_cell(s.as_ref(), MarketMode::LL, cfg.eval.episodes, cfg.seed).map_err(err)?;
        Ok(runs.iter().map(|r| r.pnl).collect())
    };
    let (tuned, base) = (pnls(FINETUNED)?, pnls(PRETRAINED)?);
    let (t, df) = paired_t_statistic(&tuned, &base).ok_or("paired differences have no variance")?;
    let p = 1.0 - StudentsT::new(0.0, 1.0, df).map_err(err)?.cdf(t);
    let (mt, mb) = (mean_pnl(&report, MarketMode::LL, FINETUNED)?, mean_pnl(&report, MarketMode::LL, PRETRAINED)?);
    *slot = Some(GridRun { expert: trained.path, expert_sha_before, finetune: ft.clone(), report });
    ensure!(mt > mb && p < 0.05, "fine-tuned {mt:.3} vs pretrained {mb:.3}: t = {t:.2}, p = {p:.3}");
    Ok(format!(
        "LL PnL {mt:.3} vs pretrained {mb:.3}, paired t = {t:.2} (df {df}), one-sided p = {p:.1e}; \
         rollout r_total {:.4} -> {:.4}",
        ft.first_mean_reward, ft.last_mean_reward
    ))
}

fn baseline_ordering() -> Outcome {
    let cfg = RunConfig::default();
    let mut strategies: Vec<Box<dyn QuotingStrategy>> = Vec::new();
    for k in pipeline::CLOSED_FORM {
        strategies.push(Box::new(ExpertStrategy::new(k).map_err(err)?));
    }
    strategies.push(Box::new(RandomQuoter::new(cfg.eval.random_range)));
    let refs: Vec<&dyn QuotingStrategy> = strategies.iter().map(|s| s.as_ref()).collect();
    let modes = [MarketMode::LH, MarketMode::LL];
    let report = par::report_of(&par::run_benchmark(&refs, &modes, 2000, cfg.seed).map_err(err)?);
    let mut detail = Vec::new();
    for mode in modes {
        let (a, g, r) =
            (mean_pnl(&report, mode, "AS")?, mean_pnl(&report, mode, "GLFT")?, mean_pnl(&report, mode, "Random")?);
        ensure!(g >= a - 0.05 * a.abs(), "{mode:?}: GLFT {g:.3} below AS {a:.3} - 5%");
        ensure!(r > 0.0 && a >= 5.0 * r && g >= 5.0 * r, "{mode:?}: AS {a:.3} / GLFT {g:.3} vs Random {r:.3}");
        detail.push(format!("{mode:?} AS {a:.3} GLFT {g:.3} Random {r:.3}"));
    }
    Ok(detail.join("; "))
}

fn small_config(source: DataSource) -> RunConfig {
    let mut c = RunConfig::default();
    c.data.source = source;
    c.data.tournament_episodes = 2;
    c.data.episodes = 2;
    c.train.steps = 60;
    c.finetune.updates = 2;
    c.finetune.rollout.envs = 3;
    c.finetune.rollout.chunks_per_env = 12;
    c.direct.updates = 2;
    c.direct.rollout.envs = 3;
    c.direct.rollout.chunks_per_env = 40;
    c.eval.episodes = 30;
    c
}

/// Every deterministic command of the pipeline into `dir`.
fn run_pipeline(dir: &Path) -> Result<(), String> {
    let cfg = small_config(DataSource::Mode(MarketMode::LL));
    let data = commands::gen_data(&cfg, dir).map_err(err)?;
    let trained = commands::train(&cfg, &data.path, dir).map_err(err)?;
    let ft = commands::finetune(&cfg, &trained.path, dir).map_err(err)?;
    let direct = commands::finetune_direct(&cfg, dir).map_err(err)?;
    let inputs = EvalInputs { expert: Some(trained.path), policy: Some(ft.path), direct: Some(direct.path) };
    commands::eval(&cfg, &inputs, dir, true).map_err(err)?;
    let grid = small_config(DataSource::Grid);
    commands::gen_data(&grid, &dir.join("grid")).map_err(err)?;
    Ok(())
}

fn tree(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(err)? {
            let path = entry.map_err(err)?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).map_err(err)?.to_path_buf();
                files.insert(rel, std::fs::read(&path).map_err(err)?);
            }
        }
    }
    Ok(files)
}

fn freeze_and_determinism(root: &Path, grid: Option<&GridRun>) -> Outcome {
    let grid = grid.ok_or("no fine-tuning run to inspect")?;
    let after = frame::sha256_hex(&std::fs::read(&grid.expert).map_err(err)?);
    ensure!(after == grid.expert_sha_before, "expert checkpoint changed on disk");
    ensure!(
        grid.finetune.expert_sha256.as_deref() == Some(after.as_str()),
        "fine-tuned policy references a different expert"
    );

    let (a, b) = (root.join("repro-a"), root.join("repro-b"));
    run_pipeline(&a)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().map_err(err)?;
    pool.install(|| run_pipeline(&b))?;
    let (ta, tb) = (tree(&a)?, tree(&b)?);
    ensure!(ta.keys().eq(tb.keys()), "runs produced different file sets");
    let differing: Vec<String> =
        ta.iter().filter(|(k, v)| tb[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    ensure!(differing.is_empty(), "files differ between runs: {}", differing.join(", "));
    Ok(format!(
        "expert {}… unchanged by fine-tuning; {} artifacts byte-identical across reruns ({} vs 3 threads)",
        &after[..12],
        ta.len(),
        rayon::current_num_threads()
    ))
}

fn latency(root: &Path, grid: Option<&GridRun>) -> Outcome {
    let grid = grid.ok_or("no trained artifacts to time")?;
    let cfg = RunConfig::default();
    let lat =
        commands::bench_latency(&cfg, &grid.expert, Some(&grid.finetune.path), &root.join("latency")).map_err(err)?;
    ensure!(
        lat.mean_us_per_action > 0.0 && lat.p99_us_per_action >= lat.mean_us_per_action,
        "implausible timing {lat:?}"
    );
    ensure!(lat.mean_us_per_action < 50.0, "mean {:.2} µs per action", lat.mean_us_per_action);
    Ok(format!(
        "{:.2} µs mean / {:.2} µs p99 per action ({:.1} µs per call of {} actions, {} calls)",
        lat.mean_us_per_action, lat.p99_us_per_action, lat.mean_us_per_call, lat.actions_per_call, lat.calls
    ))
}

fn print_report(report: &BenchmarkReport) {
    println!("\n{:<6}{:<22}{:>10}{:>10}{:>10}", "mode", "strategy", "PnL", "Sharpe", "MDD%");
    for row in &report.rows {
        let m = &row.metrics;
        let sharpe = m.sharpe.map_or("-".into(), |s| format!("{s:.3}"));
        println!(
            "{:<6}{:<22}{:>10.3}{:>10}{:>10.3}",
            row.mode.as_str(),
            row.strategy,
            m.mean_pnl,
            sharpe,
            m.mdd_percent
        );
    }
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temporary directory");
    let root = root.path();
    let mut runner = Runner { failures: 0 };
    let mut grid = None;
    let secs = |s| Some(Duration::from_secs(s));

    runner.run(1, "metric oracles", secs(1), metric_oracles);
    runner.run(2, "expert formula suite", secs(1), expert_suite);
    runner.run(3, "Hawkes recursion and stationary rate", secs(30), hawkes);
    runner.run(4, "price-path moments", secs(30), price_moments);
    runner.run(5, "gradient checks", secs(10), gradient_checks);
    runner.run(6, "MeanFlow desk-scale learning", secs(300), meanflow_fixtures);
    runner.run(7, "imitation parity (LL)", secs(600), || imitation(root));
    runner.run(8, "fine-tuning improvement (LL)", secs(1800), || finetune_improvement(root, &mut grid));
    runner.run(9, "baseline ordering (LH, LL)", secs(600), baseline_ordering);
    runner.run(10, "freeze and determinism", None, || freeze_and_determinism(root, grid.as_ref()));
    runner.run(11, "latency benchmark", None, || latency(root, grid.as_ref()));

    if let Some(g) = &grid {
        print_report(&g.report);
    }
    println!("\n{} of 11 criteria failed", runner.failures);
    if runner.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
