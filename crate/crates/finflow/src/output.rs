//! CSV and JSON writers for logs and reports.

use std::io::Write;
use std::path::Path;

use finflow_core::evaluation::BenchmarkReport;
use finflow_core::market::TraceRow;
use finflow_core::noise_rl::UpdateLog;
use serde::Serialize;

use crate::par::Cell;
use crate::pipeline::Winner;
use crate::{Error, Result};

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    })
}

fn finish<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| Error::format(path, e.to_string()))?.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Winner table: scenario axes, the winner and every candidate's score.
pub fn write_winners<W: Write>(w: W, winners: &[Winner]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let names: Vec<&str> = winners.first().map_or(Vec::new(), |w| w.scores.iter().map(|(n, _)| n.as_str()).collect());
    let mut header = vec!["scenario_id", "drift", "volatility", "jump_intensity", "dt", "liquidity", "winner"];
    header.extend(names.iter().copied());
    out.write_record(&header)?;
    for w in winners {
        let mut row = vec![
            w.scenario_id.to_string(),
            w.drift.to_string(),
            w.volatility.to_string(),
            w.jump_intensity.to_string(),
            w.dt.to_string(),
            w.liquidity.to_string(),
            w.winner.clone(),
        ];
        row.extend(w.scores.iter().map(|(_, s)| s.to_string()));
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("<winners>", e))
}

#[derive(Serialize)]
struct LossRow {
    step: usize,
    loss: f64,
}

pub fn write_train_log(path: &Path, losses: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (step, &loss) in losses.iter().enumerate() {
        w.serialize(LossRow { step, loss })?;
    }
    finish(path, w)
}

#[derive(Serialize)]
struct UpdateRow {
    update: usize,
    mean_r_total: f64,
    surrogate_loss: f64,
    value_loss: f64,
    entropy: f64,
    clip_fraction: f64,
    approx_kl: f64,
    skipped_minibatches: usize,
}

pub fn write_update_log(path: &Path, logs: &[UpdateLog]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for l in logs {
        w.serialize(UpdateRow {
            update: l.update,
            mean_r_total: l.mean_reward,
            surrogate_loss: l.stats.policy_loss,
            value_loss: l.stats.value_loss,
            entropy: l.stats.entropy,
            clip_fraction: l.stats.clip_fraction,
            approx_kl: l.stats.approx_kl,
            skipped_minibatches: l.stats.skipped_minibatches,
        })?;
    }
    finish(path, w)
}

#[derive(Serialize)]
struct ReportCsvRow<'a> {
    mode: &'a str,
    strategy: &'a str,
    episodes: usize,
    seed: u64,
    pnl: f64,
    sharpe: Option<f64>,
    mdd_percent: f64,
    mean_reward: f64,
}

/// Mode-major benchmark table.
pub fn write_report_csv(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in &report.rows {
        w.serialize(ReportCsvRow {
            mode: r.mode.as_str(),
            strategy: &r.strategy,
            episodes: r.metrics.episodes,
            seed: r.seed,
            pnl: r.metrics.mean_pnl,
            sharpe: r.metrics.sharpe,
            mdd_percent: r.metrics.mdd_percent,
            mean_reward: r.metrics.mean_reward,
        })?;
    }
    finish(path, w)
}

#[derive(Serialize)]
struct WealthRow<'a> {
    mode: &'a str,
    strategy: &'a str,
    episode: usize,
    step: usize,
    wealth: f64,
}

/// Per-episode wealth paths of every cell, long format.
pub fn write_wealth_paths(path: &Path, cells: &[Cell]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for c in cells {
        for (episode, e) in c.episodes.iter().enumerate() {
            for (step, &wealth) in e.wealth.iter().enumerate() {
                w.serialize(WealthRow { mode: c.row.mode.as_str(), strategy: &c.row.strategy, episode, step, wealth })?;
            }
        }
    }
    finish(path, w)
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct TraceCsvRow<'a> {
    mode: &'a str,
    strategy: &'a str,
    step: usize,
    t: f64,
    S: f64,
    q: i32,
    X: f64,
    delta_bid: f64,
    delta_ask: f64,
    bid_fill: bool,
    ask_fill: bool,
    reward: f64,
}

/// Step-level traces, one episode per cell.
pub fn write_traces(path: &Path, traces: &[(&str, &str, Vec<TraceRow>)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (mode, strategy, rows) in traces {
        for row in rows {
            w.serialize(TraceCsvRow {
                mode,
                strategy,
                step: row.step,
                t: row.t,
                S: row.mid_price,
                q: row.q,
                X: row.cash,
                delta_bid: row.delta_bid,
                delta_ask: row.delta_ask,
                bid_fill: row.bid_fill,
                ask_fill: row.ask_fill,
                reward: row.reward,
            })?;
        }
    }
    finish(path, w)
}
