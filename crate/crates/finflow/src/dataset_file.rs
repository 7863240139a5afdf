//! Demonstration dataset files.
//!
//! The header records the horizons, the grid, the normalization maps and
//! the counts; each record in the body is its window then its chunk as
//! `f64`, then the scenario id and expert tag as `u16`.

use std::path::Path;

use finflow_core::dataset::{Dataset, DatasetError, DemoRecord, GridSpec, NormStats};
use finflow_core::experts::ExpertKind;
use finflow_core::meanflow::Horizons;
use serde::{Deserialize, Serialize};

use crate::frame::{self, put_f64s, Reader};
use crate::{Error, Result};

const KIND: &str = "demo-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    horizons: Horizons,
    grid: Option<GridSpec>,
    stats: NormStats,
    records: usize,
    window_len: usize,
    chunk_len: usize,
}

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let (wl, cl) = (ds.horizons.obs_len(), ds.horizons.chunk_len());
    let header = Header {
        horizons: ds.horizons,
        grid: ds.grid.clone(),
        stats: ds.stats.clone(),
        records: ds.records.len(),
        window_len: wl,
        chunk_len: cl,
    };
    let mut body = Vec::with_capacity(ds.records.len() * (8 * (wl + cl) + 4));
    for r in &ds.records {
        put_f64s(&mut body, r.window.iter().copied());
        put_f64s(&mut body, r.chunk.iter().copied());
        body.extend_from_slice(&r.scenario_id.to_le_bytes());
        body.extend_from_slice(&r.expert.tag().to_le_bytes());
    }
    frame::encode(KIND, DATASET_VERSION, &header, &body)
}

pub fn decode_dataset(path: &Path, bytes: &[u8]) -> Result<Dataset> {
    let (h, body): (Header, _) = frame::decode(path, bytes, KIND, DATASET_VERSION)?;
    if h.window_len != h.horizons.obs_len() || h.chunk_len != h.horizons.chunk_len() {
        return Err(Error::format(path, "record widths disagree with the horizons"));
    }
    let record_bytes = 8 * (h.window_len + h.chunk_len) + 4;
    if h.records.checked_mul(record_bytes) != Some(body.len()) {
        return Err(Error::format(path, format!("body does not hold {} records", h.records)));
    }
    let mut r = Reader::new(path, body);
    let mut records = Vec::with_capacity(h.records);
    for _ in 0..h.records {
        let window = r.f64s(h.window_len)?;
        let chunk = r.f64s(h.chunk_len)?;
        let scenario_id = r.u16()?;
        let tag = r.u16()?;
        let expert =
            ExpertKind::from_tag(tag).ok_or_else(|| Error::format(path, format!("unknown expert tag {tag}")))?;
        records.push(DemoRecord { window, chunk, scenario_id, expert });
    }
    r.finish()?;
    let ds = Dataset { horizons: h.horizons, grid: h.grid, stats: h.stats, records };
    ds.validate().map_err(|e: DatasetError| Error::format(path, e.to_string()))?;
    Ok(ds)
}

/// Writes the dataset and returns its SHA-256.
pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<String> {
    let bytes = encode_dataset(ds);
    frame::write(path, &bytes)?;
    Ok(frame::sha256_hex(&bytes))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(path, &frame::read(path)?)
}
