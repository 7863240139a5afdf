//! Network checkpoints: a JSON header with every layer's widths and
//! activations, followed by the parameters as little-endian `f64`.

use std::path::Path;

use finflow_core::dataset::NormStats;
use finflow_core::evaluation::MarketMode;
use finflow_core::meanflow::{Horizons, MeanFlowPolicy, VelocityNet};
use finflow_core::noise_rl::{GaussianPolicy, ValueNet};
use finflow_core::numerics::{Activation, DenseNet, FilmLayer};
use serde::{Deserialize, Serialize};

use crate::frame::{self, put_f64s, Reader};
use crate::Result;

const MEANFLOW_KIND: &str = "meanflow-checkpoint";
const POLICY_KIND: &str = "ppo-checkpoint";
const VERSION: u32 = 1;

/// Shape of one dense network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl NetSpec {
    fn of(net: &DenseNet) -> Self {
        Self { layer_dims: net.layer_dims().to_vec(), activations: net.activations().to_vec() }
    }

    fn read(&self, body: &mut Reader<'_>) -> Result<DenseNet> {
        let n = DenseNet::zeros(&self.layer_dims, &self.activations)?.param_count();
        Ok(DenseNet::from_params(&self.layer_dims, &self.activations, body.f64s(n)?)?)
    }
}

#[derive(Serialize, Deserialize)]
struct MeanFlowHeader {
    horizons: Horizons,
    stats: NormStats,
    param_count: usize,
    embed: NetSpec,
    film: NetSpec,
    trunk: NetSpec,
    skip: NetSpec,
}

pub fn encode_meanflow(policy: &MeanFlowPolicy) -> Vec<u8> {
    let net = policy.net();
    let (embed, film, trunk, skip) = net.parts();
    let header = MeanFlowHeader {
        horizons: *policy.horizons(),
        stats: policy.stats().clone(),
        param_count: net.param_count(),
        embed: NetSpec::of(embed),
        film: NetSpec::of(&film.condition_net),
        trunk: NetSpec::of(trunk),
        skip: NetSpec::of(skip),
    };
    let mut body = Vec::with_capacity(8 * header.param_count);
    for part in [embed, &film.condition_net, trunk, skip] {
        put_f64s(&mut body, part.params().iter().copied());
    }
    frame::encode(MEANFLOW_KIND, VERSION, &header, &body)
}

pub fn decode_meanflow(path: &Path, bytes: &[u8]) -> Result<MeanFlowPolicy> {
    let (h, body): (MeanFlowHeader, _) = frame::decode(path, bytes, MEANFLOW_KIND, VERSION)?;
    let mut r = Reader::new(path, body);
    let embed = h.embed.read(&mut r)?;
    let film = FilmLayer::new(h.film.read(&mut r)?)?;
    let trunk = h.trunk.read(&mut r)?;
    let skip = h.skip.read(&mut r)?;
    r.finish()?;
    let net = VelocityNet::from_parts(embed, film, trunk, skip)?;
    Ok(MeanFlowPolicy::new(net, h.stats, h.horizons)?)
}

/// Writes the checkpoint and returns its SHA-256.
pub fn save_meanflow(path: &Path, policy: &MeanFlowPolicy) -> Result<String> {
    let bytes = encode_meanflow(policy);
    frame::write(path, &bytes)?;
    Ok(frame::sha256_hex(&bytes))
}

/// Loads a checkpoint together with the SHA-256 of its bytes.
pub fn load_meanflow(path: &Path) -> Result<(MeanFlowPolicy, String)> {
    let bytes = frame::read(path)?;
    Ok((decode_meanflow(path, &bytes)?, frame::sha256_hex(&bytes)))
}

/// A trained PPO agent: the noise policy of a fine-tuned generator, or the
/// direct baseline when `expert_sha256` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheckpoint {
    pub policy: GaussianPolicy,
    pub value: ValueNet,
    /// Hash of the frozen generator checkpoint the policy drives.
    pub expert_sha256: Option<String>,
    /// The generator's horizons, or the single-step horizons of the baseline.
    pub horizons: Horizons,
    /// Observation/action maps the policy was trained under.
    pub stats: NormStats,
    pub mode: MarketMode,
    pub updates: usize,
}

#[derive(Serialize, Deserialize)]
struct PolicyHeader {
    expert_sha256: Option<String>,
    horizons: Horizons,
    stats: NormStats,
    mode: MarketMode,
    updates: usize,
    mean_net: NetSpec,
    log_std_len: usize,
    value_net: NetSpec,
}

impl PolicyCheckpoint {
    pub fn encode(&self) -> Vec<u8> {
        let header = PolicyHeader {
            expert_sha256: self.expert_sha256.clone(),
            horizons: self.horizons,
            stats: self.stats.clone(),
            mode: self.mode,
            updates: self.updates,
            mean_net: NetSpec::of(&self.policy.mean_net),
            log_std_len: self.policy.log_std().len(),
            value_net: NetSpec::of(&self.value.net),
        };
        let mut body = Vec::new();
        put_f64s(&mut body, self.policy.params().copied());
        put_f64s(&mut body, self.value.net.params().iter().copied());
        frame::encode(POLICY_KIND, VERSION, &header, &body)
    }

    pub fn decode(path: &Path, bytes: &[u8]) -> Result<Self> {
        let (h, body): (PolicyHeader, _) = frame::decode(path, bytes, POLICY_KIND, VERSION)?;
        let mut r = Reader::new(path, body);
        let mean_net = h.mean_net.read(&mut r)?;
        let log_std = r.f64s(h.log_std_len)?;
        let value = ValueNet::new(h.value_net.read(&mut r)?)?;
        r.finish()?;
        Ok(Self {
            policy: GaussianPolicy::new(mean_net, log_std)?,
            value,
            expert_sha256: h.expert_sha256,
            horizons: h.horizons,
            stats: h.stats,
            mode: h.mode,
            updates: h.updates,
        })
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        let bytes = self.encode();
        frame::write(path, &bytes)?;
        Ok(frame::sha256_hex(&bytes))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(path, &frame::read(path)?)
    }
}
