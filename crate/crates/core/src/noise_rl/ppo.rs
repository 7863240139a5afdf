use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::rollout::normalize_advantages;
use super::{GaussianPolicy, NoiseRlError, RolloutBuffer, ValueNet};
use crate::numerics::{AdamConfig, AdamState};
use crate::seed::{self, tag, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoHyper {
    pub clip: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
}

impl Default for PpoHyper {
    fn default() -> Self {
        Self {
            clip: 0.2,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            minibatch_size: 400,
            learning_rate: 5e-5,
        }
    }
}

impl PpoHyper {
    pub fn validate(&self) -> Result<(), NoiseRlError> {
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(NoiseRlError::Config("clip must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(NoiseRlError::Config("gamma and gae_lambda must lie in [0, 1]"));
        }
        if self.epochs == 0 || self.minibatch_size == 0 {
            return Err(NoiseRlError::Config("epochs and minibatch_size must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(NoiseRlError::Config("learning_rate must be finite and non-negative"));
        }
        if !(self.value_coeff >= 0.0 && self.entropy_coeff >= 0.0) {
            return Err(NoiseRlError::Config("loss coefficients must be non-negative"));
        }
        Ok(())
    }
}

/// Averages over the minibatches of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Clipped surrogate loss `−E[min(rA, clip(r)A)]`.
    pub policy_loss: f64,
    /// `½·E[(V − R)²]`.
    pub value_loss: f64,
    pub entropy: f64,
    /// Fraction of samples with `|r − 1| > ε`.
    pub clip_fraction: f64,
    /// `E[old_logp − new_logp]`.
    pub approx_kl: f64,
    pub minibatches: usize,
    pub skipped_minibatches: usize,
}

/// One stored decision as seen by the surrogate objective.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateSample<'a> {
    pub obs: &'a [f64],
    pub latent: &'a [f64],
    pub old_log_prob: f64,
    pub advantage: f64,
}

/// Surrogate loss of one sample and, if the unclipped branch is active,
/// its gradient `−A·r·∇log π · scale` accumulated into `grads`.
///
/// Returns `(ratio, loss)`; a non-finite ratio leaves `grads` untouched.
pub fn accumulate_surrogate(
    policy: &GaussianPolicy,
    sample: SurrogateSample<'_>,
    clip: f64,
    scale: f64,
    grads: &mut [f64],
) -> Result<(f64, f64), NoiseRlError> {
    let SurrogateSample { obs, latent, old_log_prob, advantage } = sample;
    let trace = policy.trace(obs)?;
    let mean = trace.output().expect("non-empty trace");
    let ratio = (policy.log_prob_given_mean(mean, latent) - old_log_prob).exp();
    if !ratio.is_finite() {
        return Ok((ratio, f64::NAN));
    }
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        policy.accumulate_log_prob_grad(&trace, latent, -advantage * ratio * scale, grads)?;
    }
    Ok((ratio, -unclipped.min(clipped)))
}

fn stored(buf: &RolloutBuffer, i: usize, advantage: f64) -> SurrogateSample<'_> {
    SurrogateSample { obs: buf.obs(i), latent: buf.latent(i), old_log_prob: buf.log_probs[i], advantage }
}

/// Trainable half of the fine-tuning setup: noise (or action) policy,
/// critic and their shared optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoAgent {
    pub policy: GaussianPolicy,
    pub value: ValueNet,
    pub adam: AdamState,
    pub hyper: PpoHyper,
}

impl PpoAgent {
    pub fn new(policy: GaussianPolicy, value: ValueNet, hyper: PpoHyper) -> Result<Self, NoiseRlError> {
        hyper.validate()?;
        if policy.obs_dim() != value.obs_dim() {
            return Err(NoiseRlError::Config("policy and value networks must read the same observation"));
        }
        let adam = AdamState::new(
            policy.param_count() + value.param_count(),
            AdamConfig::with_learning_rate(hyper.learning_rate),
        );
        Ok(Self { policy, value, adam, hyper })
    }

    pub fn trainable_params(&self) -> usize {
        self.policy.param_count() + self.value.param_count()
    }

    /// Importance ratios of every stored sample under the current policy.
    pub fn ratios(&self, buf: &RolloutBuffer) -> Result<Vec<f64>, NoiseRlError> {
        (0..buf.len())
            .map(|i| Ok((self.policy.log_prob(buf.obs(i), buf.latent(i))? - buf.log_probs[i]).exp()))
            .collect()
    }

    /// GAE, advantage normalization, then `epochs` passes of shuffled
    /// minibatches with one combined Adam step each. `update_index` seeds
    /// the shuffling.
    pub fn update(
        &mut self,
        buf: &mut RolloutBuffer,
        seed: u64,
        update_index: u64,
    ) -> Result<UpdateStats, NoiseRlError> {
        if buf.is_empty() {
            return Err(NoiseRlError::EmptyRollout);
        }
        let h = self.hyper;
        buf.compute_advantages(h.gamma, h.gae_lambda);
        let mut adv = buf.advantages.clone();
        normalize_advantages(&mut adv);
        let mut rng: Rng = seed::derived_rng(seed, tag::TRAIN, update_index);
        let mut order: Vec<usize> = (0..buf.len()).collect();
        let n_policy = self.policy.param_count();
        let mut grads = vec![0.0; self.trainable_params()];
        let mut stats = UpdateStats::default();
        let mut clipped = 0usize;
        let mut seen = 0usize;
        for _ in 0..h.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(h.minibatch_size) {
                grads.fill(0.0);
                let scale = 1.0 / batch.len() as f64;
                let (g_policy, g_value) = grads.split_at_mut(n_policy);
                let mut pg = 0.0;
                let mut vl = 0.0;
                let mut kl = 0.0;
                let mut batch_clipped = 0usize;
                let mut finite = true;
                for &i in batch {
                    let (ratio, loss) =
                        accumulate_surrogate(&self.policy, stored(buf, i, adv[i]), h.clip, scale, g_policy)?;
                    if !ratio.is_finite() {
                        finite = false;
                        break;
                    }
                    pg += loss;
                    kl -= ratio.ln();
                    if (ratio - 1.0).abs() > h.clip {
                        batch_clipped += 1;
                    }
                    let trace = self.value.net.forward_trace(buf.obs(i))?;
                    let err = trace.output().expect("non-empty trace")[0] - buf.returns[i];
                    vl += 0.5 * err * err;
                    self.value.net.backward(&trace, &[h.value_coeff * err * scale], g_value)?;
                }
                stats.minibatches += 1;
                if !finite {
                    log::warn!("non-finite importance ratio; minibatch skipped");
                    stats.skipped_minibatches += 1;
                    continue;
                }
                // Entropy bonus: ∂H/∂log_std = 1 for every dimension.
                for g in &mut g_policy[self.policy.mean_net.param_count()..] {
                    *g -= h.entropy_coeff;
                }
                stats.policy_loss += pg * scale;
                stats.value_loss += vl * scale;
                stats.approx_kl += kl * scale;
                stats.entropy += self.policy.entropy();
                clipped += batch_clipped;
                seen += batch.len();
                let [mean_params, log_std] = self.policy.param_segments_mut();
                self.adam.step(&mut [mean_params, log_std, self.value.net.params_mut()], &grads)?;
                self.policy.clamp_log_std();
            }
        }
        let used = (stats.minibatches - stats.skipped_minibatches).max(1) as f64;
        stats.policy_loss /= used;
        stats.value_loss /= used;
        stats.approx_kl /= used;
        stats.entropy /= used;
        stats.clip_fraction = if seen == 0 { 0.0 } else { clipped as f64 / seen as f64 };
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gradcheck::{central_difference, max_relative_error};
    use crate::seed;

    fn agent(stream: u64) -> PpoAgent {
        let mut rng = seed::rng(stream);
        let policy = GaussianPolicy::init(3, &[8], 2, 1.0, -0.3, &mut rng).unwrap();
        let value = ValueNet::init(3, &[8], &mut rng).unwrap();
        PpoAgent::new(policy, value, PpoHyper { minibatch_size: 16, learning_rate: 1e-3, ..PpoHyper::default() })
            .unwrap()
    }

    fn buffer(a: &PpoAgent, n: usize, stream: u64) -> RolloutBuffer {
        use rand::Rng as _;
        let mut rng = seed::rng(stream);
        let mut buf = RolloutBuffer::new(3, 2);
        for i in 0..n {
            let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (w, lp) = a.policy.sample(&obs, &mut rng).unwrap();
            let v = a.value.value(&obs).unwrap();
            buf.push(&obs, &w, lp, v, rng.random_range(-1.0..1.0), i % 13 == 12);
        }
        buf.end_segment(0.0);
        buf
    }

    #[test]
    fn ratio_is_one_before_any_update() {
        let a = agent(1);
        let buf = buffer(&a, 64, 2);
        for r in a.ratios(&buf).unwrap() {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unchanged_policy_surrogate_is_minus_mean_advantage() {
        let a = agent(3);
        let buf = buffer(&a, 32, 4);
        let adv: Vec<f64> = (0..32).map(|i| f64::from(i) / 10.0 - 1.0).collect();
        let mut grads = vec![0.0; a.policy.param_count()];
        let mut total = 0.0;
        for (i, &ad) in adv.iter().enumerate() {
            let (r, loss) = accumulate_surrogate(&a.policy, stored(&buf, i, ad), 0.2, 1.0, &mut grads).unwrap();
            assert!((r - 1.0).abs() < 1e-12);
            total += loss;
        }
        let mean_adv: f64 = adv.iter().sum::<f64>() / 32.0;
        assert!((total / 32.0 + mean_adv).abs() < 1e-12);
    }

    #[test]
    fn saturated_clip_has_zero_gradient() {
        let a = agent(5);
        let obs = [0.1, 0.2, 0.3];
        let mean = a.policy.mean(&obs).unwrap();
        // Stored log-prob far below the current one makes r ≫ 1 + ε.
        let old = a.policy.log_prob(&obs, &mean).unwrap() - 1.0;
        let at = |advantage| SurrogateSample { obs: &obs, latent: &mean, old_log_prob: old, advantage };
        let mut grads = vec![0.0; a.policy.param_count()];
        let (r, loss) = accumulate_surrogate(&a.policy, at(2.0), 0.2, 1.0, &mut grads).unwrap();
        assert!(r > 1.2);
        assert_eq!(loss, -1.2 * 2.0);
        assert!(grads.iter().all(|g| *g == 0.0));
        // Negative advantage takes the unclipped branch instead.
        accumulate_surrogate(&a.policy, at(-2.0), 0.2, 1.0, &mut grads).unwrap();
        assert!(grads.iter().any(|g| *g != 0.0));
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        let a = agent(7);
        let buf = buffer(&a, 8, 8);
        let mut perturbed = a.policy.clone();
        for p in perturbed.mean_net.params_mut() {
            *p *= 1.05;
        }
        for i in 0..8 {
            let adv = if i % 2 == 0 { 0.7 } else { -0.4 };
            let mut grads = vec![0.0; perturbed.param_count()];
            accumulate_surrogate(&perturbed, stored(&buf, i, adv), 0.2, 1.0, &mut grads).unwrap();
            let flat: Vec<f64> = perturbed.params().copied().collect();
            let numeric = central_difference(&flat, 1e-6, |x| {
                let mut probe = perturbed.clone();
                let n = probe.mean_net.param_count();
                probe.mean_net.params_mut().copy_from_slice(&x[..n]);
                probe.log_std_mut().copy_from_slice(&x[n..]);
                let mut scratch = vec![0.0; probe.param_count()];
                accumulate_surrogate(&probe, stored(&buf, i, adv), 0.2, 1.0, &mut scratch).unwrap().1
            });
            // Kinks of the clip are measure-zero; skip samples sitting on one.
            if numeric.iter().all(|g| g.is_finite()) {
                assert!(max_relative_error(&grads, &numeric) < 1e-4, "sample {i}");
            }
        }
    }

    #[test]
    fn normalized_advantages_are_standard() {
        let mut adv: Vec<f64> = (0..100).map(|i| f64::from(i).sin() * 3.0 + 1.0).collect();
        normalize_advantages(&mut adv);
        let m: f64 = adv.iter().sum::<f64>() / 100.0;
        let sd = (adv.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / 100.0).sqrt();
        assert!(m.abs() < 1e-10);
        assert!((sd - 1.0).abs() < 1e-6);
    }

    #[test]
    fn update_reports_sane_diagnostics_and_is_deterministic() {
        let mut a = agent(9);
        let mut b = a.clone();
        let mut buf = buffer(&a, 64, 10);
        let mut buf2 = buf.clone();
        let s = a.update(&mut buf, 3, 0).unwrap();
        let t = b.update(&mut buf2, 3, 0).unwrap();
        assert_eq!(s, t);
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&s.clip_fraction));
        assert_eq!(s.minibatches, 4 * 4);
        assert_eq!(s.skipped_minibatches, 0);
        assert!(a.policy.log_std().iter().all(|v| (-5.0..=2.0).contains(v)));
        assert_ne!(a.ratios(&buf).unwrap(), vec![1.0; 64]);
    }

    #[test]
    fn invalid_hyper_is_rejected() {
        assert!(PpoHyper { clip: 1.0, ..PpoHyper::default() }.validate().is_err());
        assert!(PpoHyper { gamma: 1.5, ..PpoHyper::default() }.validate().is_err());
        assert!(PpoHyper { epochs: 0, ..PpoHyper::default() }.validate().is_err());
    }
}
