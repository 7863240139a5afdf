use alloc::vec;
use alloc::vec::Vec;

/// Generalized advantage estimates and returns `R_t = A_t + V(s_t)` for one
/// contiguous trajectory segment.
///
/// `last_value` bootstraps the step after the final transition and is
/// ignored if that transition is terminal.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "gae inputs must have equal length");
    let mut adv = vec![0.0; n];
    let mut next_value = last_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}
