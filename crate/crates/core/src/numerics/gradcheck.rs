//! Central finite differences for verifying hand-written gradients.

use alloc::vec::Vec;

/// `∂f/∂pᵢ ≈ (f(p + h eᵢ) − f(p − h eᵢ)) / 2h` for every coordinate.
pub fn central_difference<F>(params: &[f64], step: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let plus = f(&probe);
            probe[i] = orig - step;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Largest `|a − n| / max(|a|, |n|, 1e-6)` over paired entries. The floor
/// keeps round-off on near-zero gradients from dominating.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6)).fold(0.0, f64::max)
}
