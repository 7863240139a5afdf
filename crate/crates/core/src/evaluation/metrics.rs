#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("period return {value} at index {index} is a total loss")]
    TotalLoss { index: usize, value: f64 },
    #[error("Sharpe ratio needs at least two observations, got {0}")]
    TooShort(usize),
    #[error("Sharpe ratio undefined: zero variance")]
    ZeroVariance,
    #[error("drawdown needs at least one value")]
    Empty,
    #[error("value {value} at index {index} is not positive")]
    NonPositive { index: usize, value: f64 },
}

/// `(Π(1 + rᵢ) − 1)·100`, in percent.
pub fn cumulative_return(period_returns: &[f64]) -> Result<f64, MetricError> {
    let mut growth = 1.0;
    for (index, &r) in period_returns.iter().enumerate() {
        if !(r > -1.0) {
            return Err(MetricError::TotalLoss { index, value: r });
        }
        growth *= 1.0 + r;
    }
    Ok((growth - 1.0) * 100.0)
}

/// Sample mean over sample standard deviation (`ddof = 1`), risk-free rate 0.
pub fn sharpe(excess_returns: &[f64]) -> Result<f64, MetricError> {
    let n = excess_returns.len();
    if n < 2 {
        return Err(MetricError::TooShort(n));
    }
    let (mean, var) = mean_and_variance(excess_returns);
    if !(var > 0.0) {
        return Err(MetricError::ZeroVariance);
    }
    Ok(mean / var.sqrt())
}

/// Largest `(peak − value)/peak` under a running peak, as a fraction.
pub fn max_drawdown(values: &[f64]) -> Result<f64, MetricError> {
    let first = *values.first().ok_or(MetricError::Empty)?;
    let mut peak = first;
    let mut worst: f64 = 0.0;
    for (index, &v) in values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(MetricError::NonPositive { index, value: v });
        }
        if v > peak {
            peak = v;
        }
        worst = worst.max((peak - v) / peak);
    }
    Ok(worst)
}

/// Sum by recursive halving. The split points depend only on the length,
/// so equal inputs give bitwise-equal sums regardless of how they were
/// produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and unbiased variance (two-pass).
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let mut sq = alloc::vec::Vec::with_capacity(xs.len());
    sq.extend(xs.iter().map(|x| (x - m) * (x - m)));
    (m, pairwise_sum(&sq) / (xs.len() - 1) as f64)
}

/// t statistic of the mean paired difference `a − b`, with its degrees of
/// freedom. Returns `None` when fewer than two pairs or zero variance.
pub fn paired_t_statistic(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: alloc::vec::Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    one_sample_t(&diffs)
}

/// t statistic of the difference of means of two independent samples
/// (Welch), with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_statistic(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, va) = mean_and_variance(a);
    let (mb, vb) = mean_and_variance(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if !(se2 > 0.0) {
        return None;
    }
    let df = se2 * se2 / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    Some(((ma - mb) / se2.sqrt(), df))
}

fn one_sample_t(diffs: &[f64]) -> Option<(f64, f64)> {
    if diffs.len() < 2 {
        return None;
    }
    let (m, v) = mean_and_variance(diffs);
    if !(v > 0.0) {
        return None;
    }
    Some((m / (v / diffs.len() as f64).sqrt(), (diffs.len() - 1) as f64))
}
