//! Small statistics helpers. All reductions go through [`pairwise_sum`] in a
//! fixed order so that results are reproducible bit for bit.

use crate::numerics::pairwise_sum;
use rand::Rng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Population variance `⟨(x − x̄)²⟩`.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    mean(&sq)
}

/// Least-squares line `y ≈ slope·x + intercept`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let slope = pairwise_sum(&sxy) / pairwise_sum(&sxx);
    (slope, my - slope * mx)
}

/// 95% normal-approximation half-width `1.96·sd` of a statistic over
/// `resamples` bootstrap draws of `n` items. `statistic` receives the resampled
/// indices.
pub fn bootstrap_half_width<R: Rng, F: Fn(&[usize]) -> f64>(n: usize, resamples: usize, rng: &mut R, statistic: F) -> f64 {
    let mut idx = vec![0usize; n];
    let values: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in idx.iter_mut() {
                *slot = rng.random_range(0..n);
            }
            statistic(&idx)
        })
        .collect();
    1.96 * variance(&values).sqrt()
}

/// Grouped (delete-a-group) jackknife standard error of `statistic`.
/// `statistic` receives the retained items.
pub fn jackknife_se<F: Fn(&[f64]) -> f64>(xs: &[f64], groups: usize, statistic: F) -> f64 {
    let g = groups.clamp(2, xs.len().max(2));
    let bounds: Vec<usize> = (0..=g).map(|i| i * xs.len() / g).collect();
    let estimates: Vec<f64> = (0..g)
        .map(|i| {
            let kept: Vec<f64> = xs[..bounds[i]].iter().chain(&xs[bounds[i + 1]..]).copied().collect();
            statistic(&kept)
        })
        .collect();
    let gf = g as f64;
    ((gf - 1.0) * variance(&estimates)).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the continuous CDF `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Relative change of `y` across the window, from a least-squares line:
/// `|slope·(x_last − x_first)| / mean(y)`.
pub fn relative_trend(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let (slope, _) = ols(x, y);
    (slope * (x[x.len() - 1] - x[0])).abs() / mean(y).abs()
}
