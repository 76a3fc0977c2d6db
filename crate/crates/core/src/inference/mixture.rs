//! Moments and quantiles of finite Gaussian mixtures.

use statrs::function::erf::erfc;

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Mean and variance of `Σ wₖ N(mₖ, vₖ)` (weights summing to one).
pub(crate) fn moments(weights: &[f64], means: &[f64], vars: &[f64]) -> (f64, f64) {
    let mean: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
    let second: f64 = weights
        .iter()
        .zip(means.iter().zip(vars))
        .map(|(w, (m, v))| w * (v + (m - mean) * (m - mean)))
        .sum();
    (mean, second.max(0.0))
}

/// `q`-quantile of the mixture by bisection on its distribution function.
pub(crate) fn quantile(weights: &[f64], means: &[f64], sds: &[f64], q: f64) -> f64 {
    let cdf = |t: f64| -> f64 {
        weights
            .iter()
            .zip(means.iter().zip(sds))
            .map(|(w, (m, s))| {
                let p = if *s > 0.0 {
                    normal_cdf((t - m) / s)
                } else if t >= *m {
                    1.0
                } else {
                    0.0
                };
                w * p
            })
            .sum()
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (m, s) in means.iter().zip(sds) {
        lo = lo.min(m - 9.0 * s);
        hi = hi.max(m + 9.0 * s);
    }
    if !(lo < hi) {
        return lo;
    }
    let width = hi - lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * width {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_component_quantiles() {
        let q = quantile(&[1.0], &[2.0], &[3.0], 0.975);
        assert_abs_diff_eq!(q, 2.0 + 3.0 * 1.959963984540054, epsilon = 1e-9);
        assert_abs_diff_eq!(quantile(&[1.0], &[2.0], &[3.0], 0.5), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn law_of_total_variance() {
        let (m, v) = moments(&[0.25, 0.75], &[0.0, 4.0], &[1.0, 2.0]);
        assert_abs_diff_eq!(m, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.25 * (1.0 + 9.0) + 0.75 * (2.0 + 1.0), epsilon = 1e-14);
    }

    #[test]
    fn degenerate_components() {
        assert_eq!(quantile(&[1.0], &[1.5], &[0.0], 0.3), 1.5);
        let q = quantile(&[0.5, 0.5], &[0.0, 10.0], &[0.0, 0.0], 0.75);
        assert!((q - 10.0).abs() < 1e-9);
    }
}
