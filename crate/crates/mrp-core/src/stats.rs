//! Shared statistical utilities: sample moments, quantiles, the one-sample
//! Kolmogorov-Smirnov statistic and the Anderson-Darling normality test.

use crate::error::{Error, Result};
use crate::special::normal_cdf;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n-1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Population-style variance (n denominator), as used by the moment-matching
/// Gamma estimator.
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Type-7 (linear interpolation) quantile of a sorted slice, q in [0,1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One-sample KS statistic D_n = sup |F_emp - F| against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Asymptotic 1%-level KS critical value, 1.63/sqrt(n).
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Anderson-Darling normality test with estimated mean and variance
/// (case 3). Returns the size-adjusted statistic A*^2 and an approximate
/// p-value (D'Agostino-Stephens).
pub fn anderson_darling_normal(sample: &[f64]) -> Result<(f64, f64)> {
    let n = sample.len();
    if n < 8 {
        return Err(Error::InsufficientData { needed: 8, got: n });
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = mean(&xs);
    let sd = sample_variance(&xs).sqrt();
    if sd == 0.0 {
        return Err(Error::domain("zero variance sample"));
    }
    let nf = n as f64;
    let mut a2 = -nf;
    for i in 0..n {
        let zi = normal_cdf((xs[i] - m) / sd).clamp(1e-300, 1.0 - 1e-16);
        let zrev = normal_cdf((xs[n - 1 - i] - m) / sd).clamp(1e-300, 1.0 - 1e-16);
        a2 -= (2.0 * i as f64 + 1.0) / nf * (zi.ln() + (1.0 - zrev).ln());
    }
    let a2s = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a2s >= 0.6 {
        (1.2937 - 5.709 * a2s + 0.0186 * a2s * a2s).exp()
    } else if a2s > 0.34 {
        (0.9177 - 4.279 * a2s - 1.38 * a2s * a2s).exp()
    } else if a2s > 0.2 {
        1.0 - (-8.318 + 42.796 * a2s - 59.938 * a2s * a2s).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a2s - 223.73 * a2s * a2s).exp()
    };
    Ok((a2s, p.clamp(0.0, 1.0)))
}

/// 1%-level critical value for the case-3 adjusted AD statistic.
pub const AD_CRITICAL_1PCT: f64 = 1.035;

/// Silverman's rule-of-thumb bandwidth 0.9 * min(sd, IQR/1.34) * n^{-1/5}.
pub fn silverman_bandwidth(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sd = sample_variance(&xs).sqrt();
    let iqr = quantile_sorted(&xs, 0.75) - quantile_sorted(&xs, 0.25);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let b = 0.9 * scale * (xs.len() as f64).powf(-0.2);
    if b > 0.0 {
        b
    } else {
        1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, substream};
    use approx::assert_relative_eq;

    #[test]
    fn ks_of_exact_uniform_sample_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12, "d = {d}");
    }

    #[test]
    fn anderson_darling_accepts_normal_rejects_uniform() {
        let mut rng = substream(42, 0);
        let norm: Vec<f64> = (0..5000).map(|_| standard_normal(&mut rng)).collect();
        let (a2, p) = anderson_darling_normal(&norm).unwrap();
        assert!(a2 < AD_CRITICAL_1PCT, "a2 = {a2}");
        assert!(p > 0.01);

        let unif: Vec<f64> = (0..5000).map(|i| i as f64 / 5000.0).collect();
        let (a2u, pu) = anderson_darling_normal(&unif).unwrap();
        assert!(a2u > AD_CRITICAL_1PCT, "a2 = {a2u}");
        assert!(pu < 0.01);
    }

    #[test]
    fn quantiles_and_variance() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_relative_eq!(sample_variance(&xs), 5.0 / 3.0);
        assert_relative_eq!(population_variance(&xs), 1.25);
    }

    #[test]
    fn silverman_formula_pinned() {
        // explicit check of 0.9 * min(sd, IQR/1.34) * n^{-1/5}
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sd = sample_variance(&xs).sqrt();
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let want = 0.9 * sd.min(iqr / 1.34) * 100f64.powf(-0.2);
        assert_relative_eq!(silverman_bandwidth(&xs), want, max_relative = 1e-12);
    }
}
