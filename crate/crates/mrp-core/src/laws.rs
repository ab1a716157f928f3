//! Sojourn-time distribution families: pdf, cdf, hazard, moments and exact
//! sampling for Gamma, Weibull, Exponential and Gaussian-kernel empirical
//! laws. The empirical kernel is truncated at 0 and renormalized per kernel
//! so the density integrates to one on [0, inf).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_exponential, sample_gamma, sample_weibull, standard_normal};
use crate::special::{gamma, log_gamma, normal_cdf, normal_pdf, reg_lower_gamma, reg_upper_gamma};
use crate::stats;

/// A sojourn-time law on (0, inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum RenewalLaw {
    Gamma { shape: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    Empirical { samples: Vec<f64>, bandwidth: f64 },
}

impl RenewalLaw {
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::validation("shape", format!("must be > 0, got {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::validation("scale", format!("must be > 0, got {scale}")));
        }
        Ok(RenewalLaw::Gamma { shape, scale })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::validation("shape", format!("must be > 0, got {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::validation("scale", format!("must be > 0, got {scale}")));
        }
        Ok(RenewalLaw::Weibull { shape, scale })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::validation("rate", format!("must be > 0, got {rate}")));
        }
        Ok(RenewalLaw::Exponential { rate })
    }

    /// Empirical Gaussian-kernel law. Bandwidth defaults to Silverman's rule
    /// when `bandwidth` is None.
    pub fn empirical(samples: Vec<f64>, bandwidth: Option<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("samples", "empty sample"));
        }
        if samples.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::validation("samples", "all samples must be positive finite"));
        }
        let b = match bandwidth {
            Some(b) if b > 0.0 && b.is_finite() => b,
            Some(b) => {
                return Err(Error::validation("bandwidth", format!("must be > 0, got {b}")));
            }
            None => stats::silverman_bandwidth(&samples),
        };
        Ok(RenewalLaw::Empirical { samples, bandwidth: b })
    }

    /// Density at `t >= 0`. For Gamma with shape < 1 the density diverges at
    /// the origin; exactly t = 0 returns the +inf sentinel.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::domain(format!("pdf requires t >= 0, got {t}")));
        }
        Ok(match *self {
            RenewalLaw::Gamma { shape, scale } => {
                if t == 0.0 {
                    match shape.partial_cmp(&1.0).unwrap() {
                        std::cmp::Ordering::Less => f64::INFINITY,
                        std::cmp::Ordering::Equal => 1.0 / scale,
                        std::cmp::Ordering::Greater => 0.0,
                    }
                } else {
                    ((shape - 1.0) * t.ln() - t / scale - log_gamma(shape) - shape * scale.ln())
                        .exp()
                }
            }
            RenewalLaw::Weibull { shape, scale } => {
                if t == 0.0 {
                    match shape.partial_cmp(&1.0).unwrap() {
                        std::cmp::Ordering::Less => f64::INFINITY,
                        std::cmp::Ordering::Equal => 1.0 / scale,
                        std::cmp::Ordering::Greater => 0.0,
                    }
                } else {
                    let z = t / scale;
                    shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
                }
            }
            RenewalLaw::Exponential { rate } => rate * (-rate * t).exp(),
            RenewalLaw::Empirical { ref samples, bandwidth } => {
                let n = samples.len() as f64;
                samples
                    .iter()
                    .map(|&s| {
                        normal_pdf((t - s) / bandwidth) / bandwidth / normal_cdf(s / bandwidth)
                    })
                    .sum::<f64>()
                    / n
            }
        })
    }

    /// Distribution function F(t), `t >= 0`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::domain(format!("cdf requires t >= 0, got {t}")));
        }
        Ok(self.cdf_unchecked(t))
    }

    /// cdf with negative arguments mapped to 0 (internal hot path).
    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            RenewalLaw::Gamma { shape, scale } => reg_lower_gamma(shape, t / scale).unwrap(),
            RenewalLaw::Weibull { shape, scale } => -(-(t / scale).powf(shape)).exp_m1(),
            RenewalLaw::Exponential { rate } => -(-rate * t).exp_m1(),
            RenewalLaw::Empirical { ref samples, bandwidth } => {
                let n = samples.len() as f64;
                samples
                    .iter()
                    .map(|&s| {
                        let lo = normal_cdf(-s / bandwidth);
                        (normal_cdf((t - s) / bandwidth) - lo) / (1.0 - lo)
                    })
                    .sum::<f64>()
                    / n
            }
        }
    }

    /// Survival 1 - F(t), computed in the tail-stable branch where available.
    pub fn survival(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::domain(format!("survival requires t >= 0, got {t}")));
        }
        Ok(match *self {
            RenewalLaw::Gamma { shape, scale } => reg_upper_gamma(shape, t / scale)?,
            RenewalLaw::Weibull { shape, scale } => (-(t / scale).powf(shape)).exp(),
            RenewalLaw::Exponential { rate } => (-rate * t).exp(),
            RenewalLaw::Empirical { .. } => 1.0 - self.cdf_unchecked(t),
        })
    }

    /// Hazard rate f(t) / (1 - F(t)). Errors with `Saturation` where the
    /// survival has numerically vanished.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        let s = self.survival(t)?;
        if s <= 0.0 {
            return Err(Error::Saturation(format!("survival underflow at t = {t}")));
        }
        Ok(self.pdf(t)? / s)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RenewalLaw::Gamma { shape, scale } => shape * scale,
            RenewalLaw::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            RenewalLaw::Exponential { rate } => 1.0 / rate,
            RenewalLaw::Empirical { ref samples, .. } => stats::mean(samples),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            RenewalLaw::Gamma { shape, scale } => shape * scale * scale,
            RenewalLaw::Weibull { shape, scale } => {
                let g1 = gamma(1.0 + 1.0 / shape);
                scale * scale * (gamma(1.0 + 2.0 / shape) - g1 * g1)
            }
            RenewalLaw::Exponential { rate } => 1.0 / (rate * rate),
            RenewalLaw::Empirical { ref samples, .. } => stats::sample_variance(samples),
        }
    }

    /// Partial first moment int_0^t u dF(u); exact per family. Used by the
    /// stationary-delay integral D(t) = (t - t F(t) + M1(t)) / mean.
    pub fn partial_moment1(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            RenewalLaw::Gamma { shape, scale } => {
                shape * scale * reg_lower_gamma(shape + 1.0, t / scale).unwrap()
            }
            RenewalLaw::Weibull { shape, scale } => {
                let a = 1.0 + 1.0 / shape;
                scale * gamma(a) * reg_lower_gamma(a, (t / scale).powf(shape)).unwrap()
            }
            RenewalLaw::Exponential { rate } => {
                let x = rate * t;
                (1.0 - (-x).exp() * (1.0 + x)) / rate
            }
            RenewalLaw::Empirical { ref samples, bandwidth } => {
                let b = bandwidth;
                let n = samples.len() as f64;
                samples
                    .iter()
                    .map(|&s| {
                        // int_0^t u phi_b(u-s) du, renormalized to the positive mass
                        let zlo = -s / b;
                        let zhi = (t - s) / b;
                        let m = s * (normal_cdf(zhi) - normal_cdf(zlo))
                            - b * (normal_pdf(zhi) - normal_pdf(zlo));
                        m / (1.0 - normal_cdf(zlo))
                    })
                    .sum::<f64>()
                    / n
            }
        }
    }

    /// Draw one sojourn.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RenewalLaw::Gamma { shape, scale } => sample_gamma(rng, shape, scale),
            RenewalLaw::Weibull { shape, scale } => sample_weibull(rng, shape, scale),
            RenewalLaw::Exponential { rate } => sample_exponential(rng, rate),
            RenewalLaw::Empirical { ref samples, bandwidth } => loop {
                let k = rng.gen_range(0..samples.len());
                let x = samples[k] + bandwidth * standard_normal(rng);
                if x >= 0.0 {
                    return x;
                }
            },
        }
    }

    /// Quantile by bisection on the cdf.
    pub fn inverse_cdf(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain(format!("inverse_cdf requires p in [0,1), got {p}")));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.mean().max(1e-12);
        while self.cdf_unchecked(hi) < p {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::numerical("inverse_cdf bracketing diverged"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_unchecked(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// For Gamma-family laws, the (shape, scale) pair under which the n-fold
    /// convolution is again Gamma (Exponential(rate) is Gamma(1, 1/rate)).
    pub fn as_gamma(&self) -> Option<(f64, f64)> {
        match *self {
            RenewalLaw::Gamma { shape, scale } => Some((shape, scale)),
            RenewalLaw::Exponential { rate } => Some((1.0, 1.0 / rate)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::stats::{ks_critical_1pct, ks_statistic};
    use approx::assert_relative_eq;

    #[test]
    fn exponential_pdf_at_zero() {
        let law = RenewalLaw::exponential(2.0).unwrap();
        assert_relative_eq!(law.pdf(0.0).unwrap(), 2.0);
    }

    #[test]
    fn gamma_shape_one_equals_exponential() {
        let g = RenewalLaw::gamma(1.0, 0.5).unwrap();
        let e = RenewalLaw::exponential(2.0).unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.1;
            assert_relative_eq!(g.pdf(t).unwrap(), e.pdf(t).unwrap(), max_relative = 1e-10);
            assert_relative_eq!(g.cdf(t).unwrap(), e.cdf(t).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn gamma_pdf_consistent_with_cdf_derivative() {
        // Table 2 trend-law parameters; centered difference of the cdf
        let law = RenewalLaw::gamma(0.276225, 2397.219).unwrap();
        let t = 100.0;
        let h = 1e-3;
        let fd = (law.cdf(t + h).unwrap() - law.cdf(t - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(law.pdf(t).unwrap(), fd, max_relative = 1e-8);
    }

    #[test]
    fn cdf_values() {
        for law in [
            RenewalLaw::gamma(2.0, 1.0).unwrap(),
            RenewalLaw::weibull(1.5, 2.0).unwrap(),
            RenewalLaw::exponential(0.7).unwrap(),
            RenewalLaw::empirical(vec![1.0, 2.0, 3.0], Some(0.5)).unwrap(),
        ] {
            assert_eq!(law.cdf(0.0).unwrap(), 0.0);
        }
        let e = RenewalLaw::exponential(0.7).unwrap();
        assert_relative_eq!(e.cdf(2.0).unwrap(), 1.0 - (-1.4f64).exp(), max_relative = 1e-12);
        // Gamma(2,1) at t=2: 1 - 3 e^{-2}
        let g = RenewalLaw::gamma(2.0, 1.0).unwrap();
        assert_relative_eq!(g.cdf(2.0).unwrap(), 1.0 - 3.0 * (-2.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn sampling_mean_exponential() {
        let law = RenewalLaw::exponential(1.0).unwrap();
        let mut rng = substream(5, 0);
        let n = 1_000_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += law.sample(&mut rng);
        }
        let m = s / n as f64;
        assert!((m - 1.0).abs() < 0.004, "mean {m}");
    }

    #[test]
    fn sampling_mean_table2_gamma() {
        let law = RenewalLaw::gamma(0.07132677, 1561.593).unwrap();
        let mut rng = substream(6, 0);
        let n = 500_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += law.sample(&mut rng);
        }
        let m = s / n as f64;
        let want = law.mean();
        assert!((m / want - 1.0).abs() < 0.02, "mean {m} want {want}");
    }

    #[test]
    fn weibull_shape_one_matches_exponential_ks() {
        let w = RenewalLaw::weibull(1.0, 2.0).unwrap();
        let e = RenewalLaw::exponential(0.5).unwrap();
        let mut rng = substream(7, 0);
        let sample: Vec<f64> = (0..100_000).map(|_| w.sample(&mut rng)).collect();
        let d = ks_statistic(&sample, |t| e.cdf_unchecked(t));
        assert!(d < ks_critical_1pct(sample.len()), "KS {d}");
    }

    #[test]
    fn sampling_ks_every_family() {
        let laws = [
            RenewalLaw::gamma(0.276225, 2397.219).unwrap(),
            RenewalLaw::gamma(2.0, 1.0).unwrap(),
            RenewalLaw::weibull(1.7, 3.0).unwrap(),
            RenewalLaw::exponential(0.25).unwrap(),
            RenewalLaw::empirical(vec![0.5, 1.0, 1.5, 2.5, 4.0], Some(0.4)).unwrap(),
        ];
        for (i, law) in laws.iter().enumerate() {
            let mut rng = substream(100 + i as u64, 0);
            let sample: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
            let d = ks_statistic(&sample, |t| law.cdf_unchecked(t));
            assert!(
                d < ks_critical_1pct(sample.len()),
                "law {i}: KS {d} over critical"
            );
        }
    }

    #[test]
    fn hazard_shapes() {
        // exponential: constant
        let e = RenewalLaw::exponential(0.8).unwrap();
        for t in [0.0, 1.0, 5.0, 20.0] {
            assert_relative_eq!(e.hazard(t).unwrap(), 0.8, max_relative = 1e-12);
        }
        // Gamma with shape < 1: decreasing (volatility clustering signature)
        let g = RenewalLaw::gamma(0.276225, 2397.219).unwrap();
        assert!(g.hazard(10.0).unwrap() > g.hazard(1000.0).unwrap());
        // Gamma with shape > 1: increasing on [0, 5]
        let g2 = RenewalLaw::gamma(2.0, 1.0).unwrap();
        let mut prev = g2.hazard(0.0).unwrap();
        for i in 1..=50 {
            let h = g2.hazard(i as f64 * 0.1).unwrap();
            assert!(h >= prev, "hazard not increasing at {i}");
            prev = h;
        }
    }

    #[test]
    fn hazard_monotone_decreasing_small_shape_grid() {
        let g = RenewalLaw::gamma(0.07132677, 1561.593).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=200 {
            let h = g.hazard(i as f64 * 5.0).unwrap();
            assert!(h <= prev);
            prev = h;
        }
    }

    #[test]
    fn moments() {
        let g = RenewalLaw::gamma(0.276225, 2397.219).unwrap();
        assert_relative_eq!(g.mean(), 662.17132, max_relative = 1e-6);
        let e = RenewalLaw::exponential(4.0).unwrap();
        assert_relative_eq!(e.mean(), 0.25);
        let w = RenewalLaw::weibull(1.0, 3.0).unwrap();
        assert_relative_eq!(w.mean(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn moments_match_monte_carlo() {
        let laws = [
            RenewalLaw::gamma(0.5, 2.0).unwrap(),
            RenewalLaw::weibull(2.0, 1.5).unwrap(),
        ];
        for (i, law) in laws.iter().enumerate() {
            let mut rng = substream(200 + i as u64, 0);
            let n = 1_000_000usize;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = law.sample(&mut rng);
                s += x;
                s2 += x * x;
            }
            let m = s / n as f64;
            let v = s2 / n as f64 - m * m;
            let se_mean = (law.variance() / n as f64).sqrt();
            assert!((m - law.mean()).abs() < 3.0 * se_mean, "law {i} mean");
            assert!((v / law.variance() - 1.0).abs() < 0.02, "law {i} var");
        }
    }

    #[test]
    fn empirical_kernel_truncated_cdf() {
        let law = RenewalLaw::empirical(vec![0.2, 0.4], Some(0.3)).unwrap();
        assert_eq!(law.cdf(0.0).unwrap(), 0.0);
        // integrates to ~1 on a long grid
        let mut acc = 0.0;
        let dt = 1e-3;
        let mut t = 0.0;
        while t < 6.0 {
            acc += law.pdf(t + 0.5 * dt).unwrap() * dt;
            t += dt;
        }
        assert!((acc - 1.0).abs() < 1e-6, "mass {acc}");
    }

    #[test]
    fn partial_moment_consistency() {
        // M1(inf) = mean
        for law in [
            RenewalLaw::gamma(1.7, 2.0).unwrap(),
            RenewalLaw::weibull(1.3, 0.8).unwrap(),
            RenewalLaw::exponential(0.6).unwrap(),
            RenewalLaw::empirical(vec![0.5, 1.5, 2.0], Some(0.2)).unwrap(),
        ] {
            let big = law.mean() + 60.0 * law.variance().sqrt();
            assert_relative_eq!(law.partial_moment1(big), law.mean(), max_relative = 1e-6);
        }
    }

    #[test]
    fn domain_errors() {
        let g = RenewalLaw::gamma(2.0, 1.0).unwrap();
        assert!(g.pdf(-1.0).is_err());
        assert!(g.cdf(-0.1).is_err());
        assert!(RenewalLaw::gamma(0.0, 1.0).is_err());
        assert!(RenewalLaw::exponential(-2.0).is_err());
        assert!(RenewalLaw::empirical(vec![], None).is_err());
        assert!(RenewalLaw::empirical(vec![1.0, -2.0], None).is_err());
    }
}
