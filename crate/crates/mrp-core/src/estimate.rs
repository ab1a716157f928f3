//! Statistical estimation from tick data: ingestion, the alpha and
//! jump-size estimators, Gamma fitting (MLE and moment matching), and
//! nonparametric histogram/kernel estimators of densities, marked hazards
//! and jump intensities.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::laws::RenewalLaw;
use crate::model::MrpModel;
use crate::special::{digamma, normal_pdf, trigamma};
use crate::stats;

/// Validated tick observations: strictly increasing times, integer prices,
/// consecutive prices distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub times: Vec<f64>,
    pub prices: Vec<i64>,
    /// zero-increment rows dropped during ingestion
    pub dropped_zero_increments: usize,
}

impl TickSeries {
    /// Build from parallel vectors (times strictly increasing, no zero
    /// increments — `ingest_ticks` performs the cleaning).
    pub fn new(times: Vec<f64>, prices: Vec<i64>) -> Result<Self> {
        if times.len() != prices.len() {
            return Err(Error::validation("ticks", "times/prices length mismatch"));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: times.len() });
        }
        for k in 1..times.len() {
            if times[k] <= times[k - 1] {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: format!("non-increasing timestamp {} after {}", times[k], times[k - 1]),
                });
            }
            if prices[k] == prices[k - 1] {
                return Err(Error::validation("prices", "zero increment"));
            }
        }
        Ok(TickSeries { times, prices, dropped_zero_increments: 0 })
    }

    /// Marks J_k = P_k - P_{k-1}, one per tick after the first.
    pub fn marks(&self) -> Vec<i64> {
        self.prices.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Sojourns S_k = T_k - T_{k-1} aligned with `marks`.
    pub fn sojourns(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn duration(&self) -> f64 {
        self.times.last().unwrap() - self.times[0]
    }

    pub fn max_abs_mark(&self) -> i64 {
        self.marks().iter().map(|m| m.abs()).max().unwrap_or(0)
    }

    /// Tick series of a simulated path (the t = 0 anchor row plus one tick
    /// per jump).
    pub fn from_path(path: &crate::simulate::PricePath) -> Result<Self> {
        let mut times = vec![0.0];
        let mut prices = vec![path.p0];
        let mut price = path.p0;
        for (t, m) in path.jump_times.iter().zip(&path.marks) {
            price += m.value() as i64;
            times.push(*t);
            prices.push(price);
        }
        TickSeries::new(times, prices)
    }
}

/// Parse a two-column `time,price` CSV (header optional). Zero-increment
/// rows are dropped and counted; non-monotone timestamps or |increment|
/// above `m_max` are hard errors naming the line.
pub fn ingest_ticks<R: BufRead>(reader: R, m_max: i64) -> Result<TickSeries> {
    let mut times: Vec<f64> = Vec::new();
    let mut prices: Vec<i64> = Vec::new();
    let mut dropped = 0usize;
    for (ln0, line) in reader.lines().enumerate() {
        let line = line?;
        let ln = ln0 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let (a, b) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::Parse { line: ln, msg: "expected two columns".into() });
            }
        };
        let t: f64 = match a.parse() {
            Ok(v) => v,
            Err(e) => {
                if ln == 1 {
                    continue; // header row
                }
                return Err(Error::Parse { line: ln, msg: format!("bad time {a:?}: {e}") });
            }
        };
        let p: i64 = b
            .parse()
            .map_err(|e| Error::Parse { line: ln, msg: format!("bad price {b:?}: {e}") })?;
        if let Some(&last_t) = times.last() {
            if t <= last_t {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("timestamp {t} not strictly after {last_t}"),
                });
            }
            let last_p = *prices.last().unwrap();
            if p == last_p {
                dropped += 1;
                continue;
            }
            if (p - last_p).abs() > m_max {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("increment {} exceeds m_max {m_max}", p - last_p),
                });
            }
        }
        times.push(t);
        prices.push(p);
    }
    if times.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: times.len() });
    }
    let mut series = TickSeries::new(times, prices)?;
    series.dropped_zero_increments = dropped;
    Ok(series)
}

/// alpha_hat = (1/n) sum sign(J_k) sign(J_{k-1}), stderr = 1/sqrt(n) (the
/// CLT variance of the estimator is exactly 1/n).
pub fn estimate_alpha(series: &TickSeries) -> Result<(f64, f64)> {
    let marks = series.marks();
    if marks.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: marks.len() });
    }
    let n = marks.len() - 1;
    let s: i64 = marks.windows(2).map(|w| (w[0].signum() * w[1].signum()) as i64).sum();
    Ok((s as f64 / n as f64, 1.0 / (n as f64).sqrt()))
}

/// Empirical frequencies p_hat_i = (1/n) #\{|J_k| = i\}, i = 1..m.
pub fn estimate_size_probs(series: &TickSeries, m: usize) -> Result<Vec<f64>> {
    let marks = series.marks();
    if marks.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let maxsz = series.max_abs_mark() as usize;
    if m < maxsz {
        return Err(Error::validation(
            "m",
            format!("must cover the largest observed |mark| {maxsz}"),
        ));
    }
    let mut counts = vec![0usize; m];
    for mk in &marks {
        counts[mk.unsigned_abs() as usize - 1] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64 / marks.len() as f64).collect())
}

/// Subsampling mode for the sojourn partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsampleMode {
    /// One sample per ordered mark pair (i, j).
    PerPair,
    /// Two samples: sign(J_{k-1} J_k) = +1 (trend) and -1 (mean-reverting).
    PerSign,
}

/// The i.i.d. sojourn subsamples of the tick series.
#[derive(Debug, Clone)]
pub struct SubsampleIndex {
    pub mode: SubsampleMode,
    /// PerPair: keyed by (from, to) mark values; PerSign: keys (1,1)/(1,-1)
    /// stand for the trend/mean-reverting classes.
    pub groups: BTreeMap<(i32, i32), Vec<f64>>,
    /// counts n_i of transitions leaving each mark value
    pub from_counts: BTreeMap<i32, usize>,
    /// all sojourns that enter any group, in order
    pub pooled: Vec<f64>,
}

impl SubsampleIndex {
    pub fn count(&self, key: (i32, i32)) -> usize {
        self.groups.get(&key).map_or(0, Vec::len)
    }

    pub fn n_total(&self) -> usize {
        self.pooled.len()
    }
}

/// Partition the sojourns: S_k joins group (J_{k-1}, J_k) (or its sign
/// class). Only transitions with a known previous mark enter, so the first
/// sojourn is excluded.
pub fn build_subsamples(series: &TickSeries, mode: SubsampleMode) -> Result<SubsampleIndex> {
    let marks = series.marks();
    let sojourns = series.sojourns();
    if marks.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: marks.len() });
    }
    let mut groups: BTreeMap<(i32, i32), Vec<f64>> = BTreeMap::new();
    let mut from_counts: BTreeMap<i32, usize> = BTreeMap::new();
    let mut pooled = Vec::with_capacity(marks.len() - 1);
    for k in 1..marks.len() {
        let from = marks[k - 1] as i32;
        let to = marks[k] as i32;
        let s = sojourns[k];
        let key = match mode {
            SubsampleMode::PerPair => (from, to),
            SubsampleMode::PerSign => {
                if from.signum() == to.signum() {
                    (1, 1)
                } else {
                    (1, -1)
                }
            }
        };
        groups.entry(key).or_default().push(s);
        *from_counts
            .entry(match mode {
                SubsampleMode::PerPair => from,
                SubsampleMode::PerSign => 1,
            })
            .or_default() += 1;
        pooled.push(s);
    }
    Ok(SubsampleIndex { mode, groups, from_counts, pooled })
}

/// Gamma MLE: solve ln(b) - digamma(b) = ln(mean) - mean(ln S) by
/// safeguarded Newton inside the bracket [1e-6, 1e6]; scale = mean / shape.
pub fn fit_gamma_mle(sojourns: &[f64]) -> Result<(f64, f64)> {
    let n = sojourns.len();
    if n < 10 {
        return Err(Error::InsufficientData { needed: 10, got: n });
    }
    if sojourns.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::domain("sojourns must be positive"));
    }
    let mean = stats::mean(sojourns);
    let mean_ln = sojourns.iter().map(|s| s.ln()).sum::<f64>() / n as f64;
    let delta = mean.ln() - mean_ln; // > 0 unless the sample is constant
    if !(delta > 1e-12) {
        return Err(Error::numerical(format!(
            "degenerate sample: ln(mean) - mean(ln) = {delta:.3e} (constant data?)"
        )));
    }
    // g(b) = ln b - digamma(b) is strictly decreasing from +inf to 0
    let (mut lo, mut hi) = (1e-6, 1e6);
    let g = |b: f64| -> Result<f64> { Ok(b.ln() - digamma(b)?) };
    if g(lo)? < delta || g(hi)? > delta {
        return Err(Error::numerical(format!(
            "MLE shape outside bracket [1e-6, 1e6] (target {delta:.3e})"
        )));
    }
    let mut b = (0.5 / delta).clamp(lo, hi); // standard starting guess
    for _ in 0..200 {
        let r = g(b)? - delta;
        if r.abs() < 1e-12 {
            break;
        }
        // keep the bisection bracket current
        if r > 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        let deriv = 1.0 / b - trigamma(b)?; // negative
        let mut next = b - r / deriv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        b = next;
    }
    let resid = (g(b)? - delta).abs();
    if resid > 1e-10 {
        return Err(Error::numerical(format!(
            "MLE Newton did not converge: residual {resid:.3e}, bracket [{lo:.6e}, {hi:.6e}]"
        )));
    }
    Ok((b, mean / b))
}

/// Gamma moment matching: shape = n S_bar^2 / sum (S - S_bar)^2,
/// 1/scale = n S_bar / sum (S - S_bar)^2.
pub fn fit_gamma_moments(sojourns: &[f64]) -> Result<(f64, f64)> {
    let n = sojourns.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = stats::mean(sojourns);
    let ss: f64 = sojourns.iter().map(|s| (s - mean) * (s - mean)).sum();
    if !(ss > 0.0) {
        return Err(Error::numerical("zero sample variance"));
    }
    let shape = n as f64 * mean * mean / ss;
    let scale = ss / (n as f64 * mean);
    Ok((shape, scale))
}

/// Histogram density over explicit breaks; bins may have unequal widths.
/// Mass beyond the last break is excluded and reported.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub breaks: Vec<f64>,
    /// density value on [breaks[r], breaks[r+1])
    pub density: Vec<f64>,
    /// fraction of the sample beyond the last break
    pub excluded_fraction: f64,
}

impl Histogram {
    /// integral of the histogram (should be <= 1)
    pub fn total_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }
}

pub fn histogram_density(sojourns: &[f64], breaks: &[f64]) -> Result<Histogram> {
    if breaks.len() < 2 {
        return Err(Error::validation("breaks", "need at least two breaks"));
    }
    if breaks[0] != 0.0 {
        return Err(Error::validation("breaks", "must start at 0"));
    }
    if breaks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("breaks", "must be strictly increasing"));
    }
    if sojourns.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n = sojourns.len() as f64;
    let mut counts = vec![0usize; breaks.len() - 1];
    let mut excluded = 0usize;
    for &s in sojourns {
        // bin r covers [breaks[r], breaks[r+1])
        let r = breaks.partition_point(|&b| b <= s);
        if r == 0 {
            excluded += 1; // negative value; cannot happen for sojourns
        } else if r < breaks.len() {
            counts[r - 1] += 1;
        } else {
            excluded += 1;
        }
    }
    let density = counts
        .iter()
        .zip(breaks.windows(2))
        .map(|(&c, w)| c as f64 / n / (w[1] - w[0]))
        .collect();
    Ok(Histogram { breaks: breaks.to_vec(), density, excluded_fraction: excluded as f64 / n })
}

/// Gaussian-kernel density estimate on a uniform grid, truncated at 0 and
/// renormalized per kernel (integrates to 1 on [0, inf)). `bandwidth` None
/// selects Silverman's rule.
pub fn kernel_density(
    sojourns: &[f64],
    bandwidth: Option<f64>,
    grid: &GridSpec,
) -> Result<GridFunction> {
    if sojourns.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: sojourns.len() });
    }
    let law = RenewalLaw::empirical(sojourns.to_vec(), bandwidth)?;
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        values.push(law.pdf(i as f64 * grid.dt)?);
    }
    GridFunction::new(grid.dt, values)
}

/// Target of a hazard-curve estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HazardTarget {
    /// marked hazard h_ij for the ordered mark pair
    Pair(i32, i32),
    /// trend (+1) or mean-reverting (-1) class
    Sign(i32),
}

/// Kernel estimate of the marked hazard
/// h(t) = sum_{k in target} K_b(t - S_k) / #{k in denom : S_k >= t},
/// with the grid clipped at the 99th percentile of the pooled sample.
/// Returns (hazard, intensity) where intensity = hazard * n_denom/n_target
/// (the exact factorization h = q_hat * lambda_hat).
pub fn kernel_hazard(
    index: &SubsampleIndex,
    target: HazardTarget,
    bandwidth: Option<f64>,
    grid: &GridSpec,
) -> Result<(GridFunction, GridFunction)> {
    let (group, denom): (&Vec<f64>, Vec<f64>) = match (index.mode, target) {
        (SubsampleMode::PerPair, HazardTarget::Pair(i, j)) => {
            let g = index
                .groups
                .get(&(i, j))
                .ok_or_else(|| Error::validation("target", format!("no data for pair ({i},{j})")))?;
            // denominator: all sojourns leaving mark i
            let denom: Vec<f64> = index
                .groups
                .iter()
                .filter(|((from, _), _)| *from == i)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            (g, denom)
        }
        (SubsampleMode::PerSign, HazardTarget::Sign(s)) => {
            let key = if s > 0 { (1, 1) } else { (1, -1) };
            let g = index
                .groups
                .get(&key)
                .ok_or_else(|| Error::validation("target", "no data for sign class"))?;
            (g, index.pooled.clone())
        }
        _ => {
            return Err(Error::validation(
                "target",
                "target kind must match the subsample mode",
            ));
        }
    };
    if group.is_empty() || denom.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let b = match bandwidth {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(Error::validation("bandwidth", format!("must be > 0, got {b}"))),
        None => stats::silverman_bandwidth(group),
    };
    // clip the grid at the 99th percentile of the pooled sample
    let mut sorted = denom.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cap = stats::quantile_sorted(&sorted, 0.99);
    let t_max = grid.t_max.min(cap);
    if grid.t_max > cap {
        log::warn!(
            "hazard grid clipped from {} to the 99th percentile {}",
            grid.t_max,
            cap
        );
    }
    let n_pts = (t_max / grid.dt).floor() as usize + 1;
    let mut hazard = Vec::with_capacity(n_pts);
    for idx in 0..n_pts {
        let t = idx as f64 * grid.dt;
        let at_risk = denom.iter().filter(|&&s| s >= t).count();
        if at_risk == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let num: f64 = group.iter().map(|&s| normal_pdf((t - s) / b) / b).sum();
        hazard.push(num / at_risk as f64);
    }
    let factor = denom.len() as f64 / group.len() as f64;
    let intensity: Vec<f64> = hazard.iter().map(|h| h * factor).collect();
    Ok((
        GridFunction::new(grid.dt, hazard)?,
        GridFunction::new(grid.dt, intensity)?,
    ))
}

/// Which parametric estimator drives the fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Mle,
    Moments,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
    pub n: usize,
    /// KS distance of the subsample against the fitted law
    pub ks: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairFitReport {
    pub from: i32,
    pub to: i32,
    pub mle: Option<GammaFit>,
    pub moments: Option<GammaFit>,
}

/// Full estimation output.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub n_marks: usize,
    pub dropped_zero_increments: usize,
    pub alpha_hat: f64,
    pub alpha_stderr: f64,
    pub p_hat: Vec<f64>,
    pub p_stderr: Vec<f64>,
    pub trend: PairFitReport,
    pub mean_reverting: PairFitReport,
    pub per_pair: Vec<PairFitReport>,
    pub estimator: EstimatorChoice,
}

/// Configuration of `fit_model`.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub estimator: EstimatorChoice,
    /// refuse to fit with fewer total transitions
    pub min_transitions: usize,
    /// maximum |mark| accepted at ingestion
    pub m: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { estimator: EstimatorChoice::Mle, min_transitions: 50, m: None }
    }
}

fn fit_group(sojourns: &[f64]) -> PairFitReport {
    let fit = |res: Result<(f64, f64)>| -> Option<GammaFit> {
        res.ok().map(|(shape, scale)| {
            let law = RenewalLaw::Gamma { shape, scale };
            let ks = stats::ks_statistic(sojourns, |t| law.cdf_unchecked(t));
            GammaFit { shape, scale, n: sojourns.len(), ks }
        })
    };
    PairFitReport {
        from: 0,
        to: 0,
        mle: fit(fit_gamma_mle(sojourns)),
        moments: fit(fit_gamma_moments(sojourns)),
    }
}

/// Assemble a symmetric model from alpha_hat, p_hat and the per-sign Gamma
/// fits, with diagnostics.
pub fn fit_model(series: &TickSeries, config: &FitConfig) -> Result<(MrpModel, FitReport)> {
    let marks = series.marks();
    if marks.len() < config.min_transitions {
        return Err(Error::InsufficientData { needed: config.min_transitions, got: marks.len() });
    }
    let (alpha_hat, alpha_stderr) = estimate_alpha(series)?;
    let m = config.m.unwrap_or(series.max_abs_mark() as usize);
    let p_hat = estimate_size_probs(series, m)?;
    let n = marks.len() as f64;
    let p_stderr: Vec<f64> = p_hat.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();

    let by_sign = build_subsamples(series, SubsampleMode::PerSign)?;
    let trend_s = by_sign.groups.get(&(1, 1)).cloned().unwrap_or_default();
    let rev_s = by_sign.groups.get(&(1, -1)).cloned().unwrap_or_default();
    let mut trend = fit_group(&trend_s);
    trend.from = 1;
    trend.to = 1;
    let mut mean_reverting = fit_group(&rev_s);
    mean_reverting.from = 1;
    mean_reverting.to = -1;

    let by_pair = build_subsamples(series, SubsampleMode::PerPair)?;
    let mut per_pair = Vec::new();
    for (&(from, to), sample) in &by_pair.groups {
        let mut rep = fit_group(sample);
        rep.from = from;
        rep.to = to;
        per_pair.push(rep);
    }

    let pick = |rep: &PairFitReport| -> Result<(f64, f64)> {
        let fit = match config.estimator {
            EstimatorChoice::Mle => rep.mle.as_ref().or(rep.moments.as_ref()),
            EstimatorChoice::Moments => rep.moments.as_ref().or(rep.mle.as_ref()),
        };
        fit.map(|f| (f.shape, f.scale))
            .ok_or_else(|| Error::numerical("no usable Gamma fit for a sign class"))
    };
    let (bp, tp) = pick(&trend)?;
    let (bm, tm) = pick(&mean_reverting)?;

    // alpha_hat can graze the boundary on pathological inputs
    let alpha_model = alpha_hat.clamp(-1.0, 1.0 - 1e-9);
    let model = MrpModel::symmetric(
        alpha_model,
        renormalize(&p_hat),
        RenewalLaw::gamma(bp, tp)?,
        RenewalLaw::gamma(bm, tm)?,
    )?;
    let report = FitReport {
        n_marks: marks.len(),
        dropped_zero_increments: series.dropped_zero_increments,
        alpha_hat,
        alpha_stderr,
        p_hat,
        p_stderr,
        trend,
        mean_reverting,
        per_pair,
        estimator: config.estimator,
    };
    Ok((model, report))
}

/// Nudge the frequency vector so it sums to exactly 1 within validation
/// tolerance (counting gives 1 up to float roundoff already).
fn renormalize(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter().map(|v| v / s).collect()
}
