//! Exact path simulation, stationary (delayed) initialization, and the
//! semi-Markov generator with its Monte Carlo semigroup validation.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{invariant_law, Mark, StationaryLaw};
use crate::convolve::SojournCdf;
use crate::error::{Error, Result};
use crate::model::{MixtureF, MrpModel};
use crate::rng::substream;

/// Initial condition of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// J_0 from the invariant law; first sojourn from the time-stationary
    /// (delayed) construction. Falls back to `Ordinary` with a logged
    /// warning when the kernels give no stationary delay (full kernels or
    /// an asymmetric chain).
    Stationary,
    /// J_0 fixed.
    Fixed(Mark),
    /// J_0 from the invariant law; first sojourn drawn like any other.
    Ordinary,
}

/// A simulated pure-jump price path.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub jump_times: Vec<f64>,
    pub marks: Vec<Mark>,
    pub p0: i64,
}

impl PricePath {
    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// Piecewise-constant price: p0 plus all marks with jump time <= t.
    pub fn price_at(&self, t: f64) -> i64 {
        let idx = self.jump_times.partition_point(|&u| u <= t);
        self.p0 + self.marks[..idx].iter().map(|m| m.value() as i64).sum::<i64>()
    }

    pub fn terminal_price(&self) -> i64 {
        self.p0 + self.marks.iter().map(|m| m.value() as i64).sum::<i64>()
    }
}

/// Batch metadata sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct BatchMeta {
    pub seed: u64,
    pub model_hash: String,
    pub horizon: f64,
    pub n_paths: usize,
}

struct MarkSampler {
    /// cumulative size probabilities
    cum: Vec<f64>,
}

impl MarkSampler {
    fn new(model: &MrpModel) -> Self {
        let mut cum = Vec::with_capacity(model.chain.m());
        let mut acc = 0.0;
        for &p in &model.chain.size_probs {
            acc += p;
            cum.push(acc);
        }
        MarkSampler { cum }
    }

    fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u = rng.gen::<f64>();
        (self.cum.partition_point(|&c| c < u) + 1).min(self.cum.len()) as u32
    }
}

fn sample_from_law<R: Rng + ?Sized>(pi: &StationaryLaw, rng: &mut R) -> Mark {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for (idx, &p) in pi.probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Mark::from_index(idx);
        }
    }
    Mark::from_index(pi.probs.len() - 1)
}

/// Draw the next sign given the current one (rows of Qhat).
fn next_sign<R: Rng + ?Sized>(model: &MrpModel, cur: i32, rng: &mut R) -> i32 {
    let p_same = if cur > 0 {
        (1.0 + model.chain.alpha_plus) / 2.0
    } else {
        (1.0 + model.chain.alpha_minus) / 2.0
    };
    if rng.gen::<f64>() < p_same {
        cur
    } else {
        -cur
    }
}

/// Sampler for the stationary first sojourn of a symmetric model: the
/// in-progress component is length-biased, its residual follows
/// (1 - F_c)/mean_c, and the pending sign flip is the component itself.
pub struct StationaryDelay {
    mixture: MixtureF,
    mean: f64,
}

impl StationaryDelay {
    pub fn new(model: &MrpModel) -> Result<Self> {
        let mixture = model.mixture().map_err(|_| {
            Error::unsupported(
                "stationary delay requires sign-dependent (symmetric) kernels; \
                 full kernel matrices depend on the marks",
            )
        })?;
        let mean = mixture.mean();
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::domain("mixture mean sojourn is not finite"));
        }
        Ok(StationaryDelay { mixture, mean })
    }

    /// D(t) = int_0^t (1 - F(u)) du / mean, via the exact partial moment.
    pub fn delay_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        ((t - t * self.mixture.cdf(t) + self.mixture.partial_moment1(t)) / self.mean).min(1.0)
    }

    fn invert_delay(&self, u: f64) -> f64 {
        let mut hi = self.mean.max(1e-12);
        while self.delay_cdf(hi) < u {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.delay_cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Draw from the equilibrium (delayed) sojourn law of the mixture,
    /// density (1 - F)/mean.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.invert_delay(rng.gen::<f64>())
    }

    /// Draw (pending flip sign, residual time): the component is picked
    /// length-biased, then the residual from that component's delay law.
    fn sample_with_component<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, f64) {
        let w_plus = self.mixture.weight_plus;
        let p_plus = w_plus * self.mixture.plus.mean() / self.mean;
        let same_dir = rng.gen::<f64>() < p_plus;
        let law = if same_dir { &self.mixture.plus } else { &self.mixture.minus };
        // residual ~ (1 - F_c)/mean_c, inverted by bisection
        let u = rng.gen::<f64>();
        let mc = law.mean();
        let dcdf = |t: f64| ((t - t * law.cdf_unchecked(t) + law.partial_moment1(t)) / mc).min(1.0);
        let mut hi = mc.max(1e-12);
        while dcdf(hi) < u {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dcdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (same_dir, 0.5 * (lo + hi))
    }
}

/// Draw from the stationary-delay law of a model's sojourn mixture
/// (convenience wrapper over [`StationaryDelay`]).
pub fn stationary_delay_sample<R: Rng + ?Sized>(model: &MrpModel, rng: &mut R) -> Result<f64> {
    Ok(StationaryDelay::new(model)?.sample(rng))
}

/// Simulate one path up to `horizon` (jumps with T_k <= horizon included).
pub fn simulate_path<R: Rng + ?Sized>(
    model: &MrpModel,
    horizon: f64,
    p0: i64,
    init: InitMode,
    rng: &mut R,
) -> Result<PricePath> {
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
    }
    let sizes = MarkSampler::new(model);
    let pi = invariant_law(&model.transition_matrix())?;

    let mut jump_times = Vec::new();
    let mut marks = Vec::new();

    let mut cur = match init {
        InitMode::Fixed(mark) => {
            Mark::new(mark.value(), model.chain.m())?;
            mark
        }
        InitMode::Stationary | InitMode::Ordinary => sample_from_law(&pi, rng),
    };
    let mut t = 0.0;

    // first jump
    let stationary_start = match init {
        InitMode::Stationary => match StationaryDelay::new(model) {
            Ok(d) => Some(d),
            Err(_) => {
                log::warn!(
                    "stationary init unavailable for this kernel structure; \
                     falling back to ordinary initialization"
                );
                None
            }
        },
        _ => None,
    };
    if let Some(delay) = &stationary_start {
        let (same_dir, residual) = delay.sample_with_component(rng);
        t += residual;
        if t <= horizon {
            let sign = if same_dir { cur.sign() } else { -cur.sign() };
            let size = sizes.sample_size(rng);
            cur = Mark::new(sign * size as i32, model.chain.m())?;
            jump_times.push(t);
            marks.push(cur);
        } else {
            return Ok(PricePath { jump_times, marks, p0 });
        }
    }

    loop {
        // inductive step: next mark from the row of Q, then S ~ F_{prev,next}
        let sign = next_sign(model, cur.sign(), rng);
        let size = sizes.sample_size(rng);
        let next = Mark::new(sign * size as i32, model.chain.m())?;
        let s = model.kernel(cur, next).sample(rng);
        t += s;
        if t > horizon {
            break;
        }
        jump_times.push(t);
        marks.push(next);
        cur = next;
    }
    Ok(PricePath { jump_times, marks, p0 })
}

/// Simulate exactly `n_jumps` jumps (no horizon); useful for estimation
/// experiments that need a fixed sample size.
pub fn simulate_n_jumps<R: Rng + ?Sized>(
    model: &MrpModel,
    n_jumps: usize,
    p0: i64,
    init: InitMode,
    rng: &mut R,
) -> Result<PricePath> {
    let sizes = MarkSampler::new(model);
    let pi = invariant_law(&model.transition_matrix())?;
    let mut jump_times = Vec::with_capacity(n_jumps);
    let mut marks = Vec::with_capacity(n_jumps);
    let mut cur = match init {
        InitMode::Fixed(mark) => mark,
        _ => sample_from_law(&pi, rng),
    };
    let mut t = 0.0;
    while marks.len() < n_jumps {
        let sign = next_sign(model, cur.sign(), rng);
        let size = sizes.sample_size(rng);
        let next = Mark::new(sign * size as i32, model.chain.m())?;
        let s = model.kernel(cur, next).sample(rng);
        t += s;
        jump_times.push(t);
        marks.push(next);
        cur = next;
    }
    Ok(PricePath { jump_times, marks, p0 })
}

/// Simulate `n_paths` mutually independent paths; path k uses rng substream
/// k of `seed`, so the result is identical regardless of parallelism.
pub fn simulate_batch(
    model: &MrpModel,
    horizon: f64,
    p0: i64,
    init: InitMode,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PricePath>> {
    if n_paths == 0 {
        return Err(Error::validation("n_paths", "must be >= 1"));
    }
    (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            simulate_path(model, horizon, p0, init, &mut rng)
        })
        .collect()
}

/// Path CSV: header `path_id,t,price,mark`, one row at t=0 with mark=0 and
/// one row per jump.
pub fn write_paths_csv<W: std::io::Write>(paths: &[PricePath], mut w: W) -> Result<()> {
    writeln!(w, "path_id,t,price,mark")?;
    for (k, path) in paths.iter().enumerate() {
        writeln!(w, "{k},0,{},0", path.p0)?;
        let mut price = path.p0;
        for (t, m) in path.jump_times.iter().zip(&path.marks) {
            price += m.value() as i64;
            writeln!(w, "{k},{t},{price},{}", m.value())?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Semi-Markov generator
// ---------------------------------------------------------------------------

/// State of the Markov system (P_t, I_t, S_t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiMarkovState {
    pub price: i64,
    pub last_mark: Mark,
    pub elapsed: f64,
}

impl SemiMarkovState {
    pub fn new(price: i64, last_mark: Mark, elapsed: f64) -> Result<Self> {
        if !(elapsed >= 0.0) {
            return Err(Error::domain(format!("elapsed must be >= 0, got {elapsed}")));
        }
        Ok(SemiMarkovState { price, last_mark, elapsed })
    }
}

/// A bounded test function phi(p, i, s) for generator checks.
pub trait TestFunction: Sync {
    fn eval(&self, price: f64, mark: Mark, elapsed: f64) -> f64;
    /// Exact ds derivative if available; otherwise a central finite
    /// difference with h = 1e-5 is used (one-sided at the boundary).
    fn ds(&self, _price: f64, _mark: Mark, _elapsed: f64) -> Option<f64> {
        None
    }
}

/// phi = p.
pub struct PriceFn;
impl TestFunction for PriceFn {
    fn eval(&self, price: f64, _mark: Mark, _s: f64) -> f64 {
        price
    }
    fn ds(&self, _p: f64, _m: Mark, _s: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// phi = p^2.
pub struct PriceSquaredFn;
impl TestFunction for PriceSquaredFn {
    fn eval(&self, price: f64, _mark: Mark, _s: f64) -> f64 {
        price * price
    }
    fn ds(&self, _p: f64, _m: Mark, _s: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// phi = s.
pub struct ElapsedFn;
impl TestFunction for ElapsedFn {
    fn eval(&self, _p: f64, _m: Mark, s: f64) -> f64 {
        s
    }
    fn ds(&self, _p: f64, _m: Mark, _s: f64) -> Option<f64> {
        Some(1.0)
    }
}

/// Smoothed indicator of {p >= center}: 0.5 (1 + tanh((p-center)/width)).
pub struct SmoothedIndicatorFn {
    pub center: f64,
    pub width: f64,
}
impl TestFunction for SmoothedIndicatorFn {
    fn eval(&self, price: f64, _m: Mark, _s: f64) -> f64 {
        0.5 * (1.0 + ((price - self.center) / self.width).tanh())
    }
    fn ds(&self, _p: f64, _m: Mark, _s: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Jump intensities lambda_+-(s) = f_+-(s) / (1 - F(s)) of a symmetric model
/// (F is the mixture).
fn jump_intensities(model: &MrpModel, s: f64) -> Result<(f64, f64)> {
    let mix = model.mixture()?;
    let surv = 1.0 - mix.cdf(s);
    if surv <= 0.0 {
        return Err(Error::Saturation(format!("mixture survival underflow at s = {s}")));
    }
    let fp = mix.plus.pdf(s)?;
    let fm = mix.minus.pdf(s)?;
    if !fp.is_finite() || !fm.is_finite() {
        return Err(Error::domain(format!(
            "jump intensity not finite at elapsed s = {s} (density diverges)"
        )));
    }
    Ok((fp / surv, fm / surv))
}

/// Apply the infinitesimal generator of (P, I, S) to `phi` at `state`
/// (symmetric case).
pub fn generator_apply(
    model: &MrpModel,
    phi: &dyn TestFunction,
    state: &SemiMarkovState,
) -> Result<f64> {
    let alpha = model.chain.alpha()?;
    let s = state.elapsed;
    let (lam_p, lam_m) = jump_intensities(model, s)?;
    let p = state.price as f64;
    let i = state.last_mark;

    let dphi = match phi.ds(p, i, s) {
        Some(d) => d,
        None => {
            let h = 1e-5;
            if s >= h {
                (phi.eval(p, i, s + h) - phi.eval(p, i, s - h)) / (2.0 * h)
            } else {
                (-3.0 * phi.eval(p, i, s) + 4.0 * phi.eval(p, i, s + h)
                    - phi.eval(p, i, s + 2.0 * h))
                    / (2.0 * h)
            }
        }
    };

    let here = phi.eval(p, i, s);
    let sgn = i.sign();
    let m = model.chain.m();
    let mut jump_part = 0.0;
    for (j, &pj) in model.chain.size_probs.iter().enumerate() {
        let size = (j + 1) as i32;
        let up = Mark::new(sgn * size, m)?;
        let down = Mark::new(-sgn * size, m)?;
        jump_part += lam_p
            * ((1.0 + alpha) / 2.0)
            * pj
            * (phi.eval(p + (sgn * size) as f64, up, 0.0) - here);
        jump_part += lam_m
            * ((1.0 - alpha) / 2.0)
            * pj
            * (phi.eval(p - (sgn * size) as f64, down, 0.0) - here);
    }
    Ok(dphi + jump_part)
}

/// Result of the Monte Carlo semigroup validation.
#[derive(Debug, Clone)]
pub struct SemigroupCheck {
    /// MC estimate of (E[phi(X_delta)] - phi(x0)) / delta.
    pub lhs: f64,
    /// generator_apply at the state.
    pub rhs: f64,
    pub stderr: f64,
    /// O(delta) bias bound 0.5 * delta * |L^2 phi|, when the nested
    /// generator is finite at the state and at the post-jump reset states.
    pub bias_bound: Option<f64>,
}

struct GeneratorOf<'a> {
    model: &'a MrpModel,
    inner: &'a dyn TestFunction,
}

impl TestFunction for GeneratorOf<'_> {
    fn eval(&self, price: f64, mark: Mark, elapsed: f64) -> f64 {
        let state =
            SemiMarkovState { price: price.round() as i64, last_mark: mark, elapsed };
        generator_apply(self.model, self.inner, &state).unwrap_or(f64::NAN)
    }
}

/// Evolve one step of duration `delta` from `state`; returns the state at
/// t + delta.
fn evolve<R: Rng + ?Sized>(
    model: &MrpModel,
    sizes: &MarkSampler,
    state: SemiMarkovState,
    delta: f64,
    rng: &mut R,
) -> Result<SemiMarkovState> {
    let alpha = model.chain.alpha()?;
    let mix = model.mixture()?;
    let w_plus = (1.0 + alpha) / 2.0;
    let mut price = state.price;
    let mut mark = state.last_mark;
    let mut elapsed = state.elapsed;
    let mut remaining = delta;
    loop {
        let surv = 1.0 - mix.cdf(elapsed);
        if surv <= 0.0 {
            return Err(Error::Saturation(format!(
                "mixture survival underflow at elapsed {elapsed}"
            )));
        }
        // probability of a jump within the remaining window
        let mass = (mix.cdf(elapsed + remaining) - mix.cdf(elapsed)) / surv;
        let u = rng.gen::<f64>();
        if u >= mass {
            return Ok(SemiMarkovState { price, last_mark: mark, elapsed: elapsed + remaining });
        }
        // invert the residual: F(elapsed + v) = F(elapsed) + u * surv
        let target = mix.cdf(elapsed) + u * surv;
        let (mut lo, mut hi) = (0.0, remaining);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mix.cdf(elapsed + mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let v = 0.5 * (lo + hi);
        // conditional flip: P[same dir | jump at elapsed+v]
        let at = elapsed + v;
        let fp = mix.plus.pdf(at)?;
        let fm = mix.minus.pdf(at)?;
        let dens = w_plus * fp + (1.0 - w_plus) * fm;
        let p_same = if dens > 0.0 { w_plus * fp / dens } else { w_plus };
        let same = rng.gen::<f64>() < p_same;
        let sign = if same { mark.sign() } else { -mark.sign() };
        let size = sizes.sample_size(rng);
        mark = Mark::new(sign * size as i32, model.chain.m())?;
        price += mark.value() as i64;
        elapsed = 0.0;
        remaining -= v;
        if remaining <= 0.0 {
            return Ok(SemiMarkovState { price, last_mark: mark, elapsed: 0.0 });
        }
    }
}

/// Monte Carlo check that (E[phi(X_delta)|X_0] - phi(X_0))/delta matches
/// the generator: acceptance is |lhs - rhs| < 3 stderr + bias bound.
pub fn semigroup_check(
    model: &MrpModel,
    phi: &dyn TestFunction,
    state: &SemiMarkovState,
    delta: f64,
    n_mc: usize,
    seed: u64,
) -> Result<SemigroupCheck> {
    if !(delta > 0.0) {
        return Err(Error::domain("delta must be positive"));
    }
    let rhs = generator_apply(model, phi, state)?;
    let sizes = MarkSampler::new(model);
    let phi0 = phi.eval(state.price as f64, state.last_mark, state.elapsed);

    let chunk = 1 << 14;
    let n_chunks = n_mc.div_ceil(chunk);
    let partials: Vec<(f64, f64, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let n_here = chunk.min(n_mc - c * chunk);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n_here {
                let end = evolve(model, &sizes, *state, delta, &mut rng).expect("evolve");
                let y = (phi.eval(end.price as f64, end.last_mark, end.elapsed) - phi0) / delta;
                s += y;
                s2 += y * y;
            }
            (s, s2, n_here)
        })
        .collect();
    let (sum, sum2, n) = partials
        .iter()
        .fold((0.0, 0.0, 0usize), |(a, b, c), (x, y, k)| (a + x, b + y, c + k));
    let nf = n as f64;
    let lhs = sum / nf;
    let var = (sum2 / nf - lhs * lhs).max(0.0);
    let stderr = (var / nf).sqrt();

    // O(delta) bias bound from the second generator application
    let lphi = GeneratorOf { model, inner: phi };
    let l2 = generator_apply(model, &lphi, state);
    let bias_bound = match l2 {
        Ok(v) if v.is_finite() => Some(0.5 * delta * v.abs()),
        _ => None,
    };

    Ok(SemigroupCheck { lhs, rhs, stderr, bias_bound })
}
