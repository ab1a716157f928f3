//! The price-return mark chain: transition matrix, invariant law, sign
//! autocorrelation, drift and the diffusive-variance identities.
//!
//! Marks live in E = {+1,-1,...,+m,-m}, ordered (+1,-1,+2,-2,...) so the
//! sign blocks of the transition matrix are contiguous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used by construction-time probability checks.
const PROB_TOL: f64 = 1e-12;

/// A signed price increment in ticks, in E = {+-1, ..., +-m}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mark(i32);

impl Mark {
    pub fn new(value: i32, m: usize) -> Result<Self> {
        if value == 0 {
            return Err(Error::validation("mark", "must be nonzero"));
        }
        if value.unsigned_abs() as usize > m {
            return Err(Error::validation(
                "mark",
                format!("|{value}| exceeds max size {m}"),
            ));
        }
        Ok(Mark(value))
    }

    pub fn value(self) -> i32 {
        self.0
    }

    pub fn sign(self) -> i32 {
        self.0.signum()
    }

    pub fn size(self) -> u32 {
        self.0.unsigned_abs()
    }

    /// Position in the fixed (+1,-1,+2,-2,...) ordering.
    pub fn index(self) -> usize {
        2 * (self.size() as usize - 1) + usize::from(self.0 < 0)
    }

    /// Inverse of [`Mark::index`].
    pub fn from_index(idx: usize) -> Mark {
        let size = (idx / 2 + 1) as i32;
        Mark(if idx % 2 == 0 { size } else { -size })
    }
}

/// Parameters of the mark chain: sign-flip correlations and jump-size law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnChainSpec {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    /// p_1..p_m, the distribution of |J_n|.
    pub size_probs: Vec<f64>,
}

impl ReturnChainSpec {
    pub fn new(alpha_plus: f64, alpha_minus: f64, size_probs: Vec<f64>) -> Result<Self> {
        for (name, a) in [("alpha_plus", alpha_plus), ("alpha_minus", alpha_minus)] {
            if !(-1.0..1.0).contains(&a) {
                return Err(Error::validation(name, format!("must lie in [-1,1), got {a}")));
            }
        }
        if size_probs.is_empty() {
            return Err(Error::validation("size_probs", "must be nonempty"));
        }
        for (i, &p) in size_probs.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::validation(
                    "size_probs",
                    format!("p_{} = {p} not in (0,1]", i + 1),
                ));
            }
        }
        let s: f64 = size_probs.iter().sum();
        if (s - 1.0).abs() > PROB_TOL {
            return Err(Error::validation(
                "size_probs",
                format!("must sum to 1 within {PROB_TOL}, got {s}"),
            ));
        }
        Ok(ReturnChainSpec { alpha_plus, alpha_minus, size_probs })
    }

    /// Symmetric chain (alpha_plus == alpha_minus == alpha).
    pub fn symmetric(alpha: f64, size_probs: Vec<f64>) -> Result<Self> {
        Self::new(alpha, alpha, size_probs)
    }

    pub fn m(&self) -> usize {
        self.size_probs.len()
    }

    pub fn is_symmetric(&self) -> bool {
        (self.alpha_plus - self.alpha_minus).abs() <= PROB_TOL
    }

    /// The symmetric alpha; errors on asymmetric specs.
    pub fn alpha(&self) -> Result<f64> {
        if !self.is_symmetric() {
            return Err(Error::unsupported(format!(
                "operation requires the symmetric case, got alpha_plus={} alpha_minus={}",
                self.alpha_plus, self.alpha_minus
            )));
        }
        Ok(self.alpha_plus)
    }

    /// E[xi] of the size law.
    pub fn mean_size(&self) -> f64 {
        self.size_probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// E[xi^2] of the size law.
    pub fn mean_size_sq(&self) -> f64 {
        self.size_probs
            .iter()
            .enumerate()
            .map(|(i, p)| ((i + 1) * (i + 1)) as f64 * p)
            .sum()
    }

    pub fn var_size(&self) -> f64 {
        let m = self.mean_size();
        self.mean_size_sq() - m * m
    }
}

/// Row-stochastic transition matrix of the mark chain, in the fixed
/// (+1,-1,+2,-2,...) ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::validation("entries", "wrong length"));
        }
        for row in 0..dim {
            let mut s = 0.0;
            for col in 0..dim {
                let v = entries[row * dim + col];
                if v < 0.0 {
                    return Err(Error::validation(
                        "entries",
                        format!("negative entry at ({row},{col})"),
                    ));
                }
                s += v;
            }
            if (s - 1.0).abs() > PROB_TOL {
                return Err(Error::validation(
                    "entries",
                    format!("row {row} sums to {s}, expected 1"),
                ));
            }
        }
        Ok(TransitionMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }
}

/// Stationary distribution over E.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryLaw {
    pub probs: Vec<f64>,
}

impl StationaryLaw {
    pub fn prob(&self, mark: Mark) -> f64 {
        self.probs[mark.index()]
    }
}

/// Q with block structure q_{ij} = p_{|j|} * Qhat_{sign(i), sign(j)}.
pub fn build_transition_matrix(spec: &ReturnChainSpec) -> TransitionMatrix {
    let m = spec.m();
    let dim = 2 * m;
    // Qhat rows: [ (1+a+)/2, (1-a+)/2 ; (1-a-)/2, (1+a-)/2 ]
    let qhat = [
        [(1.0 + spec.alpha_plus) / 2.0, (1.0 - spec.alpha_plus) / 2.0],
        [(1.0 - spec.alpha_minus) / 2.0, (1.0 + spec.alpha_minus) / 2.0],
    ];
    let mut entries = vec![0.0; dim * dim];
    for i in 0..dim {
        let si = i % 2; // 0 = positive sign, 1 = negative
        for j in 0..dim {
            let sj = j % 2;
            let p = spec.size_probs[j / 2];
            entries[i * dim + j] = p * qhat[si][sj];
        }
    }
    TransitionMatrix { dim, entries }
}

/// Invariant law of Q: direct linear solve of (Q^T - I) pi = 0 with the
/// normalization row, falling back to power iteration.
pub fn invariant_law(q: &TransitionMatrix) -> Result<StationaryLaw> {
    let n = q.dim;
    // A = Q^T - I with last row replaced by ones; b = e_n
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = q.get(c, r) - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..n {
        a[(n - 1) * n + c] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let solved = solve_linear(&mut a, &mut b).ok();
    let pi = match solved {
        Some(x) if residual_inf(q, &x) < 1e-10 && x.iter().all(|&v| v >= -1e-12) => x,
        _ => {
            // power iteration fallback
            let mut x = vec![1.0 / n as f64; n];
            for _ in 0..100_000 {
                let mut y = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        y[j] += x[i] * q.get(i, j);
                    }
                }
                let s: f64 = y.iter().sum();
                for v in &mut y {
                    *v /= s;
                }
                let delta: f64 =
                    x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                x = y;
                if delta < 1e-15 {
                    break;
                }
            }
            let r = residual_inf(q, &x);
            if r > 1e-10 {
                return Err(Error::numerical(format!(
                    "invariant law did not converge, residual {r:.3e}"
                )));
            }
            x
        }
    };
    let mut probs = pi;
    for v in &mut probs {
        *v = v.max(0.0);
    }
    let s: f64 = probs.iter().sum();
    for v in &mut probs {
        *v /= s;
    }
    Ok(StationaryLaw { probs })
}

fn residual_inf(q: &TransitionMatrix, pi: &[f64]) -> f64 {
    let n = q.dim;
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += pi[i] * q.get(i, j);
        }
        worst = worst.max((s - pi[j]).abs());
    }
    worst
}

/// Gaussian elimination with partial pivoting; returns the solution or an
/// error carrying a pivot-based condition estimate.
fn solve_linear(a: &mut [f64], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut max_piv = 0.0f64;
    let mut min_piv = f64::INFINITY;
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        let pval = a[piv * n + col].abs();
        max_piv = max_piv.max(pval);
        min_piv = min_piv.min(pval);
        if pval < 1e-14 * max_piv.max(1.0) {
            return Err(Error::numerical(format!(
                "singular system (pivot ratio {:.3e})",
                if max_piv > 0.0 { pval / max_piv } else { 0.0 }
            )));
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Ok(x)
}

/// The correlation of consecutive sign returns under stationarity; equals
/// alpha in the symmetric case (the only case where the identity is proved).
pub fn sign_autocorrelation(spec: &ReturnChainSpec) -> Result<f64> {
    spec.alpha()
}

/// Long-run drift c = (1/mean_sojourn) sum_ij pi_i q_ij j; zero for
/// symmetric chains.
pub fn drift_constant(q: &TransitionMatrix, pi: &StationaryLaw, mean_sojourn: f64) -> Result<f64> {
    if !(mean_sojourn > 0.0) {
        return Err(Error::domain(format!(
            "mean sojourn must be positive, got {mean_sojourn}"
        )));
    }
    let n = q.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += pi.probs[i] * q.get(i, j) * Mark::from_index(j).value() as f64;
        }
    }
    Ok(s / mean_sojourn)
}

/// General-form diffusive variance from the Markov-chain CLT machinery:
/// b_i = sum_j q_ij j, g = (I - Q + Pi)^{-1} b, H_ij = j + g_j - g_i,
/// sigma^2 = (1/mean_sojourn) sum_ij pi_i q_ij H_ij^2.
pub fn macroscopic_variance_general(
    q: &TransitionMatrix,
    pi: &StationaryLaw,
    mean_sojourn: f64,
) -> Result<f64> {
    if !(mean_sojourn > 0.0 && mean_sojourn.is_finite()) {
        return Err(Error::domain(format!(
            "mean sojourn must be positive finite, got {mean_sojourn}"
        )));
    }
    let n = q.dim();
    let mut b = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            b[i] += q.get(i, j) * Mark::from_index(j).value() as f64;
        }
    }
    // A = I - Q + Pi where Pi_ij = pi_j
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (if i == j { 1.0 } else { 0.0 }) - q.get(i, j) + pi.probs[j];
        }
    }
    let g = solve_linear(&mut a, &mut b.clone())?;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let h = Mark::from_index(j).value() as f64 + g[j] - g[i];
            s += pi.probs[i] * q.get(i, j) * h * h;
        }
    }
    Ok(s / mean_sojourn)
}

/// Time-free part of the diffusive variance in the symmetric case:
/// Var(xi) + (E xi)^2 (1+alpha)/(1-alpha).
pub fn sigma_tilde_sq(spec: &ReturnChainSpec) -> Result<f64> {
    let alpha = spec.alpha()?;
    let exi = spec.mean_size();
    Ok(spec.var_size() + exi * exi * (1.0 + alpha) / (1.0 - alpha))
}

/// E_pi[L_n^2] for the stationary mark chain, L_n = J_1 + ... + J_n:
/// n * sigma_tilde^2 - (2 alpha/(1-alpha)) ((1-alpha^n)/(1-alpha)) (E xi)^2.
pub fn expected_ln_squared(spec: &ReturnChainSpec, n: u32) -> Result<f64> {
    let alpha = spec.alpha()?;
    if n == 0 {
        return Ok(0.0);
    }
    let st = sigma_tilde_sq(spec)?;
    let exi = spec.mean_size();
    let nf = n as f64;
    Ok(nf * st
        - 2.0 * alpha / (1.0 - alpha) * (1.0 - alpha.powi(n as i32)) / (1.0 - alpha) * exi * exi)
}
