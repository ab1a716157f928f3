//! Numeric n-fold convolution powers and the renewal function
//! Q_alpha(t) = sum_n alpha^n F^{*(n)}(t), for sojourn laws whose cdf is
//! exact but whose density may blow up at the origin (Gamma shapes << 1
//! put most of their mass within microseconds while the mean is minutes).
//!
//! Machinery shared by both computations:
//!  - log-spaced "head" tables resolve the origin cusp; cell masses come
//!    from exact cdf differences, never from the density;
//!  - Stieltjes integrals with a cusped measure are evaluated by
//!    Gauss-Legendre after the probability transform u = F^{-1}(w);
//!  - on the uniform bulk grid, the convolution is split at a node
//!    (A*dB)(t) = int_0^c A(t-u)dB(u) + int_0^{t-c} B(t-s)dA(s)
//!               + A(0)B(t) - A(t-c)B(c),   c = floor(i/2)*dt,
//!    so every bulk cell sum uses exact node differences.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::laws::RenewalLaw;

/// Head cells per uniform-grid step; the bulk recursion starts at 4x this.
const HEAD_CELLS: usize = 16;
/// Log nodes per decade in the head tables.
const PER_DECADE: usize = 16;
/// Decades resolved below the head anchor.
const HEAD_DECADES: usize = 12;
/// Gauss-Legendre order for transformed head integrals.
const GL_N: usize = 24;

/// 24-point Gauss-Legendre nodes on [-1, 1].
const GL24_X: [f64; GL_N] = [
    -0.9951872199970213,
    -0.9747285559713095,
    -0.9382745520027328,
    -0.886415527004401,
    -0.820001985973903,
    -0.7401241915785544,
    -0.6480936519369755,
    -0.5454214713888396,
    -0.4337935076260451,
    -0.3150426796961634,
    -0.1911188674736163,
    -0.06405689286260563,
    0.06405689286260563,
    0.1911188674736163,
    0.3150426796961634,
    0.4337935076260451,
    0.5454214713888396,
    0.6480936519369755,
    0.7401241915785544,
    0.820001985973903,
    0.886415527004401,
    0.9382745520027328,
    0.9747285559713095,
    0.9951872199970213,
];
const GL24_W: [f64; GL_N] = [
    0.012341229799987091,
    0.028531388628933743,
    0.04427743881741955,
    0.05929858491543674,
    0.07334648141108041,
    0.08619016153195329,
    0.09761865210411406,
    0.1074442701159656,
    0.11550566805372561,
    0.12167047292780342,
    0.1258374563468283,
    0.12793819534675221,
    0.12793819534675221,
    0.1258374563468283,
    0.12167047292780342,
    0.11550566805372561,
    0.1074442701159656,
    0.09761865210411406,
    0.08619016153195329,
    0.07334648141108041,
    0.05929858491543674,
    0.04427743881741955,
    0.028531388628933743,
    0.012341229799987091,
];

/// A sojourn distribution seen by the numeric engines: exact cdf and mean.
pub trait SojournCdf {
    /// F(t); must return 0 for t <= 0.
    fn cdf(&self, t: f64) -> f64;
    fn mean(&self) -> f64;

    /// Quantile by bisection (generic; overridden where closed forms exist).
    fn inverse(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let mut hi = self.mean().max(1e-12);
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..160 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl SojournCdf for RenewalLaw {
    fn cdf(&self, t: f64) -> f64 {
        self.cdf_unchecked(t)
    }
    fn mean(&self) -> f64 {
        RenewalLaw::mean(self)
    }
}

/// Log-spaced head tables of F^{*k}, anchored so that one node lies exactly
/// at `t_anchor` (the bulk split boundary) and extending up to ~4x above it.
pub(crate) struct HeadTables {
    pub nodes: Vec<f64>,
    log_nodes: Vec<f64>,
    pub anchor_idx: usize,
    /// levels[k-1][j] = F^{*k}(nodes[j])
    pub levels: Vec<Vec<f64>>,
}

impl HeadTables {
    /// Build tables for k = 1..=n_levels.
    pub fn build(law: &dyn SojournCdf, t_anchor: f64, n_levels: usize) -> Self {
        let below = (PER_DECADE * HEAD_DECADES) as i64;
        let above = (PER_DECADE as f64 * 4f64.log10()).ceil() as i64 + 1;
        let mut nodes = Vec::with_capacity((below + above + 1) as usize);
        for k in -below..=above {
            nodes.push(t_anchor * 10f64.powf(k as f64 / PER_DECADE as f64));
        }
        let anchor_idx = below as usize;
        let log_nodes: Vec<f64> = nodes.iter().map(|x| x.ln()).collect();
        let level1: Vec<f64> = nodes.iter().map(|&t| law.cdf(t)).collect();

        // side-1 GL nodes per head node: u_q = F^{-1}(z_q * F(t/2)); these
        // depend only on the law, compute once.
        let n_nodes = nodes.len();
        let mut u_nodes = vec![[0.0; GL_N]; n_nodes];
        let mut u_wts = vec![[0.0; GL_N]; n_nodes];
        for (j, &t) in nodes.iter().enumerate() {
            let h = 0.5 * t;
            let fh = law.cdf(h);
            for q in 0..GL_N {
                let z = 0.5 * (GL24_X[q] + 1.0);
                u_nodes[j][q] = law.inverse(z * fh);
                u_wts[j][q] = 0.5 * GL24_W[q] * fh;
            }
        }

        let mut tables = HeadTables { nodes, log_nodes, anchor_idx, levels: vec![level1] };
        for _level in 2..=n_levels {
            let prev = tables.levels.last().unwrap().clone();
            let mut vals = vec![0.0; n_nodes];
            for (j, &t) in tables.nodes.iter().enumerate() {
                let h = 0.5 * t;
                // side 1: int_0^h prev(t-u) dF(u)
                let mut s1 = 0.0;
                for q in 0..GL_N {
                    s1 += u_wts[j][q] * tables.interp(&prev, t - u_nodes[j][q]);
                }
                // side 2: int_0^h F(t-s) dprev(s), prev is a cdf (monotone)
                let ph = tables.interp(&prev, h);
                let mut s2 = 0.0;
                for q in 0..GL_N {
                    let z = 0.5 * (GL24_X[q] + 1.0);
                    let s = tables.invert_level(&prev, z * ph, h);
                    s2 += 0.5 * GL24_W[q] * ph * law.cdf(t - s);
                }
                vals[j] = s1 + s2 - ph * law.cdf(h);
            }
            tables.levels.push(vals);
        }
        tables
    }

    /// log-log interpolation with power-law extrapolation below the lowest
    /// node; exact for pure powers, which is the local behavior at the cusp.
    pub fn interp(&self, vals: &[f64], x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let lx = x.ln();
        let ln = &self.log_nodes;
        if lx >= *ln.last().unwrap() {
            return *vals.last().unwrap();
        }
        let (i0, i1, t) = if lx <= ln[0] {
            (0, 1, (lx - ln[0]) / (ln[1] - ln[0])) // extrapolate by leading power
        } else {
            let i = match ln.binary_search_by(|v| v.partial_cmp(&lx).unwrap()) {
                Ok(i) => i,
                Err(i) => i - 1,
            };
            (i, i + 1, (lx - ln[i]) / (ln[i + 1] - ln[i]))
        };
        let (v0, v1) = (vals[i0].max(1e-300), vals[i1].max(1e-300));
        (v0.ln() * (1.0 - t) + v1.ln() * t).exp()
    }

    /// Invert a (monotone) level on [0, hi] by bisection on the interpolant.
    fn invert_level(&self, vals: &[f64], target: f64, hi: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = hi;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.interp(vals, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// 4-point Lagrange interpolation on a uniform array at fractional index g,
/// with the stencil clamped to `[0, max_idx]`.
#[inline]
fn cubic(vals: &[f64], g: f64, max_idx: usize) -> f64 {
    let j = (g.floor() as isize - 1).clamp(0, max_idx as isize - 3) as usize;
    let s = g - j as f64;
    let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    l0 * vals[j] + l1 * vals[j + 1] + l2 * vals[j + 2] + l3 * vals[j + 3]
}

/// All convolution powers F^{*(1..=n)} of `law` on the given uniform grid.
///
/// Returns `n` grid functions (level k at index k-1). The caller gets
/// F^{*(0)} == 1 for free and is expected to handle it.
pub fn convolution_powers(
    law: &dyn SojournCdf,
    n: usize,
    grid: &GridSpec,
) -> Result<Vec<GridFunction>> {
    let dt = grid.dt;
    let g = grid.len() - 1; // last index
    let i_start = 4 * HEAD_CELLS;
    if g < i_start + 4 {
        return Err(Error::validation(
            "grid",
            format!("need at least {} grid cells, got {g}", i_start + 4),
        ));
    }
    let t_head = HEAD_CELLS as f64 * dt;
    let heads = HeadTables::build(law, t_head, n.max(1));

    let f_nodes: Vec<f64> = (0..=g).map(|i| law.cdf(i as f64 * dt)).collect();
    let df: Vec<f64> = (0..g).map(|k| f_nodes[k + 1] - f_nodes[k]).collect();

    // side-1 GL nodes for the bulk: u_q = F^{-1}(z_q F(t_head)), fixed
    let fh = f_nodes[HEAD_CELLS];
    let mut u_q = [0.0; GL_N];
    let mut w1 = [0.0; GL_N];
    for q in 0..GL_N {
        u_q[q] = law.inverse(0.5 * (GL24_X[q] + 1.0) * fh);
        w1[q] = 0.5 * GL24_W[q] * fh;
    }

    let mut out: Vec<GridFunction> = Vec::with_capacity(n);
    out.push(GridFunction::new(dt, f_nodes.clone())?);
    let mut fn_vals = f_nodes.clone();

    for level in 2..=n {
        let head = &heads.levels[level - 1];
        let prev_head = &heads.levels[level - 2];
        // side-2 GL nodes from the previous level's head table
        let fnh = heads.interp(prev_head, t_head);
        let mut s_q = [0.0; GL_N];
        let mut w2 = [0.0; GL_N];
        for q in 0..GL_N {
            let z = 0.5 * (GL24_X[q] + 1.0);
            s_q[q] = heads.invert_level(prev_head, z * fnh, t_head);
            w2[q] = 0.5 * GL24_W[q] * fnh;
        }
        let dfn: Vec<f64> = (0..g).map(|k| fn_vals[k + 1] - fn_vals[k]).collect();

        let mut new = vec![0.0; g + 1];
        for (i, v) in new.iter_mut().enumerate().take(i_start).skip(1) {
            *v = heads.interp(head, i as f64 * dt);
        }
        for i in i_start..=g {
            let ti = i as f64 * dt;
            let ih = i / 2;
            let im = i - ih;
            let mut s1 = 0.0;
            for q in 0..GL_N {
                s1 += w1[q] * cubic(&fn_vals, (ti - u_q[q]) / dt, g);
            }
            for k in HEAD_CELLS..ih {
                s1 += 0.5 * (fn_vals[i - k] + fn_vals[i - k - 1]) * df[k];
            }
            let mut s2 = 0.0;
            for q in 0..GL_N {
                s2 += w2[q] * cubic(&f_nodes, (ti - s_q[q]) / dt, g);
            }
            for k in HEAD_CELLS..im {
                s2 += 0.5 * (f_nodes[i - k] + f_nodes[i - k - 1]) * dfn[k];
            }
            new[i] = (s1 + s2 - fn_vals[im] * f_nodes[ih]).clamp(0.0, 1.0);
        }
        fn_vals = new.clone();
        out.push(GridFunction::new(dt, new)?);
    }
    Ok(out)
}

/// Renewal-type function Q(t) = sum_{k>=0} alpha^k F^{*k}(t) on a uniform
/// grid, solved from Q = 1 + alpha (Q * dF) by explicit marching, with the
/// origin region carried by log-node head tables.
pub struct QAlpha {
    pub alpha: f64,
    pub dt: f64,
    /// Q at uniform nodes.
    pub q: Vec<f64>,
    /// prefix[i] = int_0^{i dt} Q(u) du.
    prefix: Vec<f64>,
    head_nodes: Vec<f64>,
    head_q: Vec<f64>,
    /// int_0^{head_nodes[j]} Q(u) du.
    head_prefix: Vec<f64>,
    i_start: usize,
}

impl QAlpha {
    /// March the renewal equation for `law` under weight `alpha != 0`.
    pub fn compute(law: &dyn SojournCdf, alpha: f64, grid: &GridSpec) -> Result<QAlpha> {
        if alpha == 0.0 || !(-1.0..1.0).contains(&alpha) {
            return Err(Error::domain(format!(
                "Q_alpha marching requires alpha in [-1,1) \\ {{0}}, got {alpha}"
            )));
        }
        let dt = grid.dt;
        let g = grid.len() - 1;
        let i_start = 4 * HEAD_CELLS;
        if g < i_start + 4 {
            return Err(Error::validation(
                "grid",
                format!("need at least {} grid cells, got {g}", i_start + 4),
            ));
        }
        let t_head = HEAD_CELLS as f64 * dt;
        // head truncation: |alpha|^K F^{*K}(t_top) < 1e-10 with a floor of 8
        let t_top = 4.0 * t_head;
        let f_top = law.cdf(t_top);
        let mut k_levels = 8usize;
        while alpha.abs().powi(k_levels as i32) * f_top.powi(k_levels as i32) > 1e-10
            && k_levels < 400
        {
            k_levels += 1;
        }
        let heads = HeadTables::build(law, t_head, k_levels);

        // Q on head nodes
        let mut head_q = vec![1.0; heads.nodes.len()];
        for (j, q) in head_q.iter_mut().enumerate() {
            let mut ak = 1.0;
            for lvl in &heads.levels {
                ak *= alpha;
                *q += ak * lvl[j];
            }
        }

        let f_nodes: Vec<f64> = (0..=g).map(|i| law.cdf(i as f64 * dt)).collect();
        let df: Vec<f64> = (0..g).map(|k| f_nodes[k + 1] - f_nodes[k]).collect();

        let fh = f_nodes[HEAD_CELLS];
        let mut u_q = [0.0; GL_N];
        let mut w1 = [0.0; GL_N];
        for q in 0..GL_N {
            u_q[q] = law.inverse(0.5 * (GL24_X[q] + 1.0) * fh);
            w1[q] = 0.5 * GL24_W[q] * fh;
        }

        // side-2 head cells: midpoints and dQ increments on (0, t_head]
        let na = heads.anchor_idx;
        let cell_mid: Vec<f64> = (0..na)
            .map(|j| 0.5 * (heads.nodes[j] + heads.nodes[j + 1]))
            .collect();
        let cell_dq: Vec<f64> = (0..na).map(|j| head_q[j + 1] - head_q[j]).collect();
        let lump_pos = 0.5 * heads.nodes[0];
        let lump_mass = head_q[0] - 1.0;

        let mut q_vals = vec![0.0; g + 1];
        q_vals[0] = 1.0;
        for (i, qv) in q_vals.iter_mut().enumerate().take(i_start).skip(1) {
            *qv = heads.interp_signed(&head_q, i as f64 * dt);
        }
        for i in i_start..=g {
            let ti = i as f64 * dt;
            let ih = i / 2;
            let im = i - ih;
            // side-1 head GL; the integrand touches Q[i] (implicit), collect
            // its interpolation coefficient and solve linearly
            let mut acc = 0.0;
            let mut coef_i = 0.0;
            for qd in 0..GL_N {
                let gpos = (ti - u_q[qd]) / dt;
                let j = (gpos.floor() as isize - 1).clamp(0, i as isize - 3) as usize;
                let s = gpos - j as f64;
                let lv = [
                    -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
                    s * (s - 2.0) * (s - 3.0) / 2.0,
                    -s * (s - 1.0) * (s - 3.0) / 2.0,
                    s * (s - 1.0) * (s - 2.0) / 6.0,
                ];
                for (off, &l) in lv.iter().enumerate() {
                    let idx = j + off;
                    if idx == i {
                        coef_i += w1[qd] * l;
                    } else {
                        acc += w1[qd] * l * q_vals[idx];
                    }
                }
            }
            let mut s1 = acc;
            for k in HEAD_CELLS..ih {
                s1 += 0.5 * (q_vals[i - k] + q_vals[i - k - 1]) * df[k];
            }
            // side-2: Q(0) F(t) + head cells + lump + bulk cells
            let mut s2 = f_nodes[i];
            for (m, dq) in cell_mid.iter().zip(cell_dq.iter()) {
                s2 += law.cdf(ti - m) * dq;
            }
            s2 += law.cdf(ti - lump_pos) * lump_mass;
            for k in HEAD_CELLS..im {
                s2 += 0.5 * (f_nodes[i - k] + f_nodes[i - k - 1]) * (q_vals[k + 1] - q_vals[k]);
            }
            let rhs = s1 + s2 - q_vals[im] * f_nodes[ih];
            q_vals[i] = (1.0 + alpha * rhs) / (1.0 - alpha * coef_i);
        }

        // integrals: head prefix by power-aware cells, bulk by trapezoid
        let mut head_prefix = vec![0.0; heads.nodes.len()];
        let mut acc = 0.5 * (1.0 + head_q[0]) * heads.nodes[0];
        head_prefix[0] = acc;
        for j in 1..heads.nodes.len() {
            acc += cell_integral(
                heads.nodes[j - 1],
                heads.nodes[j],
                head_q[j - 1],
                head_q[j],
            );
            head_prefix[j] = acc;
        }
        let mut prefix = vec![0.0; g + 1];
        // bulk prefix anchored at the head-zone integral up to i_start*dt
        let q_at = |x: f64, hq: &[f64], ht: &HeadTables| ht.interp_signed(hq, x);
        let mut ip = head_int_to(&heads, &head_q, &head_prefix, i_start as f64 * dt, &q_at);
        prefix[i_start] = ip;
        for i in (i_start + 1)..=g {
            ip += 0.5 * (q_vals[i] + q_vals[i - 1]) * dt;
            prefix[i] = ip;
        }
        // fill the early prefix too (useful for tau below the bulk start)
        for i in 1..i_start {
            prefix[i] = head_int_to(&heads, &head_q, &head_prefix, i as f64 * dt, &q_at);
        }

        Ok(QAlpha {
            alpha,
            dt,
            q: q_vals,
            prefix,
            head_nodes: heads.nodes.clone(),
            head_q,
            head_prefix,
            i_start,
        })
    }

    /// Q(t) by interpolation (head zone: log nodes, bulk: linear).
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let g = self.q.len() - 1;
        let i = (t / self.dt).floor() as usize;
        if i + 1 <= self.i_start {
            // head zone: piecewise interp on log nodes
            return interp_signed_nodes(&self.head_nodes, &self.head_q, t);
        }
        if i >= g {
            return self.q[g];
        }
        let w = t / self.dt - i as f64;
        self.q[i] * (1.0 - w) + self.q[i + 1] * w
    }

    /// int_0^tau Q(u) du.
    pub fn integral(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let g = self.q.len() - 1;
        let i = (tau / self.dt).floor() as usize;
        if i + 1 <= self.i_start {
            return head_int_nodes(&self.head_nodes, &self.head_q, &self.head_prefix, tau);
        }
        let i = i.min(g - 1);
        let qt = self.eval(tau);
        self.prefix[i] + 0.5 * (self.q[i] + qt) * (tau - i as f64 * self.dt)
    }
}

impl HeadTables {
    /// interp for values that may dip below/above 1 (Q tables): interpolate
    /// the deviation from 1 in log-log.
    fn interp_signed(&self, vals: &[f64], x: f64) -> f64 {
        interp_signed_nodes(&self.nodes, vals, x)
    }
}

fn interp_signed_nodes(nodes: &[f64], vals: &[f64], x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x >= *nodes.last().unwrap() {
        return *vals.last().unwrap();
    }
    // locate cell
    let i = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return vals[i],
        Err(0) => {
            // below lowest node: power extrapolation of (1 - Q)
            let d0 = (1.0 - vals[0]).abs().max(1e-300);
            let d1 = (1.0 - vals[1]).abs().max(1e-300);
            let p = (d1 / d0).ln() / (nodes[1] / nodes[0]).ln();
            let d = d0 * (x / nodes[0]).powf(p);
            return if vals[0] <= 1.0 { 1.0 - d } else { 1.0 + d };
        }
        Err(i) => i - 1,
    };
    let (a, b) = (nodes[i], nodes[i + 1]);
    let (va, vb) = (vals[i], vals[i + 1]);
    let da = 1.0 - va;
    let db = 1.0 - vb;
    if da.abs() > 1e-300 && db.abs() > 1e-300 && da.signum() == db.signum() {
        // log-log interp of the deviation magnitude
        let p = (db.abs() / da.abs()).ln() / (b / a).ln();
        let d = da.abs() * (x / a).powf(p);
        1.0 - da.signum() * d
    } else {
        // fall back to linear
        va + (vb - va) * (x - a) / (b - a)
    }
}

/// Integral of the interpolant over one head cell [a, b].
fn cell_integral(a: f64, b: f64, va: f64, vb: f64) -> f64 {
    let da = 1.0 - va;
    let db = 1.0 - vb;
    if da.abs() > 1e-300 && db.abs() > 1e-300 && da.signum() == db.signum() {
        let p = (db.abs() / da.abs()).ln() / (b / a).ln();
        // int (1 - s*d(a)(x/a)^p) dx over [a,b]
        let ipow = if (p + 1.0).abs() > 1e-12 {
            da.abs() / a.powf(p) * (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
        } else {
            da.abs() * a * (b / a).ln()
        };
        (b - a) - da.signum() * ipow
    } else {
        0.5 * (va + vb) * (b - a)
    }
}

fn head_int_nodes(nodes: &[f64], vals: &[f64], prefix: &[f64], x: f64) -> f64 {
    if x <= nodes[0] {
        // sub-minimum: Q ~ 1
        return 0.5 * (1.0 + interp_signed_nodes(nodes, vals, x)) * x;
    }
    let i = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return prefix[i],
        Err(i) => i - 1,
    };
    let qx = interp_signed_nodes(nodes, vals, x);
    prefix[i] + cell_integral(nodes[i], x, vals[i], qx)
}

fn head_int_to(
    heads: &HeadTables,
    head_q: &[f64],
    head_prefix: &[f64],
    x: f64,
    _q_at: &dyn Fn(f64, &[f64], &HeadTables) -> f64,
) -> f64 {
    head_int_nodes(&heads.nodes, head_q, head_prefix, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::reg_lower_gamma;

    fn grid(dt: f64, t_max: f64) -> GridSpec {
        GridSpec::new(dt, t_max).unwrap()
    }

    #[test]
    fn erlang_two_closed_form() {
        // Exponential(rate) twice-convolved: 1 - e^{-rt}(1 + rt)
        let law = RenewalLaw::exponential(0.5).unwrap();
        let powers = convolution_powers(&law, 2, &grid(0.02, 20.0)).unwrap();
        let f2 = &powers[1];
        for i in (0..f2.values.len()).step_by(37) {
            let t = f2.t(i);
            let want = 1.0 - (-0.5 * t).exp() * (1.0 + 0.5 * t);
            assert!(
                (f2.values[i] - want).abs() < 1e-6,
                "t={t}: {} vs {want}",
                f2.values[i]
            );
        }
    }

    #[test]
    fn gamma_reproductive_small_shape_quick() {
        // the acceptance suite runs the full n<=30 sweep; spot-check here
        let (shape, scale) = (0.276225, 2397.219);
        let law = RenewalLaw::gamma(shape, scale).unwrap();
        let powers = convolution_powers(&law, 6, &grid(45000.0 / 2000.0, 45000.0)).unwrap();
        for (k, f) in powers.iter().enumerate() {
            let n = k + 1;
            let mut worst = 0.0f64;
            for i in 0..f.values.len() {
                let want = reg_lower_gamma(n as f64 * shape, f.t(i) / scale).unwrap();
                worst = worst.max((f.values[i] - want).abs());
            }
            assert!(worst < 4e-5, "n={n}: sup err {worst}");
        }
    }

    #[test]
    fn q_alpha_matches_series_for_gamma() {
        // Q = sum alpha^n P(n beta, t/theta) summable directly
        let (shape, scale) = (0.07132677, 1561.593);
        let alpha = -0.875;
        let law = RenewalLaw::gamma(shape, scale).unwrap();
        let q = QAlpha::compute(&law, alpha, &grid(0.05, 150.0)).unwrap();
        let series = |t: f64| -> f64 {
            let mut s = 1.0;
            let mut ak = 1.0;
            for n in 1..400 {
                ak *= alpha;
                let term = ak * reg_lower_gamma(n as f64 * shape, t / scale).unwrap();
                s += term;
                if term.abs() < 1e-15 {
                    break;
                }
            }
            s
        };
        let mut worst = 0.0f64;
        for i in (1..q.q.len()).step_by(61) {
            let t = i as f64 * q.dt;
            worst = worst.max((q.eval(t) - series(t)).abs());
        }
        for &t in &[1e-6, 1e-3, 0.3, 1.1, 2.7] {
            worst = worst.max((q.eval(t) - series(t)).abs());
        }
        assert!(worst < 5e-6, "sup err {worst}");
    }

    #[test]
    fn q_alpha_integral_consistency() {
        // d/dt int Q = Q: check the prefix integral against midpoint sums
        let law = RenewalLaw::exponential(1.0).unwrap();
        let q = QAlpha::compute(&law, 0.5, &grid(0.01, 30.0)).unwrap();
        // exponential: Q(t) = (1 - alpha e^{-(1-alpha) t})/(1-alpha)
        let a = 0.5;
        let iex = |t: f64| (t + a / (1.0 - a) * ((-(1.0 - a) * t).exp() - 1.0) / (1.0 - a)) / (1.0 - a);
        for &t in &[0.05, 0.5, 2.0, 10.0, 25.0] {
            let got = q.integral(t);
            let want = iex(t);
            assert!(
                (got - want).abs() < 2e-6 * (1.0 + want.abs()),
                "t={t}: {got} vs {want}"
            );
        }
    }
}
