//! Numerical search for the extremal function of the point-evaluation
//! problem over parameterized real zero sets, plus the zero-set-indexed
//! quantities that certify or diagnose a candidate: stationarity residuals,
//! separation thresholds and certificates, the origin representation
//! identity, the half-power kernel bound, and the sign-function upper bound
//! at p = 1.
//!
//! A candidate is encoded by its first N positive zeros t_1 < ... < t_N plus
//! a tail offset alpha placing every later zero at n + alpha - 1. Replacing
//! the first N zeros of the alpha lattice leaves the closed form
//!
//!   phi(x) = prod_{n<=N} (1 - x^2/t_n^2) * g_{alpha+N}(x),
//!
//! which keeps the exponential type exactly pi and has no removable
//! singularities to patch.

use crate::error::{PwError, Result};
use crate::numerics::{self, QuadratureConfig, QuadratureResult};
use crate::special::{g_script, log_abs_g_alpha, sin_pi};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// N free positive zeros plus the lattice offset for the remaining ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroSequence {
    t: Vec<f64>,
    alpha: f64,
}

impl ZeroSequence {
    /// Validates ordering, positivity, and that the free zeros stay below the
    /// replaced part of the lattice: t_N < N + alpha - 1.
    pub fn new(t: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.5 + 1e-12) {
            return Err(PwError::Domain(format!(
                "tail offset must lie in (0, 5/2], got {alpha}"
            )));
        }
        let n = t.len();
        for (i, &ti) in t.iter().enumerate() {
            if !(ti > 0.0) || !ti.is_finite() {
                return Err(PwError::Domain(format!(
                    "zero #{} = {ti} not positive",
                    i + 1
                )));
            }
            if i > 0 && !(ti > t[i - 1]) {
                return Err(PwError::Domain(format!(
                    "zeros must be strictly increasing, got t[{}] = {} after {}",
                    i + 1,
                    ti,
                    t[i - 1]
                )));
            }
        }
        // the free block must end before the first tail zero at n + alpha
        if n > 0 && !(t[n - 1] < n as f64 + alpha) {
            return Err(PwError::Domain(format!(
                "largest free zero {} must stay below the first tail zero {}",
                t[n - 1],
                n as f64 + alpha
            )));
        }
        Ok(ZeroSequence { t, alpha })
    }

    /// Lattice-only candidate: zeros at alpha, alpha + 1, ...
    pub fn pure_tail(alpha: f64) -> Result<Self> {
        ZeroSequence::new(Vec::new(), alpha)
    }

    /// Zeros at the positive integers (the known extremal at p = 2).
    pub fn integer_lattice() -> Self {
        ZeroSequence::new(Vec::new(), 1.0).unwrap()
    }

    pub fn n_free(&self) -> usize {
        self.t.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn free_zeros(&self) -> &[f64] {
        &self.t
    }

    /// k-th positive zero, 1-indexed; after the free block the zeros sit at
    /// k + alpha - 1.
    pub fn zero(&self, k: usize) -> f64 {
        assert!(k >= 1);
        if k <= self.t.len() {
            self.t[k - 1]
        } else {
            k as f64 + self.alpha - 1.0
        }
    }

    /// Extend with near-lattice zeros so a search in higher dimension can
    /// restart from this candidate.
    pub fn embed(&self, n_new: usize) -> Result<ZeroSequence> {
        let n_old = self.t.len();
        assert!(n_new >= n_old);
        let mut t = self.t.clone();
        for k in n_old + 1..=n_new {
            let eps = 1e-6 * (n_new - k + 1) as f64;
            t.push(k as f64 + self.alpha - 1.0 - eps);
        }
        ZeroSequence::new(t, self.alpha)
    }
}

/// ln |phi(x)| and the sign of phi(x).
pub fn log_abs_phi(zs: &ZeroSequence, x: f64) -> (f64, f64) {
    let x = x.abs();
    let mut l = 0.0;
    let mut s = 1.0;
    for &t in &zs.t {
        let f = 1.0 - (x / t) * (x / t);
        if f == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        l += f.abs().ln();
        s *= f.signum();
    }
    let (lg, sg) = log_abs_g_alpha(zs.alpha + zs.t.len() as f64, x);
    (l + lg, s * sg)
}

/// The candidate extremal function; phi(0) = 1, even, vanishing exactly at
/// the encoded zero set.
pub fn phi_eval(zs: &ZeroSequence, x: f64) -> f64 {
    let (l, s) = log_abs_phi(zs, x);
    s * l.exp()
}

fn abs_phi_pow(zs: &ZeroSequence, p: f64, x: f64) -> f64 {
    let (l, _) = log_abs_phi(zs, x);
    (p * l).exp()
}

/// Accuracy tier for the norm and residual integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormQuality {
    /// Fast objective evaluations inside the optimizer.
    Search,
    /// Reported values and bound validity.
    Final,
}

impl NormQuality {
    fn abs_tol(self) -> f64 {
        match self {
            NormQuality::Search => 1e-8,
            NormQuality::Final => 1e-9,
        }
    }
}

// Staged cell integration between consecutive zeros with a fitted power-law
// remainder. `cell_splits` may add interior breakpoints inside a cell;
// `cell_exponent` is the decay rate of the cell integrals themselves.
fn cell_sum_with_tail<F, S>(
    zs: &ZeroSequence,
    integrand: &F,
    cell_splits: &S,
    cell_exponent: f64,
    abs_tol: f64,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
    S: Fn(usize, f64, f64) -> Vec<f64>,
{
    let n_free = zs.n_free();
    let cell_cfg = QuadratureConfig {
        abs_tol: (abs_tol / 1024.0).max(1e-307),
        rel_tol: 1e-7,
        max_depth: 30,
        tail_exponent: None,
    };
    let mut n_cells = 0usize;
    let mut lattice_mids: Vec<f64> = Vec::new();
    let mut lattice_vals: Vec<f64> = Vec::new();
    let mut err_sum = 0.0;
    let mut nodes = 0usize;
    let mut total = 0.0;
    let mut stage = (n_free + 32).max(48);
    const CELL_CAP: usize = 250_000;
    loop {
        while n_cells < stage {
            let k = n_cells + 1;
            let a = if k == 1 { 0.0 } else { zs.zero(k - 1) };
            let b = zs.zero(k);
            let mut pts = vec![a];
            for s in cell_splits(k, a, b) {
                if s > a + 1e-13 && s < b - 1e-13 {
                    pts.push(s);
                }
            }
            pts.push(b);
            let seeds: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
            let r = match numerics::adaptive_panels(integrand, &seeds, &cell_cfg) {
                Ok(r) => r,
                Err(PwError::Convergence {
                    best, err_estimate, ..
                }) => QuadratureResult {
                    value: best,
                    error_estimate: err_estimate,
                    nodes_used: 0,
                },
                Err(e) => return Err(e),
            };
            nodes += r.nodes_used;
            total += r.value;
            err_sum += r.error_estimate;
            n_cells += 1;
            if k >= n_free + 2 {
                lattice_mids.push(0.5 * (a + b));
                lattice_vals.push(r.value);
            }
        }
        if lattice_vals.len() >= 8 {
            let k = lattice_vals.len().min(8);
            let (rem, unc) = numerics::tail_fit(
                &lattice_mids[lattice_mids.len() - k..],
                &lattice_vals[lattice_vals.len() - k..],
                cell_exponent,
            );
            let value = total + rem;
            if unc <= 0.5 * abs_tol || (rem.abs() <= 0.25 * abs_tol && unc <= abs_tol) {
                return Ok(QuadratureResult {
                    value,
                    error_estimate: err_sum + unc,
                    nodes_used: nodes,
                });
            }
            if n_cells >= CELL_CAP {
                return Err(PwError::Convergence {
                    msg: format!("zero-cell tail not resolved after {n_cells} cells"),
                    best: value,
                    err_estimate: err_sum + unc,
                });
            }
        }
        stage *= 2;
    }
}

/// ||phi||_p^p computed cell-by-cell between consecutive zeros, with the
/// remainder of the cell sum obtained from the declared tail decay
/// (2 alpha - 1) p.
pub fn norm_p(zs: &ZeroSequence, p: f64, quality: NormQuality) -> Result<QuadratureResult> {
    if !(p > 0.0) {
        return Err(PwError::Domain(format!("norm_p: p must be > 0, got {p}")));
    }
    let e = (2.0 * zs.alpha - 1.0) * p;
    if !(e > 1.0) {
        return Err(PwError::Domain(format!(
            "norm_p: tail diverges, (2 alpha - 1) p = {e} <= 1"
        )));
    }
    let f = |x: f64| abs_phi_pow(zs, p, x);
    let nosplit = |_k: usize, _a: f64, _b: f64| Vec::new();
    let half = cell_sum_with_tail(zs, &f, &nosplit, e, quality.abs_tol() / 2.0)?;
    Ok(QuadratureResult {
        value: 2.0 * half.value,
        error_estimate: 2.0 * half.error_estimate,
        nodes_used: half.nodes_used,
    })
}

// G(t) = int_0^inf |phi|^p / (x^2 - t^2) dx for a zero t of phi. The
// integrand decays two orders faster than |phi|^p itself.
fn g_integral(zs: &ZeroSequence, p: f64, t: f64, abs_tol: f64) -> Result<QuadratureResult> {
    let e = (2.0 * zs.alpha - 1.0) * p + 2.0;
    let f = move |x: f64| {
        let d = x * x - t * t;
        if d == 0.0 {
            return 0.0;
        }
        abs_phi_pow(zs, p, x) / d
    };
    let nosplit = |_k: usize, _a: f64, _b: f64| Vec::new();
    cell_sum_with_tail(zs, &f, &nosplit, e, abs_tol)
}

/// Normalized stationarity residual attached to one zero: vanishes at the
/// true extremal. `k` indexes the positive zeros from 1 (free or lattice).
pub fn residual_at_zero(zs: &ZeroSequence, p: f64, k: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(PwError::Domain(format!(
            "zero residuals need p >= 1, got {p}"
        )));
    }
    let t = zs.zero(k);
    let quality = NormQuality::Final;
    let norm = norm_p(zs, p, quality)?;
    let g = g_integral(zs, p, t, quality.abs_tol())?;
    Ok(1.0 + 2.0 * t * t * g.value / norm.value)
}

/// Normalized pair residual for two distinct positive zeros.
pub fn residual_pair(zs: &ZeroSequence, p: f64, k: usize, j: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(PwError::Domain(format!(
            "zero residuals need p >= 1, got {p}"
        )));
    }
    if k == j {
        return Err(PwError::Domain("pair residual needs distinct zeros".into()));
    }
    let (t, s) = (zs.zero(k), zs.zero(j));
    let q = NormQuality::Final;
    let norm = norm_p(zs, p, q)?;
    let gt = g_integral(zs, p, t, q.abs_tol())?;
    let gs = g_integral(zs, p, s, q.abs_tol())?;
    Ok(1.0 + 2.0 * (t.powi(3) * gt.value - s.powi(3) * gs.value) / ((t - s) * norm.value))
}

/// Residuals for every free zero.
pub fn orthogonality_residuals(zs: &ZeroSequence, p: f64) -> Result<Vec<f64>> {
    orthogonality_residuals_with(zs, p, NormQuality::Final)
}

fn orthogonality_residuals_with(
    zs: &ZeroSequence,
    p: f64,
    quality: NormQuality,
) -> Result<Vec<f64>> {
    if !(p >= 1.0) {
        return Err(PwError::Domain(format!(
            "zero residuals need p >= 1, got {p}"
        )));
    }
    let mut out = Vec::with_capacity(zs.n_free());
    let norm = norm_p(zs, p, quality)?;
    for k in 1..=zs.n_free() {
        let t = zs.zero(k);
        let g = g_integral(zs, p, t, quality.abs_tol())?;
        out.push(1.0 + 2.0 * t * t * g.value / norm.value);
    }
    Ok(out)
}

/// Right-hand side of the origin representation identity for exponent q:
/// equals 1 for any candidate with real simple zeros when evaluated exactly.
pub fn representation_check(zs: &ZeroSequence, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(PwError::Domain(format!("q must be > 0, got {q}")));
    }
    if !((2.0 * zs.alpha - 1.0) * q > 0.0) {
        return Err(PwError::Domain(format!(
            "tail sum diverges: (2 alpha - 1) q = {} <= 0",
            (2.0 * zs.alpha - 1.0) * q
        )));
    }
    // cell k (1-indexed) lies between zero k-1 and zero k and carries the
    // kernel sin(pi q (x - (k-1))) / (pi x)
    let integrand = move |x: f64| {
        let n = count_zeros_below(zs, x);
        let kernel = if x < 1e-12 {
            q
        } else {
            sin_pi(q * (x - n as f64)) / (PI * x)
        };
        abs_phi_pow(zs, q, x) * kernel
    };
    let splits = move |k: usize, a: f64, b: f64| {
        // zeros of sin(pi q (x - n)) at x = n + j/q
        let n = (k - 1) as f64;
        let mut v = Vec::new();
        let j0 = ((a - n) * q).ceil() as i64;
        let j1 = ((b - n) * q).floor() as i64;
        for j in j0..=j1 {
            v.push(n + j as f64 / q);
        }
        v
    };
    let e_cells = (2.0 * zs.alpha - 1.0) * q + 1.0;
    let half = cell_sum_with_tail(zs, &integrand, &splits, e_cells, 5e-9)?;
    Ok(2.0 * half.value)
}

fn count_zeros_below(zs: &ZeroSequence, x: f64) -> usize {
    let n = zs.n_free();
    let mut c = zs.t.partition_point(|&t| t < x);
    if c == n {
        // lattice zeros at n + alpha, n + alpha + 1, ...
        let first = n as f64 + zs.alpha;
        if x > first {
            c += (x - first).floor() as usize + 1;
        }
    }
    c
}

/// The half-power kernel attached to the zero set: on the n-th gap it equals
/// sin((p/2) pi (x - n)) / (pi x).
pub fn kernel_k(p: f64, zs: &ZeroSequence, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let n = count_zeros_below(zs, x) as f64;
    sin_pi(0.5 * p * (x - n)) / (PI * x)
}

/// 2 int_0^infty max(K, 0)^2 dx: an upper bound for the point-evaluation
/// constant when the zeros are those of the true extremal, and a diagnostic
/// otherwise.
pub fn kplus_bound(p: f64, zs: &ZeroSequence) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(PwError::Domain(format!(
            "kplus_bound needs p >= 1, got {p}"
        )));
    }
    let integrand = move |x: f64| {
        if x < 1e-12 {
            return 0.25 * p * p;
        }
        let n = count_zeros_below(zs, x) as f64;
        let s = sin_pi(0.5 * p * (x - n));
        if s <= 0.0 {
            0.0
        } else {
            let k = s / (PI * x);
            k * k
        }
    };
    let splits = move |k: usize, a: f64, b: f64| {
        // sign changes of sin((p/2) pi (x - n)) at x = n + 2j/p
        let n = (k - 1) as f64;
        let mut v = Vec::new();
        let j0 = ((a - n) * 0.5 * p).ceil() as i64;
        let j1 = ((b - n) * 0.5 * p).floor() as i64;
        for j in j0..=j1 {
            v.push(n + 2.0 * j as f64 / p);
        }
        v
    };
    let half = cell_sum_with_tail(zs, &integrand, &splits, 2.0, 2e-9)?;
    Ok(2.0 * half.value)
}

/// Separation thresholds evaluated on the candidate zero set.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub p: f64,
    pub t1: f64,
    pub min_gap: f64,
    /// t_1 >= 2/pi (known for 2 <= p <= 4)
    pub t1_ge_2_over_pi: bool,
    /// t_1 >= sqrt(2)/pi (known for all p)
    pub t1_ge_sqrt2_over_pi: bool,
    /// consecutive gaps >= 2/3 (known for 2 <= p <= 4)
    pub gaps_ge_two_thirds: bool,
    /// consecutive gaps >= 3/5 (known for p > 2)
    pub gaps_ge_three_fifths: bool,
    /// t_n >= n/e for even candidates
    pub jensen_even: bool,
    pub margin_t1: f64,
    pub margin_gap: f64,
}

pub fn separation_diagnostics(zs: &ZeroSequence, p: f64) -> SeparationReport {
    let n_check = zs.n_free() + 2;
    let t1 = zs.zero(1);
    let mut min_gap = f64::INFINITY;
    let mut jensen = t1 >= 1.0 / std::f64::consts::E;
    let mut prev = t1;
    for k in 2..=n_check {
        let z = zs.zero(k);
        min_gap = min_gap.min(z - prev);
        if z < k as f64 / std::f64::consts::E {
            jensen = false;
        }
        prev = z;
    }
    SeparationReport {
        p,
        t1,
        min_gap,
        t1_ge_2_over_pi: t1 >= 2.0 / PI,
        t1_ge_sqrt2_over_pi: t1 >= 2.0f64.sqrt() / PI,
        gaps_ge_two_thirds: min_gap >= 2.0 / 3.0,
        gaps_ge_three_fifths: min_gap >= 0.6,
        jensen_even: jensen,
        margin_t1: t1 - 2.0 / PI,
        margin_gap: min_gap - 2.0 / 3.0,
    }
}

/// The two constants (A, B) whose maximum, scaled by the gap delta, must
/// dominate 1 - lambda0(pi delta) for a gap of that size to occur.
/// Parameters: a standing gap bound delta0, a first-zero bound gamma, and the
/// tested gap delta.
pub fn separation_certificate(p: f64, delta0: f64, gamma: f64, delta: f64) -> Result<(f64, f64)> {
    if !(p > 2.0) {
        return Err(PwError::Domain(format!("certificate needs p > 2, got {p}")));
    }
    if !(delta <= 1.5 * delta0) {
        return Err(PwError::Domain(format!(
            "certificate needs delta <= 3 delta0 / 2, got {delta} vs delta0 = {delta0}"
        )));
    }
    if !(gamma >= delta0) {
        return Err(PwError::Domain(format!(
            "certificate needs gamma >= delta0, got {gamma} vs delta0 = {delta0}"
        )));
    }
    let alpha = delta / delta0;
    let beta = delta / (gamma + 0.5 * delta);
    let cfg = QuadratureConfig::with_tols(1e-11, 1e-11);
    let a_int = numerics::integrate_finite(
        |x: f64| {
            let ratio = (g_script(alpha, 1.0 - x).unwrap() / g_script(alpha, x).unwrap()).powf(p);
            let cmp = 2.0 * ((3.0 - 2.0 * x) / (1.0 + 2.0 * x)).powf(p - 1.0) * ratio;
            (0.25 - x * x) * (2.0 - cmp.min(1.0))
        },
        0.0,
        0.5,
        &cfg,
    )?;
    let a = 4.0 / 3.0 * a_int.value;
    let ln3 = 3.0f64.ln();
    let b = (16.0 / 3.0 - 4.0 * ln3 + beta * beta * (4.0 + 3.0 * ln3) / 3.0)
        * (1.0 / ((4.0 - beta * beta).sqrt() + 2.0)).powi(2);
    Ok((a, b))
}

/// Components of the sign-function upper bound at p = 1.
#[derive(Debug, Clone, Serialize)]
pub struct HbUpperReport {
    /// The bound itself: reciprocal norm plus the spectral window term.
    pub value: f64,
    pub norm_recip: f64,
    pub window_term: f64,
    /// Quadrature error plus the allowance for the excluded edge windows.
    pub error_estimate: f64,
    pub epsilon: f64,
}

const HB_EPSILON: f64 = 1e-3;

/// Upper bound for the p = 1 constant built from the sign pattern of phi.
///
/// The transform of the sign function splits into a lattice-aligned
/// alternating step with closed-form transform and a compactly supported
/// correction transformed exactly; the bound integrates |1 - transform| over
/// (-pi(1-eps), pi(1-eps)), away from the edge where the step transform
/// degenerates. On zero sets whose L1 norm diverges (tail offset <= 1) the
/// spectral factor collapses and the window term alone survives.
pub fn hb_upper_p1(zs: &ZeroSequence) -> Result<HbUpperReport> {
    let eps = HB_EPSILON;
    let alpha = zs.alpha;
    let n_free = zs.n_free();
    let divergent = !((2.0 * alpha - 1.0) > 1.0);
    let (norm_val, norm_err) = if divergent {
        (f64::INFINITY, 0.0)
    } else {
        let r = norm_p(zs, 1.0, NormQuality::Final)?;
        (r.value, r.error_estimate)
    };
    let norm_recip = if divergent { 0.0 } else { 1.0 / norm_val };

    // sign(phi) = Q + r with Q the alternating step over the full alpha
    // lattice; beyond the replaced block the two sign patterns agree because
    // the zero counts coincide.
    let cut = n_free as f64 + alpha;
    for probe in 0..3 {
        let x = cut + probe as f64 + 0.5;
        let (_, s_phi) = log_abs_phi(zs, x);
        if s_phi * q_sign(alpha, x) < 0.0 {
            return Err(PwError::Construction(format!(
                "sign pattern mismatch beyond the compact window at x = {x}"
            )));
        }
    }
    let mut breaks: Vec<f64> = Vec::new();
    for k in 1..=n_free {
        breaks.push(zs.zero(k));
    }
    for k in 0..n_free {
        breaks.push(alpha + k as f64);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    // piecewise value of sign(phi) - Q on (0, cut)
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    let mut lo = 0.0;
    for &b in breaks.iter().chain(std::iter::once(&cut)) {
        if b <= lo + 1e-14 {
            continue;
        }
        let mid = 0.5 * (lo + b);
        let (_, s_phi) = log_abs_phi(zs, mid);
        let v = s_phi - q_sign(alpha, mid);
        if v.abs() > 1e-13 {
            pieces.push((lo, b, v));
        }
        lo = b;
    }

    let phat = move |xi: f64| -> f64 {
        if norm_val.is_infinite() {
            return 0.0;
        }
        let qhat = if xi.abs() < 1e-8 {
            2.0 * (alpha - 0.5)
        } else {
            2.0 * ((alpha - 0.5) * xi).sin() / (xi * (0.5 * xi).cos())
        };
        let mut rhat = 0.0;
        for &(a, b, v) in &pieces {
            rhat += if xi.abs() < 1e-8 {
                2.0 * v * (b - a)
            } else {
                2.0 * v * ((b * xi).sin() - (a * xi).sin()) / xi
            };
        }
        (qhat + rhat) / norm_val
    };
    let cfg = QuadratureConfig::with_tols(1e-9, 1e-9);
    let window = numerics::integrate_finite(
        |xi: f64| (1.0 - phat(xi)).abs(),
        0.0,
        PI * (1.0 - eps),
        &cfg,
    )?;
    let window_term = window.value / PI;
    let value = norm_recip + window_term;
    let edge_allowance = eps;
    let error_estimate = if divergent {
        window.error_estimate / PI + edge_allowance
    } else {
        norm_err / (norm_val * norm_val) + window.error_estimate / PI + edge_allowance
    };
    Ok(HbUpperReport {
        value,
        norm_recip,
        window_term,
        error_estimate,
        epsilon: eps,
    })
}

fn q_sign(alpha: f64, x: f64) -> f64 {
    let x = x.abs();
    if x < alpha {
        1.0
    } else {
        let count = (x - alpha).floor() as i64 + 1;
        if count % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Options for the zero-set search.
#[derive(Debug, Clone)]
pub struct SearchOpts {
    pub max_evals: usize,
    pub restarts: usize,
    pub seed: u64,
    pub polish: bool,
}

impl Default for SearchOpts {
    fn default() -> Self {
        SearchOpts {
            max_evals: 6000,
            restarts: 3,
            seed: 0,
            polish: true,
        }
    }
}

/// Converged (or best-effort) candidate with its certified bound.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremalSearchResult {
    pub zeros: ZeroSequence,
    pub p: f64,
    pub norm_p_p: f64,
    pub lower_bound: f64,
    pub ortho_residual_max: f64,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct ParamSpace {
    n: usize,
    a_min: f64,
    a_max: f64,
}

impl ParamSpace {
    fn new(p: f64, n: usize) -> Self {
        ParamSpace {
            n,
            a_min: 0.5 + 0.5 / p + 1e-3,
            a_max: 2.5,
        }
    }

    fn encode(&self, zs: &ZeroSequence) -> Vec<f64> {
        let mut th = Vec::with_capacity(self.n + 1);
        let mut prev = 0.0;
        for &t in zs.free_zeros() {
            th.push((t - prev).ln());
            prev = t;
        }
        let a = zs.alpha().clamp(self.a_min + 1e-9, self.a_max - 1e-9);
        let u = (a - self.a_min) / (self.a_max - self.a_min);
        th.push((u / (1.0 - u)).ln());
        th
    }

    fn decode(&self, th: &[f64]) -> Option<ZeroSequence> {
        let mut t = Vec::with_capacity(self.n);
        let mut acc = 0.0;
        for &g in &th[..self.n] {
            acc += g.exp();
            t.push(acc);
        }
        let u = 1.0 / (1.0 + (-th[self.n]).exp());
        let alpha = self.a_min + (self.a_max - self.a_min) * u;
        // the search stays in the replaced-lattice box t_N < N + alpha - 1
        if acc >= self.n as f64 + alpha - 1.0 {
            return None;
        }
        ZeroSequence::new(t, alpha).ok()
    }
}

fn objective(space: &ParamSpace, p: f64, th: &[f64]) -> f64 {
    match space.decode(th) {
        Some(zs) => match norm_p(&zs, p, NormQuality::Search) {
            Ok(r) => r.value,
            Err(_) => 1e9,
        },
        None => {
            // steer back toward the feasible region
            let mut acc = 0.0;
            for &g in &th[..space.n] {
                acc += g.exp();
            }
            let u = 1.0 / (1.0 + (-th[space.n]).exp());
            let alpha = space.a_min + (space.a_max - space.a_min) * u;
            let excess = (acc - (space.n as f64 + alpha - 1.0)).max(0.0);
            1e6 * (1.0 + excess)
        }
    }
}

/// Minimize ||phi||_p^p over the zero-set family by Nelder-Mead with
/// restarts and a coordinate polish, for 1 <= p <= 4 where the extremal is
/// unique. The returned lower bound 1/||phi||_p^p is valid regardless of
/// convergence.
pub fn minimize_norm(
    p: f64,
    n_zeros: usize,
    init: Option<&ZeroSequence>,
    opts: &SearchOpts,
) -> Result<ExtremalSearchResult> {
    if !(1.0 <= p && p <= 4.0) {
        return Err(PwError::Domain(format!(
            "search restricted to 1 <= p <= 4, got {p}"
        )));
    }
    if n_zeros == 0 {
        return Err(PwError::Domain(
            "search needs at least one free zero".into(),
        ));
    }
    let space = ParamSpace::new(p, n_zeros);
    let init_zs = match init {
        Some(z) => {
            if z.n_free() != n_zeros {
                z.embed(n_zeros)?
            } else {
                z.clone()
            }
        }
        None => {
            let a0 = (0.5 + 1.0 / p).clamp(space.a_min + 0.02, space.a_max - 0.05);
            let t: Vec<f64> = (1..=n_zeros)
                .map(|k| k as f64 + a0 - 1.0 - 0.02)
                .collect();
            ZeroSequence::new(t, a0 + 0.01)?
        }
    };
    let mut th = space.encode(&init_zs);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut evals = 0usize;
    let mut best_val = objective(&space, p, &th);
    evals += 1;
    let mut converged = false;
    let noise_floor: f64 = 3e-8;
    for restart in 0..opts.restarts.max(1) {
        let scale = 0.06 * 0.25f64.powi(restart as i32);
        let jitter = if restart == 0 { 0.0 } else { 0.2 * scale };
        let dim = th.len();
        let mut base = th.clone();
        for b in base.iter_mut() {
            *b += jitter * (rng.gen::<f64>() - 0.5);
        }
        let mut simplex: Vec<Vec<f64>> = vec![base.clone()];
        let mut fvals: Vec<f64> = vec![objective(&space, p, &base)];
        evals += 1;
        for i in 0..dim {
            let mut v = base.clone();
            v[i] += scale * if i == dim - 1 { 4.0 } else { 1.0 };
            fvals.push(objective(&space, p, &v));
            simplex.push(v);
            evals += 1;
        }
        let mut local = 0usize;
        loop {
            let mut idx: Vec<usize> = (0..=dim).collect();
            idx.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
            let lo = idx[0];
            let hi = idx[dim];
            let second_hi = idx[dim - 1];
            let spread = fvals[hi] - fvals[lo];
            let mut diam: f64 = 0.0;
            for s in simplex.iter() {
                for d in 0..dim {
                    diam = diam.max((s[d] - simplex[lo][d]).abs());
                }
            }
            if spread < noise_floor.max(1e-12) && diam < 1e-7 {
                converged = true;
                break;
            }
            if local >= opts.max_evals {
                break;
            }
            let mut cen = vec![0.0; dim];
            for (i, s) in simplex.iter().enumerate() {
                if i == hi {
                    continue;
                }
                for d in 0..dim {
                    cen[d] += s[d];
                }
            }
            for c in cen.iter_mut() {
                *c /= dim as f64;
            }
            let refl: Vec<f64> = (0..dim)
                .map(|d| cen[d] + (cen[d] - simplex[hi][d]))
                .collect();
            let f_refl = objective(&space, p, &refl);
            evals += 1;
            local += 1;
            if f_refl < fvals[lo] {
                let expand: Vec<f64> = (0..dim)
                    .map(|d| cen[d] + 2.0 * (cen[d] - simplex[hi][d]))
                    .collect();
                let f_exp = objective(&space, p, &expand);
                evals += 1;
                local += 1;
                if f_exp < f_refl {
                    simplex[hi] = expand;
                    fvals[hi] = f_exp;
                } else {
                    simplex[hi] = refl;
                    fvals[hi] = f_refl;
                }
            } else if f_refl < fvals[second_hi] {
                simplex[hi] = refl;
                fvals[hi] = f_refl;
            } else {
                let contr: Vec<f64> = (0..dim)
                    .map(|d| cen[d] + 0.5 * (simplex[hi][d] - cen[d]))
                    .collect();
                let f_contr = objective(&space, p, &contr);
                evals += 1;
                local += 1;
                if f_contr < fvals[hi] {
                    simplex[hi] = contr;
                    fvals[hi] = f_contr;
                } else {
                    let best = simplex[lo].clone();
                    for i in 0..=dim {
                        if i == lo {
                            continue;
                        }
                        for d in 0..dim {
                            simplex[i][d] = best[d] + 0.5 * (simplex[i][d] - best[d]);
                        }
                        fvals[i] = objective(&space, p, &simplex[i]);
                        evals += 1;
                        local += 1;
                    }
                }
            }
        }
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        if fvals[idx[0]] < best_val {
            best_val = fvals[idx[0]];
            th = simplex[idx[0]].clone();
        }
    }
    if opts.polish {
        for round in 0..2 {
            let w = 3e-4 * 0.3f64.powi(round);
            for i in 0..th.len() {
                let snapshot = th.clone();
                let g = |s: f64| {
                    let mut v = snapshot.clone();
                    v[i] = s;
                    objective(&space, p, &v)
                };
                if let Ok(m) = numerics::minimize_scalar(g, th[i] - w, th[i] + w, 1e-9) {
                    if m.value < best_val {
                        best_val = m.value;
                        th[i] = m.x;
                    }
                }
                evals += 64;
            }
        }
    }
    let zs = space
        .decode(&th)
        .ok_or_else(|| PwError::Construction("optimizer left the feasible region".into()))?;
    let norm = norm_p(&zs, p, NormQuality::Final)?;
    let residuals = orthogonality_residuals_with(&zs, p, NormQuality::Search)?;
    let ortho_residual_max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(ExtremalSearchResult {
        zeros: zs,
        p,
        norm_p_p: norm.value,
        lower_bound: 1.0 / norm.value,
        ortho_residual_max,
        residuals,
        iterations: evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::sinc;

    #[test]
    fn phi_reduces_to_sinc_without_replacement() {
        let zs = ZeroSequence::integer_lattice();
        for &x in &[0.3, 2.6] {
            assert!((phi_eval(&zs, x) - sinc(PI * x)).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn phi_replacement_by_lattice_is_identity() {
        let zs = ZeroSequence::new(vec![1.0 - 1e-12, 2.0 - 1e-12], 1.0).unwrap();
        for &x in &[0.3, 1.5, 2.6] {
            assert!((phi_eval(&zs, x) - sinc(PI * x)).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn phi_against_truncated_product() {
        // N = 1, t = 0.9, alpha = 1: explicit product with 1e5 factors
        let zs = ZeroSequence::new(vec![0.9], 1.0).unwrap();
        assert!(phi_eval(&zs, 0.9).abs() < 1e-14);
        let x = 1.0f64;
        let mut oracle = 1.0 - x * x / (0.9 * 0.9);
        for n in 2..100_000 {
            let t = n as f64; // lattice n + alpha - 1 with alpha = 1
            oracle *= 1.0 - x * x / (t * t);
        }
        let v = phi_eval(&zs, x);
        assert!(v != 0.0);
        assert!((v - oracle).abs() < 1e-4 * v.abs(), "{v} vs {oracle}");
    }

    #[test]
    fn zero_sequence_validation() {
        assert!(ZeroSequence::new(vec![1.0, 0.5], 1.0).is_err()); // unordered
        assert!(ZeroSequence::new(vec![-0.5], 1.0).is_err()); // negative
        assert!(ZeroSequence::new(vec![2.5], 1.2).is_err()); // above first tail zero
        assert!(ZeroSequence::new(vec![0.9, 1.9], 1.2).is_ok());
        // perturbing a zero upward past the replaced lattice point stays valid
        assert!(ZeroSequence::new(vec![1.1], 1.0).is_ok());
    }

    #[test]
    fn norm_of_sinc_at_p2_is_one() {
        let zs = ZeroSequence::integer_lattice();
        let r = norm_p(&zs, 2.0, NormQuality::Final).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn norm_of_g32_at_p1_is_si_pi() {
        // independent oracle: ||g_{3/2}||_1 = int_0^pi sin(t)/t dt, a plain
        // finite integral
        let si = numerics::integrate_finite(
            sinc,
            0.0,
            PI,
            &QuadratureConfig::with_tols(1e-13, 1e-13),
        )
        .unwrap()
        .value;
        let zs = ZeroSequence::pure_tail(1.5).unwrap();
        let r = norm_p(&zs, 1.0, NormQuality::Final).unwrap();
        assert!((r.value - si).abs() < 2e-9, "{} vs {si}", r.value);
    }

    #[test]
    fn norm_of_sinc_fourth_power() {
        // Parseval oracle: the transform of sinc^2 is the unit triangle, so
        // the integral of sinc^4 is exactly 2/3
        let zs = ZeroSequence::integer_lattice();
        let r = norm_p(&zs, 4.0, NormQuality::Final).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn norm_rejects_divergent_tail() {
        let zs = ZeroSequence::integer_lattice();
        assert!(norm_p(&zs, 1.0, NormQuality::Final).is_err()); // (2a-1)p = 1
    }

    #[test]
    fn lattice_residuals_vanish_at_p2() {
        let zs = ZeroSequence::integer_lattice();
        let r1 = residual_at_zero(&zs, 2.0, 1).unwrap();
        assert!(r1.abs() < 1e-8, "residual(a) at t=1: {r1}");
        let r12 = residual_pair(&zs, 2.0, 1, 2).unwrap();
        assert!(r12.abs() < 1e-8, "residual(b) at (1,2): {r12}");
    }

    #[test]
    fn perturbed_lattice_residual_matches_midpoint_oracle() {
        let zs = ZeroSequence::new(vec![1.1], 1.0).unwrap();
        let mine = residual_at_zero(&zs, 2.0, 1).unwrap();
        assert!(mine.abs() > 1e-3, "perturbation must show up: {mine}");
        // independent oracle: plain midpoint rule on the symmetrized raw
        // integrand plus a power-law extrapolated tail
        let t = 1.1f64;
        let x_max = 3000.0f64;
        let steps = 6_000_000usize;
        let h = x_max / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let x = (i as f64 + 0.5) * h;
            let d = x * x - t * t;
            let f = abs_phi_pow(&zs, 2.0, x);
            acc += f * (2.0 * x * x / d) * h;
        }
        // tail: 400 explicit unit cells of the integrand by midpoint rule,
        // then an inverse-square extrapolation from the last cell integrals
        let mut tail = 0.0;
        let mut cell_vals = [0.0f64; 400];
        for (i, cv) in cell_vals.iter_mut().enumerate() {
            let a = x_max + i as f64;
            let sub = 64;
            let hh = 1.0 / sub as f64;
            let mut s = 0.0;
            for m in 0..sub {
                let x = a + (m as f64 + 0.5) * hh;
                s += abs_phi_pow(&zs, 2.0, x) * (2.0 * x * x / (x * x - t * t)) * hh;
            }
            *cv = s;
            tail += s;
        }
        let mut amp = 0.0;
        for (i, cv) in cell_vals.iter().enumerate().skip(392) {
            let xm = x_max + i as f64 + 0.5;
            amp += cv * xm * xm / 8.0;
        }
        tail += amp / (x_max + 400.0);
        let norm = norm_p(&zs, 2.0, NormQuality::Final).unwrap().value;
        let oracle = (acc + tail) / norm;
        assert!(
            (mine - oracle).abs() < 1e-5,
            "mine {mine} vs oracle {oracle}"
        );
    }

    #[test]
    fn representation_identity_on_lattice() {
        let zs = ZeroSequence::integer_lattice();
        for &q in &[1.0, 2.0] {
            let v = representation_check(&zs, q).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "q = {q}: {v}");
        }
    }

    #[test]
    fn kplus_recovers_unity_at_p2() {
        let zs = ZeroSequence::integer_lattice();
        let v = kplus_bound(2.0, &zs).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn kplus_is_zero_set_free_at_p4() {
        let a = kplus_bound(4.0, &ZeroSequence::integer_lattice()).unwrap();
        let b = kplus_bound(4.0, &ZeroSequence::pure_tail(1.37).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn certificate_values() {
        let (a, b) = separation_certificate(4.0, 0.6, 2.0 / PI, 2.0 / PI).unwrap();
        assert!((a - 0.1440).abs() < 5e-4, "A = {a}");
        assert!((b - 0.1337).abs() < 5e-4, "B = {b}");
        let (a2, b2) = separation_certificate(4.0, 2.0 / PI, 2.0 / PI, 2.0 / 3.0).unwrap();
        assert!((a2 - 0.1387).abs() < 5e-4, "A = {a2}");
        assert!((b2 - 0.1388).abs() < 5e-4, "B = {b2}");
    }

    #[test]
    fn certificate_preconditions() {
        assert!(separation_certificate(2.0, 0.6, 0.7, 0.6).is_err());
        assert!(separation_certificate(4.0, 0.6, 0.7, 1.0).is_err());
        assert!(separation_certificate(4.0, 0.6, 0.5, 0.6).is_err());
    }

    #[test]
    fn diagnostics_on_lattice() {
        let zs = ZeroSequence::integer_lattice();
        let d = separation_diagnostics(&zs, 2.0);
        assert!(d.t1_ge_2_over_pi && d.gaps_ge_two_thirds && d.jensen_even);
        let zs2 = ZeroSequence::new(vec![0.5], 1.0).unwrap();
        let d2 = separation_diagnostics(&zs2, 3.0);
        assert!(!d2.t1_ge_2_over_pi);
    }

    #[test]
    fn hb_upper_dominates_reciprocal_norm() {
        let zs = ZeroSequence::pure_tail(1.5).unwrap();
        let r = hb_upper_p1(&zs).unwrap();
        assert!(r.value >= r.norm_recip);
        assert!(r.window_term >= 0.0);
        // any zero set yields a value above the true constant
        assert!(r.value >= 0.5409288219, "value {}", r.value);
    }

    #[test]
    fn hb_upper_on_divergent_lattice_degenerates() {
        let zs = ZeroSequence::integer_lattice();
        let r = hb_upper_p1(&zs).unwrap();
        assert_eq!(r.norm_recip, 0.0);
        assert!((r.value - (1.0 - HB_EPSILON)).abs() < 1e-9);
        assert!(r.value >= 0.5409288219);
    }

    #[test]
    fn search_smoke_at_p2() {
        let opts = SearchOpts {
            max_evals: 1200,
            restarts: 1,
            seed: 0,
            polish: false,
        };
        let r = minimize_norm(2.0, 2, None, &opts).unwrap();
        assert!((r.lower_bound - 1.0).abs() < 5e-3, "bound {}", r.lower_bound);
    }

    #[test]
    fn search_rejects_out_of_range_p() {
        assert!(minimize_norm(0.8, 4, None, &SearchOpts::default()).is_err());
        assert!(minimize_norm(5.0, 4, None, &SearchOpts::default()).is_err());
    }
}
