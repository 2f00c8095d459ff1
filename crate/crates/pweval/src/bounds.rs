//! The catalog of computable lower and upper bounds for the point-evaluation
//! constant, the p-sweep that tabulates the best of each side, and the
//! two-sided bracket for the p -> 0 limit constant.

use crate::error::{PwError, Result};
use crate::extremal::{self, NormQuality, ZeroSequence};
use crate::numerics::{self, QuadratureConfig};
use crate::special::{self, sinc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Lower => write!(f, "lower"),
            Side::Upper => write!(f, "upper"),
        }
    }
}

/// One bound: the unit of every sweep and table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRecord {
    pub p: f64,
    pub value: f64,
    pub side: Side,
    pub method: String,
    pub err: f64,
}

impl BoundRecord {
    fn new(p: f64, value: f64, side: Side, method: &str, err: f64) -> Self {
        BoundRecord {
            p,
            value,
            side,
            method: method.to_string(),
            err,
        }
    }
}

/// Lower bound from an even test function with f(0) = 1: the reciprocal of
/// its p-th norm power. `tail_exponent` declares |f(x)| <= C x^-d eventually.
pub fn lower_from_test_function<F>(p: f64, f: F, tail_exponent: f64) -> Result<BoundRecord>
where
    F: Fn(f64) -> f64,
{
    if !(p > 0.0) {
        return Err(PwError::Domain(format!("p must be positive, got {p}")));
    }
    let f0 = f(0.0);
    if (f0 - 1.0).abs() > 1e-12 {
        return Err(PwError::Contract(format!(
            "test function must satisfy f(0) = 1, got {f0}"
        )));
    }
    for &x in &[0.37, 1.21, 2.93] {
        if (f(x) - f(-x)).abs() > 1e-10 {
            return Err(PwError::Contract(format!(
                "test function must be even, asymmetric at x = {x}"
            )));
        }
    }
    if !(tail_exponent * p > 1.0) {
        return Err(PwError::Domain(format!(
            "norm diverges: tail exponent {tail_exponent} times p = {p} must exceed 1"
        )));
    }
    let cfg = QuadratureConfig::with_tols(1e-9, 1e-10).with_tail(tail_exponent * p);
    let half = numerics::integrate_semiinfinite(|x| f(x).abs().powf(p), 0.0, &cfg)?;
    let norm = 2.0 * half.value;
    let err = 2.0 * half.error_estimate / (norm * norm);
    Ok(BoundRecord::new(
        p,
        1.0 / norm,
        Side::Lower,
        "test-function",
        err,
    ))
}

/// Lower bound from the Bessel-profile family f_p; the profile decays like
/// x^(-2/p), so the p-th power always has an integrable square-law tail.
pub fn lower_sweep_fp(p: f64) -> Result<BoundRecord> {
    if !(0.5..=8.0).contains(&p) {
        return Err(PwError::Domain(format!(
            "profile sweep covers 0.5 <= p <= 8, got {p}"
        )));
    }
    let mut rec = lower_from_test_function(p, |x| special::f_p_eval(p, x).unwrap(), 2.0 / p)?;
    rec.method = "fp-test".into();
    Ok(rec)
}

/// Lower bound from the gamma-quotient family at a fixed tail offset.
pub fn lower_g_alpha(p: f64, alpha: f64) -> Result<BoundRecord> {
    if !(alpha > 0.5 + 0.5 / p) {
        return Err(PwError::Domain(format!(
            "need alpha > 1/2 + 1/(2p) for a finite norm, got alpha = {alpha} at p = {p}"
        )));
    }
    let zs = ZeroSequence::pure_tail(alpha.min(2.5))?;
    let norm = extremal::norm_p(&zs, p, NormQuality::Final)?;
    Ok(BoundRecord::new(
        p,
        1.0 / norm.value,
        Side::Lower,
        "g-alpha-test",
        norm.error_estimate / (norm.value * norm.value),
    ))
}

/// Best lower bound over the tail offset, maximized by golden section.
pub fn lower_g_alpha_opt(p: f64) -> Result<BoundRecord> {
    let lo = 0.5 + 0.5 / p + 1e-3 + 1e-9;
    let hi = (0.5 + 4.0 / p + 2.0).min(2.5 - 1e-9);
    let obj = |a: f64| match lower_g_alpha(p, a) {
        Ok(r) => -r.value,
        Err(_) => 1e9,
    };
    let m = numerics::minimize_scalar(obj, lo, hi, 1e-7)?;
    let mut rec = lower_g_alpha(p, m.x)?;
    rec.method = "g-alpha-opt".into();
    Ok(rec)
}

/// Upper bound on 2 <= p <= 4 from the sign-aware half-power estimate; the
/// published curve applies the correction (p-2) J(p) to p/2, with
/// J(p) = int_1^inf sinc^2(pi x) (4x + p - 2)/(2x + p - 2)^2 dx.
pub fn korevaar_upper(p: f64) -> Result<BoundRecord> {
    if !(2.0..=4.0).contains(&p) {
        return Err(PwError::Domain(format!(
            "this upper bound covers 2 <= p <= 4, got {p}"
        )));
    }
    let cfg = QuadratureConfig::with_tols(1e-9, 1e-10).with_tail(3.0);
    let j = numerics::integrate_semiinfinite(
        |x| {
            let s = sinc(PI * x);
            s * s * (4.0 * x + p - 2.0) / ((2.0 * x + p - 2.0) * (2.0 * x + p - 2.0))
        },
        1.0,
        &cfg,
    )?;
    let value = 0.5 * p * (1.0 - (p - 2.0) * j.value);
    Ok(BoundRecord::new(
        p,
        value,
        Side::Upper,
        "korevaar-h2",
        0.5 * p * (p - 2.0) * j.error_estimate,
    ))
}

/// The closed-form upper bound 23/12 at p = 4.
pub fn pw4_upper() -> BoundRecord {
    BoundRecord::new(4.0, 23.0 / 12.0, Side::Upper, "pw4", 0.0)
}

/// The crude linear upper bound 25 p / 18, valid for every p > 0.
pub fn crude_upper(p: f64) -> Result<BoundRecord> {
    if !(p > 0.0) {
        return Err(PwError::Domain(format!("p must be positive, got {p}")));
    }
    Ok(BoundRecord::new(
        p,
        25.0 * p / 18.0,
        Side::Upper,
        "crude-25/18",
        0.0,
    ))
}

/// The previously best bound ceil(p/2) for p > 2.
pub fn ceil_upper(p: f64) -> Result<BoundRecord> {
    if !(p > 2.0) {
        return Err(PwError::Domain(format!(
            "the ceiling bound applies for p > 2, got {p}"
        )));
    }
    Ok(BoundRecord::new(
        p,
        (p / 2.0).ceil(),
        Side::Upper,
        "ceil-power-trick",
        0.0,
    ))
}

/// Centering value sqrt(pi p / 2) of the large-p envelope.
pub fn envelope_infinity(p: f64) -> f64 {
    (PI * p / 2.0).sqrt()
}

/// Propagate bounds along integer power ratios: an upper bound at p yields
/// k times the value at q = k p; a lower bound at q yields value / k at
/// p = q / k. Non-integer ratios produce nothing.
pub fn power_trick_propagate(records: &[BoundRecord], targets: &[f64]) -> Vec<BoundRecord> {
    let mut out = Vec::new();
    for &q in targets {
        for r in records {
            match r.side {
                Side::Upper => {
                    let k = q / r.p;
                    let kr = k.round();
                    if kr >= 2.0 && (k - kr).abs() < 1e-9 {
                        out.push(BoundRecord::new(
                            q,
                            kr * r.value,
                            Side::Upper,
                            "power-trick-propagated",
                            kr * r.err,
                        ));
                    }
                }
                Side::Lower => {
                    let k = r.p / q;
                    let kr = k.round();
                    if kr >= 2.0 && (k - kr).abs() < 1e-9 {
                        out.push(BoundRecord::new(
                            q,
                            r.value / kr,
                            Side::Lower,
                            "power-trick-propagated",
                            r.err / kr,
                        ));
                    }
                }
            }
        }
    }
    out
}

/// Upper-bound objective for the p -> 0 limit constant at Hoelder parameter
/// q > 1.
pub fn c0_upper(q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(PwError::Domain(format!("c0 upper needs q > 1, got {q}")));
    }
    let qs = q / (q - 1.0);
    let cfg = QuadratureConfig::with_tols(1e-12, 1e-12);
    let i = numerics::integrate_finite(|x: f64| sinc(PI * x).powf(qs), 0.0, 0.5, &cfg)?;
    let bracket = i.value + 2.0f64.powf(qs - 1.0) / (PI.powf(qs) * (qs - 1.0));
    Ok(2.0f64.powf(q) / q * bracket.powf(q - 1.0))
}

/// Minimize the upper-bound objective over its Hoelder parameter.
pub fn c0_upper_opt() -> Result<(f64, f64)> {
    let m = numerics::minimize_scalar(|q| c0_upper(q).unwrap_or(f64::INFINITY), 1.1, 3.0, 1e-8)?;
    Ok((m.x, m.value))
}

/// Lower bound for the p -> 0 limit constant at envelope parameter
/// gamma > 1/2: the reciprocal of the two-piece envelope integral.
pub fn c0_lower(gamma: f64) -> Result<f64> {
    if !(gamma > 0.5) {
        return Err(PwError::Domain(format!(
            "c0 lower needs gamma > 1/2, got {gamma}"
        )));
    }
    let cfg = QuadratureConfig::with_tols(1e-10, 1e-10);
    let eps = 1e-8;
    // the endpoint x = 1 is benign but has a logarithmic derivative; a
    // sliver on each side is bounded by its endpoint value
    let i1 = numerics::integrate_finite(
        |x: f64| (-gamma * (1.0 - x) * (-x).ln_1p() - gamma * (1.0 + x) * x.ln_1p()).exp(),
        0.0,
        1.0 - eps,
        &cfg,
    )?;
    let sliver = eps * 2.0f64.powf(-2.0 * gamma);
    let tail_cfg = QuadratureConfig::with_tols(2e-9, 1e-10).with_tail(2.0 * gamma);
    let i2 = numerics::integrate_semiinfinite(
        |x: f64| (gamma * (x - 1.0) * (x - 1.0).ln() - gamma * (1.0 + x) * (1.0 + x).ln()).exp(),
        1.0 + eps,
        &tail_cfg,
    )?;
    Ok(1.0 / (gamma * (i1.value + i2.value + 2.0 * sliver)))
}

/// Maximize the lower bound over its envelope parameter.
pub fn c0_lower_opt() -> Result<(f64, f64)> {
    let m = numerics::minimize_scalar(
        |g| -c0_lower(g).unwrap_or(f64::NEG_INFINITY),
        0.6,
        1.4,
        1e-8,
    )?;
    Ok((m.x, -m.value))
}

/// Best lower and upper records for each grid point, with the winning method
/// tags attached. Rows come back sorted by p, lower before upper.
pub fn sweep(p_grid: &[f64]) -> Result<Vec<BoundRecord>> {
    for &p in p_grid {
        if !(p > 0.0 && p <= 8.0) {
            return Err(PwError::Domain(format!(
                "sweep grid must lie in (0, 8], got {p}"
            )));
        }
    }
    let per_point: Vec<Result<Vec<BoundRecord>>> = p_grid
        .par_iter()
        .map(|&p| {
            let mut recs: Vec<BoundRecord> = Vec::new();
            if (0.5..=8.0).contains(&p) {
                recs.push(lower_sweep_fp(p)?);
            }
            if let Ok(r) = lower_g_alpha_opt(p) {
                recs.push(r);
            }
            if (2.0..=4.0).contains(&p) {
                recs.push(korevaar_upper(p)?);
            }
            if (p - 4.0).abs() < 1e-12 {
                recs.push(pw4_upper());
            }
            recs.push(crude_upper(p)?);
            if p > 2.0 {
                recs.push(ceil_upper(p)?);
            }
            // propagate through halving/doubling where the partner value is
            // computable
            for k in [2.0, 3.0] {
                let q_up = p / k;
                if (2.0..=4.0).contains(&q_up) {
                    recs.extend(power_trick_propagate(&[korevaar_upper(q_up)?], &[p]));
                }
                let q_down = p * k;
                if (0.5..=8.0).contains(&q_down) {
                    recs.extend(power_trick_propagate(&[lower_sweep_fp(q_down)?], &[p]));
                }
            }
            Ok(recs)
        })
        .collect();
    let mut out = Vec::with_capacity(2 * p_grid.len());
    for recs in per_point {
        let recs = recs?;
        let best_lower = recs
            .iter()
            .filter(|r| r.side == Side::Lower)
            .max_by(|a, b| a.value.total_cmp(&b.value));
        let best_upper = recs
            .iter()
            .filter(|r| r.side == Side::Upper)
            .min_by(|a, b| a.value.total_cmp(&b.value));
        if let Some(r) = best_lower {
            out.push(r.clone());
        }
        if let Some(r) = best_upper {
            out.push(r.clone());
        }
    }
    out.sort_by(|a, b| a.p.total_cmp(&b.p).then_with(|| format!("{}", a.side).cmp(&format!("{}", b.side))));
    Ok(out)
}
