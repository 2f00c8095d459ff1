//! Real special functions used across the crate: the gamma and beta
//! functions, sinc, the Bessel-type family f_p, the gamma-quotient family
//! g_alpha, and the auxiliary ratio kernel used by the separation
//! certificates.

use crate::error::{PwError, Result};
use crate::numerics::{self, QuadratureConfig};
use std::f64::consts::PI;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
// Lanczos g = 7, 9 terms (GSL coefficient set)
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    acc
}

/// ln Gamma(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection keeps the Lanczos argument away from 0
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + 7.5;
    SQRT_2PI.ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Gamma(x) on [-170, 170] excluding the poles at nonpositive integers.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(PwError::Domain(format!("gamma: non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(PwError::Domain(format!("gamma: pole at {x}")));
    }
    if x > 171.61 {
        return Err(PwError::Domain(format!(
            "gamma: overflow for x = {x} > 171.61"
        )));
    }
    if x < 0.5 {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return Ok(PI / (sin_pi(x) * gamma_fn(1.0 - x)?));
    }
    Ok(ln_gamma(x).exp())
}

/// Beta function B(a, b) for a, b > 0.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(PwError::Domain(format!(
            "beta: arguments must be positive, got ({a}, {b})"
        )));
    }
    Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
}

/// sin(x)/x with the removable singularity filled.
pub fn sinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// sin(pi t) with range reduction carried out on t itself, so the phase stays
/// accurate for t up to ~1e15.
pub fn sin_pi(t: f64) -> f64 {
    let k = t.round();
    let r = t - k;
    let s = (PI * r).sin();
    if (k as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// cos(pi t), reduced like [`sin_pi`].
pub fn cos_pi(t: f64) -> f64 {
    let k = t.round();
    let r = t - k;
    let c = (PI * r).cos();
    if (k as i64) % 2 == 0 {
        c
    } else {
        -c
    }
}

/// ln |g_alpha(x)| together with the sign of g_alpha(x), valid for any real x
/// and alpha > 0. g_alpha(x) = Gamma(alpha)^2 / (Gamma(alpha-x) Gamma(alpha+x)),
/// with the reflection form taking over at x = alpha - 1/4 to stay clear of
/// the gamma poles.
pub fn log_abs_g_alpha(alpha: f64, x: f64) -> (f64, f64) {
    let x = x.abs();
    if x < alpha - 0.25 {
        (
            2.0 * ln_gamma(alpha) - ln_gamma(alpha - x) - ln_gamma(alpha + x),
            1.0,
        )
    } else {
        let s = sin_pi(alpha - x);
        if s == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        let l = 2.0 * ln_gamma(alpha) - PI.ln() + ln_gamma(1.0 - alpha + x)
            - ln_gamma(alpha + x)
            + s.abs().ln();
        (l, s.signum())
    }
}

/// g_alpha(x) = Gamma(alpha)^2 / (Gamma(alpha-x) Gamma(alpha+x)) for alpha > 0.
pub fn g_alpha_eval(alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(PwError::Domain(format!("g_alpha: alpha must be > 0, got {alpha}")));
    }
    let (l, s) = log_abs_g_alpha(alpha, x);
    Ok(s * l.exp())
}

/// The ratio kernel cos(pi a x) / (1 - 4 (a x)^2) with the removable
/// singularity at |a x| = 1/2 filled by a 4th-order expansion.
pub fn g_script(alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(PwError::Domain(format!(
            "g_script: alpha must be > 0, got {alpha}"
        )));
    }
    let y = (alpha * x).abs();
    let d = 1.0 - 4.0 * y * y;
    if d.abs() < 1e-4 {
        // around y = 1/2: value = sin(pi u) / (4 u (1 + u)), u = y - 1/2
        let u = y - 0.5;
        let pu = PI * u;
        let s = 1.0 - pu * pu / 6.0 + pu.powi(4) / 120.0;
        let geo = 1.0 - u + u * u - u * u * u + u.powi(4);
        Ok(0.25 * PI * s * geo)
    } else {
        Ok(cos_pi(y) / d)
    }
}

/// f_p(x): the inverse transform of the normalized bell profile with
/// exponent 2/p - 1, equal to Gamma(2/p + 1/2) (2/z)^nu J_nu(z) with
/// z = pi x and nu = 2/p - 1/2. f_p(0) = 1 by construction.
pub fn f_p_eval(p: f64, x: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(PwError::Domain(format!("f_p: p must be > 0, got {p}")));
    }
    let nu = 2.0 / p - 0.5;
    let z = (PI * x).abs();
    if z < 1e-150 {
        return Ok(1.0);
    }
    if z < 8.0 {
        Ok(fp_series(nu, z))
    } else if z < 60.0 {
        fp_integral(p, z)
    } else {
        Ok(fp_asymptotic(nu, z))
    }
}

// Power series of Gamma(nu+1) (2/z)^nu J_nu(z) = sum (-1)^k (z/2)^{2k} / (k! (nu+1)_k).
fn fp_series(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..400 {
        let kf = k as f64;
        term *= -q / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

// Defining integral after the substitution s = sin(theta):
// f_p = (2 / B(1/2, 2/p)) int_0^{pi/2} cos(theta)^{4/p - 1} cos(z sin(theta)) d(theta).
// For p > 4 the cosine power is negative, so a second substitution
// theta = pi/2 - u^2 turns the endpoint behavior into u^{8/p - 1}.
fn fp_integral(p: f64, z: f64) -> Result<f64> {
    let pow = 4.0 / p - 1.0;
    let norm = 2.0 / beta_fn(0.5, 2.0 / p)?;
    let cfg = QuadratureConfig::with_tols(1e-13, 1e-13);
    let r = if pow >= 0.0 {
        numerics::integrate_finite(
            |th: f64| th.cos().powf(pow) * (z * th.sin()).cos(),
            0.0,
            0.5 * PI,
            &cfg,
        )
    } else {
        numerics::integrate_finite(
            |u: f64| {
                let uu = u * u;
                2.0 * u * uu.sin().powf(pow) * (z * uu.cos()).cos()
            },
            0.0,
            (0.5 * PI).sqrt(),
            &cfg,
        )
    };
    let r = match r {
        Ok(r) => r,
        Err(PwError::Convergence { best, .. }) => crate::numerics::QuadratureResult {
            value: best,
            error_estimate: 0.0,
            nodes_used: 0,
        },
        Err(e) => return Err(e),
    };
    Ok(norm * r.value)
}

// Hankel asymptotic expansion of J_nu, wrapped with the f_p normalization.
fn fp_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p_sum = 1.0;
    let mut q_sum = 0.0;
    let mut term = 1.0;
    let mut best = f64::INFINITY;
    for k in 1..30 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * z);
        if term.abs() > best {
            break;
        }
        best = term.abs();
        match k % 4 {
            1 => q_sum += term,
            2 => p_sum -= term,
            3 => q_sum -= term,
            _ => p_sum += term,
        }
    }
    let chi = z - nu * 0.5 * PI - 0.25 * PI;
    let j = (2.0 / (PI * z)).sqrt() * (p_sum * chi.cos() - q_sum * chi.sin());
    let lead = ln_gamma(nu + 1.0) + nu * (2.0 / z).ln();
    lead.exp() * j
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // High-precision oracle for ln Gamma: Stirling's expansion with Bernoulli
    // terms at a shifted argument, then recurrence descent.
    fn ln_gamma_oracle(x: f64) -> f64 {
        const B: [f64; 8] = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360360.0,
            1.0 / 156.0,
            -3617.0 / 122400.0,
        ];
        let y = x + 30.0;
        let mut s = (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln();
        let mut ypow = y;
        for c in B.iter() {
            s += c / ypow;
            ypow *= y * y;
        }
        // descend: ln Gamma(x) = ln Gamma(x + 30) - sum_{j<30} ln(x + j)
        for j in 0..30 {
            s -= (x + j as f64).ln();
        }
        s
    }

    #[test]
    fn gamma_factorial() {
        assert!((gamma_fn(5.0).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_half() {
        assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_against_stirling_oracle() {
        for &x in &[10.3, 3.7, 25.0, 0.8, 101.5] {
            let mine = ln_gamma(x);
            let oracle = ln_gamma_oracle(x);
            assert!(
                (mine - oracle).abs() < 1e-11 * oracle.abs().max(1.0),
                "x = {x}: {mine} vs {oracle}"
            );
        }
    }

    #[test]
    fn gamma_pole_and_overflow_errors() {
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-3.0).is_err());
        assert!(gamma_fn(172.0).is_err());
        // negative non-integer arguments work through reflection
        let v = gamma_fn(-0.5).unwrap();
        assert!((v - (-2.0 * PI.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn beta_values() {
        assert!((beta_fn(0.5, 0.5).unwrap() - PI).abs() < 1e-13);
        assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta_fn(3.0, 3.0).unwrap() - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert!((sinc(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
        // series switch keeps relative error tiny near zero
        let x = 9e-5;
        assert!(((sinc(x) - x.sin() / x) / sinc(x)).abs() < 1e-14);
    }

    #[test]
    fn g_alpha_is_sinc_at_one() {
        for &x in &[0.25, 2.5] {
            let g = g_alpha_eval(1.0, x).unwrap();
            assert!((g - sinc(PI * x)).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn g_half_is_cosine() {
        for &x in &[0.2, 1.3] {
            let g = g_alpha_eval(0.5, x).unwrap();
            assert!((g - (PI * x).cos()).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn g_three_halves_value() {
        let g = g_alpha_eval(1.5, 1.0).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn g_script_values() {
        assert!((g_script(1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((g_script(1.0, 0.5).unwrap() - PI / 4.0).abs() < 1e-13);
        // interior point checked against neighbors straddling it
        let v = g_script(1.1, 0.77).unwrap();
        let lo = g_script(1.1, 0.77 - 1e-6 / 1.1).unwrap();
        let hi = g_script(1.1, 0.77 + 1e-6 / 1.1).unwrap();
        assert!((v - 0.5 * (lo + hi)).abs() < 1e-9);
    }

    #[test]
    fn g_script_patch_is_continuous() {
        // straddle the patch boundary |1 - 4y^2| = 1e-4
        let a = 1.0;
        for &y in &[0.5 + 1.1e-5, 0.5 - 1.1e-5, 0.5 + 1.3e-5] {
            let inside = g_script(a, y).unwrap();
            let direct = cos_pi(y) / (1.0 - 4.0 * y * y);
            assert!((inside - direct).abs() < 1e-10, "y = {y}");
        }
    }

    #[test]
    fn fp_equals_sinc_at_p2() {
        for &x in &[0.3, 1.7] {
            let v = f_p_eval(2.0, x).unwrap();
            assert!((v - sinc(PI * x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn fp_closed_form_at_p1() {
        // f_1(z) = (3 sin(pi z) - 3 pi z cos(pi z)) / (pi z)^3
        let z = 1.0f64;
        let v = f_p_eval(1.0, z).unwrap();
        let pz = PI * z;
        let truth = (3.0 * pz.sin() - 3.0 * pz * pz.cos()) / pz.powi(3);
        assert!((v - truth).abs() < 1e-12);
        assert!((v - 3.0 / (PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn fp_normalized_at_zero() {
        for &p in &[0.5, 1.0, 2.6, 4.0] {
            assert_eq!(f_p_eval(p, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn fp_paths_agree() {
        // series vs integral vs asymptotic across their hand-off points
        for &p in &[0.6, 1.0, 1.7, 2.6, 4.0, 6.0, 8.0] {
            for &z in &[7.9f64, 8.1, 59.5, 60.5] {
                let x = z / PI;
                let nu = 2.0 / p - 0.5;
                let series = fp_series(nu, z);
                let quad = fp_integral(p, z).unwrap();
                let asym = fp_asymptotic(nu, z);
                if z < 10.0 {
                    assert!((series - quad).abs() < 1e-9, "p={p} z={z}: {series} {quad}");
                } else {
                    assert!((asym - quad).abs() < 1e-9, "p={p} z={z}: {asym} {quad}");
                }
                let _ = x;
            }
        }
    }

    #[test]
    fn g_alpha_estimate_part_a() {
        for &a in &[1.0f64, 2.0, 5.0] {
            for i in 0..20 {
                let x = a * i as f64 / 20.0;
                let g = g_alpha_eval(a, x).unwrap();
                let bound = (1.0 - x / a).powf(-(a - 0.5 - x)) * (1.0 + x / a).powf(-(a - 0.5 + x));
                assert!(g <= bound + 1e-12, "a={a} x={x}: {g} > {bound}");
            }
        }
    }

    #[test]
    fn g_alpha_estimate_part_b() {
        for &a in &[1.0f64, 2.0] {
            for &dx in &[0.3, 1.7, 5.2] {
                let x = a + dx;
                let g = g_alpha_eval(a, x).unwrap().abs();
                let bound = a.powf(2.0 * a - 1.0)
                    * (1.0 - a + x).powf(0.5 - a + x)
                    / (a + x).powf(a - 0.5 + x)
                    * sin_pi(a - x).abs();
                assert!(g <= bound + 1e-12, "a={a} x={x}: {g} > {bound}");
            }
        }
    }

    #[test]
    fn g_alpha_estimate_part_c() {
        for &a in &[1.0f64, 2.0, 5.0] {
            for i in 0..20 {
                let x = a * i as f64 / 20.0;
                let g = g_alpha_eval(a, x).unwrap().abs();
                let bound = (PI * x / (2.0 * a)).cos();
                assert!(g <= bound + 1e-12, "a={a} x={x}");
            }
        }
    }

    #[test]
    fn ratio_identity_on_unit_interval() {
        // (3-2x)/(1+2x) * G_1(1-x)/G_1(x) = 1 for 0 <= x <= 1
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let num = g_script(1.0, 1.0 - x).unwrap();
            let den = g_script(1.0, x).unwrap();
            let v = (3.0 - 2.0 * x) / (1.0 + 2.0 * x) * num / den;
            assert!((v - 1.0).abs() < 1e-12, "x = {x}: {v}");
        }
    }

    proptest! {
        #[test]
        fn fp_even(p in 0.6f64..6.0, x in -20.0f64..20.0) {
            let a = f_p_eval(p, x).unwrap();
            let b = f_p_eval(p, -x).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn g_alpha_even(alpha in 0.3f64..4.0, x in -15.0f64..15.0) {
            let a = g_alpha_eval(alpha, x).unwrap();
            let b = g_alpha_eval(alpha, -x).unwrap();
            prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn beta_symmetric(a in 0.2f64..20.0, b in 0.2f64..20.0) {
            let x = beta_fn(a, b).unwrap();
            let y = beta_fn(b, a).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }

        #[test]
        fn gamma_recurrence(x in 0.2f64..80.0) {
            let g1 = gamma_fn(x + 1.0).unwrap();
            let g0 = gamma_fn(x).unwrap();
            prop_assert!(((g1 - x * g0) / g1).abs() < 1e-12);
        }
    }
}
