//! Largest eigenvalue of the band-and-time concentration operator.
//!
//! The operator acts on functions band-limited to [-c, c] by restricting to
//! the time window [-1, 1]; its kernel on that window is
//! sin(c(x - y)) / (pi (x - y)). Discretizing at Gauss-Legendre nodes and
//! symmetrizing with the square roots of the weights turns the eigenproblem
//! into a dense symmetric one whose top eigenvalue converges spectrally in
//! the node count because the kernel is entire.

use crate::error::{PwError, Result};
use crate::numerics;
use std::f64::consts::PI;

/// Output of the concentration-eigenvalue solver.
#[derive(Debug, Clone, Copy)]
pub struct ProlateResult {
    /// Time-bandwidth parameter (bandwidth times half the window length).
    pub c: f64,
    /// Largest eigenvalue; always strictly between 0 and 1.
    pub lambda0: f64,
    pub grid_size: usize,
    /// Difference against the half-resolution grid.
    pub richardson_error: f64,
    /// Set when the grid is estimated too coarse for the requested c.
    pub resolution_warning: bool,
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn sinc_kernel(c: f64, d: f64) -> f64 {
    if d.abs() < 1e-14 {
        c / PI
    } else {
        (c * d).sin() / (PI * d)
    }
}

fn lambda0_single(c: f64, n: usize) -> Result<f64> {
    let (x, w) = gauss_legendre(n);
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = sinc_kernel(c, x[i] - x[j]) * sw[i] * sw[j];
            a[i * n + j] = k;
            a[j * n + i] = k;
        }
    }
    // power iteration started from the weighted constant, which overlaps the
    // positive bell-shaped top eigenfunction
    let mut v: Vec<f64> = sw.clone();
    let norm: f64 = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.iter_mut().for_each(|t| *t /= norm);
    let mut lambda = 0.0f64;
    let mut y = vec![0.0f64; n];
    for _ in 0..2000 {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &a[i * n..(i + 1) * n];
            *yi = row.iter().zip(&v).map(|(aij, vj)| aij * vj).sum();
        }
        let new_lambda: f64 = v.iter().zip(&y).map(|(vi, yi)| vi * yi).sum();
        let ynorm: f64 = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        if ynorm == 0.0 {
            return Err(PwError::Convergence {
                msg: "power iteration collapsed to the zero vector".into(),
                best: lambda,
                err_estimate: 1.0,
            });
        }
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / ynorm;
        }
        if (new_lambda - lambda).abs() <= 1e-13 * new_lambda.abs() {
            return Ok(new_lambda);
        }
        lambda = new_lambda;
    }
    Err(PwError::Convergence {
        msg: format!("power iteration did not settle for c = {c}"),
        best: lambda,
        err_estimate: 1e-7,
    })
}

/// Largest concentration eigenvalue for time-bandwidth parameter c > 0.
pub fn lambda0(c: f64, n_nodes: usize) -> Result<ProlateResult> {
    if !(c > 0.0) {
        return Err(PwError::Domain(format!("lambda0: c must be > 0, got {c}")));
    }
    if n_nodes < 32 {
        return Err(PwError::Domain(format!(
            "lambda0: need at least 32 nodes, got {n_nodes}"
        )));
    }
    let resolution_warning = (n_nodes as f64) < 4.0 * c + 40.0;
    let full = lambda0_single(c, n_nodes)?;
    let half = lambda0_single(c, n_nodes / 2)?;
    Ok(ProlateResult {
        c,
        lambda0: full,
        grid_size: n_nodes,
        richardson_error: (full - half).abs(),
        resolution_warning,
    })
}

pub const DEFAULT_NODES: usize = 256;

/// Invert the strictly increasing map c -> lambda0(c) on (0, 20].
pub fn c_for_lambda(target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(PwError::Domain(format!(
            "c_for_lambda: target must lie in (0, 1), got {target}"
        )));
    }
    let eval = |c: f64| match lambda0(c, DEFAULT_NODES) {
        Ok(r) => r.lambda0 - target,
        // for large c the top cluster is nearly degenerate; the stalled
        // estimate still has the right sign for bracketing
        Err(PwError::Convergence { best, .. }) => best - target,
        Err(_) => f64::NAN,
    };
    numerics::find_root(eval, 1e-3, 20.0, 1e-11)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_nodes_integrate_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m6: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(6)).sum();
        assert!((m6 - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn table_values() {
        for &(c, reference) in &[
            (2.0 * PI / 3.0, 0.896107188059),
            (2.0, 0.880559922317),
            (3.0 * PI / 5.0, 0.858990907475),
            (1.080420803046 * PI / 4.0, 0.500000000028),
        ] {
            let r = lambda0(c, DEFAULT_NODES).unwrap();
            assert!(
                (r.lambda0 - reference).abs() < 1e-9,
                "c = {c}: {} vs {reference}",
                r.lambda0
            );
            assert!(!r.resolution_warning);
        }
    }

    #[test]
    fn rank_one_limit() {
        // as c -> 0 the kernel degenerates to the constant c/pi on [-1, 1],
        // whose only nonzero eigenvalue is 2c/pi
        let c = 1e-4;
        let r = lambda0(c, 64).unwrap();
        assert!(
            (r.lambda0 - 2.0 * c / PI).abs() < 1e-12,
            "got {} want {}",
            r.lambda0,
            2.0 * c / PI
        );
    }

    #[test]
    fn monotone_in_c() {
        let mut prev = 0.0;
        let mut c = 0.5;
        while c <= 6.0 + 1e-9 {
            let r = lambda0(c, 128).unwrap();
            assert!(r.lambda0 > prev, "not increasing at c = {c}");
            assert!(r.lambda0 > 0.0 && r.lambda0 < 1.0);
            prev = r.lambda0;
            c += 0.5;
        }
    }

    #[test]
    fn grid_convergence_dominated_by_richardson() {
        for &n in &[64usize, 128] {
            let coarse = lambda0(2.0, n).unwrap();
            let fine = lambda0_single(2.0, 2 * n).unwrap();
            assert!(
                (fine - coarse.lambda0).abs() <= coarse.richardson_error.max(1e-13),
                "n = {n}"
            );
        }
    }

    #[test]
    fn rayleigh_quotient_of_test_function_is_below_lambda0() {
        // psi(x) = sinc(c x) is band-limited to [-c, c]; its concentration on
        // [-1, 1] cannot exceed the top eigenvalue
        let c = 2.0;
        let cfg = crate::numerics::QuadratureConfig::with_tols(1e-11, 1e-11);
        let num = crate::numerics::integrate_finite(
            |x: f64| crate::special::sinc(c * x).powi(2),
            -1.0,
            1.0,
            &cfg,
        )
        .unwrap();
        let total = PI / c; // int sinc^2(cx) dx over the whole line
        let rayleigh = num.value / total;
        let top = lambda0(c, DEFAULT_NODES).unwrap().lambda0;
        assert!(rayleigh <= top + 1e-12, "{rayleigh} vs {top}");
    }

    #[test]
    fn inversion_matches_table() {
        let c = c_for_lambda(0.5).unwrap();
        assert!((c - 1.080420803046 * PI / 4.0).abs() < 1e-8, "got {c}");
        let c2 = c_for_lambda(0.880559922317).unwrap();
        assert!((c2 - 2.0).abs() < 1e-8, "got {c2}");
        let c3 = c_for_lambda(0.858990907475).unwrap();
        assert!((c3 - 3.0 * PI / 5.0).abs() < 1e-8, "got {c3}");
    }

    #[test]
    fn bad_inputs() {
        assert!(lambda0(-1.0, 64).is_err());
        assert!(lambda0(2.0, 16).is_err());
        assert!(c_for_lambda(1.5).is_err());
    }
}
