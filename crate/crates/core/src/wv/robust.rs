//! Tukey biweight scale M-estimation of the wavelet variance.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Gaussian efficiency of the default robust estimator.
pub const DEFAULT_EFF: f64 = 0.6;

/// Biweight ρ, bounded by 1 and reaching it at |u| = c.
pub fn rho(u: f64, c: f64) -> f64 {
    let x = (u / c).powi(2);
    if x >= 1.0 {
        1.0
    } else {
        x * (3.0 + x * (-3.0 + x))
    }
}

/// Nodes and weights of the 20-point Gauss–Legendre rule on [−1, 1].
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 20;
        let mut rule = Vec::with_capacity(N);
        for i in 0..N {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

/// `E[f(Z)·1{|Z| ≤ c}]` for even `f`, Z standard Gaussian.
fn truncated_expectation(c: f64, f: impl Fn(f64) -> f64) -> f64 {
    let panels = c.ceil().max(16.0) as usize;
    let width = c / panels as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for &(x, w) in gauss_legendre() {
            let z = mid + 0.5 * width * x;
            total += w * f(z) * (-0.5 * z * z).exp();
        }
    }
    total * width * norm
}

/// Gaussian moments of the biweight at tuning `c`: (E ρ, Var ρ, E[Zρ'(Z)]).
fn biweight_moments(c: f64) -> (f64, f64, f64) {
    let tail = 2.0 * Normal::standard().sf(c);
    let x = |z: f64| (z / c).powi(2);
    let e_rho = truncated_expectation(c, |z| {
        let x = x(z);
        x * (3.0 + x * (-3.0 + x))
    }) + tail;
    let e_rho2 = truncated_expectation(c, |z| {
        let x = x(z);
        let r = x * (3.0 + x * (-3.0 + x));
        r * r
    }) + tail;
    let e_score = truncated_expectation(c, |z| {
        let x = x(z);
        6.0 * x * (1.0 - x).powi(2)
    });
    (e_rho, e_rho2 - e_rho * e_rho, e_score)
}

/// Asymptotic Gaussian efficiency of the biweight scale estimator relative
/// to the sample variance.
pub fn biweight_efficiency(c: f64) -> f64 {
    let (_, var, score) = biweight_moments(c);
    score * score / (2.0 * var)
}

fn solve_tuning(eff: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (1e-6f64, 1e3f64);
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if biweight_efficiency(mid) < eff {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    (c, biweight_moments(c).0)
}

/// Tuning constant `c` attaining Gaussian efficiency `eff`, and the
/// consistency constant `b = E[ρ_c(Z)]`. Cached per `eff`.
pub fn tukey_tuning(eff: f64) -> Result<(f64, f64)> {
    if !(eff > 0.0 && eff < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "efficiency {eff} outside (0, 1)"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, (f64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&hit) = cache.lock().expect("tuning cache").get(&eff.to_bits()) {
        return Ok(hit);
    }
    let cb = solve_tuning(eff);
    cache.lock().expect("tuning cache").insert(eff.to_bits(), cb);
    Ok(cb)
}

const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-10;

/// Outcome of the per-scale M-estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RobustLevel {
    Estimate(f64),
    /// The share of nonzero coefficients is at most `b`, so the estimating
    /// equation has no positive root; the infimum 0 is returned.
    Collapsed,
}

fn mean_rho(w: &[f64], c: f64, log_nu: f64) -> f64 {
    let inv = (-0.5 * log_nu).exp();
    w.iter().map(|&x| rho(x * inv, c)).sum::<f64>() / w.len() as f64
}

fn median_abs(w: &[f64]) -> f64 {
    let mut a: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    let mid = a.len() / 2;
    let (_, m, _) = a.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Solves `(1/M) Σ ρ_c(W_t/√ν) = b` for ν by bracketed root finding in
/// `log ν`, starting from the squared normalized MAD.
pub(crate) fn robust_level(w: &[f64], c: f64, b: f64) -> Result<RobustLevel> {
    let nonzero = w.iter().filter(|x| **x != 0.0).count();
    if nonzero == 0 {
        return Ok(RobustLevel::Estimate(0.0));
    }
    if nonzero as f64 / w.len() as f64 <= b {
        return Ok(RobustLevel::Collapsed);
    }
    let mad = median_abs(w) / 0.674_489_750_196_081_7;
    let start = if mad > 0.0 {
        mad * mad
    } else {
        w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64
    };
    // g is nonincreasing in log ν: near 1 for tiny ν, 0 for huge ν.
    let g = |u: f64| mean_rho(w, c, u) - b;
    let u0 = start.ln();
    let g0 = g(u0);
    if g0 == 0.0 {
        return Ok(RobustLevel::Estimate(start));
    }
    let dir = if g0 > 0.0 { 1.0 } else { -1.0 };
    let (mut a, mut ga) = (u0, g0);
    let mut step = 1.0;
    let (mut bb, mut gb);
    let mut iters = 0;
    loop {
        bb = u0 + dir * step;
        gb = g(bb);
        iters += 1;
        if gb == 0.0 {
            return Ok(RobustLevel::Estimate(bb.exp()));
        }
        if gb.signum() != ga.signum() {
            break;
        }
        a = bb;
        ga = gb;
        step *= 2.0;
        if iters >= MAX_ITER {
            return Err(Error::NoConvergence(MAX_ITER));
        }
    }
    // Illinois-modified regula falsi with a bisection fallback.
    let mut side = 0i8;
    for _ in iters..MAX_ITER {
        if (bb - a).abs() <= REL_TOL {
            return Ok(RobustLevel::Estimate((0.5 * (a + bb)).exp()));
        }
        let mut u = (a * gb - bb * ga) / (gb - ga);
        if !u.is_finite() || u <= a.min(bb) || u >= a.max(bb) {
            u = 0.5 * (a + bb);
        }
        let gu = g(u);
        if gu == 0.0 {
            return Ok(RobustLevel::Estimate(u.exp()));
        }
        if gu.signum() == gb.signum() {
            bb = u;
            gb = gu;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = u;
            ga = gu;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence(MAX_ITER))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson on [a, b], independent of the Gauss–Legendre rule.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn oracle_b(c: f64) -> f64 {
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // ρ ≡ 1 beyond c; integrate far enough that the tail is negligible.
        2.0 * simpson(&|z| rho(z, c) * phi(z), 0.0, c, 1e-14)
            + 2.0 * simpson(&|z| phi(z), c, 40.0, 1e-14)
    }

    #[test]
    fn default_tuning_matches_quadrature_oracle() {
        let (c, b) = tukey_tuning(0.6).unwrap();
        assert!((c - 1.73).abs() < 0.05, "{c}");
        assert!((b - oracle_b(c)).abs() < 1e-8, "{b} vs {}", oracle_b(c));
        assert!((biweight_efficiency(c) - 0.6).abs() < 1e-8);
        assert_eq!(tukey_tuning(0.6).unwrap(), (c, b));
        assert_eq!(solve_tuning(0.6), (c, b));
    }

    #[test]
    fn efficiency_is_monotone() {
        let cs = [0.05, 0.3, 1.0, 1.75, 3.0, 10.0, 30.0];
        let e: Vec<f64> = cs.iter().map(|&c| biweight_efficiency(c)).collect();
        assert!(e.windows(2).all(|w| w[0] < w[1]), "{e:?}");
        assert!(e[6] > 0.9999 && e[0] < 0.02);
        for &c in &cs {
            assert!((biweight_moments(c).0 - oracle_b(c)).abs() < 1e-9, "{c}");
        }
    }

    #[test]
    fn rejects_bad_efficiency() {
        for eff in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(tukey_tuning(eff).is_err());
        }
    }

    #[test]
    fn degenerate_levels() {
        let (c, b) = tukey_tuning(0.6).unwrap();
        assert_eq!(robust_level(&[0.0; 20], c, b).unwrap(), RobustLevel::Estimate(0.0));
        let mut w = vec![0.0; 20];
        w[0] = 1.0;
        assert_eq!(robust_level(&w, c, b).unwrap(), RobustLevel::Collapsed);
    }

    #[test]
    fn root_solves_equation() {
        let (c, b) = tukey_tuning(0.6).unwrap();
        let w: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.37).sin() * 3.0).collect();
        let RobustLevel::Estimate(nu) = robust_level(&w, c, b).unwrap() else { panic!() };
        assert!((mean_rho(&w, c, nu.ln()) - b).abs() < 1e-9);
    }
}
