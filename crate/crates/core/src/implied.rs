//! Model-implied Haar wavelet variance.
//!
//! The normative route writes the level-j coefficient of an integrated term
//! as a finite filter `g_j` applied to its stationary ARMA core, where `g_j`
//! is the Haar filter divided by the integration polynomial
//! `(1 − B)^d (1 − B^s)^D`. Then `ν_j² = Σ_h r_g(h) γ(h)` with `r_g` the
//! filter autocorrelation and `γ` the core autocovariance. Closed forms, when
//! a kind provides them, are used as a fast path and must agree.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Dynamics, LinearForm, ModelSpec, ModelTerm, ParamVector};
use crate::wavelet::HaarFilter;

/// Relative size below which autocovariances are treated as zero.
const ACVF_CUTOFF: f64 = 1e-14;
/// Filters up to this length use the direct O(L²) autocorrelation.
const DIRECT_AUTOCORR_MAX: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedWv {
    pub scales: Vec<f64>,
    pub total: Vec<f64>,
    /// Per-term contributions, labelled as in [`ModelSpec::term_labels`].
    pub terms: Vec<(String, Vec<f64>)>,
}

/// Coefficient-domain autocovariance γ(0..=maxlag) of an ARMA process.
///
/// γ(0..=p) solves the linear system
/// `γ(k) − Σ_i φ_i γ(|k−i|) = σ² Σ_{j≥k} θ_j ψ_{j−k}` and higher lags follow
/// from the same recursion.
pub fn arma_acvf(ar: &[f64], ma: &[f64], sigma2: f64, maxlag: usize) -> Result<Vec<f64>> {
    if !crate::models::poly::is_causal(ar) {
        return Err(Error::InvalidArgument("AR part is not stationary".into()));
    }
    let (p, q) = (ar.len(), ma.len());
    let theta = |j: usize| if j == 0 { 1.0 } else { ma[j - 1] };
    let mut psi = vec![0.0; q + 1];
    for j in 0..=q {
        let mut v = theta(j);
        for i in 1..=p.min(j) {
            v += ar[i - 1] * psi[j - i];
        }
        psi[j] = v;
    }
    let rhs = |k: usize| -> f64 {
        (k..=q).map(|j| theta(j) * psi[j - k]).sum::<f64>() * sigma2
    };
    let mut g = vec![0.0; maxlag.max(p) + 1];
    if p == 0 {
        for (k, gk) in g.iter_mut().enumerate().take(q + 1) {
            *gk = rhs(k);
        }
    } else {
        let mut a = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut b = DVector::<f64>::zeros(p + 1);
        for k in 0..=p {
            a[(k, k)] += 1.0;
            for i in 1..=p {
                let lag = (k as isize - i as isize).unsigned_abs();
                a[(k, lag)] -= ar[i - 1];
            }
            b[k] = rhs(k);
        }
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidArgument("singular ARMA autocovariance system".into()))?;
        g[..=p].copy_from_slice(sol.as_slice());
        let mut small_run = 0;
        for k in p + 1..g.len() {
            let mut v = if k <= q { rhs(k) } else { 0.0 };
            for i in 1..=p {
                v += ar[i - 1] * g[k - i];
            }
            g[k] = v;
            if k > q && v.abs() < ACVF_CUTOFF * g[0] {
                small_run += 1;
                // p consecutive negligible lags: the recursion stays negligible.
                if small_run >= p {
                    for x in &mut g[k + 1..] {
                        *x = 0.0;
                    }
                    break;
                }
            } else {
                small_run = 0;
            }
        }
    }
    g.truncate(maxlag + 1);
    Ok(g)
}

/// ACVF of the stationary core of `term` (after removing integrations),
/// lags 0..=maxlag.
pub fn model_acvf(term: &ModelTerm, maxlag: usize) -> Result<Vec<f64>> {
    let values = term.full_values()?;
    match term.process().dynamics(term, &values) {
        Dynamics::Trend { .. } => Err(Error::InvalidArgument(
            "a deterministic drift has no autocovariance".into(),
        )),
        Dynamics::Linear(f) => arma_acvf(&f.ar, &f.ma, f.sigma2, maxlag),
    }
}

/// Divides `h(B)` by `(1 − B^m)`; `None` when the division leaves a
/// remainder.
fn divide_difference(h: &[f64], m: usize) -> Option<Vec<f64>> {
    if m >= h.len() {
        return None;
    }
    let mut q = h.to_vec();
    for l in m..q.len() {
        q[l] += q[l - m];
    }
    let scale = h.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if q[q.len() - m..].iter().any(|r| r.abs() > 1e-12 * scale) {
        return None;
    }
    q.truncate(h.len() - m);
    Some(q)
}

/// Level-`level` Haar filter divided by `(1 − B)^d (1 − B^s)^D`.
pub fn integrated_filter(level: usize, d: usize, sd: usize, s: usize) -> Result<Vec<f64>> {
    let mut g = HaarFilter::new(level)?.taps().to_vec();
    let fail = || {
        Error::UnsupportedIntegration(format!(
            "Haar filter at scale {} is not divisible by (1-B)^{d}(1-B^{s})^{sd}; the coefficient process is not stationary",
            1u64 << level
        ))
    };
    for _ in 0..d {
        g = divide_difference(&g, 1).ok_or_else(fail)?;
    }
    for _ in 0..sd {
        g = divide_difference(&g, s).ok_or_else(fail)?;
    }
    Ok(g)
}

fn autocorrelation(g: &[f64]) -> Vec<f64> {
    let l = g.len();
    if l <= DIRECT_AUTOCORR_MAX {
        return (0..l)
            .map(|k| (0..l - k).map(|t| g[t] * g[t + k]).sum())
            .collect();
    }
    let n = (2 * l).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = g.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for z in &mut buf {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf[..l].iter().map(|z| z.re / n as f64).collect()
}

type FilterKey = (usize, usize, usize, usize);

/// Autocorrelation `r_g(0..L)` of the integrated filter, cached.
fn filter_autocorrelation(level: usize, d: usize, sd: usize, s: usize) -> Result<Arc<Vec<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<FilterKey, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (level, d, sd, if sd == 0 { 0 } else { s });
    if let Some(r) = cache.lock().expect("filter cache").get(&key) {
        return Ok(Arc::clone(r));
    }
    let r = Arc::new(autocorrelation(&integrated_filter(level, d, sd, s)?));
    cache.lock().expect("filter cache").insert(key, Arc::clone(&r));
    Ok(r)
}

fn scale_level(tau: f64) -> Result<usize> {
    if tau >= 2.0 && tau.is_finite() && tau.fract() == 0.0 {
        let t = tau as u64;
        if t.is_power_of_two() {
            return Ok(t.trailing_zeros() as usize);
        }
    }
    Err(Error::InvalidArgument(format!("scale {tau} is not a power of two ≥ 2")))
}

fn linear_wv(form: &LinearForm, level: usize) -> Result<f64> {
    let r = filter_autocorrelation(level, form.diff, form.seasonal_diff, form.period)?;
    let gamma = arma_acvf(&form.ar, &form.ma, form.sigma2, r.len() - 1)?;
    let tail: f64 = r[1..].iter().zip(&gamma[1..]).map(|(a, b)| a * b).sum();
    Ok((r[0] * gamma[0] + 2.0 * tail).max(0.0))
}

/// The filter-ACVF computation for one term, ignoring closed forms.
pub fn implied_wv_term_normative(term: &ModelTerm, scales: &[f64]) -> Result<Vec<f64>> {
    let values = term.full_values()?;
    let dynamics = term.process().dynamics(term, &values);
    scales
        .iter()
        .map(|&tau| {
            let level = scale_level(tau)?;
            match &dynamics {
                Dynamics::Trend { slope } => {
                    // Y_t = ωt gives the constant coefficient −ω Σ_l l h_l.
                    let h = HaarFilter::new(level)?;
                    let w: f64 = -slope * h.taps().iter().enumerate().map(|(l, x)| l as f64 * x).sum::<f64>();
                    Ok(w * w)
                }
                Dynamics::Linear(form) => linear_wv(form, level),
            }
        })
        .collect()
}

/// Implied WV of one term at each scale `τ_j = 2^j`.
pub fn implied_wv_term(term: &ModelTerm, scales: &[f64]) -> Result<Vec<f64>> {
    let values = term.full_values()?;
    let process = term.process();
    let mut out = Vec::with_capacity(scales.len());
    let mut missing = false;
    for &tau in scales {
        scale_level(tau)?;
        match process.closed_form_wv(term, &values, tau) {
            Some(v) => out.push(v),
            None => {
                missing = true;
                break;
            }
        }
    }
    if missing {
        return implied_wv_term_normative(term, scales);
    }
    Ok(out)
}

/// Implied WV of a sum of terms, with per-term contributions.
pub fn implied_wv(spec: &ModelSpec, theta: &ParamVector, scales: &[f64]) -> Result<ImpliedWv> {
    let full = spec.with_params(theta)?;
    let mut total = vec![0.0; scales.len()];
    let mut terms = Vec::with_capacity(full.terms().len());
    for (label, term) in full.term_labels().into_iter().zip(full.terms()) {
        let v = implied_wv_term(term, scales)?;
        for (t, x) in total.iter_mut().zip(&v) {
            *t += x;
        }
        terms.push((label, v));
    }
    Ok(ImpliedWv {
        scales: scales.to_vec(),
        total,
        terms,
    })
}

/// Scales `2, 4, …, 2^levels`.
pub fn dyadic_scales(levels: usize) -> Vec<f64> {
    (1..=levels).map(|j| (1u64 << j) as f64).collect()
}
