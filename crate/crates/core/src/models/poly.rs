//! Lag-polynomial helpers.
//!
//! AR polynomials are stored as the coefficient vector `φ` of
//! `1 − φ₁B − … − φ_pB^p`; MA polynomials as `θ` of `1 + θ₁B + … + θ_qB^q`.

use nalgebra::DMatrix;

/// Partial autocorrelations of the AR polynomial with coefficients `phi`
/// (Durbin–Levinson step-down). `None` if some |r_k| ≥ 1, i.e. a root lies on
/// or inside the unit circle.
pub fn ar_to_pacf(phi: &[f64]) -> Option<Vec<f64>> {
    let p = phi.len();
    let mut cur = phi.to_vec();
    let mut pacf = vec![0.0; p];
    for k in (0..p).rev() {
        let r = cur[k];
        if !r.is_finite() || r.abs() >= 1.0 {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        let prev: Vec<f64> = (0..k)
            .map(|i| (cur[i] + r * cur[k - 1 - i]) / denom)
            .collect();
        cur = prev;
    }
    Some(pacf)
}

/// Inverse of [`ar_to_pacf`]: any vector with entries in (−1, 1) maps to a
/// causal AR polynomial.
pub fn pacf_to_ar(pacf: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let next: Vec<f64> = (0..k).map(|i| phi[i] - r * phi[k - 1 - i]).collect();
        phi = next;
        phi.push(r);
    }
    phi
}

pub fn is_causal(phi: &[f64]) -> bool {
    ar_to_pacf(phi).is_some()
}

/// Invertibility of `1 + Σ θ_i B^i`: same root condition as the AR
/// polynomial with coefficients `−θ`.
pub fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    is_causal(&neg)
}

/// Multiplies two AR polynomials `(1 − Σ a_i B^i)(1 − Σ b_k B^{k·stride})`.
pub fn expand_ar(ar: &[f64], seasonal: &[f64], stride: usize) -> Vec<f64> {
    let a = poly_from_ar(ar, 1);
    let b = poly_from_ar(seasonal, stride);
    let prod = poly_mul(&a, &b);
    prod[1..].iter().map(|c| -c).collect()
}

/// Multiplies two MA polynomials `(1 + Σ a_i B^i)(1 + Σ b_k B^{k·stride})`.
pub fn expand_ma(ma: &[f64], seasonal: &[f64], stride: usize) -> Vec<f64> {
    let a = poly_from_ma(ma, 1);
    let b = poly_from_ma(seasonal, stride);
    poly_mul(&a, &b)[1..].to_vec()
}

fn poly_from_ar(c: &[f64], stride: usize) -> Vec<f64> {
    let mut out = vec![0.0; c.len() * stride + 1];
    out[0] = 1.0;
    for (i, v) in c.iter().enumerate() {
        out[(i + 1) * stride] = -v;
    }
    out
}

fn poly_from_ma(c: &[f64], stride: usize) -> Vec<f64> {
    let mut out = vec![0.0; c.len() * stride + 1];
    out[0] = 1.0;
    for (i, v) in c.iter().enumerate() {
        out[(i + 1) * stride] = *v;
    }
    out
}

/// Full polynomial product; coefficients in ascending powers.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Largest modulus among the inverse roots of the AR polynomial (the spectral
/// radius of its companion matrix).
pub fn ar_spectral_radius(phi: &[f64]) -> f64 {
    let p = phi.len();
    match p {
        0 => 0.0,
        1 => phi[0].abs(),
        _ => {
            let mut m = DMatrix::<f64>::zeros(p, p);
            for (j, v) in phi.iter().enumerate() {
                m[(0, j)] = *v;
            }
            for i in 1..p {
                m[(i, i - 1)] = 1.0;
            }
            m.complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        }
    }
}
