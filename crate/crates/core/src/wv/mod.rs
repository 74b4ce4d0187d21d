//! Wavelet variance estimation with chi-square confidence intervals.
//!
//! Two estimators are provided behind the [`WvEstimator`] trait: the
//! classical mean of squared coefficients and a Tukey biweight scale
//! M-estimator tuned to a target Gaussian efficiency.

mod robust;

use std::cell::RefCell;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use realfft::{num_complex::Complex, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::simulate::TimeSeries;
use crate::wavelet::{haar_energies, max_scales, modwt_haar, WaveletDecomposition};

pub use robust::{biweight_efficiency, rho, tukey_tuning, DEFAULT_EFF};
use robust::{robust_level, RobustLevel};

/// Smallest level size handled by the robust estimator; smaller levels fall
/// back to the classical estimate.
pub const ROBUST_MIN_COEFFICIENTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EstimatorKind {
    Classical,
    Robust { eff: f64 },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Classical => "classical",
            EstimatorKind::Robust { .. } => "robust",
        }
    }
}

/// Equivalent degrees of freedom for the chi-square intervals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdofRule {
    /// `η = max(M/2^j, 1)`.
    #[default]
    Conservative,
    /// `η = M ν̂⁴ / Â` with `Â = ŝ₀²/2 + Σ_{τ≥1} ŝ_τ²` from the sample
    /// autocovariance ŝ of the coefficients. Tighter than the default but
    /// costs one FFT per level.
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WvEstimate {
    pub scales: Vec<f64>,
    pub nu2: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub counts: Vec<usize>,
    pub edof: Vec<f64>,
    pub estimator: EstimatorKind,
    pub edof_rule: EdofRule,
    pub alpha: f64,
    pub warnings: Vec<String>,
}

impl WvEstimate {
    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }
}

/// A wavelet variance estimator.
pub trait WvEstimator: Send + Sync {
    fn kind(&self) -> EstimatorKind;

    /// Estimates every level of `decomp`.
    fn estimate(&self, decomp: &WaveletDecomposition, alpha: f64) -> Result<WvEstimate>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Classical {
    pub edof: EdofRule,
}

#[derive(Debug, Clone, Copy)]
pub struct Robust {
    pub eff: f64,
    pub edof: EdofRule,
}

impl Robust {
    pub fn new(eff: f64) -> Self {
        Robust {
            eff,
            edof: EdofRule::default(),
        }
    }
}

/// Estimator for `kind` using the default EDOF rule.
pub fn estimator(kind: EstimatorKind) -> Box<dyn WvEstimator> {
    match kind {
        EstimatorKind::Classical => Box::new(Classical::default()),
        EstimatorKind::Robust { eff } => Box::new(Robust::new(eff)),
    }
}

/// Looks an estimator up by name (`"classical"` or `"robust"`).
pub fn estimator_by_name(name: &str, eff: f64) -> Result<Box<dyn WvEstimator>> {
    match name {
        "classical" => Ok(estimator(EstimatorKind::Classical)),
        "robust" => Ok(estimator(EstimatorKind::Robust { eff })),
        other => Err(Error::InvalidArgument(format!("unknown estimator '{other}'"))),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")))
    }
}

fn check_levels(decomp: &WaveletDecomposition) -> Result<()> {
    if decomp.levels.is_empty() {
        return Err(Error::InvalidArgument("decomposition has no levels".into()));
    }
    if let Some(l) = decomp.levels.iter().find(|l| l.is_empty()) {
        return Err(Error::InvalidArgument(format!("empty level at scale {}", l.scale)));
    }
    Ok(())
}

fn mean_square(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64
}

/// Smallest `2^a 3^b 5^c ≥ m`.
fn smooth_len(m: usize) -> usize {
    let mut best = m.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut n = p35;
            while n < m {
                n *= 2;
            }
            best = best.min(n);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

/// Real-to-complex FFT plan of length `n`, shared process-wide so each
/// size is planned once.
fn fft_plan(n: usize) -> Arc<dyn RealToComplex<f64>> {
    static PLANNER: OnceLock<Mutex<RealFftPlanner<f64>>> = OnceLock::new();
    PLANNER
        .get_or_init(|| Mutex::new(RealFftPlanner::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .plan_fft_forward(n)
}

/// Spectral EDOF from one zero-padded real FFT:
/// `Σ_τ ŝ_τ² = Σ_k |X_k|⁴ / (M² n)` by Parseval, with the interior bins of
/// the half spectrum counted twice.
fn spectral_edof(w: &[f64]) -> f64 {
    thread_local! {
        static BUFFERS: RefCell<(Vec<f64>, Vec<Complex<f64>>, Vec<Complex<f64>>)> =
            const { RefCell::new((Vec::new(), Vec::new(), Vec::new())) };
    }
    let m = w.len();
    let s0 = mean_square(w);
    if s0 == 0.0 {
        return 1.0;
    }
    // Any even n ≥ 2M − 1 avoids circular wrap-around.
    let n = 2 * smooth_len(m);
    let fft = fft_plan(n);
    let sum4 = BUFFERS.with_borrow_mut(|(input, spectrum, scratch)| {
        input.clear();
        input.extend_from_slice(w);
        input.resize(n, 0.0);
        spectrum.resize(n / 2 + 1, Complex::new(0.0, 0.0));
        scratch.resize(fft.get_scratch_len(), Complex::new(0.0, 0.0));
        fft.process_with_scratch(input, spectrum, scratch)
            .expect("buffer lengths match the plan");
        let q = |z: &Complex<f64>| z.norm_sqr().powi(2);
        let interior: f64 = spectrum[1..n / 2].iter().map(q).sum();
        q(&spectrum[0]) + q(&spectrum[n / 2]) + 2.0 * interior
    });
    let a = sum4 / (m as f64 * m as f64 * n as f64) / 2.0;
    (m as f64 * s0 * s0 / a).max(1.0)
}

/// EDOF multiplier of every level.
fn level_edofs(rule: EdofRule, decomp: &WaveletDecomposition) -> Vec<f64> {
    decomp
        .levels
        .par_iter()
        .map(|l| match rule {
            EdofRule::Spectral => spectral_edof(&l.coefficients),
            EdofRule::Conservative => (l.len() as f64 / l.scale).max(1.0),
        })
        .collect()
}

/// Chi-square interval `(η ν̂ / q_{1−α/2}, η ν̂ / q_{α/2})` with η degrees
/// of freedom; `(0, 0)` when ν̂ = 0.
pub fn chi_square_ci(nu2: f64, edof: f64, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(nu2 >= 0.0 && nu2.is_finite()) {
        return Err(Error::InvalidArgument(format!("wavelet variance {nu2}")));
    }
    if !(edof > 0.0 && edof.is_finite()) {
        return Err(Error::InvalidArgument(format!("degrees of freedom {edof}")));
    }
    if nu2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let lo = chi_square_quantile(edof, 1.0 - alpha / 2.0)?;
    let hi = chi_square_quantile(edof, alpha / 2.0)?;
    Ok((edof * nu2 / lo, edof * nu2 / hi))
}

/// Quantile of χ²_k by safeguarded Newton steps on `ln x`, started from the
/// Wilson–Hilferty approximation.
pub fn chi_square_quantile(k: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("probability {p}")));
    }
    let chi = ChiSquared::new(k).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let z = Normal::standard().inverse_cdf(p);
    let h = 2.0 / (9.0 * k);
    let wh = k * (1.0 - h + z * h.sqrt()).powi(3);
    let mut u = if wh > 0.0 { wh.ln() } else { (p * k).ln() };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..200 {
        let x = u.exp();
        let f = chi.cdf(x) - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        // d cdf / d ln x = x · pdf(x)
        let mut next = u - f / (x * chi.pdf(x));
        if !next.is_finite() || next <= lo || next >= hi {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => u + 1.0,
                _ => u - 1.0,
            };
        }
        if (next - u).abs() < 1e-14 {
            return Ok(next.exp());
        }
        u = next;
    }
    Err(Error::NoConvergence(200))
}

/// Per-scale intervals with the conservative EDOF `max(M_j/2^j, 1)`.
pub fn wv_ci(nu2: &[f64], counts: &[usize], alpha: f64) -> Result<Vec<(f64, f64)>> {
    if nu2.len() != counts.len() {
        return Err(Error::Dimension {
            expected: nu2.len(),
            got: counts.len(),
        });
    }
    nu2.iter()
        .zip(counts)
        .enumerate()
        .map(|(j, (&v, &m))| {
            let eta = (m as f64 / (1u64 << (j + 1)) as f64).max(1.0);
            chi_square_ci(v, eta, alpha)
        })
        .collect()
}

struct LevelOut {
    nu2: f64,
    edof: f64,
    warning: Option<String>,
}

fn level_counts(decomp: &WaveletDecomposition) -> Vec<usize> {
    decomp.levels.iter().map(|l| l.len()).collect()
}

fn assemble(
    scales: Vec<f64>,
    counts: Vec<usize>,
    alpha: f64,
    estimator: EstimatorKind,
    edof_rule: EdofRule,
    levels: Vec<LevelOut>,
) -> Result<WvEstimate> {
    let mut est = WvEstimate {
        scales,
        nu2: Vec::with_capacity(levels.len()),
        ci_low: Vec::with_capacity(levels.len()),
        ci_high: Vec::with_capacity(levels.len()),
        counts,
        edof: Vec::with_capacity(levels.len()),
        estimator,
        edof_rule,
        alpha,
        warnings: Vec::new(),
    };
    for l in levels {
        let (lo, hi) = chi_square_ci(l.nu2, l.edof, alpha)?;
        est.nu2.push(l.nu2);
        est.ci_low.push(lo);
        est.ci_high.push(hi);
        est.edof.push(l.edof);
        est.warnings.extend(l.warning);
    }
    if est.nu2.iter().all(|v| *v == 0.0) {
        est.warnings.push("all wavelet variances are zero (constant series)".into());
    }
    Ok(est)
}

impl WvEstimator for Classical {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Classical
    }

    fn estimate(&self, decomp: &WaveletDecomposition, alpha: f64) -> Result<WvEstimate> {
        check_alpha(alpha)?;
        check_levels(decomp)?;
        let levels = decomp
            .levels
            .par_iter()
            .zip(level_edofs(self.edof, decomp))
            .map(|(l, edof)| LevelOut {
                nu2: mean_square(&l.coefficients),
                edof,
                warning: None,
            })
            .collect();
        assemble(decomp.scales(), level_counts(decomp), alpha, self.kind(), self.edof, levels)
    }
}

impl WvEstimator for Robust {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Robust { eff: self.eff }
    }

    fn estimate(&self, decomp: &WaveletDecomposition, alpha: f64) -> Result<WvEstimate> {
        check_alpha(alpha)?;
        check_levels(decomp)?;
        let (c, b) = tukey_tuning(self.eff)?;
        let levels = decomp
            .levels
            .par_iter()
            .zip(level_edofs(self.edof, decomp))
            .map(|(l, edof)| -> Result<LevelOut> {
                let w = &l.coefficients;
                let classical = || mean_square(w);
                if w.len() < ROBUST_MIN_COEFFICIENTS {
                    return Ok(LevelOut {
                        nu2: classical(),
                        edof,
                        warning: Some(format!(
                            "scale {}: {} coefficients, classical estimate used",
                            l.scale,
                            w.len()
                        )),
                    });
                }
                let level = robust_level(w, c, b)?;
                let (nu2, warning) = match level {
                    RobustLevel::Estimate(v) => (v, None),
                    RobustLevel::Collapsed => (
                        0.0,
                        Some(format!("scale {}: too many zero coefficients, robust estimate is 0", l.scale)),
                    ),
                };
                Ok(LevelOut {
                    nu2,
                    edof: (edof * self.eff).max(f64::MIN_POSITIVE),
                    warning,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        assemble(decomp.scales(), level_counts(decomp), alpha, self.kind(), self.edof, levels)
    }
}

pub fn wv_classical(decomp: &WaveletDecomposition, alpha: f64) -> Result<WvEstimate> {
    Classical::default().estimate(decomp, alpha)
}

pub fn wv_robust(decomp: &WaveletDecomposition, eff: f64, alpha: f64) -> Result<WvEstimate> {
    Robust::new(eff).estimate(decomp, alpha)
}

impl Classical {
    /// Estimates scales `2..2^levels` straight from the series. The default
    /// EDOF rule needs only the coefficient counts, so the transform is not
    /// stored.
    pub fn estimate_series(&self, ts: &TimeSeries, levels: usize, alpha: f64) -> Result<WvEstimate> {
        if self.edof == EdofRule::Spectral {
            return self.estimate(&modwt_haar(ts, levels)?, alpha);
        }
        check_alpha(alpha)?;
        let energies = haar_energies(ts, levels)?;
        let out = energies
            .iter()
            .map(|e| LevelOut {
                nu2: e.sum_sq / e.count as f64,
                edof: (e.count as f64 / e.scale).max(1.0),
                warning: None,
            })
            .collect();
        assemble(
            energies.iter().map(|e| e.scale).collect(),
            energies.iter().map(|e| e.count).collect(),
            alpha,
            self.kind(),
            self.edof,
            out,
        )
    }
}

/// Estimates the WV of `ts` at scales `2..2^levels`.
pub fn wvar_levels(ts: &TimeSeries, kind: EstimatorKind, levels: usize, alpha: f64) -> Result<WvEstimate> {
    match kind {
        EstimatorKind::Classical => Classical::default().estimate_series(ts, levels, alpha),
        EstimatorKind::Robust { .. } => estimator(kind).estimate(&modwt_haar(ts, levels)?, alpha),
    }
}

/// Estimates the WV at all `⌊log₂ T⌋` scales.
pub fn wvar(ts: &TimeSeries, kind: EstimatorKind, alpha: f64) -> Result<WvEstimate> {
    wvar_levels(ts, kind, max_scales(ts.len())?, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::parse_model;
    use crate::simulate::gen_series;
    use crate::wavelet::WaveletLevel;
    use proptest::prelude::*;

    fn single(w: Vec<f64>) -> WaveletDecomposition {
        WaveletDecomposition {
            source_len: w.len() + 1,
            levels: vec![WaveletLevel {
                scale: 2.0,
                coefficients: w,
            }],
        }
    }

    #[test]
    fn hand_checkable_means() {
        let e = wv_classical(&single(vec![0.0; 3]), 0.05).unwrap();
        assert_eq!((e.nu2[0], e.ci_low[0], e.ci_high[0]), (0.0, 0.0, 0.0));
        assert!(!e.warnings.is_empty());
        let e = wv_classical(&single(vec![1.0, -1.0, 1.0, -1.0]), 0.05).unwrap();
        assert_eq!(e.nu2[0], 1.0);
        assert!(e.ci_low[0] <= 1.0 && 1.0 <= e.ci_high[0]);
    }

    #[test]
    fn smooth_lengths() {
        assert_eq!(smooth_len(1), 1);
        assert_eq!(smooth_len(7), 8);
        assert_eq!(smooth_len(11), 12);
        assert_eq!(smooth_len(1_000_000), 1_000_000);
        assert_eq!(smooth_len(1_000_001), 1_012_500);
        for m in 1..2000 {
            let n = smooth_len(m);
            let mut r = n;
            for f in [2, 3, 5] {
                while r % f == 0 {
                    r /= f;
                }
            }
            assert!(n >= m && r == 1);
            assert!((m..n).all(|k| {
                let mut r = k;
                for f in [2, 3, 5] {
                    while r % f == 0 {
                        r /= f;
                    }
                }
                r != 1
            }));
        }
    }

    #[test]
    fn spectral_edof_brute_force() {
        let w: Vec<f64> = (0..37).map(|i| ((i * i) as f64 * 0.13).cos() + 0.1 * i as f64).collect();
        let m = w.len();
        let s: Vec<f64> = (0..m)
            .map(|k| (0..m - k).map(|t| w[t] * w[t + k]).sum::<f64>() / m as f64)
            .collect();
        let a = s[0] * s[0] / 2.0 + s[1..].iter().map(|x| x * x).sum::<f64>();
        let want = (m as f64 * s[0] * s[0] / a).max(1.0);
        let got = spectral_edof(&w);
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn quantiles_match_reference_table() {
        for (k, p, want) in [
            (1.0, 0.025, 0.000_982_069_117_175_255_5),
            (1.0, 0.975, 5.023_886_187_314_888),
            (10.0, 0.05, 3.940_299_136_119_060_5),
            (2.5, 0.5, 1.873_847_767_780_879),
            (500.0, 0.995, 585.206_616_824_898_8),
        ] {
            let q = chi_square_quantile(k, p).unwrap();
            assert!((q - want).abs() < 1e-10 * want, "{k} {p}: {q}");
        }
    }

    #[test]
    fn unit_dof_interval_ratio() {
        let (lo, hi) = chi_square_ci(1.0, 1.0, 0.05).unwrap();
        // χ²₁ quantiles: 0.000982069, 5.023886
        assert!((hi / lo - 5.023_886_187_314_888 / 0.000_982_069_117_175_3).abs() < 1e-3 * hi / lo);
        let ci = wv_ci(&[0.0, 2.0], &[3, 1], 0.05).unwrap();
        assert_eq!(ci[0], (0.0, 0.0));
        assert_eq!(ci[1], chi_square_ci(2.0, 1.0, 0.05).unwrap());
    }

    #[test]
    fn white_noise_first_scale() {
        let spec = parse_model("WN(sigma2=1)").unwrap();
        let ts = gen_series(&spec, 100_000, 1).unwrap();
        let e = wvar(&ts, EstimatorKind::Classical, 0.05).unwrap();
        assert!((0.48..=0.52).contains(&e.nu2[0]), "{}", e.nu2[0]);
        assert_eq!(e.len(), 16);
    }

    #[test]
    fn streaming_matches_decomposition() {
        let spec = parse_model("AR1(phi=0.9,sigma2=1)+DR(omega=0.3)").unwrap();
        let ts = gen_series(&spec, 5000, 4).unwrap();
        for levels in [1, 5, 12] {
            let stored = Classical::default().estimate(&modwt_haar(&ts, levels).unwrap(), 0.05).unwrap();
            let streamed = Classical::default().estimate_series(&ts, levels, 0.05).unwrap();
            assert_eq!(stored, streamed);
        }
        let ts = TimeSeries::new(vec![1.0, 4.0]).unwrap();
        let e = wvar(&ts, EstimatorKind::Classical, 0.05).unwrap();
        assert_eq!((e.nu2[0], e.counts[0]), (2.25, 1));
    }

    #[test]
    fn white_noise_interval_coverage() {
        let spec = parse_model("WN(sigma2=1)").unwrap();
        let mut spectral = [0usize; 6];
        let mut conservative = [0usize; 6];
        for r in 0..100 {
            let ts = gen_series(&spec, 1 << 14, 500 + r).unwrap();
            let d = modwt_haar(&ts, 6).unwrap();
            let s = Classical { edof: EdofRule::Spectral }.estimate(&d, 0.05).unwrap();
            let c = Classical::default().estimate(&d, 0.05).unwrap();
            for j in 0..6 {
                let truth = 1.0 / s.scales[j];
                spectral[j] += usize::from(s.ci_low[j] <= truth && truth <= s.ci_high[j]);
                conservative[j] += usize::from(c.ci_low[j] <= truth && truth <= c.ci_high[j]);
            }
        }
        assert!(spectral.iter().all(|h| (90..=98).contains(h)), "{spectral:?}");
        // M/2^j understates the EDOF of Haar coefficients, so it over-covers.
        assert!(conservative.iter().all(|&h| h >= 95), "{conservative:?}");
    }

    #[test]
    fn robust_close_to_classical_on_gaussian_data() {
        let spec = parse_model("WN(sigma2=1)").unwrap();
        let ts = gen_series(&spec, 1 << 14, 4).unwrap();
        let d = modwt_haar(&ts, 6).unwrap();
        let c = wv_classical(&d, 0.05).unwrap();
        let r = wv_robust(&d, 0.999, 0.05).unwrap();
        for j in 0..6 {
            assert!((r.nu2[j] / c.nu2[j] - 1.0).abs() < 0.01, "{j}");
        }
        let r6 = wv_robust(&d, 0.6, 0.05).unwrap();
        assert!((r6.nu2[0] / c.nu2[0] - 1.0).abs() < 0.05);
        assert!(r6.ci_high[0] - r6.ci_low[0] > c.ci_high[0] - c.ci_low[0]);
    }

    #[test]
    fn robust_bounded_influence() {
        let spec = parse_model("WN(sigma2=1)").unwrap();
        let ts = gen_series(&spec, 2000, 11).unwrap();
        let d = modwt_haar(&ts, 1).unwrap();
        let est: Vec<f64> = [1e3, 1e6, 1e9]
            .iter()
            .map(|&big| {
                let mut d = d.clone();
                d.levels[0].coefficients[100] = big;
                wv_robust(&d, 0.6, 0.05).unwrap().nu2[0]
            })
            .collect();
        assert!((est[0] - est[1]).abs() < 1e-6 * est[0]);
        assert!((est[1] - est[2]).abs() < 1e-6 * est[0]);
    }

    #[test]
    fn small_levels_fall_back() {
        let d = single(vec![1.0, 2.0, -1.0]);
        let r = wv_robust(&d, 0.6, 0.05).unwrap();
        assert_eq!(r.nu2[0], 2.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(estimator_by_name("classical", 0.6).unwrap().kind(), EstimatorKind::Classical);
        assert_eq!(
            estimator_by_name("robust", 0.7).unwrap().kind(),
            EstimatorKind::Robust { eff: 0.7 }
        );
        assert!(estimator_by_name("huber", 0.6).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn scale_equivariance(seed in 0u64..1000, k in 0.01f64..100.0) {
            let spec = parse_model("AR1(phi=0.5,sigma2=1)").unwrap();
            let y = gen_series(&spec, 512, seed).unwrap();
            let ky = TimeSeries::new(y.values().iter().map(|v| v * k).collect()).unwrap();
            for kind in [EstimatorKind::Classical, EstimatorKind::Robust { eff: 0.6 }] {
                let a = wvar(&y, kind, 0.05).unwrap();
                let b = wvar(&ky, kind, 0.05).unwrap();
                for (u, v) in a.nu2.iter().zip(&b.nu2) {
                    prop_assert!((v - k * k * u).abs() <= 1e-10 * k * k * u.abs().max(1e-300));
                }
                for j in 0..a.len() {
                    prop_assert!(a.ci_low[j] <= a.nu2[j] && a.nu2[j] <= a.ci_high[j]);
                }
            }
        }

        #[test]
        fn estimating_equation_is_monotone(seed in 0u64..1000) {
            let (c, _) = tukey_tuning(0.6).unwrap();
            let spec = parse_model("WN(sigma2=2)").unwrap();
            let w = gen_series(&spec, 200, seed).unwrap().into_values();
            let mut prev = f64::INFINITY;
            for i in -40..40 {
                let inv = (-0.5 * (i as f64 * 0.25)).exp();
                let g = w.iter().map(|&x| rho(x * inv, c)).sum::<f64>();
                prop_assert!(g <= prev);
                prev = g;
            }
        }
    }
}
