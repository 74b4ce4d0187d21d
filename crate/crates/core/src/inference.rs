//! Bootstrap goodness of fit, the wavelet information criterion and model
//! ranking.
//!
//! Both statistics reuse the parametric-bootstrap replicates of
//! [`gmwm::bootstrap_replicates`]: the J-test compares the observed
//! objective with the replicate objectives, and the WIC optimism is twice the
//! Ω-weighted trace of the replicate covariance between `ν̂ᵇ` and `ν(θ̂ᵇ)`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmwm::{fit_prepared, prepare, FitOptions, FitResult, Replicate, WeightMatrix};
use crate::models::ModelSpec;
use crate::rng::derive_seed;
use crate::simulate::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    /// Objective at θ̂.
    pub statistic: f64,
    pub p_value: f64,
    pub p_ci: (f64, f64),
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WicResult {
    pub obj_fun: f64,
    /// May be negative when the bootstrap covariance is noisy; not clamped.
    pub optimism: f64,
    pub criterion: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRow {
    pub label: String,
    pub model: String,
    pub wic: WicResult,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankTable {
    /// Ascending by criterion, ties by label.
    pub rows: Vec<RankRow>,
    /// Candidates whose fit or bootstrap failed: `(label, reason)`.
    pub failed: Vec<(String, String)>,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
}

fn require_converged(fit: &FitResult) -> Result<()> {
    if fit.diagnostics.converged {
        Ok(())
    } else {
        Err(Error::NotConverged)
    }
}

/// `(1 + #{objᵇ ≥ stat})/(B + 1)` with its binomial normal-approximation
/// interval, where `B` counts the replicates requested.
pub fn gof_p_value(statistic: f64, replicate_objectives: &[f64], b: usize) -> (f64, (f64, f64)) {
    let exceed = replicate_objectives.iter().filter(|&&o| o >= statistic).count();
    let p = (1 + exceed) as f64 / (b + 1) as f64;
    let half = 1.96 * (p * (1.0 - p) / b.max(1) as f64).sqrt();
    (p, ((p - half).max(0.0), (p + half).min(1.0)))
}

/// Bootstrap J-test of `fit` with `b` replicates.
pub fn gof_test(fit: &FitResult, b: usize, seed: u64) -> Result<GofResult> {
    require_converged(fit)?;
    if b == 0 {
        return Err(Error::InvalidArgument("B must be at least 1".into()));
    }
    let reps = fit.replicates_for(b, seed)?;
    let objectives: Vec<f64> = reps.iter().map(|r| r.objective).collect();
    let (p_value, p_ci) = gof_p_value(fit.objective, &objectives, b);
    Ok(GofResult {
        statistic: fit.objective,
        p_value,
        p_ci,
        b,
        seed,
        failures: b - reps.len(),
    })
}

/// `2 Σ_ij Ĉov(ν̂ᵇ_i, ν(θ̂ᵇ)_j) Ω_ij` over the active scales `idx`.
pub fn optimism(reps: &[Replicate], omega: &WeightMatrix, idx: &[usize]) -> f64 {
    let n = reps.len();
    if n < 2 {
        return 0.0;
    }
    let k = idx.len();
    let mean = |f: &dyn Fn(&Replicate) -> &[f64]| -> Vec<f64> {
        (0..k).map(|i| reps.iter().map(|r| f(r)[i]).sum::<f64>() / n as f64).collect()
    };
    let mh = mean(&|r| &r.nu_hat);
    let mm = mean(&|r| &r.nu_model);
    let mut total = 0.0;
    for (a, &ia) in idx.iter().enumerate() {
        for (c, &ic) in idx.iter().enumerate() {
            let w = omega.get(ia, ic);
            if w == 0.0 {
                continue;
            }
            let cov = reps
                .iter()
                .map(|r| (r.nu_hat[a] - mh[a]) * (r.nu_model[c] - mm[c]))
                .sum::<f64>()
                / (n - 1) as f64;
            total += cov * w;
        }
    }
    2.0 * total
}

/// Wavelet information criterion of `fit` from `b` bootstrap replicates.
pub fn wic(fit: &FitResult, b: usize, seed: u64) -> Result<WicResult> {
    require_converged(fit)?;
    if b < 2 {
        return Err(Error::InvalidArgument("B must be at least 2 for a covariance".into()));
    }
    let reps = fit.replicates_for(b, seed)?;
    let optimism = optimism(&reps, &fit.omega, &fit.active_scales);
    Ok(WicResult {
        obj_fun: fit.objective,
        optimism,
        criterion: fit.objective + optimism,
        b,
        seed,
    })
}

pub fn unique_labels(specs: &[ModelSpec]) -> Vec<String> {
    let mut seen = std::collections::HashMap::<String, usize>::new();
    specs
        .iter()
        .map(|s| {
            let base = s.short_label();
            let k = seen.entry(base.clone()).or_default();
            *k += 1;
            if *k == 1 {
                base
            } else {
                format!("{base} ({k})")
            }
        })
        .collect()
}

/// Fits every candidate against one shared ν̂ and Ω from `ts` and ranks them
/// by WIC. Candidate `i` bootstraps with `derive_seed(opts.seed, i)` and
/// `opts.bootstrap` replicates.
pub fn rank_models(specs: &[ModelSpec], ts: &TimeSeries, opts: &FitOptions) -> Result<RankTable> {
    if specs.len() < 2 {
        return Err(Error::InvalidArgument("ranking needs at least 2 models".into()));
    }
    let b = opts.bootstrap;
    if b < 2 {
        return Err(Error::InvalidArgument("B must be at least 2 for a covariance".into()));
    }
    let (wv, omega) = prepare(ts, opts)?;
    let labels = unique_labels(specs);
    let outcomes: Vec<Result<(FitResult, WicResult)>> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let sub = FitOptions {
                seed: derive_seed(opts.seed, i as u64),
                ..opts.clone()
            };
            let fit = fit_prepared(spec, ts, wv.clone(), omega.clone(), &sub)?;
            let w = wic(&fit, b, sub.seed)?;
            Ok((fit, w))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for ((label, spec), outcome) in labels.into_iter().zip(specs).zip(outcomes) {
        match outcome {
            Ok((fit, wic)) => rows.push(RankRow {
                label,
                model: spec.to_string(),
                wic,
                fit,
            }),
            Err(e) => failed.push((label, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "every candidate failed: {}",
            failed.iter().map(|(l, e)| format!("{l}: {e}")).collect::<Vec<_>>().join("; ")
        )));
    }
    sort_rows(&mut rows);
    Ok(RankTable {
        rows,
        failed,
        b,
        seed: opts.seed,
    })
}

fn sort_rows(rows: &mut [RankRow]) {
    rows.sort_by(|a, b| {
        a.wic
            .criterion
            .total_cmp(&b.wic.criterion)
            .then_with(|| a.label.cmp(&b.label))
    });
}

impl fmt::Display for RankTable {
    /// Three-column layout: `Obj Fun  Optimism  Criterion`, one numbered row
    /// per model.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{}. {}", i + 1, r.label))
            .collect();
        let width = names.iter().map(|s| s.chars().count()).max().unwrap_or(0);
        writeln!(f, "{:width$}  {:>10}  {:>10}  {:>10}", "", "Obj Fun", "Optimism", "Criterion")?;
        for (name, r) in names.iter().zip(&self.rows) {
            writeln!(
                f,
                "{name:width$}  {:>10.4}  {:>10.4}  {:>10.4}",
                r.wic.obj_fun, r.wic.optimism, r.wic.criterion
            )?;
        }
        for (label, reason) in &self.failed {
            writeln!(f, "not ranked: {label}: {reason}")?;
        }
        Ok(())
    }
}

impl fmt::Display for GofResult {
    /// Rounded to two decimals for display; stored values keep full
    /// precision.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Bootstrapped Goodness of Fit:")?;
        writeln!(f, "Test Statistic: {:.2}", self.statistic)?;
        writeln!(f, "P-Value: {:.2} CI: ({:.2}, {:.2})", self.p_value, self.p_ci.0, self.p_ci.1)?;
        write!(f, "To replicate the results, use seed: {}", self.seed)
    }
}
