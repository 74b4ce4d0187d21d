//! Generalized method of wavelet moments estimation.
//!
//! θ̂ minimizes `(ν̂ − ν(θ))ᵀ Ω (ν̂ − ν(θ))` over the unconstrained
//! reparameterization of the free parameters, by Nelder–Mead. Uncertainty
//! comes from a parametric bootstrap that simulates from θ̂ and refits.

use std::borrow::Cow;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::implied::{implied_wv, ImpliedWv};
use crate::models::{ModelSpec, ParamVector, SlotRole};
use crate::optim::{nelder_mead, Minimum, NelderMeadOptions};
use crate::rng::derive_seed;
use crate::simulate::{gen_series, TimeSeries};
use crate::wavelet::max_scales;
use crate::wv::{wvar_levels, EstimatorKind, WvEstimate};

/// Stream tag separating bootstrap draws from other uses of a master seed.
const BOOTSTRAP_STREAM: u64 = 0xB0075;
/// Largest number of AR(1) starting-grid combinations evaluated.
const MAX_GRID: usize = 81;
const PHI_GRID: [f64; 3] = [0.1, 0.5, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaProvenance {
    DefaultDiagonal,
    Identity,
    UserSupplied,
}

/// Symmetric positive (semi-)definite weighting matrix. Scales whose default
/// weight is zero are excluded from the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    dim: usize,
    /// Row-major entries.
    values: Vec<f64>,
    pub provenance: OmegaProvenance,
    pub warnings: Vec<String>,
}

impl WeightMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            values[i * dim + i] = 1.0;
        }
        WeightMatrix {
            dim,
            values,
            provenance: OmegaProvenance::Identity,
            warnings: Vec::new(),
        }
    }

    /// A user matrix; must be symmetric with a positive diagonal and admit a
    /// Cholesky factorization.
    pub fn user(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("empty weighting matrix".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: r.len(),
            });
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weighting matrix entry".into()));
        }
        for i in 0..dim {
            if values[i * dim + i] <= 0.0 {
                return Err(Error::NotPositiveDefinite);
            }
            for j in 0..i {
                let (a, b) = (values[i * dim + j], values[j * dim + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                    return Err(Error::InvalidArgument("weighting matrix is not symmetric".into()));
                }
            }
        }
        if DMatrix::from_row_slice(dim, dim, &values).cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(WeightMatrix {
            dim,
            values,
            provenance: OmegaProvenance::UserSupplied,
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// `k·Ω`, keeping the provenance.
    pub fn scaled(&self, k: f64) -> Self {
        WeightMatrix {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }

    /// Indices of scales with positive weight.
    pub fn weighted_scales(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| self.get(i, i) > 0.0).collect()
    }

    /// `rᵀ Ω r` over the index set `idx` (residual `r` indexed alike).
    fn quadratic_form(&self, idx: &[usize], r: &[f64]) -> f64 {
        let mut total = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            total += self.get(i, i) * r[a] * r[a];
            for (b, &j) in idx.iter().enumerate().take(a) {
                let w = self.get(i, j);
                if w != 0.0 {
                    total += 2.0 * w * r[a] * r[b];
                }
            }
        }
        total
    }
}

/// `Ω = diag(η_j / (2 ν̂_j⁴))`, the inverse chi-square variance of each ν̂_j².
pub fn omega_default(wv: &WvEstimate) -> Result<WeightMatrix> {
    let dim = wv.len();
    if dim == 0 {
        return Err(Error::InvalidArgument("no scales".into()));
    }
    let mut values = vec![0.0; dim * dim];
    let mut warnings = Vec::new();
    for j in 0..dim {
        let v = wv.nu2[j];
        if v > 0.0 {
            values[j * dim + j] = wv.edof[j] / (2.0 * v * v);
        } else {
            warnings.push(format!("scale {} has zero wavelet variance and is excluded", wv.scales[j]));
        }
    }
    if warnings.len() == dim {
        return Err(Error::AllScalesDegenerate);
    }
    Ok(WeightMatrix {
        dim,
        values,
        provenance: OmegaProvenance::DefaultDiagonal,
        warnings,
    })
}

/// Ω-weighted distance between `ν̂` and `ν(θ)`; `+∞` when θ violates a
/// constraint.
pub fn objective(theta: &ParamVector, wv: &WvEstimate, omega: &WeightMatrix, spec: &ModelSpec) -> Result<f64> {
    if omega.dim != wv.len() {
        return Err(Error::Dimension {
            expected: wv.len(),
            got: omega.dim,
        });
    }
    if theta.len() != spec.n_free() {
        return Err(Error::Dimension {
            expected: spec.n_free(),
            got: theta.len(),
        });
    }
    let idx = omega.weighted_scales();
    let scales: Vec<f64> = idx.iter().map(|&j| wv.scales[j]).collect();
    match implied_wv(spec, theta, &scales) {
        Ok(iw) => {
            let r: Vec<f64> = idx.iter().zip(&iw.total).map(|(&j, v)| wv.nu2[j] - v).collect();
            Ok(omega.quadratic_form(&idx, &r))
        }
        Err(Error::Constraint { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OmegaChoice {
    Default,
    Identity,
    User(WeightMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub estimator: EstimatorKind,
    pub omega: OmegaChoice,
    pub bootstrap: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Number of scales, `⌊log₂ T⌋` when `None`.
    pub levels: Option<usize>,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            estimator: EstimatorKind::Classical,
            omega: OmegaChoice::Default,
            bootstrap: 100,
            alpha: 0.05,
            seed: 1337,
            levels: None,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub starts_tried: usize,
    pub start: Vec<f64>,
    pub start_objective: f64,
}

/// One parametric-bootstrap refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub theta: Vec<f64>,
    pub objective: f64,
    /// ν̂ᵇ at the fit's active scales.
    pub nu_hat: Vec<f64>,
    /// ν(θ̂ᵇ) at the fit's active scales.
    pub nu_model: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(skip)]
    pub spec: Option<ModelSpec>,
    pub model: String,
    pub fitted_model: String,
    pub names: Vec<String>,
    pub theta: Vec<f64>,
    pub se: Option<Vec<f64>>,
    pub ci: Option<Vec<(f64, f64)>>,
    pub objective: f64,
    pub omega: WeightMatrix,
    pub wv: WvEstimate,
    /// Indices of the scales entering the objective.
    pub active_scales: Vec<usize>,
    pub implied: ImpliedWv,
    pub n: usize,
    pub alpha: f64,
    pub bootstrap: usize,
    pub bootstrap_failures: usize,
    pub seed: u64,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub replicates: Vec<Replicate>,
}

impl FitResult {
    pub fn spec(&self) -> &ModelSpec {
        self.spec.as_ref().expect("fit results carry their spec")
    }

    pub fn param_vector(&self) -> ParamVector {
        ParamVector(self.theta.clone())
    }

    /// Bootstrap replicates for `(b, seed)`, reusing the fit's own when they
    /// match.
    pub fn replicates_for(&self, b: usize, seed: u64) -> Result<Cow<'_, [Replicate]>> {
        if b == self.bootstrap && seed == self.seed && self.replicates.len() + self.bootstrap_failures == b {
            return Ok(Cow::Borrowed(&self.replicates));
        }
        let (reps, _) = bootstrap_replicates(self, b, seed)?;
        Ok(Cow::Owned(reps))
    }
}

/// The objective restricted to the active scales, as a function of the
/// unconstrained coordinates.
struct Problem<'a> {
    spec: &'a ModelSpec,
    omega: &'a WeightMatrix,
    idx: Vec<usize>,
    scales: Vec<f64>,
    nu_hat: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(spec: &'a ModelSpec, wv: &WvEstimate, omega: &'a WeightMatrix, probe: &ParamVector) -> Result<(Self, Vec<String>)> {
        if omega.dim != wv.len() {
            return Err(Error::Dimension {
                expected: wv.len(),
                got: omega.dim,
            });
        }
        let mut warnings = Vec::new();
        let mut idx = Vec::new();
        for j in omega.weighted_scales() {
            match implied_wv(spec, probe, &[wv.scales[j]]) {
                Ok(_) => idx.push(j),
                Err(Error::UnsupportedIntegration(_)) => warnings.push(format!(
                    "scale {} excluded: the model's coefficient process is not stationary there",
                    wv.scales[j]
                )),
                Err(e) => return Err(e),
            }
        }
        if idx.len() < spec.n_free() {
            return Err(Error::NotEnoughScales {
                scales: idx.len(),
                params: spec.n_free(),
            });
        }
        let scales = idx.iter().map(|&j| wv.scales[j]).collect();
        let nu_hat = idx.iter().map(|&j| wv.nu2[j]).collect();
        Ok((
            Problem {
                spec,
                omega,
                idx,
                scales,
                nu_hat,
            },
            warnings,
        ))
    }

    fn at_theta(&self, theta: &ParamVector) -> f64 {
        match implied_wv(self.spec, theta, &self.scales) {
            Ok(iw) => {
                let r: Vec<f64> = self.nu_hat.iter().zip(&iw.total).map(|(a, b)| a - b).collect();
                self.omega.quadratic_form(&self.idx, &r)
            }
            Err(_) => f64::INFINITY,
        }
    }

    fn at(&self, x: &[f64]) -> f64 {
        match self.spec.from_unconstrained(x) {
            Ok(theta) => self.at_theta(&theta),
            Err(_) => f64::INFINITY,
        }
    }

    fn implied(&self, theta: &ParamVector) -> Result<ImpliedWv> {
        implied_wv(self.spec, theta, &self.scales)
    }
}

/// Candidate starting vectors for the free parameters. Values present in
/// the spec are kept; the rest follow the documented heuristic.
pub fn starting_candidates(spec: &ModelSpec, wv: &WvEstimate, drift_sign: f64) -> Vec<ParamVector> {
    let given = spec.starting_values();
    let slots = spec.free_slots();
    let roles: Vec<SlotRole> = slots.iter().map(|s| spec.terms()[s.term].slot_roles()[s.slot]).collect();
    let variance_terms = {
        let mut t: Vec<usize> = slots
            .iter()
            .zip(&roles)
            .filter(|(_, r)| **r == SlotRole::Variance)
            .map(|(s, _)| s.term)
            .collect();
        t.dedup();
        t.len().max(1)
    };
    let nu1 = wv.nu2.iter().copied().find(|v| *v > 0.0).unwrap_or(1.0);
    let variance0 = nu1 * wv.scales[0] / variance_terms as f64;
    let j = wv.len();
    let omega0 = if j >= 2 {
        let rise = (wv.nu2[j - 1] - wv.nu2[j - 2]).max(0.0);
        let span = wv.scales[j - 1].powi(2) - wv.scales[j - 2].powi(2);
        (16.0 * rise / span).sqrt()
    } else {
        4.0 * wv.nu2[0].sqrt() / wv.scales[0]
    };
    // A WV that does not rise at the largest scales gives no drift signal;
    // start small rather than at zero so the sign is kept.
    let omega0 = if omega0 > 0.0 {
        omega0
    } else {
        0.4 * wv.nu2[j - 1].max(0.0).sqrt() / wv.scales[j - 1]
    };
    let omega0 = if drift_sign < 0.0 { -omega0 } else { omega0 };
    let mut base: Vec<f64> = Vec::with_capacity(slots.len());
    let mut ar1_slots = Vec::new();
    let mut first_in_block = std::collections::HashSet::new();
    for (i, (s, role)) in slots.iter().zip(&roles).enumerate() {
        let term = &spec.terms()[s.term];
        let v = match role {
            SlotRole::Variance => variance0,
            SlotRole::Drift => omega0,
            SlotRole::Ar { block } | SlotRole::Ma { block } => {
                let key = (s.term, matches!(role, SlotRole::Ar { .. }), *block);
                if term.kind == crate::models::ModelKind::AR1 && given[i].is_none() {
                    ar1_slots.push(i);
                }
                if first_in_block.insert(key) {
                    0.1
                } else {
                    0.0
                }
            }
        };
        base.push(given[i].unwrap_or(v));
    }
    if ar1_slots.is_empty() {
        return vec![ParamVector(base)];
    }
    let k = ar1_slots.len();
    let combos = 3usize.checked_pow(k as u32).filter(|c| *c <= MAX_GRID);
    let mut out = Vec::new();
    match combos {
        Some(n) => {
            for code in 0..n {
                let mut c = base.clone();
                let mut rest = code;
                for &i in &ar1_slots {
                    c[i] = PHI_GRID[rest % 3];
                    rest /= 3;
                }
                out.push(ParamVector(c));
            }
        }
        None => {
            // Too many AR(1) terms for the product grid: spread them evenly.
            let mut c = base;
            for (r, &i) in ar1_slots.iter().enumerate() {
                c[i] = 0.1 + 0.8 * r as f64 / (k - 1) as f64;
            }
            out.push(ParamVector(c));
        }
    }
    out
}

fn simplex_steps(spec: &ModelSpec, x0: &[f64], wv: &WvEstimate) -> Vec<f64> {
    let scale_hint = 4.0 * wv.nu2.last().copied().unwrap_or(1.0).max(0.0).sqrt() / wv.scales.last().copied().unwrap_or(2.0);
    spec.free_slots()
        .iter()
        .zip(x0)
        .map(|(s, x)| match spec.terms()[s.term].slot_roles()[s.slot] {
            SlotRole::Variance => 1.0,
            SlotRole::Drift => (0.5 * x.abs()).max(0.1 * scale_hint).max(1e-12),
            _ => 0.5,
        })
        .collect()
}

struct Optimized {
    theta: ParamVector,
    implied: ImpliedWv,
    diagnostics: Diagnostics,
}

/// Number of best-ranked starting candidates each refined by a full simplex
/// run; a single run from the best grid point can stall in a local minimum.
const REFINED_STARTS: usize = 3;

fn optimize(problem: &Problem, wv: &WvEstimate, starts: &[ParamVector], opts: &NelderMeadOptions) -> Result<Optimized> {
    let spec = problem.spec;
    let mut ranked: Vec<(Vec<f64>, f64)> = starts
        .iter()
        .filter_map(|s| spec.to_unconstrained(s).ok())
        .map(|x| {
            let f = problem.at(&x);
            (x, f)
        })
        .collect();
    if ranked.is_empty() {
        return Err(Error::InvalidArgument("no valid starting value".into()));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    if !ranked[0].1.is_finite() {
        return Err(Error::NonFinite("objective at every starting value".into()));
    }
    let (x0, f0) = ranked[0].clone();
    let mut best: Option<Minimum> = None;
    let mut iterations = 0;
    let mut evaluations = starts.len();
    for (x, f) in ranked.iter().take(REFINED_STARTS) {
        if !f.is_finite() {
            break;
        }
        let steps = simplex_steps(spec, x, wv);
        let m = nelder_mead(|x| problem.at(x), x, &steps, opts);
        iterations += m.iterations;
        evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let m = best.expect("at least one finite start");
    let theta = spec.from_unconstrained(&m.x)?;
    let implied = problem.implied(&theta)?;
    Ok(Optimized {
        theta,
        implied,
        diagnostics: Diagnostics {
            iterations,
            evaluations,
            converged: m.converged,
            starts_tried: starts.len(),
            start: spec.from_unconstrained(&x0)?.0,
            start_objective: f0,
        },
    })
}

fn series_levels(n: usize, requested: Option<usize>) -> Result<usize> {
    let jmax = max_scales(n)?;
    match requested {
        None => Ok(jmax),
        Some(j) if j >= 1 && j <= jmax => Ok(j),
        Some(j) => Err(Error::InvalidArgument(format!(
            "{j} scales requested, series of length {n} admits 1..={jmax}"
        ))),
    }
}

/// ν̂ of `ts` under `opts`, and the weighting matrix it implies.
pub fn prepare(ts: &TimeSeries, opts: &FitOptions) -> Result<(WvEstimate, WeightMatrix)> {
    let levels = series_levels(ts.len(), opts.levels)?;
    let wv = wvar_levels(ts, opts.estimator, levels, opts.alpha)?;
    let omega = match &opts.omega {
        OmegaChoice::Default => omega_default(&wv)?,
        OmegaChoice::Identity => WeightMatrix::identity(levels),
        OmegaChoice::User(m) => {
            if m.dim != levels {
                return Err(Error::Dimension {
                    expected: levels,
                    got: m.dim,
                });
            }
            m.clone()
        }
    };
    Ok((wv, omega))
}

/// Fits `spec` to `ts`.
pub fn fit(spec: &ModelSpec, ts: &TimeSeries, opts: &FitOptions) -> Result<FitResult> {
    let levels = series_levels(ts.len(), opts.levels)?;
    if levels < spec.n_free() {
        return Err(Error::NotEnoughScales {
            scales: levels,
            params: spec.n_free(),
        });
    }
    let (wv, omega) = prepare(ts, opts)?;
    fit_prepared(spec, ts, wv, omega, opts)
}

/// Fits `spec` against a precomputed `ν̂` and `Ω` (shared across candidate
/// models when ranking).
pub fn fit_prepared(spec: &ModelSpec, ts: &TimeSeries, wv: WvEstimate, omega: WeightMatrix, opts: &FitOptions) -> Result<FitResult> {
    let drift_sign = ts.values()[ts.len() - 1] - ts.values()[0];
    let starts = starting_candidates(spec, &wv, drift_sign);
    let (problem, mut warnings) = Problem::new(spec, &wv, &omega, &starts[0])?;
    let opt = optimize(&problem, &wv, &starts, &opts.optimizer)?;
    let objective = problem.at_theta(&opt.theta);
    warnings.extend(spec.warnings());
    warnings.extend(omega.warnings.iter().cloned());
    warnings.extend(wv.warnings.iter().cloned());
    if !opt.diagnostics.converged {
        warnings.push("optimizer did not converge".into());
    }
    let active_scales = problem.idx.clone();
    let fitted = spec.with_params(&opt.theta)?;
    let mut result = FitResult {
        spec: Some(spec.clone()),
        model: spec.to_string(),
        fitted_model: fitted.to_string(),
        names: spec.free_names(),
        theta: opt.theta.0,
        se: None,
        ci: None,
        objective,
        omega,
        wv,
        active_scales,
        implied: opt.implied,
        n: ts.len(),
        alpha: opts.alpha,
        bootstrap: opts.bootstrap,
        bootstrap_failures: 0,
        seed: opts.seed,
        diagnostics: opt.diagnostics,
        warnings,
        replicates: Vec::new(),
    };
    if opts.bootstrap > 0 {
        let (reps, failures) = bootstrap_replicates(&result, opts.bootstrap, opts.seed)?;
        let (se, ci) = summarize(&result.theta, &reps, opts.alpha);
        result.se = Some(se);
        result.ci = Some(ci);
        result.replicates = reps;
        result.bootstrap_failures = failures;
    }
    Ok(result)
}

/// Refit of one bootstrap series; `seed` drives the simulation.
fn replicate(fit: &FitResult, seed: u64) -> Result<Replicate> {
    let spec = fit.spec();
    let theta = fit.param_vector();
    let truth = spec.with_params(&theta)?;
    let ts = gen_series(&truth, fit.n, seed)?;
    let wv = wvar_levels(&ts, fit.wv.estimator, fit.wv.len(), fit.alpha)?;
    let omega = match fit.omega.provenance {
        OmegaProvenance::DefaultDiagonal => omega_default(&wv)?,
        _ => fit.omega.clone(),
    };
    let (problem, _) = Problem::new(spec, &wv, &omega, &theta)?;
    if problem.idx != fit.active_scales {
        return Err(Error::AllScalesDegenerate);
    }
    let opt = optimize(&problem, &wv, std::slice::from_ref(&theta), &NelderMeadOptions::default())?;
    Ok(Replicate {
        objective: problem.at_theta(&opt.theta),
        theta: opt.theta.0,
        nu_hat: problem.nu_hat.clone(),
        nu_model: opt.implied.total,
        converged: opt.diagnostics.converged,
    })
}

/// `b` parametric-bootstrap refits of `fit`, in replicate order, with the
/// number of failed replicates. Replicate `i` uses the sub-seed
/// `derive_seed(derive_seed(seed, tag), i)`, so results do not depend on
/// how the work is scheduled.
pub fn bootstrap_replicates(fit: &FitResult, b: usize, seed: u64) -> Result<(Vec<Replicate>, usize)> {
    let master = derive_seed(seed, BOOTSTRAP_STREAM);
    let results: Vec<Result<Replicate>> = (0..b)
        .into_par_iter()
        .map(|i| replicate(fit, derive_seed(master, i as u64)))
        .collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed * 10 > b {
        return Err(Error::BootstrapFailure { failed, total: b });
    }
    Ok((results.into_iter().filter_map(Result::ok).collect(), failed))
}

/// Linear-interpolation sample quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

type Summary = (Vec<f64>, Vec<(f64, f64)>);

/// Replicate standard deviations and percentile intervals, widened when
/// needed so each interval contains the point estimate.
fn summarize(theta: &[f64], reps: &[Replicate], alpha: f64) -> Summary {
    let mut se = Vec::with_capacity(theta.len());
    let mut ci = Vec::with_capacity(theta.len());
    for (k, &t) in theta.iter().enumerate() {
        let mut v: Vec<f64> = reps.iter().map(|r| r.theta[k]).collect();
        if v.len() < 2 {
            se.push(0.0);
            ci.push((t, t));
            continue;
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        se.push(var.sqrt());
        v.sort_by(f64::total_cmp);
        let lo = quantile(&v, alpha / 2.0).min(t);
        let hi = quantile(&v, 1.0 - alpha / 2.0).max(t);
        ci.push((lo, hi));
    }
    (se, ci)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implied::dyadic_scales;
    use crate::models::parse_model;

    fn synthetic_wv(nu2: Vec<f64>) -> WvEstimate {
        let j = nu2.len();
        WvEstimate {
            scales: dyadic_scales(j),
            ci_low: nu2.clone(),
            ci_high: nu2.clone(),
            counts: vec![100; j],
            edof: vec![50.0; j],
            nu2,
            estimator: EstimatorKind::Classical,
            edof_rule: Default::default(),
            alpha: 0.05,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn default_weights() {
        let counts: Vec<usize> = (1..=10).map(|j| 1024 - (1 << j) + 1).collect();
        let mut wv = synthetic_wv(vec![1.0; 10]);
        wv.edof = counts.iter().enumerate().map(|(j, m)| *m as f64 / (1u64 << (j + 1)) as f64).collect();
        let om = omega_default(&wv).unwrap();
        for j in 0..10 {
            assert_eq!(om.get(j, j), wv.edof[j] / 2.0);
        }
        assert!(om.is_diagonal() && om.warnings.is_empty());
        wv.nu2[3] = 0.0;
        let om = omega_default(&wv).unwrap();
        assert_eq!(om.get(3, 3), 0.0);
        assert_eq!(om.warnings.len(), 1);
        assert_eq!(omega_default(&synthetic_wv(vec![0.0; 3])), Err(Error::AllScalesDegenerate));
    }

    #[test]
    fn quadratic_form_examples() {
        let spec = parse_model("WN()").unwrap();
        let theta = ParamVector(vec![1.0]);
        let exact = synthetic_wv(vec![0.5, 0.25]);
        let om = WeightMatrix::identity(2);
        assert_eq!(objective(&theta, &exact, &om, &spec).unwrap(), 0.0);
        let off = synthetic_wv(vec![1.5, 0.25]);
        assert_eq!(objective(&theta, &off, &om, &spec).unwrap(), 1.0);
        let om2 = WeightMatrix::user(vec![vec![2.0]]).unwrap();
        let one = synthetic_wv(vec![3.5]);
        assert_eq!(objective(&theta, &one, &om2, &spec).unwrap(), 18.0);
        assert_eq!(objective(&ParamVector(vec![-1.0]), &one, &om2, &spec).unwrap(), f64::INFINITY);
    }

    #[test]
    fn user_matrix_validation() {
        assert!(WeightMatrix::user(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(WeightMatrix::user(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(WeightMatrix::user(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).is_ok());
        assert!(WeightMatrix::user(vec![vec![1.0, 0.5]]).is_err());
    }

    #[test]
    fn fixed_point_start() {
        let spec = parse_model("AR1(phi=0.6,sigma2=2)+WN(sigma2=0.5)").unwrap();
        let theta0 = spec.param_vector().unwrap();
        let iw = implied_wv(&spec, &theta0, &dyadic_scales(9)).unwrap();
        let wv = synthetic_wv(iw.total);
        let om = omega_default(&wv).unwrap();
        let ts = TimeSeries::new(vec![0.0, 1.0]).unwrap();
        let r = fit_prepared(&spec, &ts, wv, om, &FitOptions { bootstrap: 0, ..Default::default() }).unwrap();
        for (a, b) in r.theta.iter().zip(&theta0.0) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(r.objective < 1e-20);
        assert!(r.se.is_none());
    }

    #[test]
    fn white_noise_fit_and_bootstrap() {
        let spec = parse_model("WN()").unwrap();
        let ts = gen_series(&parse_model("WN(sigma2=1)").unwrap(), 10_000, 7).unwrap();
        let opts = FitOptions { bootstrap: 20, ..Default::default() };
        let r = fit(&spec, &ts, &opts).unwrap();
        assert!((0.9..=1.1).contains(&r.theta[0]), "{}", r.theta[0]);
        assert!(r.diagnostics.converged);
        assert_eq!(r.objective, objective(&r.param_vector(), &r.wv, &r.omega, &spec).unwrap());
        let (lo, hi) = r.ci.as_ref().unwrap()[0];
        assert!(lo <= r.theta[0] && r.theta[0] <= hi);
        assert!(r.se.as_ref().unwrap()[0] > 0.0);
        assert_eq!(r.replicates.len(), 20);
        let again = fit(&spec, &ts, &opts).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn objective_improves_and_scaling_invariance() {
        let truth = parse_model("AR1(phi=0.8,sigma2=1)+WN(sigma2=2)").unwrap();
        let ts = gen_series(&truth, 4096, 3).unwrap();
        let spec = parse_model("AR1()+WN()").unwrap();
        let opts = FitOptions { bootstrap: 0, ..Default::default() };
        let (wv, om) = prepare(&ts, &opts).unwrap();
        let a = fit_prepared(&spec, &ts, wv.clone(), om.clone(), &opts).unwrap();
        assert!(a.objective <= a.diagnostics.start_objective * (1.0 + 1e-12));
        let b = fit_prepared(&spec, &ts, wv, om.scaled(4.0), &opts).unwrap();
        assert_eq!(a.theta, b.theta);
        assert!((b.objective - 4.0 * a.objective).abs() < 1e-12 * b.objective);
    }

    #[test]
    fn too_few_scales() {
        let spec = parse_model("AR1()+AR1()+WN()").unwrap();
        let ts = gen_series(&parse_model("WN(1)").unwrap(), 16, 1).unwrap();
        assert!(matches!(
            fit(&spec, &ts, &FitOptions::default()),
            Err(Error::NotEnoughScales { .. })
        ));
    }

    #[test]
    fn starting_grid() {
        let spec = parse_model("AR1()+AR1()+WN()").unwrap();
        let wv = synthetic_wv(vec![1.0, 0.8, 0.6, 0.5]);
        let c = starting_candidates(&spec, &wv, 1.0);
        assert_eq!(c.len(), 9);
        assert!(c.iter().all(|p| (p.0[1] - 2.0 / 3.0).abs() < 1e-15));
        let spec = parse_model("AR1(phi=0.3)+DR()").unwrap();
        let c = starting_candidates(&spec, &wv, -1.0);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].0[0], 0.3);
        assert!(c[0].0[2] < 0.0);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
    }
}
