//! Sample paths from model specifications.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{poly, Dynamics, LinearForm, ModelSpec, ModelTerm};
use crate::rng::{derive_seed, stream};

/// An ordered sequence of real observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_dt(values, 1.0)
    }

    pub fn with_dt(values: Vec<f64>, dt: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("observation {i}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("sampling interval {dt}")));
        }
        Ok(TimeSeries { values, dt })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Per-term sample paths and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentBreakdown {
    pub components: Vec<(String, TimeSeries)>,
    pub total: TimeSeries,
}

/// Upper bound on the `1/(1 − ρ)` factor of the burn-in rule.
const PERSISTENCE_CAP: f64 = 1e4;

/// Warm-up length `10·(p+q+1)·max(1, ⌈1/(1−ρ)⌉)`, ρ the largest inverse AR
/// root modulus.
pub fn burn_in(ar: &[f64], ma: &[f64]) -> usize {
    if ar.is_empty() && ma.is_empty() {
        return 0;
    }
    let rho = poly::ar_spectral_radius(ar);
    let persistence = if rho < 1.0 {
        // Guard ceil against representation error, e.g. 1/(1 − 0.9).
        (1.0 / (1.0 - rho) - 1e-9).ceil().min(PERSISTENCE_CAP)
    } else {
        PERSISTENCE_CAP
    };
    10 * (ar.len() + ma.len() + 1) * persistence.max(1.0) as usize
}

fn simulate_linear<R: Rng>(form: &LinearForm, n: usize, rng: &mut R) -> Vec<f64> {
    let (p, q) = (form.ar.len(), form.ma.len());
    let burn = burn_in(&form.ar, &form.ma);
    let total = n + burn;
    let sd = form.sigma2.sqrt();
    let eps: Vec<f64> = (0..total)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut x = vec![0.0; total];
    for t in 0..total {
        let mut v = eps[t];
        for (i, th) in form.ma.iter().enumerate().take(t.min(q)) {
            v += th * eps[t - 1 - i];
        }
        for (i, ph) in form.ar.iter().enumerate().take(t.min(p)) {
            v += ph * x[t - 1 - i];
        }
        x[t] = v;
    }
    let mut y = x.split_off(burn);
    for _ in 0..form.diff {
        let mut acc = 0.0;
        for v in y.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    for _ in 0..form.seasonal_diff {
        for t in form.period..y.len() {
            y[t] += y[t - form.period];
        }
    }
    y
}

/// One term's path, driven by `rng`.
pub fn simulate_term<R: Rng>(term: &ModelTerm, values: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    match term.process().dynamics(term, values) {
        Dynamics::Trend { slope } => (1..=n).map(|t| slope * t as f64).collect(),
        Dynamics::Linear(form) => simulate_linear(&form, n, rng),
    }
}

fn component_paths(spec: &ModelSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let values = spec.full_values()?;
    Ok(spec
        .terms()
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (term, v))| {
            let mut rng = stream(derive_seed(seed, i as u64));
            simulate_term(term, v, n, &mut rng)
        })
        .collect())
}

fn sum_paths(paths: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut total = vec![0.0; n];
    for p in paths {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Simulates `n` observations of a fully parameterized spec. Term `i` draws
/// from the stream seeded with `derive_seed(seed, i)`.
pub fn gen_series(spec: &ModelSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    let paths = component_paths(spec, n, seed)?;
    TimeSeries::new(sum_paths(&paths, n))
}

/// Like [`gen_series`] but keeps every component path.
pub fn gen_latent(spec: &ModelSpec, n: usize, seed: u64) -> Result<LatentBreakdown> {
    let paths = component_paths(spec, n, seed)?;
    let total = TimeSeries::new(sum_paths(&paths, n))?;
    let components = spec
        .term_labels()
        .into_iter()
        .zip(paths)
        .map(|(label, p)| TimeSeries::new(p).map(|ts| (label, ts)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatentBreakdown { components, total })
}

/// Adds N(0, noise_sd²) to `round(fraction·T)` distinct positions.
pub fn contaminate(ts: &TimeSeries, fraction: f64, noise_sd: f64, seed: u64) -> Result<TimeSeries> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "contamination fraction {fraction} outside (0, 1)"
        )));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise sd {noise_sd}")));
    }
    let n = ts.len();
    let k = (fraction * n as f64).round() as usize;
    if k == 0 {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} contaminates no observation of {n}"
        )));
    }
    let mut rng = stream(seed);
    let mut positions = rand::seq::index::sample(&mut rng, n, k).into_vec();
    positions.sort_unstable();
    let mut values = ts.values().to_vec();
    for i in positions {
        values[i] += noise_sd * rng.sample::<f64, _>(StandardNormal);
    }
    TimeSeries::with_dt(values, ts.dt())
}
