//! Bijection between the constrained parameter space and ℝ^k.
//!
//! Variances use `ln`, drifts the identity. Each AR (or MA) polynomial block
//! is mapped to its partial autocorrelations, which live in (−1, 1), and then
//! through `atanh`; for a single coefficient this is plain `atanh`. MA blocks
//! use the partial autocorrelations of the negated coefficients. Inverse maps
//! clamp so that every finite input lands strictly inside the constraint set.

use super::poly;
use super::registry::{polynomial_blocks, SlotRole};
use super::{ModelSpec, ModelTerm, ParamVector};
use crate::error::{Error, Result};

/// Largest |partial autocorrelation| produced by the inverse map.
const PACF_LIMIT: f64 = 1.0 - 1e-9;
/// Log-variance is clamped to this range so `exp` stays finite and positive.
const LOG_LIMIT: f64 = 700.0;

fn term_forward(term: &ModelTerm, values: &[f64]) -> Result<Vec<f64>> {
    let roles = term.slot_roles();
    let mut out = vec![0.0; values.len()];
    for (i, role) in roles.iter().enumerate() {
        match role {
            SlotRole::Variance => out[i] = values[i].ln(),
            SlotRole::Drift => out[i] = values[i],
            _ => {}
        }
    }
    let opt: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
    for (idx, coeffs, is_ar) in polynomial_blocks(&roles, &opt) {
        let mut c = coeffs.expect("all values present");
        if !is_ar {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        let pacf = poly::ar_to_pacf(&c).ok_or_else(|| {
            Error::constraint(term.kind.name(), &term.slot_names()[idx[0]], "polynomial outside the stationary region")
        })?;
        for (k, &i) in idx.iter().enumerate() {
            out[i] = pacf[k].atanh();
        }
    }
    Ok(out)
}

fn term_inverse(term: &ModelTerm, x: &[f64]) -> Vec<f64> {
    let roles = term.slot_roles();
    let mut out = vec![0.0; x.len()];
    for (i, role) in roles.iter().enumerate() {
        match role {
            SlotRole::Variance => out[i] = x[i].clamp(-LOG_LIMIT, LOG_LIMIT).exp(),
            SlotRole::Drift => out[i] = x[i],
            _ => {}
        }
    }
    let none = vec![None; x.len()];
    for (idx, _, is_ar) in polynomial_blocks(&roles, &none) {
        let mut pacf: Vec<f64> = idx
            .iter()
            .map(|&i| x[i].tanh().clamp(-PACF_LIMIT, PACF_LIMIT))
            .collect();
        let mut c = poly::pacf_to_ar(&pacf);
        // Near the boundary the step-down check can lose the last digits;
        // shrink until the emitted polynomial passes it.
        while !poly::is_causal(&c) {
            pacf.iter_mut().for_each(|r| *r *= 0.999);
            c = poly::pacf_to_ar(&pacf);
        }
        if !is_ar {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        for (k, &i) in idx.iter().enumerate() {
            out[i] = c[k];
        }
    }
    out
}

pub(super) fn to_unconstrained(spec: &ModelSpec, theta: &ParamVector) -> Result<Vec<f64>> {
    if let Some(bad) = theta.0.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("parameter value {bad}")));
    }
    let values = spec.term_values(theta)?;
    let mut flat = Vec::with_capacity(spec.n_slots());
    for (term, vals) in spec.terms().iter().zip(&values) {
        flat.extend(term_forward(term, vals)?);
    }
    Ok(flat
        .into_iter()
        .zip(spec.free_mask())
        .filter_map(|(x, f)| f.then_some(x))
        .collect())
}

pub(super) fn from_unconstrained(spec: &ModelSpec, x: &[f64]) -> Result<ParamVector> {
    if x.len() != spec.n_free() {
        return Err(Error::Dimension {
            expected: spec.n_free(),
            got: x.len(),
        });
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("unconstrained value {bad}")));
    }
    let mut it = x.iter();
    let mut flat_free = spec.free_mask().iter();
    let mut out = Vec::with_capacity(x.len());
    for term in spec.terms() {
        // Fixed slots contribute their own transformed value so that the
        // polynomial blocks are reassembled consistently.
        let fixed: Vec<f64> = term
            .values
            .iter()
            .zip(term.slot_roles())
            .map(|(v, role)| match (v, role) {
                (Some(v), _) => *v,
                (None, SlotRole::Variance) => 1.0,
                (None, _) => 0.0,
            })
            .collect();
        let mut local = term_forward(term, &fixed)?;
        let mut free_here = Vec::new();
        for (i, slot) in local.iter_mut().enumerate() {
            if *flat_free.next().expect("mask length") {
                *slot = *it.next().expect("length checked");
                free_here.push(i);
            }
        }
        let vals = term_inverse(term, &local);
        out.extend(free_here.into_iter().map(|i| vals[i]));
    }
    Ok(ParamVector(out))
}
