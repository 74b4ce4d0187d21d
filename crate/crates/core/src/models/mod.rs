//! Model terms, composite specifications and their parameter spaces.
//!
//! A [`ModelSpec`] is a sum of independent [`ModelTerm`]s written in the
//! `+`-grammar, e.g. `3*AR1()+RW()+WN(sigma2=1)`. Each term kind is a
//! [`ProcessModel`] strategy registered by its grammar name; see
//! [`registry`].

mod grammar;
mod kinds;
pub mod poly;
mod registry;
mod transform;

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub use grammar::parse_model;
pub use kinds::{Arma, Arma11, Ar1, Drift, Ma1, QuantizationNoise, RandomWalk, Sarima, WhiteNoise};
pub use registry::{registry, Dynamics, LinearForm, ModelRegistry, ProcessModel, SlotRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    WN,
    QN,
    RW,
    DR,
    AR1,
    MA1,
    ARMA11,
    ARMA,
    SARIMA,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::WN,
        ModelKind::QN,
        ModelKind::RW,
        ModelKind::DR,
        ModelKind::AR1,
        ModelKind::MA1,
        ModelKind::ARMA11,
        ModelKind::ARMA,
        ModelKind::SARIMA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::WN => "WN",
            ModelKind::QN => "QN",
            ModelKind::RW => "RW",
            ModelKind::DR => "DR",
            ModelKind::AR1 => "AR1",
            ModelKind::MA1 => "MA1",
            ModelKind::ARMA11 => "ARMA11",
            ModelKind::ARMA => "ARMA",
            ModelKind::SARIMA => "SARIMA",
        }
    }

    /// The registered strategy for this kind.
    pub fn process(self) -> &'static dyn ProcessModel {
        registry()
            .get(self.name())
            .expect("every kind is registered")
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Polynomial orders. Only ARMA and SARIMA use non-zero entries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Orders {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub sp: usize,
    pub sd: usize,
    pub sq: usize,
    pub s: usize,
}

/// One component process with (possibly missing) parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTerm {
    pub kind: ModelKind,
    pub orders: Orders,
    pub values: Vec<Option<f64>>,
}

impl ModelTerm {
    pub fn new(kind: ModelKind, orders: Orders, values: Vec<Option<f64>>) -> Result<Self> {
        let n = kind.process().slot_roles(&orders).len();
        if values.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: values.len(),
            });
        }
        Ok(ModelTerm {
            kind,
            orders,
            values,
        })
    }

    /// Term with every slot free and no starting value.
    pub fn unset(kind: ModelKind, orders: Orders) -> Self {
        let n = kind.process().slot_roles(&orders).len();
        ModelTerm {
            kind,
            orders,
            values: vec![None; n],
        }
    }

    pub fn with_values(kind: ModelKind, orders: Orders, values: &[f64]) -> Result<Self> {
        Self::new(kind, orders, values.iter().copied().map(Some).collect())
    }

    pub fn process(&self) -> &'static dyn ProcessModel {
        self.kind.process()
    }

    pub fn n_slots(&self) -> usize {
        self.values.len()
    }

    pub fn slot_names(&self) -> Vec<String> {
        self.process().slot_names(&self.orders)
    }

    pub fn slot_roles(&self) -> Vec<SlotRole> {
        self.process().slot_roles(&self.orders)
    }

    pub fn is_parameterized(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// All slot values, failing if any is missing.
    pub fn full_values(&self) -> Result<Vec<f64>> {
        self.values
            .iter()
            .zip(self.slot_names())
            .map(|(v, name)| v.ok_or_else(|| Error::Unparameterized(format!("{}.{name}", self.kind))))
            .collect()
    }
}

impl fmt::Display for ModelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.process().format_args(self))
    }
}

/// Ordered vector of the free parameters of a [`ModelSpec`], in term order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Position of one parameter slot inside a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRef {
    pub term: usize,
    pub slot: usize,
}

/// A validated sum of model terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    terms: Vec<ModelTerm>,
    free: Vec<bool>,
}

impl ModelSpec {
    /// Builds and validates a spec with every slot free.
    pub fn new(terms: Vec<ModelTerm>) -> Result<Self> {
        let n: usize = terms.iter().map(ModelTerm::n_slots).sum();
        validate_model(ModelSpec {
            terms,
            free: vec![true; n],
        })
    }

    pub fn terms(&self) -> &[ModelTerm] {
        &self.terms
    }

    pub fn free_mask(&self) -> &[bool] {
        &self.free
    }

    pub fn n_slots(&self) -> usize {
        self.free.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.iter().filter(|f| **f).count()
    }

    /// Slot references in flat order.
    pub fn slots(&self) -> Vec<SlotRef> {
        self.terms
            .iter()
            .enumerate()
            .flat_map(|(t, term)| (0..term.n_slots()).map(move |s| SlotRef { term: t, slot: s }))
            .collect()
    }

    pub fn free_slots(&self) -> Vec<SlotRef> {
        self.slots()
            .into_iter()
            .zip(&self.free)
            .filter_map(|(s, f)| f.then_some(s))
            .collect()
    }

    /// Fixes slot `flat` at `value`; it is then excluded from estimation.
    pub fn fix(mut self, flat: usize, value: f64) -> Result<Self> {
        let slot = *self.slots().get(flat).ok_or(Error::Dimension {
            expected: self.n_slots(),
            got: flat + 1,
        })?;
        let term = &self.terms[slot.term];
        let roles = term.slot_roles();
        if let SlotRole::Ar { .. } | SlotRole::Ma { .. } = roles[slot.slot] {
            if roles.iter().filter(|r| **r == roles[slot.slot]).count() > 1 {
                return Err(Error::InvalidArgument(
                    "cannot fix a single coefficient of a polynomial block".into(),
                ));
            }
        }
        self.terms[slot.term].values[slot.slot] = Some(value);
        self.free[flat] = false;
        validate_model(self)
    }

    /// Names of the free slots, e.g. `AR1.phi`.
    pub fn free_names(&self) -> Vec<String> {
        let labels = self.term_labels();
        self.free_slots()
            .into_iter()
            .map(|s| format!("{}.{}", labels[s.term], self.terms[s.term].slot_names()[s.slot]))
            .collect()
    }

    /// Term labels made unique with a 1-based suffix when a kind repeats.
    pub fn term_labels(&self) -> Vec<String> {
        let mut seen = std::collections::BTreeMap::<ModelKind, usize>::new();
        let counts = self.terms.iter().fold(
            std::collections::BTreeMap::<ModelKind, usize>::new(),
            |mut m, t| {
                *m.entry(t.kind).or_default() += 1;
                m
            },
        );
        self.terms
            .iter()
            .map(|t| {
                if counts[&t.kind] > 1 {
                    let i = seen.entry(t.kind).or_default();
                    *i += 1;
                    format!("{}_{}", t.kind, i)
                } else {
                    t.kind.to_string()
                }
            })
            .collect()
    }

    /// Space-separated kind names, as shown in ranking tables ("RW WN DR").
    pub fn short_label(&self) -> String {
        self.terms
            .iter()
            .map(|t| t.kind.name())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Starting values of the free slots (`None` where unspecified).
    pub fn starting_values(&self) -> Vec<Option<f64>> {
        self.free_slots()
            .into_iter()
            .map(|s| self.terms[s.term].values[s.slot])
            .collect()
    }

    /// The free parameters, if every free slot has a value.
    pub fn param_vector(&self) -> Result<ParamVector> {
        self.starting_values()
            .into_iter()
            .zip(self.free_names())
            .map(|(v, n)| v.ok_or(Error::Unparameterized(n)))
            .collect::<Result<Vec<_>>>()
            .map(ParamVector)
    }

    /// Per-term full slot values with free slots taken from `theta`.
    pub fn term_values(&self, theta: &ParamVector) -> Result<Vec<Vec<f64>>> {
        if theta.len() != self.n_free() {
            return Err(Error::Dimension {
                expected: self.n_free(),
                got: theta.len(),
            });
        }
        let mut it = theta.0.iter();
        let mut flat = 0;
        let mut out = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let mut vals = Vec::with_capacity(term.n_slots());
            for (slot, name) in term.values.iter().zip(term.slot_names()) {
                let v = if self.free[flat] {
                    *it.next().expect("length checked")
                } else {
                    slot.ok_or_else(|| Error::Unparameterized(format!("{}.{name}", term.kind)))?
                };
                vals.push(v);
                flat += 1;
            }
            out.push(vals);
        }
        Ok(out)
    }

    /// Copy of the spec with free slots set to `theta`; validated.
    pub fn with_params(&self, theta: &ParamVector) -> Result<ModelSpec> {
        let values = self.term_values(theta)?;
        let terms = self
            .terms
            .iter()
            .zip(values)
            .map(|(t, v)| ModelTerm {
                kind: t.kind,
                orders: t.orders,
                values: v.into_iter().map(Some).collect(),
            })
            .collect();
        validate_model(ModelSpec {
            terms,
            free: self.free.clone(),
        })
    }

    /// Per-term values when the spec is fully parameterized.
    pub fn full_values(&self) -> Result<Vec<Vec<f64>>> {
        self.terms.iter().map(ModelTerm::full_values).collect()
    }

    /// Non-fatal identifiability caveats.
    pub fn warnings(&self) -> Vec<String> {
        let arma_like = self
            .terms
            .iter()
            .filter(|t| matches!(t.kind, ModelKind::MA1 | ModelKind::ARMA11 | ModelKind::ARMA))
            .count();
        if arma_like > 1 {
            vec!["a sum of several ARMA-type terms may not be identifiable".to_string()]
        } else {
            Vec::new()
        }
    }

    pub fn to_unconstrained(&self, theta: &ParamVector) -> Result<Vec<f64>> {
        transform::to_unconstrained(self, theta)
    }

    pub fn from_unconstrained(&self, x: &[f64]) -> Result<ParamVector> {
        transform::from_unconstrained(self, x)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_model(s)
    }
}

/// Checks every spec invariant; returns the spec unchanged when they hold.
pub fn validate_model(spec: ModelSpec) -> Result<ModelSpec> {
    if spec.terms.is_empty() {
        return Err(Error::InvalidArgument("model has no terms".into()));
    }
    let mut seen = Vec::new();
    for t in &spec.terms {
        if t.process().singleton() {
            if seen.contains(&t.kind) {
                return Err(Error::DuplicateSingleton(t.kind.to_string()));
            }
            seen.push(t.kind);
        }
    }
    if spec.terms.len() > 1 && spec.terms.iter().any(|t| t.kind == ModelKind::SARIMA) {
        return Err(Error::SarimaInSum);
    }
    let n: usize = spec.terms.iter().map(ModelTerm::n_slots).sum();
    if spec.free.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: spec.free.len(),
        });
    }
    for t in &spec.terms {
        t.process().check(t)?;
    }
    if spec.n_free() == 0 {
        return Err(Error::NoFreeParameters);
    }
    Ok(spec)
}
