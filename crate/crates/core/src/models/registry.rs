use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::kinds::{Arma, Arma11, Ar1, Drift, Ma1, QuantizationNoise, RandomWalk, Sarima, WhiteNoise};
use super::poly;
use super::{ModelKind, ModelTerm, Orders};
use crate::error::{Error, Result};

/// What a parameter slot means, which fixes its constraint and its
/// unconstrained reparameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    /// Strictly positive; log map.
    Variance,
    /// Any real; identity map.
    Drift,
    /// Member of AR polynomial `block`; the block must be causal.
    Ar { block: u8 },
    /// Member of MA polynomial `block`; the block must be invertible.
    Ma { block: u8 },
}

/// Second-order description of a term with a stochastic part: an ARMA core
/// driven by Gaussian innovations, followed by `diff` ordinary and
/// `seasonal_diff` seasonal (period `period`) integrations.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub diff: usize,
    pub seasonal_diff: usize,
    pub period: usize,
}

impl LinearForm {
    pub fn white(sigma2: f64) -> Self {
        LinearForm {
            ar: Vec::new(),
            ma: Vec::new(),
            sigma2,
            diff: 0,
            seasonal_diff: 0,
            period: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// Deterministic `slope · t`, t = 1..n.
    Trend { slope: f64 },
    Linear(LinearForm),
}

/// A parsed grammar argument.
#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: ArgValue,
    /// Byte offset in the source text, for error reporting.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// One interchangeable model kind.
///
/// Implementations describe their parameter slots and their dynamics; the
/// parameter transforms, constraint checks and simulation are derived from
/// those generically.
pub trait ProcessModel: Send + Sync {
    fn kind(&self) -> ModelKind;

    /// Grammar name, e.g. `"AR1"`.
    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Kinds that may appear at most once in a sum.
    fn singleton(&self) -> bool {
        false
    }

    fn slot_names(&self, orders: &Orders) -> Vec<String>;

    fn slot_roles(&self, orders: &Orders) -> Vec<SlotRole>;

    /// Builds a term from grammar arguments.
    fn from_args(&self, args: &[Arg]) -> Result<ModelTerm> {
        let orders = Orders::default();
        let names = self.slot_names(&orders);
        let values = assign_scalars(self.name(), &names, args)?;
        ModelTerm::new(self.kind(), orders, values)
    }

    /// Canonical argument list (without the surrounding parentheses).
    fn format_args(&self, term: &ModelTerm) -> String {
        term.slot_names()
            .iter()
            .zip(&term.values)
            .filter_map(|(n, v)| v.map(|v| format!("{n}={v}")))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Order-level constraints (beyond slot constraints).
    fn check_orders(&self, _orders: &Orders) -> Result<()> {
        Ok(())
    }

    /// Checks every provided value against its slot constraint.
    fn check(&self, term: &ModelTerm) -> Result<()> {
        self.check_orders(&term.orders)?;
        check_slots(term)
    }

    fn dynamics(&self, term: &ModelTerm, values: &[f64]) -> Dynamics;

    /// Closed-form wavelet variance at scale `tau`, when one exists.
    fn closed_form_wv(&self, _term: &ModelTerm, _values: &[f64], _tau: f64) -> Option<f64> {
        None
    }
}

fn check_slots(term: &ModelTerm) -> Result<()> {
    let name = term.kind.name();
    let names = term.slot_names();
    let roles = term.slot_roles();
    for ((v, role), pname) in term.values.iter().zip(&roles).zip(&names) {
        let Some(v) = v else { continue };
        if !v.is_finite() {
            return Err(Error::constraint(name, pname, "value is not finite"));
        }
        if *role == SlotRole::Variance && *v <= 0.0 {
            return Err(Error::constraint(name, pname, "variance must be strictly positive"));
        }
    }
    for (block, coeffs, is_ar) in polynomial_blocks(&roles, &term.values) {
        let Some(coeffs) = coeffs else { continue };
        let ok = if is_ar {
            poly::is_causal(&coeffs)
        } else {
            poly::is_invertible(&coeffs)
        };
        if !ok {
            let what = if is_ar {
                "AR polynomial has a root on or inside the unit circle (nonstationary)"
            } else {
                "MA polynomial has a root on or inside the unit circle (non-invertible)"
            };
            return Err(Error::constraint(name, &names[block[0]], what));
        }
    }
    Ok(())
}

/// Groups polynomial slots: (slot indices, values if all present, is_ar).
pub(crate) fn polynomial_blocks(
    roles: &[SlotRole],
    values: &[Option<f64>],
) -> Vec<(Vec<usize>, Option<Vec<f64>>, bool)> {
    let mut groups: BTreeMap<(bool, u8), Vec<usize>> = BTreeMap::new();
    for (i, r) in roles.iter().enumerate() {
        match r {
            SlotRole::Ar { block } => groups.entry((true, *block)).or_default().push(i),
            SlotRole::Ma { block } => groups.entry((false, *block)).or_default().push(i),
            _ => {}
        }
    }
    groups
        .into_iter()
        .map(|((is_ar, _), idx)| {
            let vals: Option<Vec<f64>> = idx.iter().map(|&i| values[i]).collect();
            (idx, vals, is_ar)
        })
        .collect()
}

/// Assigns scalar grammar arguments to slots by name or position.
pub(crate) fn assign_scalars(
    model: &str,
    names: &[String],
    args: &[Arg],
) -> Result<Vec<Option<f64>>> {
    let mut values = vec![None; names.len()];
    let mut next_pos = 0;
    let mut named_seen = false;
    for arg in args {
        let value = match &arg.value {
            ArgValue::Scalar(v) => *v,
            ArgValue::Vector(v) if v.len() == 1 => v[0],
            ArgValue::Vector(_) => {
                return Err(Error::Syntax {
                    position: arg.position,
                    message: format!("{model} takes scalar arguments"),
                })
            }
        };
        let idx = match &arg.name {
            Some(n) => {
                named_seen = true;
                names.iter().position(|s| s == n).ok_or_else(|| Error::Syntax {
                    position: arg.position,
                    message: format!("{model} has no parameter `{n}`"),
                })?
            }
            None => {
                if named_seen {
                    return Err(Error::Syntax {
                        position: arg.position,
                        message: "positional argument after named argument".into(),
                    });
                }
                let i = next_pos;
                next_pos += 1;
                if i >= names.len() {
                    return Err(Error::Syntax {
                        position: arg.position,
                        message: format!("{model} takes at most {} arguments", names.len()),
                    });
                }
                i
            }
        };
        if values[idx].is_some() {
            return Err(Error::Syntax {
                position: arg.position,
                message: format!("parameter `{}` given twice", names[idx]),
            });
        }
        values[idx] = Some(value);
    }
    Ok(values)
}

/// Name-keyed collection of model strategies.
pub struct ModelRegistry {
    models: BTreeMap<&'static str, Box<dyn ProcessModel>>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry {
            models: BTreeMap::new(),
        }
    }

    /// Registry holding every built-in kind.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(WhiteNoise));
        r.register(Box::new(QuantizationNoise));
        r.register(Box::new(RandomWalk));
        r.register(Box::new(Drift));
        r.register(Box::new(Ar1));
        r.register(Box::new(Ma1));
        r.register(Box::new(Arma11));
        r.register(Box::new(Arma));
        r.register(Box::new(Sarima));
        r
    }

    pub fn register(&mut self, model: Box<dyn ProcessModel>) {
        self.models.insert(model.name(), model);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ProcessModel> {
        self.models.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.models.keys().copied()
    }
}

/// The process-wide registry of built-in kinds.
pub fn registry() -> &'static ModelRegistry {
    static REGISTRY: OnceLock<ModelRegistry> = OnceLock::new();
    REGISTRY.get_or_init(ModelRegistry::builtin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_is_registered_under_its_name() {
        for kind in ModelKind::ALL {
            let m = registry().get(kind.name()).unwrap();
            assert_eq!(m.kind(), kind);
        }
        assert_eq!(registry().names().count(), ModelKind::ALL.len());
        assert!(registry().get("GARCH").is_none());
    }

    #[test]
    fn positional_then_named() {
        let names = vec!["phi".to_string(), "sigma2".to_string()];
        let args = [
            Arg {
                name: None,
                value: ArgValue::Scalar(0.5),
                position: 0,
            },
            Arg {
                name: Some("sigma2".into()),
                value: ArgValue::Scalar(2.0),
                position: 4,
            },
        ];
        assert_eq!(
            assign_scalars("AR1", &names, &args).unwrap(),
            vec![Some(0.5), Some(2.0)]
        );
    }
}
