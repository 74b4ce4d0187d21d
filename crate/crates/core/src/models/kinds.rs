//! Built-in model kinds.

use super::poly;
use super::registry::{Arg, ArgValue, Dynamics, LinearForm, ProcessModel, SlotRole};
use super::{ModelKind, ModelTerm, Orders};
use crate::error::{Error, Result};

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub struct WhiteNoise;

impl ProcessModel for WhiteNoise {
    fn kind(&self) -> ModelKind {
        ModelKind::WN
    }
    fn singleton(&self) -> bool {
        true
    }
    fn slot_names(&self, _: &Orders) -> Vec<String> {
        names(&["sigma2"])
    }
    fn slot_roles(&self, _: &Orders) -> Vec<SlotRole> {
        vec![SlotRole::Variance]
    }
    fn dynamics(&self, _: &ModelTerm, v: &[f64]) -> Dynamics {
        Dynamics::Linear(LinearForm::white(v[0]))
    }
    fn closed_form_wv(&self, _: &ModelTerm, v: &[f64], tau: f64) -> Option<f64> {
        Some(v[0] / tau)
    }
}

/// Quantization noise, modelled as `Z_t − Z_{t−1}` with `Z` iid N(0, Q²).
pub struct QuantizationNoise;

impl ProcessModel for QuantizationNoise {
    fn kind(&self) -> ModelKind {
        ModelKind::QN
    }
    fn singleton(&self) -> bool {
        true
    }
    fn slot_names(&self, _: &Orders) -> Vec<String> {
        names(&["q2"])
    }
    fn slot_roles(&self, _: &Orders) -> Vec<SlotRole> {
        vec![SlotRole::Variance]
    }
    fn dynamics(&self, _: &ModelTerm, v: &[f64]) -> Dynamics {
        Dynamics::Linear(LinearForm {
            ma: vec![-1.0],
            ..LinearForm::white(v[0])
        })
    }
    fn closed_form_wv(&self, _: &ModelTerm, v: &[f64], tau: f64) -> Option<f64> {
        Some(6.0 * v[0] / (tau * tau))
    }
}

pub struct RandomWalk;

impl ProcessModel for RandomWalk {
    fn kind(&self) -> ModelKind {
        ModelKind::RW
    }
    fn singleton(&self) -> bool {
        true
    }
    fn slot_names(&self, _: &Orders) -> Vec<String> {
        names(&["gamma2"])
    }
    fn slot_roles(&self, _: &Orders) -> Vec<SlotRole> {
        vec![SlotRole::Variance]
    }
    fn dynamics(&self, _: &ModelTerm, v: &[f64]) -> Dynamics {
        Dynamics::Linear(LinearForm {
            diff: 1,
            ..LinearForm::white(v[0])
        })
    }
    fn closed_form_wv(&self, _: &ModelTerm, v: &[f64], tau: f64) -> Option<f64> {
        Some(v[0] * (tau * tau + 2.0) / (12.0 * tau))
    }
}

pub struct Drift;

impl ProcessModel for Drift {
    fn kind(&self) -> ModelKind {
        ModelKind::DR
    }
    fn singleton(&self) -> bool {
        true
    }
    fn slot_names(&self, _: &Orders) -> Vec<String> {
        names(&["omega"])
    }
    fn slot_roles(&self, _: &Orders) -> Vec<SlotRole> {
        vec![SlotRole::Drift]
    }
    fn dynamics(&self, _: &ModelTerm, v: &[f64]) -> Dynamics {
        Dynamics::Trend { slope: v[0] }
    }
    fn closed_form_wv(&self, _: &ModelTerm, v: &[f64], tau: f64) -> Option<f64> {
        Some(v[0] * v[0] * tau * tau / 16.0)
    }
}

pub struct Ar1;

impl ProcessModel for Ar1 {
    fn kind(&self) -> ModelKind {
        ModelKind::AR1
    }
    fn slot_names(&self, _: &Orders) -> Vec<String> {
        names(&["phi", "sigma2"])
    }
    fn slot_roles(&self, _: &Orders) -> Vec<SlotRole> {
        vec![SlotRole::Ar { block: 0 }, SlotRole::Variance]
    }
    fn dynamics(&self, _: &ModelTerm, v: &[f64]) -> Dynamics {
        Dynamics::Linear(LinearForm {
            ar: vec![v[0]],
            ..LinearForm::white(v[1])
        })
    }
    fn closed_form_wv(&self, _: &ModelTerm, v: &[f64], tau: f64) -> Option<f64> {
        Some(ar1_wv(v[0], v[1], tau))
    }
}

/// Haar wavelet variance of an AR(1) process at scale `tau = 2n`:
///
/// `σ² (n − 3φ − nφ² + 4φ^{n+1} − φ^{2n+1}) / (2n² (1−φ)² (1−φ²))`.
///
/// The numerator has a triple root at φ = 1, so close to that boundary the
/// ratio `N/(1−φ)³` is summed as its Taylor series in `u = 1 − φ`.
pub(crate) fn ar1_wv(phi: f64, sigma2: f64, tau: f64) -> f64 {
    let n = tau / 2.0;
    let u = 1.0 - phi;
    if 2.0 * n * u < 1.0 {
        // N(1−u) = Σ_{k≥3} (−1)^k [4 C(n+1,k) − C(2n+1,k)] u^k
        let (m1, m2) = (n + 1.0, 2.0 * n + 1.0);
        let (mut a, mut b) = (4.0, 1.0); // 4 C(m1,k) u^k and C(m2,k) u^k at k = 0
        let mut q = 0.0;
        let kmax = (2.0 * n + 1.0) as usize;
        for k in 1..=kmax {
            let kf = k as f64;
            a *= (m1 - kf + 1.0).max(0.0) * u / kf;
            b *= (m2 - kf + 1.0) * u / kf;
            if k >= 3 {
                let term = if k % 2 == 0 { a - b } else { b - a };
                q += term;
                if term.abs() <= 1e-18 * q.abs() && a.abs() + b.abs() <= 1e-18 * q.abs() {
                    break;
                }
            }
        }
        let q = q / (u * u * u);
        sigma2 * q / (2.0 * n * n * (1.0 + phi))
    } else {
        let num = n - 3.0 * phi - n * phi * phi + 4.0 * phi.powf(n + 1.0) - phi.powf(2.0 * n + 1.0);
        sigma2 * num / (2.0 * n * n * u * u * (1.0 - phi * phi))
    }
}

pub struct Ma1;

impl ProcessModel for Ma1 {
    fn kind(&self) -> ModelKind {
        ModelKind::MA1
    }
    fn slot_names(&self, _: &Orders) -> Vec<String> {
        names(&["theta", "sigma2"])
    }
    fn slot_roles(&self, _: &Orders) -> Vec<SlotRole> {
        vec![SlotRole::Ma { block: 0 }, SlotRole::Variance]
    }
    fn dynamics(&self, _: &ModelTerm, v: &[f64]) -> Dynamics {
        Dynamics::Linear(LinearForm {
            ma: vec![v[0]],
            ..LinearForm::white(v[1])
        })
    }
    fn closed_form_wv(&self, _: &ModelTerm, v: &[f64], tau: f64) -> Option<f64> {
        Some(ma1_wv(v[0], v[1], tau))
    }
}

fn ma1_wv(theta: f64, sigma2: f64, tau: f64) -> f64 {
    let n = tau / 2.0;
    sigma2 * (n * (1.0 + theta) * (1.0 + theta) - 3.0 * theta) / (2.0 * n * n)
}

pub struct Arma11;

impl ProcessModel for Arma11 {
    fn kind(&self) -> ModelKind {
        ModelKind::ARMA11
    }
    fn slot_names(&self, _: &Orders) -> Vec<String> {
        names(&["phi", "theta", "sigma2"])
    }
    fn slot_roles(&self, _: &Orders) -> Vec<SlotRole> {
        vec![
            SlotRole::Ar { block: 0 },
            SlotRole::Ma { block: 0 },
            SlotRole::Variance,
        ]
    }
    fn dynamics(&self, _: &ModelTerm, v: &[f64]) -> Dynamics {
        Dynamics::Linear(LinearForm {
            ar: vec![v[0]],
            ma: vec![v[1]],
            ..LinearForm::white(v[2])
        })
    }
    /// The ARMA(1,1) ACVF is `γ₀` at lag 0 and `A φ^h` beyond, so its WV is
    /// a white-noise part with variance `γ₀ − A` plus a scaled AR(1) part.
    fn closed_form_wv(&self, _: &ModelTerm, v: &[f64], tau: f64) -> Option<f64> {
        let (phi, theta, sigma2) = (v[0], v[1], v[2]);
        if phi == 0.0 {
            return Some(ma1_wv(theta, sigma2, tau));
        }
        if phi.abs() < 1e-4 {
            // A = γ₁/φ blows up; the two parts cancel too strongly.
            return None;
        }
        let denom = 1.0 - phi * phi;
        let g0 = sigma2 * (1.0 + 2.0 * phi * theta + theta * theta) / denom;
        let g1 = sigma2 * (1.0 + phi * theta) * (phi + theta) / denom;
        let a = g1 / phi;
        Some((g0 - a) / tau + a * denom * ar1_wv(phi, 1.0, tau))
    }
}

fn block_arg(arg: &ArgValue) -> Block {
    match arg {
        ArgValue::Scalar(v) if *v >= 0.0 && v.fract() == 0.0 => Block::Order(*v as usize),
        ArgValue::Scalar(v) => Block::Coeffs(vec![*v]),
        ArgValue::Vector(v) => Block::Coeffs(v.clone()),
    }
}

enum Block {
    Order(usize),
    Coeffs(Vec<f64>),
}

impl Block {
    fn len(&self) -> usize {
        match self {
            Block::Order(p) => *p,
            Block::Coeffs(c) => c.len(),
        }
    }
    fn values(&self) -> Vec<Option<f64>> {
        match self {
            Block::Order(p) => vec![None; *p],
            Block::Coeffs(c) => c.iter().copied().map(Some).collect(),
        }
    }
}

fn order_arg(arg: &Arg, max: Option<usize>) -> Result<usize> {
    match arg.value {
        ArgValue::Scalar(v) if v >= 0.0 && v.fract() == 0.0 && max.is_none_or(|m| v as usize <= m) => {
            Ok(v as usize)
        }
        _ => Err(Error::constraint(
            "SARIMA",
            arg.name.as_deref().unwrap_or("order"),
            match max {
                Some(m) => format!("must be an integer in 0..={m}"),
                None => "must be a non-negative integer".to_string(),
            },
        )),
    }
}

fn format_block(name: &str, values: &[Option<f64>]) -> String {
    let c: Option<Vec<f64>> = values.iter().copied().collect();
    match c {
        Some(c) if !c.is_empty() => format!(
            "{name}=c({})",
            c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        ),
        _ => format!("{name}={}", values.len()),
    }
}

/// Matches named/positional arguments against the allowed parameter list.
fn bind<'a>(model: &str, allowed: &[&str], args: &'a [Arg]) -> Result<Vec<Option<&'a Arg>>> {
    let mut out: Vec<Option<&Arg>> = vec![None; allowed.len()];
    let mut pos = 0;
    let mut named = false;
    for a in args {
        let idx = match &a.name {
            Some(n) => {
                named = true;
                allowed.iter().position(|s| s == n).ok_or_else(|| Error::Syntax {
                    position: a.position,
                    message: format!("{model} has no parameter `{n}`"),
                })?
            }
            None if named => {
                return Err(Error::Syntax {
                    position: a.position,
                    message: "positional argument after named argument".into(),
                })
            }
            None => {
                pos += 1;
                if pos > allowed.len() {
                    return Err(Error::Syntax {
                        position: a.position,
                        message: format!("{model} takes at most {} arguments", allowed.len()),
                    });
                }
                pos - 1
            }
        };
        if out[idx].is_some() {
            return Err(Error::Syntax {
                position: a.position,
                message: format!("parameter `{}` given twice", allowed[idx]),
            });
        }
        out[idx] = Some(a);
    }
    Ok(out)
}

fn sigma2_arg(arg: Option<&Arg>) -> Result<Option<f64>> {
    match arg.map(|a| &a.value) {
        None => Ok(None),
        Some(ArgValue::Scalar(v)) => Ok(Some(*v)),
        Some(ArgValue::Vector(v)) if v.len() == 1 => Ok(Some(v[0])),
        Some(_) => Err(Error::Syntax {
            position: arg.map(|a| a.position).unwrap_or(0),
            message: "sigma2 must be a scalar".into(),
        }),
    }
}

/// General ARMA(p, q). `ar`/`ma` take either coefficient vectors or, as a
/// non-negative whole number, the order with free coefficients.
pub struct Arma;

impl ProcessModel for Arma {
    fn kind(&self) -> ModelKind {
        ModelKind::ARMA
    }
    fn slot_names(&self, o: &Orders) -> Vec<String> {
        let mut v: Vec<String> = (1..=o.p).map(|i| format!("ar{i}")).collect();
        v.extend((1..=o.q).map(|i| format!("ma{i}")));
        v.push("sigma2".into());
        v
    }
    fn slot_roles(&self, o: &Orders) -> Vec<SlotRole> {
        let mut v = vec![SlotRole::Ar { block: 0 }; o.p];
        v.extend(vec![SlotRole::Ma { block: 0 }; o.q]);
        v.push(SlotRole::Variance);
        v
    }
    fn from_args(&self, args: &[Arg]) -> Result<ModelTerm> {
        let b = bind("ARMA", &["ar", "ma", "sigma2"], args)?;
        let ar = b[0].map(|a| block_arg(&a.value)).unwrap_or(Block::Order(0));
        let ma = b[1].map(|a| block_arg(&a.value)).unwrap_or(Block::Order(0));
        let orders = Orders {
            p: ar.len(),
            q: ma.len(),
            ..Orders::default()
        };
        let mut values = ar.values();
        values.extend(ma.values());
        values.push(sigma2_arg(b[2])?);
        ModelTerm::new(ModelKind::ARMA, orders, values)
    }
    fn format_args(&self, t: &ModelTerm) -> String {
        let o = t.orders;
        let mut parts = vec![
            format_block("ar", &t.values[..o.p]),
            format_block("ma", &t.values[o.p..o.p + o.q]),
        ];
        if let Some(s) = t.values[o.p + o.q] {
            parts.push(format!("sigma2={s}"));
        }
        parts.join(",")
    }
    fn dynamics(&self, t: &ModelTerm, v: &[f64]) -> Dynamics {
        let o = t.orders;
        Dynamics::Linear(LinearForm {
            ar: v[..o.p].to_vec(),
            ma: v[o.p..o.p + o.q].to_vec(),
            ..LinearForm::white(v[o.p + o.q])
        })
    }
}

/// Seasonal ARIMA(p,d,q)×(P,D,Q)_s with d, D ∈ {0, 1}.
pub struct Sarima;

impl Sarima {
    const ARGS: [&'static str; 8] = ["ar", "i", "ma", "sar", "si", "sma", "sigma2", "s"];
}

impl ProcessModel for Sarima {
    fn kind(&self) -> ModelKind {
        ModelKind::SARIMA
    }
    fn slot_names(&self, o: &Orders) -> Vec<String> {
        let mut v: Vec<String> = (1..=o.p).map(|i| format!("ar{i}")).collect();
        v.extend((1..=o.q).map(|i| format!("ma{i}")));
        v.extend((1..=o.sp).map(|i| format!("sar{i}")));
        v.extend((1..=o.sq).map(|i| format!("sma{i}")));
        v.push("sigma2".into());
        v
    }
    fn slot_roles(&self, o: &Orders) -> Vec<SlotRole> {
        let mut v = vec![SlotRole::Ar { block: 0 }; o.p];
        v.extend(vec![SlotRole::Ma { block: 0 }; o.q]);
        v.extend(vec![SlotRole::Ar { block: 1 }; o.sp]);
        v.extend(vec![SlotRole::Ma { block: 1 }; o.sq]);
        v.push(SlotRole::Variance);
        v
    }
    fn from_args(&self, args: &[Arg]) -> Result<ModelTerm> {
        let b = bind("SARIMA", &Self::ARGS, args)?;
        let block = |i: usize| b[i].map(|a| block_arg(&a.value)).unwrap_or(Block::Order(0));
        let (ar, ma, sar, sma) = (block(0), block(2), block(3), block(5));
        let d = b[1].map(|a| order_arg(a, Some(1))).transpose()?.unwrap_or(0);
        let sd = b[4].map(|a| order_arg(a, Some(1))).transpose()?.unwrap_or(0);
        let s = b[7].map(|a| order_arg(a, None)).transpose()?.unwrap_or(12);
        let orders = Orders {
            p: ar.len(),
            d,
            q: ma.len(),
            sp: sar.len(),
            sd,
            sq: sma.len(),
            s,
        };
        let mut values = ar.values();
        values.extend(ma.values());
        values.extend(sar.values());
        values.extend(sma.values());
        values.push(sigma2_arg(b[6])?);
        ModelTerm::new(ModelKind::SARIMA, orders, values)
    }
    fn format_args(&self, t: &ModelTerm) -> String {
        let o = t.orders;
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &t.values[at..at + n];
            at += n;
            s
        };
        let ar = format_block("ar", take(o.p));
        let ma = format_block("ma", take(o.q));
        let sar = format_block("sar", take(o.sp));
        let sma = format_block("sma", take(o.sq));
        let mut parts = vec![ar, format!("i={}", o.d), ma, sar, format!("si={}", o.sd), sma];
        if let Some(s) = t.values[at] {
            parts.push(format!("sigma2={s}"));
        }
        parts.push(format!("s={}", o.s));
        parts.join(",")
    }
    fn check_orders(&self, o: &Orders) -> Result<()> {
        if o.d > 1 || o.sd > 1 {
            return Err(Error::constraint(
                "SARIMA",
                if o.d > 1 { "i" } else { "si" },
                "integration orders above 1 are not supported",
            ));
        }
        if o.s < 2 {
            return Err(Error::constraint("SARIMA", "s", "seasonal period must be at least 2"));
        }
        Ok(())
    }
    fn dynamics(&self, t: &ModelTerm, v: &[f64]) -> Dynamics {
        let o = t.orders;
        let (ar, rest) = v.split_at(o.p);
        let (ma, rest) = rest.split_at(o.q);
        let (sar, rest) = rest.split_at(o.sp);
        let (sma, rest) = rest.split_at(o.sq);
        Dynamics::Linear(LinearForm {
            ar: poly::expand_ar(ar, sar, o.s),
            ma: poly::expand_ma(ma, sma, o.s),
            sigma2: rest[0],
            diff: o.d,
            seasonal_diff: o.sd,
            period: o.s,
        })
    }
}
