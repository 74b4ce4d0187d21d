//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p wavemoments-cli --test acceptance`; pass criterion
//! numbers (e.g. `-- 4 5`) to run a subset.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use wavemoments::fixtures::load_fixture;
use wavemoments::gmwm::{fit, FitOptions};
use wavemoments::implied::{dyadic_scales, implied_wv_term, implied_wv_term_normative};
use wavemoments::inference::{gof_test, rank_models, unique_labels};
use wavemoments::models::{parse_model, ModelSpec, ModelTerm};
use wavemoments::rng::{derive_seed, stream};
use wavemoments::simulate::{contaminate, gen_series, TimeSeries};
use wavemoments::wavelet::modwt_haar;
use wavemoments::wv::{wv_classical, wvar, EstimatorKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn spec(text: &str) -> ModelSpec {
    parse_model(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn single_term(text: &str) -> ModelTerm {
    spec(text).terms()[0].clone()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn coef_list<R: Rng>(rng: &mut R, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

fn c_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("c({})", parts.join(","))
}

/// A random valid parameterization of `kind`, redrawn until it parses.
fn random_term<R: Rng>(kind: &str, rng: &mut R) -> ModelTerm {
    loop {
        let var = rng.random_range(0.01..10.0);
        let text = match kind {
            "WN" => format!("WN(sigma2={var})"),
            "QN" => format!("QN(q2={var})"),
            "RW" => format!("RW(gamma2={var})"),
            "DR" => format!("DR(omega={})", rng.random_range(-1.0..1.0)),
            "AR1" => format!("AR1(phi={},sigma2={var})", rng.random_range(-0.99..0.99)),
            "MA1" => format!("MA1(theta={},sigma2={var})", rng.random_range(-0.99..0.99)),
            "ARMA11" => format!(
                "ARMA11(phi={},theta={},sigma2={var})",
                rng.random_range(-0.99..0.99),
                rng.random_range(-0.99..0.99)
            ),
            "ARMA" => {
                let p = rng.random_range(1..=3);
                let q = rng.random_range(1..=2);
                format!(
                    "ARMA(ar={},ma={},sigma2={var})",
                    c_list(&coef_list(rng, p, 0.9)),
                    c_list(&coef_list(rng, q, 0.9))
                )
            }
            "SARIMA" => {
                let s = [2, 4, 12][rng.random_range(0..3)];
                let i = rng.random_range(0..=1);
                format!(
                    "SARIMA(ar={},sar={},ma={},sma={},i={i},sigma2={var},s={s})",
                    c_list(&coef_list(rng, 1, 0.9)),
                    c_list(&coef_list(rng, 1, 0.9)),
                    c_list(&coef_list(rng, 1, 0.9)),
                    c_list(&coef_list(rng, 1, 0.9))
                )
            }
            other => panic!("unknown kind {other}"),
        };
        if let Ok(s) = parse_model(&text) {
            return s.terms()[0].clone();
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs()).max(f64::MIN_POSITIVE)
    }
}

const KINDS: [&str; 9] = ["WN", "QN", "RW", "DR", "AR1", "MA1", "ARMA11", "ARMA", "SARIMA"];

fn oracle_equivalence() -> Outcome {
    let scales = dyadic_scales(10);
    let mut rng = stream(derive_seed(1337, 1));
    let mut worst = 0.0f64;
    let mut with_closed_form = Vec::new();
    for kind in KINDS {
        let mut closed = false;
        for _ in 0..50 {
            let term = random_term(kind, &mut rng);
            let values = term.full_values().unwrap();
            closed |= term.process().closed_form_wv(&term, &values, 2.0).is_some();
            let a = implied_wv_term(&term, &scales).unwrap();
            let b = implied_wv_term_normative(&term, &scales).unwrap();
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max(rel_err(*x, *y));
            }
        }
        if closed {
            with_closed_form.push(kind);
        }
    }
    outcome(
        worst <= 1e-10,
        format!(
            "max relative difference {worst:.2e} over {} kinds x 50 draws x 10 scales (closed forms: {})",
            KINDS.len(),
            with_closed_form.join(", ")
        ),
    )
}

fn signature_slopes() -> Outcome {
    let scales = dyadic_scales(10);
    let x: Vec<f64> = (4..=10).map(|j| j as f64).collect();
    let fit_slope = |text: &str| {
        let v = implied_wv_term(&single_term(text), &scales).unwrap();
        let y: Vec<f64> = v[3..].iter().map(|v| v.log2()).collect();
        slope(&x, &y)
    };
    let wn = fit_slope("WN(sigma2=1)");
    let qn = fit_slope("QN(q2=1)");
    let dr = fit_slope("DR(omega=0.1)");
    let rw = implied_wv_term(&single_term("RW(gamma2=1)"), &scales).unwrap();
    let rw_local = (rw[9] / rw[8]).log2();
    let pass = (wn + 1.0).abs() <= 0.05
        && (qn + 2.0).abs() <= 0.05
        && (dr - 2.0).abs() <= 0.05
        && (rw_local - 1.0).abs() <= 0.05;
    outcome(
        pass,
        format!("WN {wn:.4}, QN {qn:.4}, DR {dr:.4}, RW at scale 10 {rw_local:.4}"),
    )
}

fn estimator_consistency() -> Outcome {
    let models = [
        "WN(sigma2=1)",
        "QN(q2=1)",
        "RW(gamma2=1)",
        "DR(omega=0.1)",
        "AR1(phi=0.8,sigma2=1)",
        "MA1(theta=0.5,sigma2=1)",
        "ARMA11(phi=0.6,theta=0.3,sigma2=1)",
        "ARMA(ar=c(0.5,-0.3),ma=c(0.2),sigma2=1)",
        "SARIMA(ar=c(0.5),sar=c(0.3),sigma2=1,s=4)",
    ];
    let n = 1 << 18;
    let levels = 8;
    let reps = 20u64;
    let scales = dyadic_scales(levels);
    let mut worst = (1.0f64, "");
    for (k, text) in models.iter().enumerate() {
        let s = spec(text);
        let truth = implied_wv_term(&s.terms()[0], &scales).unwrap();
        let mut hits = 0;
        for r in 0..reps {
            let ts = gen_series(&s, n, derive_seed(derive_seed(3, k as u64), r)).unwrap();
            let wv = wv_classical(&modwt_haar(&ts, levels).unwrap(), 0.01).unwrap();
            hits += (0..levels)
                .filter(|&j| wv.ci_low[j] <= truth[j] && truth[j] <= wv.ci_high[j])
                .count();
        }
        let rate = hits as f64 / (reps as usize * levels) as f64;
        if rate < worst.0 || worst.1.is_empty() {
            worst = (rate, text);
        }
    }
    outcome(
        worst.0 >= 0.95,
        format!(
            "lowest pooled 99% CI coverage {:.3} ({}) over 20 replicates x 8 scales, T = 2^18",
            worst.0, worst.1
        ),
    )
}

fn robustness() -> Outcome {
    let truth = spec("AR1(phi=0.99,sigma2=0.01)+WN(sigma2=1)");
    let model = spec("AR1()+WN()");
    let reps = 100;
    let mut robust_err = Vec::new();
    let mut classical_err = Vec::new();
    let (mut phi_cover, mut wn_cover) = (0, 0);
    let mut failures = 0;
    for r in 0..reps {
        let seed = derive_seed(4, r);
        let clean = gen_series(&truth, 1000, seed).unwrap();
        let ts = contaminate(&clean, 0.01, 10.0, derive_seed(seed, 1)).unwrap();
        let robust_opts = FitOptions {
            estimator: EstimatorKind::Robust { eff: 0.6 },
            bootstrap: 100,
            seed,
            ..FitOptions::default()
        };
        let classical_opts = FitOptions {
            bootstrap: 0,
            seed,
            ..FitOptions::default()
        };
        let (Ok(rf), Ok(cf)) = (fit(&model, &ts, &robust_opts), fit(&model, &ts, &classical_opts)) else {
            failures += 1;
            continue;
        };
        robust_err.push((rf.theta[2] - 1.0).abs());
        classical_err.push((cf.theta[2] - 1.0).abs());
        let ci = rf.ci.as_ref().expect("bootstrap intervals");
        phi_cover += usize::from(ci[0].0 <= 0.99 && 0.99 <= ci[0].1);
        wn_cover += usize::from(ci[2].0 <= 1.0 && 1.0 <= ci[2].1);
    }
    let m_rob = median(robust_err);
    let m_cls = median(classical_err);
    let phi_rate = phi_cover as f64 / reps as f64;
    let wn_rate = wn_cover as f64 / reps as f64;
    let pass = failures == 0 && m_rob < 0.15 && m_cls >= 2.0 * m_rob && phi_rate >= 0.85 && wn_rate >= 0.85;
    outcome(
        pass,
        format!(
            "WN median abs error robust {m_rob:.4}, classical {m_cls:.4} (ratio {:.1}); \
             truth in robust CI: phi {phi_rate:.2}, WN {wn_rate:.2}; {failures} failed fits",
            m_cls / m_rob
        ),
    )
}

fn gof_size() -> Outcome {
    let truth = spec("WN(sigma2=1)");
    let model = spec("WN()");
    let reps = 200;
    let mut rejections = 0;
    let mut failures = 0;
    for r in 0..reps {
        let seed = derive_seed(5, r);
        let ts = gen_series(&truth, 10_000, seed).unwrap();
        let opts = FitOptions {
            bootstrap: 0,
            seed,
            ..FitOptions::default()
        };
        match fit(&model, &ts, &opts).and_then(|f| gof_test(&f, 100, derive_seed(seed, 1))) {
            Ok(g) => rejections += usize::from(g.p_value < 0.05),
            Err(_) => failures += 1,
        }
    }
    let rate = rejections as f64 / reps as f64;
    outcome(
        failures == 0 && (0.01..=0.10).contains(&rate),
        format!("rejection rate {rate:.3} ({rejections}/{reps}), {failures} failed"),
    )
}

fn wic_ranking() -> Outcome {
    let paper_sum = (0.0288f64 + 0.9289 - 0.9577).abs() < 1e-12;
    let truth = spec("RW(gamma2=0.1)+WN(sigma2=1)");
    let specs = [spec("RW()+WN()"), spec("RW()+WN()+DR()")];
    let small = unique_labels(&specs)[0].clone();
    let reps = 100;
    let mut wins = 0;
    let mut exact = true;
    let mut columns = true;
    let mut failures = 0;
    for r in 0..reps {
        let seed = derive_seed(6, r);
        let ts = gen_series(&truth, 1000, seed).unwrap();
        let opts = FitOptions {
            bootstrap: 100,
            seed,
            ..FitOptions::default()
        };
        let Ok(table) = rank_models(&specs, &ts, &opts) else {
            failures += 1;
            continue;
        };
        failures += table.failed.len();
        exact &= table
            .rows
            .iter()
            .all(|row| row.wic.criterion == row.wic.obj_fun + row.wic.optimism);
        if r == 0 {
            let text = table.to_string();
            let header = text.lines().next().unwrap_or_default();
            columns = ["Obj Fun", "Optimism", "Criterion"].iter().all(|c| header.contains(c))
                && text
                    .lines()
                    .skip(1)
                    .take(table.rows.len())
                    .all(|l| l.split_whitespace().rev().take(3).all(|f| f.parse::<f64>().is_ok()));
        }
        wins += usize::from(table.rows[0].label == small);
    }
    outcome(
        paper_sum && exact && columns && wins >= 70,
        format!(
            "smaller model wins {wins}/{reps}; criterion = obj + optimism exactly: {exact}; \
             three columns: {columns}; paper sum: {paper_sum}; {failures} failed fits"
        ),
    )
}

fn nile() -> Outcome {
    let fixture = load_fixture("nile").unwrap();
    let ts: &TimeSeries = fixture.series().unwrap();
    let f = fit(&spec("WN()+RW()"), ts, &FitOptions::default()).unwrap();
    let (wn, rw) = (f.theta[0], f.theta[1]);
    let pass = f.diagnostics.converged && wn > 0.0 && rw > 0.0 && wn > rw && (5_000.0..=30_000.0).contains(&wn);
    outcome(
        pass,
        format!("converged {}, WN {wn:.2}, RW {rw:.2}", f.diagnostics.converged),
    )
}

fn time_wv(ts: &TimeSeries, kind: EstimatorKind) -> f64 {
    median(
        (0..3)
            .map(|_| {
                let t = Instant::now();
                wvar(ts, kind, 0.05).unwrap();
                t.elapsed().as_secs_f64()
            })
            .collect(),
    )
}

fn performance() -> Outcome {
    let wn = spec("WN(sigma2=1)");
    let sizes = [10_000usize, 31_623, 100_000, 316_228, 1_000_000];
    let mut times = Vec::new();
    let mut big = None;
    for &n in &sizes {
        let ts = gen_series(&wn, n, derive_seed(8, n as u64)).unwrap();
        times.push(time_wv(&ts, EstimatorKind::Classical));
        if n == 1_000_000 {
            big = Some(ts);
        }
    }
    let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let s = slope(&x, &y);
    let classical = *times.last().unwrap();
    let robust = time_wv(&big.unwrap(), EstimatorKind::Robust { eff: 0.6 });
    outcome(
        classical < 2.0 && s <= 1.2 && robust < 60.0 && robust > classical,
        format!("classical at 1e6 {classical:.3} s, timing slope {s:.3}, robust at 1e6 {robust:.3} s"),
    )
}

fn cli(dir: &Path, args: &[&str]) -> std::io::Result<Vec<u8>> {
    let json = dir.join("out.json");
    let status = Command::new(env!("CARGO_BIN_EXE_wavemoments"))
        .env_remove("WAVEMOMENTS_SEED")
        .args(args)
        .arg("--out-json")
        .arg(&json)
        .stdout(std::process::Stdio::null())
        .status()?;
    if !status.success() {
        return Err(std::io::Error::other(format!("{args:?} exited with {status}")));
    }
    std::fs::read(&json)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(
        &data,
        Command::new(env!("CARGO_BIN_EXE_wavemoments"))
            .args(["simulate", "--model", "AR1(phi=0.9,sigma2=0.1)+WN(sigma2=1)", "-n", "2000", "--seed", "9"])
            .output()
            .unwrap()
            .stdout,
    )
    .unwrap();
    let data = data.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--model", "ARMA11(phi=0.5,theta=0.3,sigma2=1)+RW(gamma2=0.01)", "-n", "500", "--latent"],
        vec!["wvar", data, "--robust", "--eff", "0.8"],
        vec!["compare", data, "fixture:nile"],
        vec!["fit", data, "--model", "AR1()+WN()", "-B", "30", "--gof", "--decomp"],
        vec!["fit", data, "--model", "AR1()+WN()", "--robust", "-B", "20"],
        vec!["rank", "fixture:nile", "--model", "WN()+RW()", "--model", "WN()+RW()+DR()", "-B", "20"],
        vec!["gof", data, "--model", "AR1()+WN()", "-B", "20"],
    ];
    let mut mismatched = Vec::new();
    for cmd in &commands {
        let mut runs = Vec::new();
        for threads in [None, Some("1"), Some("4")] {
            let mut args = Vec::new();
            if let Some(t) = threads {
                args.extend(["--threads", t]);
            }
            args.extend(cmd.iter().copied());
            match cli(dir.path(), &args) {
                Ok(bytes) => runs.push(bytes),
                Err(e) => return outcome(false, e.to_string()),
            }
        }
        runs.push(cli(dir.path(), cmd).unwrap_or_default());
        if runs.windows(2).any(|w| w[0] != w[1]) {
            mismatched.push(cmd[0]);
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} invocations x 4 runs (default, 1 and 4 threads, repeat); mismatched: {:?}",
            commands.len(),
            mismatched
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", Duration::from_secs(10), oracle_equivalence),
        ("signature slopes", Duration::from_secs(1), signature_slopes),
        ("estimator consistency", Duration::from_secs(60), estimator_consistency),
        ("robustness", Duration::from_secs(300), robustness),
        ("GoF size", Duration::from_secs(600), gof_size),
        ("WIC arithmetic and ranking", Duration::from_secs(600), wic_ranking),
        ("Nile smoke test", Duration::from_secs(10), nile),
        ("performance scaling", Duration::from_secs(300), performance),
        ("determinism", Duration::from_secs(60), determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= *budget;
        failed += usize::from(!pass);
        println!(
            "{} {k}. {name}: {} [{:.1} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
