use std::fmt::Write as _;
use std::io::Write as _;
use std::time::Instant;

use serde_json::json;

use wavemoments::gmwm::{self, FitOptions, FitResult};
use wavemoments::inference::{gof_test, rank_models, GofResult};
use wavemoments::models::{parse_model, ModelSpec};
use wavemoments::rng::derive_seed;
use wavemoments::simulate::{gen_latent, gen_series, TimeSeries};
use wavemoments::wavelet::max_scales;
use wavemoments::wv::{wvar_levels, EstimatorKind, WvEstimate};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::input::read_series;
use crate::output::{envelope, num, to_value, write_json, write_text};
use crate::svg::{loglog_plot, Curve};

pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Wvar(a) => wvar(a),
        Command::Compare(a) => compare(a),
        Command::Fit(a) => fit(a),
        Command::Rank(a) => rank(a),
        Command::Gof(a) => gof(a),
        Command::Bench(a) => bench(a),
    }
}

fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn estimate(ts: &TimeSeries, kind: EstimatorKind, e: &EstimatorArgs) -> CliResult<WvEstimate> {
    let jmax = max_scales(ts.len())?;
    let levels = match e.levels {
        None => jmax,
        Some(j) if (1..=jmax).contains(&j) => j,
        Some(j) => {
            return Err(CliError::Usage(format!("--levels {j}: series of length {} admits 1..={jmax}", ts.len())));
        }
    };
    Ok(wvar_levels(ts, kind, levels, e.alpha)?)
}

fn estimator_label(kind: EstimatorKind) -> String {
    match kind {
        EstimatorKind::Classical => "classical".into(),
        EstimatorKind::Robust { eff } => format!("robust, eff = {eff}"),
    }
}

fn wv_curve(label: impl Into<String>, wv: &WvEstimate) -> Curve {
    Curve::line(label, &wv.scales, &wv.nu2).with_band(&wv.ci_low, &wv.ci_high)
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let spec = parse_model(&a.model)?;
    let seed = a.seed.seed;
    let (header, columns): (Vec<String>, Vec<Vec<f64>>) = if a.latent {
        let lb = gen_latent(&spec, a.n, seed)?;
        let mut header: Vec<String> = lb.components.iter().map(|(l, _)| l.clone()).collect();
        let mut cols: Vec<Vec<f64>> = lb.components.into_iter().map(|(_, ts)| ts.into_values()).collect();
        header.push("total".into());
        cols.push(lb.total.into_values());
        (header, cols)
    } else {
        (vec!["value".into()], vec![gen_series(&spec, a.n, seed)?.into_values()])
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let data_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(&header).map_err(data_err)?;
    for t in 0..a.n {
        w.write_record(columns.iter().map(|c| c[t].to_string())).map_err(data_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    match &a.out {
        Some(path) => write_text(path, &text)?,
        None => print(&text),
    }
    if let Some(path) = &a.out_json {
        let doc = envelope(
            "simulate",
            a,
            seed,
            json!({ "model": spec.to_string(), "n": a.n, "columns": header }),
        )?;
        write_json(path, &doc)?;
    }
    Ok(())
}

fn wv_table(wv: &WvEstimate) -> String {
    let mut s = String::new();
    let level = 100.0 * (1.0 - wv.alpha);
    let _ = writeln!(s, "{:>10}  {:>14}  {:>14}  {:>14}", "Scale", "WV", format!("CI Low ({level}%)"), "CI High");
    for j in 0..wv.len() {
        let _ = writeln!(
            s,
            "{:>10}  {:>14}  {:>14}  {:>14}",
            wv.scales[j],
            num(wv.nu2[j]),
            num(wv.ci_low[j]),
            num(wv.ci_high[j])
        );
    }
    for w in &wv.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn wvar(a: &WvarArgs) -> CliResult<()> {
    let ts = read_series(&a.input.input, a.input.column.as_deref())?;
    let kind = a.estimator.kind();
    let wv = estimate(&ts, kind, &a.estimator)?;
    print(&format!(
        "Wavelet variance ({}), T = {}\n{}",
        estimator_label(kind),
        ts.len(),
        wv_table(&wv)
    ));
    if let Some(path) = &a.output.out_json {
        let doc = envelope("wvar", a, a.seed.seed, json!({ "n": ts.len(), "wv": to_value(&wv)? }))?;
        write_json(path, &doc)?;
    }
    if let Some(path) = &a.output.out_svg {
        let title = format!("Wavelet variance ({})", estimator_label(kind));
        write_text(path, &loglog_plot(&title, &[wv_curve(estimator_label(kind), &wv)]))?;
    }
    Ok(())
}

fn compare(a: &CompareArgs) -> CliResult<()> {
    let mut curves: Vec<(String, String, WvEstimate)> = Vec::new();
    if a.inputs.len() == 1 {
        let ts = read_series(&a.inputs[0], a.column.as_deref())?;
        for kind in [EstimatorKind::Classical, EstimatorKind::Robust { eff: a.estimator.eff }] {
            curves.push((estimator_label(kind), a.inputs[0].clone(), estimate(&ts, kind, &a.estimator)?));
        }
    } else {
        let kind = a.estimator.kind();
        for input in &a.inputs {
            let ts = read_series(input, a.column.as_deref())?;
            curves.push((input.clone(), input.clone(), estimate(&ts, kind, &a.estimator)?));
        }
    }
    let base = &curves[0].2;
    let deltas: Vec<Vec<f64>> = curves
        .iter()
        .map(|(_, _, wv)| wv.nu2.iter().zip(&base.nu2).map(|(a, b)| a - b).collect())
        .collect();
    let mut text = String::new();
    for ((label, input, wv), d) in curves.iter().zip(&deltas) {
        let _ = writeln!(text, "{label} [{input}]\n{}", wv_table(wv));
        let max = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let _ = writeln!(text, "max |WV - first curve| over common scales: {}\n", num(max));
    }
    print(&text);
    if let Some(path) = &a.output.out_json {
        let list: Vec<_> = curves
            .iter()
            .zip(&deltas)
            .map(|((label, input, wv), d)| Ok(json!({ "label": label, "input": input, "wv": to_value(wv)?, "delta": d })))
            .collect::<CliResult<_>>()?;
        let doc = envelope("compare", a, a.seed.seed, json!({ "curves": list }))?;
        write_json(path, &doc)?;
    }
    if let Some(path) = &a.output.out_svg {
        let plot: Vec<Curve> = curves.iter().map(|(label, _, wv)| wv_curve(label.clone(), wv)).collect();
        write_text(path, &loglog_plot("Wavelet variance comparison", &plot))?;
    }
    Ok(())
}

fn fit_options(e: &EstimatorArgs, b: usize, seed: u64) -> FitOptions {
    FitOptions {
        estimator: e.kind(),
        bootstrap: b,
        alpha: e.alpha,
        seed,
        levels: e.levels,
        ..Default::default()
    }
}

fn fit_summary(fit: &FitResult) -> String {
    let mut s = String::new();
    let width = fit.names.iter().map(|n| n.len()).max().unwrap_or(0).max(6);
    let _ = writeln!(s, "Model Information: {}", fit.fitted_model);
    let _ = writeln!(s, "{:width$}  {:>14}  {:>14}  {:>14}  {:>14}", "", "Estimates", "CI Low", "CI High", "SE");
    for (k, name) in fit.names.iter().enumerate() {
        let (lo, hi) = fit.ci.as_ref().map_or((f64::NAN, f64::NAN), |c| c[k]);
        let se = fit.se.as_ref().map_or(f64::NAN, |s| s[k]);
        let _ = writeln!(
            s,
            "{name:width$}  {:>14}  {:>14}  {:>14}  {:>14}",
            num(fit.theta[k]),
            num(lo),
            num(hi),
            num(se)
        );
    }
    let _ = writeln!(s, "Objective Function: {:.4}", fit.objective);
    if !fit.diagnostics.converged {
        let _ = writeln!(s, "warning: optimizer did not converge");
    }
    for w in &fit.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn fit_plot(fit: &FitResult, decomp: bool) -> String {
    let wv = &fit.wv;
    let mut curves = vec![wv_curve("estimated WV", wv)];
    curves.push(Curve::line("implied WV", &fit.implied.scales, &fit.implied.total));
    if decomp {
        for (label, values) in &fit.implied.terms {
            curves.push(Curve::line(label.clone(), &fit.implied.scales, values).dashed());
        }
    }
    loglog_plot(&format!("GMWM fit: {}", fit.model), &curves)
}

fn fit(a: &FitArgs) -> CliResult<()> {
    let ts = read_series(&a.input.input, a.input.column.as_deref())?;
    let spec = parse_model(&a.model)?;
    let seed = a.seed.seed;
    if a.gof && a.b == 0 {
        return Err(CliError::Usage("--gof needs -B of at least 1".into()));
    }
    let fit = gmwm::fit(&spec, &ts, &fit_options(&a.estimator, a.b, seed))?;
    let gof: Option<GofResult> = if a.gof { Some(gof_test(&fit, a.b, seed)?) } else { None };
    let mut text = fit_summary(&fit);
    match &gof {
        Some(g) => {
            let _ = writeln!(text, "{g}");
        }
        None => {
            let _ = writeln!(text, "To replicate the results, use seed: {seed}");
        }
    }
    print(&text);
    if let Some(path) = &a.output.out_json {
        let doc = envelope("fit", a, seed, json!({ "fit": to_value(&fit)?, "gof": to_value(&gof)? }))?;
        write_json(path, &doc)?;
    }
    if let Some(path) = &a.output.out_svg {
        write_text(path, &fit_plot(&fit, a.decomp))?;
    }
    Ok(())
}

fn gof(a: &GofArgs) -> CliResult<()> {
    let ts = read_series(&a.input.input, a.input.column.as_deref())?;
    let spec = parse_model(&a.model)?;
    let seed = a.seed.seed;
    if a.b == 0 {
        return Err(CliError::Usage("-B must be at least 1".into()));
    }
    let fit = gmwm::fit(&spec, &ts, &fit_options(&a.estimator, a.b, seed))?;
    let g = gof_test(&fit, a.b, seed)?;
    print(&format!("{}{g}\n", fit_summary(&fit)));
    if let Some(path) = &a.out_json {
        let doc = envelope("gof", a, seed, json!({ "gof": to_value(&g)?, "fit": to_value(&fit)? }))?;
        write_json(path, &doc)?;
    }
    Ok(())
}

fn rank(a: &RankArgs) -> CliResult<()> {
    if a.model.len() < 2 {
        return Err(CliError::Usage("rank needs at least 2 --model candidates".into()));
    }
    let ts = read_series(&a.input.input, a.input.column.as_deref())?;
    let specs: Vec<ModelSpec> = a.model.iter().map(|m| parse_model(m)).collect::<Result<_, _>>()?;
    let seed = a.seed.seed;
    let table = rank_models(&specs, &ts, &fit_options(&a.estimator, a.b, seed))?;
    print(&format!("The model ranking is given as:\n{table}To replicate the results, use seed: {seed}\n"));
    if let Some(path) = &a.out_json {
        let doc = envelope("rank", a, seed, to_value(&table)?)?;
        write_json(path, &doc)?;
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn time_wv(ts: &TimeSeries, kind: EstimatorKind, reps: usize) -> CliResult<f64> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let wv = wvar_levels(ts, kind, max_scales(ts.len())?, 0.05)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(wv);
    }
    Ok(median(times))
}

/// Least-squares slope of `log y` on `log x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(1e-12).ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn bench(a: &BenchArgs) -> CliResult<()> {
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let wn = parse_model("WN(sigma2=1)")?;
    let mut rows = Vec::new();
    let mut text = format!("{:>10}  {:>14}  {:>14}\n", "T", "classical (s)", "robust (s)");
    for (i, &n) in a.sizes.iter().enumerate() {
        let ts = gen_series(&wn, n, derive_seed(a.seed.seed, i as u64))?;
        let classical = time_wv(&ts, EstimatorKind::Classical, a.reps)?;
        let robust = if a.robust {
            Some(time_wv(&ts, EstimatorKind::Robust { eff: a.eff }, a.reps)?)
        } else {
            None
        };
        let _ = writeln!(
            text,
            "{n:>10}  {:>14.6}  {:>14}",
            classical,
            robust.map_or("-".to_string(), |r| format!("{r:.6}"))
        );
        rows.push((n, classical, robust));
    }
    let big: Vec<&(usize, f64, Option<f64>)> = rows.iter().filter(|r| r.0 >= 10_000).collect();
    let slope = loglog_slope(
        &big.iter().map(|r| r.0 as f64).collect::<Vec<_>>(),
        &big.iter().map(|r| r.1).collect::<Vec<_>>(),
    );
    if let Some(s) = slope {
        let _ = writeln!(text, "classical log-log timing slope (T >= 1e4): {s:.3}");
    }
    print(&text);
    if let Some(path) = &a.out_json {
        let machine = json!({
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
            "available_parallelism": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            "rayon_threads": rayon::current_num_threads(),
        });
        let sizes: Vec<_> = rows
            .iter()
            .map(|(n, c, r)| json!({ "n": n, "classical_median_s": c, "robust_median_s": r }))
            .collect();
        let doc = envelope(
            "bench",
            a,
            a.seed.seed,
            json!({ "machine": machine, "sizes": sizes, "classical_slope": slope }),
        )?;
        write_json(path, &doc)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians_and_slopes() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        let x = [1e4, 1e5, 1e6];
        let y: Vec<f64> = x.iter().map(|v| 2e-8 * v).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&x[..1], &y[..1]), None);
    }
}
