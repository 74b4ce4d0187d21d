//! Nelder–Mead simplex minimization.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop when `f_max − f_min ≤ tol · |f_min|` over the simplex.
    pub tol: f64,
    pub max_iter: usize,
    /// Restarts from the incumbent after the first run.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            tol: 1e-8,
            max_iter: 2000,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

struct Run {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    evals: &mut usize,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> Run {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        *evals += 1;
        clean(f(x))
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (fbest, fworst) = (simplex[0].1, simplex[n].1);
        let spread = fworst - fbest;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if fbest.is_finite() && (spread <= opts.tol * fbest.abs() || spread == 0.0 || diameter < 1e-12) {
            return Run {
                x: simplex[0].0.clone(),
                f: fbest,
                iterations,
                converged: true,
            };
        }
        if iterations >= opts.max_iter {
            return Run {
                x: simplex[0].0.clone(),
                f: fbest,
                iterations,
                converged: false,
            };
        }
        iterations += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // Outside contraction when the reflection improved on the worst point.
        let xc = along(if fr < simplex[n].1 { rho } else { -rho });
        let fc = eval(&xc);
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (v, b) in x.iter_mut().zip(&best) {
                *v = b + sigma * (*v - b);
            }
            *fx = eval(x);
        }
    }
}

/// Minimizes `f` from `x0` with initial simplex edges `steps`. Non-finite
/// values of `f` are treated as `+∞`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    assert_eq!(x0.len(), steps.len(), "one step per coordinate");
    let mut evals = 1;
    let f0 = clean(f(x0));
    if x0.is_empty() {
        return Minimum {
            x: Vec::new(),
            f: f0,
            iterations: 0,
            evaluations: evals,
            converged: true,
        };
    }
    let mut r = run(&mut f, &mut evals, x0, f0, steps, opts);
    let mut iterations = r.iterations;
    for _ in 0..opts.restarts {
        let x = r.x.clone();
        let fx = r.f;
        r = run(&mut f, &mut evals, &x, fx, steps, opts);
        iterations += r.iterations;
    }
    Minimum {
        x: r.x,
        f: r.f,
        iterations,
        evaluations: evals,
        converged: r.converged,
    }
}
