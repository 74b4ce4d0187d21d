//! Log-log wavelet variance plots as standalone SVG.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct Curve {
    pub label: String,
    /// `(τ, ν²)` pairs; non-positive values are skipped.
    pub points: Vec<(f64, f64)>,
    /// Per-point `(low, high)` interval drawn as a translucent band.
    pub band: Option<Vec<(f64, f64)>>,
    pub dashed: bool,
}

impl Curve {
    pub fn line(label: impl Into<String>, scales: &[f64], values: &[f64]) -> Self {
        Curve {
            label: label.into(),
            points: scales.iter().copied().zip(values.iter().copied()).collect(),
            band: None,
            dashed: false,
        }
    }

    pub fn with_band(mut self, low: &[f64], high: &[f64]) -> Self {
        self.band = Some(low.iter().copied().zip(high.iter().copied()).collect());
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, tau: f64) -> f64 {
        LEFT + (tau.log2() - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v.log10() - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn bounds(curves: &[Curve]) -> Option<Axes> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for c in curves {
        for (i, &(t, v)) in c.points.iter().enumerate() {
            if t > 0.0 && v > 0.0 {
                xs.push(t.log2());
                ys.push(v.log10());
                if let Some(b) = &c.band {
                    ys.extend([b[i].0, b[i].1].into_iter().filter(|x| *x > 0.0).map(f64::log10));
                }
            }
        }
    }
    if xs.is_empty() {
        return None;
    }
    let (x0, x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (y0, y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    Some(Axes {
        x: (x0.floor(), x1.ceil().max(x0.floor() + 1.0)),
        y: (y0.floor(), y1.ceil().max(y0.floor() + 1.0)),
    })
}

/// Renders `curves` on log₂ τ / log₁₀ ν² axes.
pub fn loglog_plot(title: &str, curves: &[Curve]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let Some(ax) = bounds(curves) else {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">no positive wavelet variance to plot</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    };
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(s, r##"<g stroke="#e0e0e0" stroke-width="1">"##);
    let xt: Vec<i32> = (ax.x.0 as i32..=ax.x.1 as i32).collect();
    let yt: Vec<i32> = (ax.y.0 as i32..=ax.y.1 as i32).collect();
    for &k in &xt {
        let x = ax.px(2f64.powi(k));
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{t:.2}" x2="{x:.2}" y2="{b:.2}"/>"#);
    }
    for &k in &yt {
        let y = ax.py(10f64.powi(k));
        let _ = writeln!(s, r#"<line x1="{l:.2}" y1="{y:.2}" x2="{r:.2}" y2="{y:.2}"/>"#);
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for &k in &xt {
        let x = ax.px(2f64.powi(k));
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">2<tspan dy="-5" font-size="9">{k}</tspan></text>"#,
            b + 18.0
        );
    }
    for &k in &yt {
        let y = ax.py(10f64.powi(k));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">10<tspan dy="-5" font-size="9">{k}</tspan></text>"#,
            l - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Scale τ</text>"#,
        (l + r) / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Wavelet variance ν²</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(band) = &c.band {
            let kept: Vec<(f64, f64, f64)> = c
                .points
                .iter()
                .zip(band)
                .filter(|((tau, _), (lo, hi))| *tau > 0.0 && *lo > 0.0 && *hi > 0.0)
                .map(|((tau, _), (lo, hi))| (*tau, *lo, *hi))
                .collect();
            if kept.len() >= 2 {
                let upper = kept.iter().map(|(tau, _, hi)| format!("{:.2},{:.2}", ax.px(*tau), ax.py(*hi)));
                let lower = kept.iter().rev().map(|(tau, lo, _)| format!("{:.2},{:.2}", ax.px(*tau), ax.py(*lo)));
                let pts: Vec<String> = upper.chain(lower).collect();
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                    pts.join(" ")
                );
            }
        }
        let pts: Vec<String> = c
            .points
            .iter()
            .filter(|(tau, v)| *tau > 0.0 && *v > 0.0)
            .map(|(tau, v)| format!("{:.2},{:.2}", ax.px(*tau), ax.py(*v)))
            .collect();
        let dash = if c.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            pts.join(" ")
        );
        let ly = t + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            r - 190.0,
            r - 166.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            r - 160.0,
            ly + 4.0,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_curves_bands_and_legend() {
        let scales = [2.0, 4.0, 8.0];
        let c = Curve::line("a & <b>", &scales, &[1.0, 0.5, 0.25]).with_band(&[0.8, 0.4, 0.2], &[1.2, 0.6, 0.3]);
        let d = Curve::line("model", &scales, &[1.0, 0.5, 0.25]).dashed();
        let svg = loglog_plot("t", &[c, d]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains("a &amp; &lt;b&gt;"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn zero_variance_is_a_note() {
        let svg = loglog_plot("flat", &[Curve::line("c", &[2.0, 4.0], &[0.0, 0.0])]);
        assert!(svg.contains("no positive wavelet variance"));
    }
}
