//! Minimal SVG line plots of median ball probabilities against `n`.

use std::fmt::Write;

use gprior_core::lab::EpsSummary;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub fn file_name(eps: f64) -> String {
    format!("ball_eps_{}.svg", eps.to_string().replace('.', "p").replace('-', "m"))
}

/// x is `log10 n`, y is the probability on [0, 1]; the band spans the
/// interquartile range across replications.
pub fn render(scenario_id: &str, s: &EpsSummary) -> String {
    let logs: Vec<f64> = s.n.iter().map(|&n| (n as f64).log10()).collect();
    let (mut lo, mut hi) = logs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let px = |x: f64| LEFT + (x - lo) / (hi - lo) * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * (H - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}: P(||beta - beta0||_inf &gt; {} | data), trend {:?}</text>"#,
        W / 2.0,
        escape(scenario_id),
        s.eps,
        s.trend
    );
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, py(0.0), py(1.0));
    let _ = writeln!(svg, r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let y = k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{x0:.1}" y2="{:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{y:.2}</text>"#,
            x0 - 5.0,
            py(y),
            py(y),
            x0 - 8.0,
            py(y) + 4.0
        );
    }
    for (&n, &x) in s.n.iter().zip(&logs) {
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y0:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{n}</text>"#,
            px(x),
            px(x),
            y0 + 5.0,
            px(x),
            y0 + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">n (log scale)</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0
    );

    let mut band = String::new();
    for (x, q) in logs.iter().zip(&s.q75) {
        let _ = write!(band, "{:.2},{:.2} ", px(*x), py(*q));
    }
    for (x, q) in logs.iter().zip(&s.q25).rev() {
        let _ = write!(band, "{:.2},{:.2} ", px(*x), py(*q));
    }
    let _ = writeln!(svg, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##, band.trim_end());
    let line: Vec<String> = logs.iter().zip(&s.median).map(|(x, m)| format!("{:.2},{:.2}", px(*x), py(*m))).collect();
    let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="2"/>"##, line.join(" "));
    for (x, m) in logs.iter().zip(&s.median) {
        let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#08519c"/>"##, px(*x), py(*m));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
