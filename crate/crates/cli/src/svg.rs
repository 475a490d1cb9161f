//! Static line chart of max-normalized series against ρ.

use std::fmt::Write;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// SVG `stroke-dasharray`, empty for a solid line.
    pub dash: &'a str,
    pub values: Vec<f64>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

/// Renders each series divided by its own maximum over `[0, 1] × [0, 1.05]`.
pub fn line_chart(x: &[f64], series: &[Series<'_>]) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + v * pw;
    let sy = |v: f64| TOP + ph - v / 1.05 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.1} {:.1} V{:.1} H{:.1}" stroke="black" fill="none"/>"#,
        LEFT,
        TOP,
        TOP + ph,
        LEFT + pw
    );
    for i in 0..=5 {
        let v = i as f64 * 0.2;
        let (px, py) = (sx(v), sy(v));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">precision ρ</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );

    for (k, ser) in series.iter().enumerate() {
        let max = ser
            .values
            .iter()
            .cloned()
            .filter(|v| v.is_finite())
            .fold(f64::MIN, f64::max);
        let pts: Vec<String> = x
            .iter()
            .zip(&ser.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&xi, &v)| format!("{:.2},{:.2}", sx(xi), sy(v / max)))
            .collect();
        let dash = if ser.dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{}""#, ser.dash)
        };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
            pts.join(" "),
            ser.color
        );
        let ly = TOP + 15.0 + 18.0 * k as f64;
        let lx = LEFT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 30.0,
            ser.color,
            lx + 36.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}
