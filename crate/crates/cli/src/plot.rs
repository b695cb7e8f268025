//! Minimal standalone SVG line charts.

use std::fmt::Write;
use std::path::Path;

use crate::error::HarnessError;
use crate::trace_io::write_atomic;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            style: Style::Line,
        }
    }

    pub fn with_style(mut self, style: Style) -> Self {
        self.style = style;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Figure {
    pub fn to_svg(&self) -> Result<String, HarnessError> {
        if self.series.is_empty() || self.series.iter().any(|s| s.points.is_empty()) {
            return Err(HarnessError::Core(adbo::Error::Contract("nothing to plot".into())));
        }
        let pts = || self.series.iter().flat_map(|s| s.points.iter().copied());
        if pts().any(|(x, y)| !x.is_finite() || !y.is_finite() || (self.log_y && y <= 0.0)) {
            return Err(HarnessError::Core(adbo::Error::Contract("plot values must be finite".into())));
        }
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let (mut x0, mut x1) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, _)| (a.min(x), b.max(x)));
        let (mut y0, mut y1) =
            pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, y)| (a.min(ty(y)), b.max(ty(y))));
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
            y0 -= pad;
            y1 += pad;
        } else {
            let pad = 0.05 * (y1 - y0);
            y0 -= pad;
            y1 += pad;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph;
        let syt = |t: f64| TOP + (1.0 - (t - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 19.0,
                tick_label(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = syt(t);
            let label = if self.log_y { format!("1e{}", tick_label(t)) } else { tick_label(t) };
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let y_label = if self.log_y { format!("{} (log scale)", self.y_label) } else { self.y_label.clone() };
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let label = escape(&series.label);
            match series.style {
                Style::Line | Style::Dashed => {
                    let path: Vec<String> =
                        series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let dash = if series.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(
                        s,
                        r#"<polyline class="series" data-label="{label}" fill="none" stroke="{color}" stroke-width="1.8"{dash} points="{}"/>"#,
                        path.join(" ")
                    );
                }
                Style::Markers => {
                    let _ = writeln!(s, r#"<g class="series" data-label="{label}" fill="{color}">"#);
                    for &(x, y) in &series.points {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4"/>"#, sx(x), sy(y));
                    }
                    let _ = writeln!(s, "</g>");
                }
            }
            let ly = TOP + 10.0 + 20.0 * k as f64;
            let lx = LEFT + pw + 15.0;
            let swatch = if series.style == Style::Markers {
                format!(r#"<circle cx="{:.1}" cy="{ly:.1}" r="4" fill="{color}"/>"#, lx + 10.0)
            } else {
                format!(
                    r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
                    lx + 20.0
                )
            };
            let _ = writeln!(
                s,
                r#"<g class="legend">{swatch}<text x="{:.1}" y="{:.1}">{label}</text></g>"#,
                lx + 26.0,
                ly + 4.0
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        write_atomic(path, self.to_svg()?.as_bytes())
    }
}

/// Mean best-so-far value against evaluation count, one curve per
/// algorithm. The vertical axis is logarithmic when every value is positive
/// and they span more than three decades.
pub fn convergence_figure(title: &str, curves: &[(String, Vec<f64>)]) -> Result<Figure, HarnessError> {
    let contract = |m: &str| HarnessError::Core(adbo::Error::Contract(m.into()));
    if curves.is_empty() {
        return Err(contract("no summaries to plot"));
    }
    let len = curves[0].1.len();
    if len == 0 || curves.iter().any(|(_, c)| c.len() != len) {
        return Err(contract("convergence curves must share one evaluation grid"));
    }
    let all = || curves.iter().flat_map(|(_, c)| c.iter().copied());
    let lo = all().fold(f64::INFINITY, f64::min);
    let hi = all().fold(f64::NEG_INFINITY, f64::max);
    Ok(Figure {
        title: title.to_string(),
        x_label: "number of evaluations".into(),
        y_label: "mean best objective value".into(),
        log_y: lo > 0.0 && hi / lo > 1e3,
        series: curves
            .iter()
            .map(|(tag, c)| Series::line(tag.clone(), c.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect()))
            .collect(),
    })
}

pub fn emit_convergence_plot(title: &str, curves: &[(String, Vec<f64>)], path: &Path) -> Result<(), HarnessError> {
    convergence_figure(title, curves)?.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(svg: &str) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(svg).expect("well-formed svg")
    }

    fn legend(doc: &roxmltree::Document) -> Vec<String> {
        doc.descendants()
            .filter(|n| n.attribute("class") == Some("legend"))
            .map(|g| g.descendants().find(|n| n.has_tag_name("text")).unwrap().text().unwrap().to_string())
            .collect()
    }

    #[test]
    fn one_curve_per_algorithm() {
        let curves = vec![
            ("adadropout".to_string(), vec![5.0, 3.0, 1.0]),
            ("standard-bo".to_string(), vec![5.0, 4.0, 4.0]),
        ];
        let svg = convergence_figure("sphere <2d>", &curves).unwrap().to_svg().unwrap();
        let doc = parse(&svg);
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 2);
        assert_eq!(legend(&doc), ["adadropout", "standard-bo"]);
        assert!(svg.contains("number of evaluations") && svg.contains("mean best objective value"));
        assert!(svg.contains("sphere &lt;2d&gt;"));
    }

    #[test]
    fn constant_curve_is_horizontal() {
        let svg = convergence_figure("flat", &[("dropout".to_string(), vec![2.5; 10])]).unwrap().to_svg().unwrap();
        let doc = parse(&svg);
        let line = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
        let ys: Vec<&str> = line.attribute("points").unwrap().split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert_eq!(ys.len(), 10);
        assert!(ys.iter().all(|y| *y == ys[0]));
        assert_eq!(legend(&doc), ["dropout"]);
    }

    #[test]
    fn wide_positive_ranges_use_log_axis() {
        let f = convergence_figure("x", &[("a".to_string(), vec![1e6, 1e2, 1.0])]).unwrap();
        assert!(f.log_y);
        let f = convergence_figure("x", &[("a".to_string(), vec![1.0, -1.0])]).unwrap();
        assert!(!f.log_y);
        parse(&f.to_svg().unwrap());
    }

    #[test]
    fn rejects_empty_and_misaligned_input() {
        assert!(convergence_figure("x", &[]).is_err());
        assert!(convergence_figure("x", &[("a".into(), vec![])]).is_err());
        assert!(convergence_figure("x", &[("a".into(), vec![1.0]), ("b".into(), vec![1.0, 2.0])]).is_err());
    }

    #[test]
    fn tick_values_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(0.5), "0.5");
        assert_eq!(tick_label(2e6), "2.0e6");
    }
}
