use std::collections::BTreeMap;
use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::report::shifted_mean_sd;
use super::trace::EpisodeTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Position,
    Orientation,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Position => "position",
            Metric::Orientation => "orientation",
        }
    }

    fn axis_label(&self) -> &'static str {
        match self {
            Metric::Position => "position error (m)",
            Metric::Orientation => "orientation error (deg)",
        }
    }

    fn value(&self, t: &EpisodeTrace, i: usize) -> f64 {
        match self {
            Metric::Position => t.steps[i].position_error,
            Metric::Orientation => t.steps[i].orientation_error_deg,
        }
    }
}

/// Mean and 95% half-width (Student t over samples); half-width is zero below two samples.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let (mean, sd) = shifted_mean_sd(xs);
    if n < 2 {
        return (mean, 0.0);
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive dof").inverse_cdf(0.975);
    (mean, t * sd / (n as f64).sqrt())
}

pub struct Series {
    pub label: String,
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
    pub n: usize,
}

/// Per `(controller, task)` mean and CI over seeds, step by step.
pub fn series(traces: &[EpisodeTrace], metric: Metric) -> Vec<Series> {
    let mut groups: BTreeMap<(String, String), Vec<&EpisodeTrace>> = BTreeMap::new();
    for t in traces {
        groups.entry((t.controller.clone(), t.task.to_string())).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|((c, task), mut ts)| {
            ts.sort_by_key(|t| t.seed);
            let len = ts.iter().map(|t| t.steps.len()).min().unwrap_or(0);
            let (mean, half_width) = (0..len)
                .map(|i| mean_ci95(&ts.iter().map(|t| metric.value(t, i)).collect::<Vec<_>>()))
                .unzip();
            Series {
                label: format!("{c} {task}"),
                mean,
                half_width,
                n: ts.len(),
            }
        })
        .collect()
}

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// SVG of mean lines with shaded 95% CI bands. Groups with a single seed get a
/// line only and a warning.
pub fn plot_timeseries(traces: &[EpisodeTrace], metric: Metric) -> (String, Vec<String>) {
    let all = series(traces, metric);
    let warnings = all
        .iter()
        .filter(|s| s.n < 2)
        .map(|s| format!("{}: single seed, confidence band omitted", s.label))
        .collect();
    let (w, h, ml, mr, mt, mb) = (800.0, 450.0, 70.0, 180.0, 30.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let steps = all.iter().map(|s| s.mean.len()).max().unwrap_or(1).max(1);
    let ymax = all
        .iter()
        .flat_map(|s| s.mean.iter().zip(&s.half_width).map(|(m, c)| m + c))
        .fold(0.0f64, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let x = |i: usize| ml + pw * (i + 1) as f64 / steps as f64;
    let y = |v: f64| mt + ph * (1.0 - v.max(0.0) / ymax);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g stroke="black" fill="none"><line x1="{ml}" y1="{}" x2="{}" y2="{}"/><line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}"/></g>"#, mt + ph, ml + pw, mt + ph, mt + ph);
    for k in 0..=5 {
        let v = ymax * k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, ml - 6.0, y(v) + 4.0);
        let step = steps * k / 5;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{step}</text>"#, ml + pw * step as f64 / steps as f64, mt + ph + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#, ml + pw / 2.0, h - 8.0);
    let _ = writeln!(s, r#"<text transform="translate(16 {}) rotate(-90)" text-anchor="middle">{}</text>"#, mt + ph / 2.0, metric.axis_label());
    for (k, ser) in all.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if ser.n >= 2 && !ser.mean.is_empty() {
            let mut pts: Vec<String> = ser.mean.iter().zip(&ser.half_width).enumerate().map(|(i, (m, c))| format!("{:.2},{:.2}", x(i), y(m + c))).collect();
            pts.extend(ser.mean.iter().zip(&ser.half_width).enumerate().rev().map(|(i, (m, c))| format!("{:.2},{:.2}", x(i), y(m - c))));
            let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, pts.join(" "));
        }
        let line: Vec<String> = ser.mean.iter().enumerate().map(|(i, m)| format!("{:.2},{:.2}", x(i), y(*m))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
        let ly = mt + 16.0 * k as f64 + 10.0;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{} (n={})</text>"#, ml + pw + 10.0, ml + pw + 30.0, ml + pw + 36.0, ly + 4.0, ser.label, ser.n);
    }
    s.push_str("</svg>\n");
    (s, warnings)
}
