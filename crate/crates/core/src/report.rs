//! Report rows, CSV emission and log-log SVG charts.

use std::fmt::Write as _;
use std::io::Write;

use crate::probe::ExperimentReport;

pub const REPORT_HEADER: &str = "inequality_id,model,h,p_or_q,trials,value,slope,r2,threshold,pass";

/// One line of the report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub inequality_id: String,
    pub model: String,
    pub h: Option<f64>,
    pub p_or_q: Option<f64>,
    pub trials: usize,
    pub value: f64,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub threshold: String,
    pub pass: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl Row {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{},{},{},{}",
            self.inequality_id,
            self.model,
            opt(self.h),
            opt(self.p_or_q),
            self.trials,
            self.value,
            opt(self.slope),
            opt(self.r2),
            self.threshold,
            self.pass
        )
    }
}

/// One row per scale, each carrying the series verdict.
pub fn rows_of(report: &ExperimentReport) -> Vec<Row> {
    let s = &report.series;
    s.points()
        .iter()
        .map(|p| Row {
            inequality_id: s.inequality_id.clone(),
            model: s.model.clone(),
            h: Some(p.h),
            p_or_q: Some(s.p_or_q),
            trials: p.trials,
            value: p.value,
            slope: report.fit.map(|f| f.slope),
            r2: report.fit.map(|f| f.r2),
            threshold: report.threshold.to_string(),
            pass: report.pass,
        })
        .collect()
}

pub fn write_rows<W: Write>(rows: &[Row], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

/// A named polyline in data coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn log_range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.log10()), b.max(v.log10())));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-9 {
        Some((lo - 0.5, hi + 0.5))
    } else {
        let m = 0.05 * (hi - lo);
        Some((lo - m, hi + m))
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let step = if span > 6.0 { (span / 6.0).ceil() } else { 1.0 };
    let mut t = Vec::new();
    let mut d = (lo / step).ceil() * step;
    while d <= hi {
        t.push(d);
        d += step;
    }
    if t.len() < 2 {
        let base2 = 2f64.log10();
        let mut d = (lo / base2).ceil() * base2;
        t.clear();
        while d <= hi {
            t.push(d);
            d += base2;
        }
    }
    t
}

fn fmt_tick(e: f64) -> String {
    let v = 10f64.powf(e);
    if (e - e.round()).abs() < 1e-9 {
        format!("1e{}", e.round() as i64)
    } else {
        format!("{v:.3}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log line chart; nonpositive points are dropped.
pub fn svg_loglog(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter().copied());
    let (x0, x1) = log_range(all().filter(|p| p.1 > 0.0).map(|p| p.0)).unwrap_or((-1.0, 0.0));
    let (y0, y1) = log_range(all().filter(|p| p.0 > 0.0).map(|p| p.1)).unwrap_or((-1.0, 0.0));
    let sx = |x: f64| PAD + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut o = String::new();
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(o, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
    let _ = writeln!(
        o,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for t in ticks(x0, x1) {
        let x = PAD + (t - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let _ = writeln!(o, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - PAD, H - PAD + 5.0);
        let _ = writeln!(
            o,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            H - PAD + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = H - PAD - (t - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let _ = writeln!(o, r#"<line x1="{}" y1="{y:.2}" x2="{PAD}" y2="{y:.2}" stroke="black"/>"#, PAD - 5.0);
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            PAD - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 15.0, esc(xlabel));
    let _ = writeln!(
        o,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
    for (i, s) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(o, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, pts.join(" "));
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{ly:.2}" font-size="11" fill="{c}">{}</text>"#,
            W - PAD - 150.0,
            esc(&s.label)
        );
    }
    o.push_str("</svg>\n");
    o
}

/// Chart of a scaling series.
pub fn svg_report(report: &ExperimentReport) -> String {
    let s = &report.series;
    let pts = s.points().iter().map(|p| (p.h, p.value)).collect();
    let mut label = format!("{} p={}", s.model, s.p_or_q);
    if let Some(f) = report.fit {
        let _ = write!(label, " slope={:.3}", f.slope);
    }
    svg_loglog(&s.inequality_id, "h", "ratio", &[Series { label, points: pts }])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{judge, ScalingSeries, Threshold};

    fn report() -> ExperimentReport {
        let mut s = ScalingSeries::new("strichartz_5_1", "circle", 6.0, "test");
        for k in 1..=3 {
            s.push(0.5f64.powi(k), 1.0 + 0.1 * k as f64, 4).unwrap();
        }
        judge(s, Threshold::SlopeAtLeast { bound: -1.0 / 6.0, tol: 0.05 }).unwrap()
    }

    #[test]
    fn csv_rows() {
        let rows = rows_of(&report());
        assert_eq!(rows.len(), 3);
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert!(lines[1].starts_with("strichartz_5_1,circle,5e-1,6e0,4,1.1e0,"));
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 10 && l.ends_with("true")));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = svg_report(&report());
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let empty = svg_loglog("t", "x", "y", &[Series { label: "none".into(), points: vec![(0.0, 1.0)] }]);
        assert_eq!(empty.matches("<polyline").count(), 0);
    }
}
