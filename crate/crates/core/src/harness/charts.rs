//! Two-column series files and static SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{io_error, HarnessError, RunSummary};

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    fn from_values(label: String, values: &[f64]) -> Self {
        Series {
            label,
            points: values.iter().enumerate().map(|(k, &v)| ((k + 1) as f64, v)).collect(),
        }
    }

    fn to_tsv(&self) -> String {
        let mut out = String::from("# episode\tvalue\n");
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x}\t{y}");
        }
        out
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

/// Line chart with one polyline per series, one vertex per point.
pub fn render_svg(title: &str, y_label: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">episode</text>"#,
        W / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" font-size="11" transform="rotate(-90 12 {})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, y) in [(y0, H - PAD), (y1, PAD)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.1}</text>"#,
            PAD - 4.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut coords = String::new();
        for &(x, y) in &s.points {
            let _ = write!(coords, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            coords.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            W - PAD - 80.0,
            PAD + 14.0 * k as f64,
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `see.tsv`, `ree_agent<i>.tsv` and one chart per metric into `dir`.
pub fn emit_charts(dir: &Path, summary: &RunSummary) -> Result<(), HarnessError> {
    if summary.episodes == 0 {
        return Err(HarnessError::Data {
            path: dir.to_path_buf(),
            message: "cannot chart an empty summary".into(),
        });
    }
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let put = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(io_error(&p))
    };
    let see = Series::from_values("SEE".into(), &summary.see);
    put("see.tsv", see.to_tsv())?;
    put("see.svg", render_svg("Steps of each episode", "steps", &[see]))?;
    let ree: Vec<Series> = summary
        .ree
        .iter()
        .enumerate()
        .map(|(i, v)| Series::from_values(format!("agent {}", i + 1), v))
        .collect();
    for (i, s) in ree.iter().enumerate() {
        put(&format!("ree_agent{}.tsv", i + 1), s.to_tsv())?;
    }
    put("ree.svg", render_svg("Rewards of each episode", "reward", &ree))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_has_one_vertex_per_point() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let svg = render_svg("t", "y", &[Series::from_values("s".into(), &values)]);
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let points = poly.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(points.split_whitespace().count(), 100);
    }

    #[test]
    fn empty_summary_rejected() {
        let s = RunSummary {
            n_agents: 2,
            runs: 1,
            episodes: 0,
            window: 1,
            see: vec![],
            ree: vec![vec![], vec![]],
            final_see: 0.0,
            final_ree: vec![0.0, 0.0],
        };
        assert!(emit_charts(Path::new("/nonexistent/never"), &s).is_err());
    }
}
