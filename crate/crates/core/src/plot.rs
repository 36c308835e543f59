//! Minimal standalone SVG emission: layout scatters, CCDF step plots, and
//! grouped histogram bars. No interactive output, just small static files.

use std::fmt::Write as _;

use crate::assort::HistogramSet;
use crate::classify::{BoundarySpec, ClusterAssignment, Label, Region};
use crate::error::Result;
use crate::layout::LayoutEmbedding;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 700.0;
const MARGIN: f64 = 50.0;

pub fn label_color(label: Label) -> &'static str {
    match label {
        Label::Majority => "#1f77b4",
        Label::Minority => "#d62728",
        Label::Intermediate => "#2ca02c",
        Label::Unclassified => "#444444",
    }
}

struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Frame {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for (x, y) in points {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        if !min_x.is_finite() {
            (min_x, max_x, min_y, max_y) = (0.0, 1.0, 0.0, 1.0);
        }
        let span_x = (max_x - min_x).max(1e-9);
        let span_y = (max_y - min_y).max(1e-9);
        let scale = ((WIDTH - 2.0 * MARGIN) / span_x).min((HEIGHT - 2.0 * MARGIN) / span_y);
        Frame {
            min_x,
            min_y,
            scale,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            MARGIN + (x - self.min_x) * self.scale,
            // flip y: SVG grows downward
            HEIGHT - MARGIN - (y - self.min_y) * self.scale,
        )
    }
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
}

/// Layout scatter, color-coded by cluster when an assignment is given, with
/// optional boundary overlay. This is the visual aid for drawing or auditing
/// classification borders.
pub fn layout_svg(
    embedding: &LayoutEmbedding,
    assignment: Option<&ClusterAssignment>,
    boundaries: Option<&BoundarySpec>,
) -> Result<String> {
    let frame = Frame::fit(embedding.iter().map(|(_, p)| p));
    let mut out = String::new();
    svg_open(&mut out);
    for (user, (x, y)) in embedding.iter() {
        let (px, py) = frame.map(x, y);
        let color = match assignment {
            Some(a) => label_color(a.label_of(user)),
            None => "#555555",
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="1.6" fill="{color}" fill-opacity="0.55"/>"#
        );
    }
    if let Some(spec) = boundaries {
        for (_, region) in spec.regions() {
            match region {
                Region::Polygon(vs) => {
                    let pts: Vec<String> = vs
                        .iter()
                        .map(|&(x, y)| {
                            let (px, py) = frame.map(x, y);
                            format!("{px:.2},{py:.2}")
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
                        pts.join(" ")
                    );
                }
                Region::HalfPlane { a, b } => {
                    // draw the border line extended across the frame
                    let dx = b.0 - a.0;
                    let dy = b.1 - a.1;
                    let norm = (dx * dx + dy * dy).sqrt().max(1e-12);
                    let ext = 1e4 / frame.scale.max(1e-9);
                    let p1 = frame.map(a.0 - dx / norm * ext, a.1 - dy / norm * ext);
                    let p2 = frame.map(a.0 + dx / norm * ext, a.1 + dy / norm * ext);
                    let _ = writeln!(
                        out,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
                        p1.0, p1.1, p2.0, p2.1
                    );
                }
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Log-log CCDF step plot; one polyline per named series.
pub fn ccdf_svg(series: &[(&str, &[(u64, f64)])]) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let max_x = series
        .iter()
        .flat_map(|(_, s)| s.iter().map(|&(v, _)| v.max(1)))
        .max()
        .unwrap_or(1) as f64;
    let min_frac = series
        .iter()
        .flat_map(|(_, s)| s.iter().map(|&(_, f)| f))
        .fold(1.0f64, f64::min)
        .max(1e-6);
    let x_of = |v: f64| MARGIN + (v.max(1.0).log10() / max_x.log10().max(1e-9)) * (WIDTH - 2.0 * MARGIN);
    let y_of = |f: f64| {
        let t = (f.max(min_frac).log10() - min_frac.log10()) / (0.0 - min_frac.log10()).max(1e-9);
        HEIGHT - MARGIN - t * (HEIGHT - 2.0 * MARGIN)
    };
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, (name, steps)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let mut pts = Vec::new();
        for window in steps.windows(2) {
            let (v0, f0) = window[0];
            let (v1, _) = window[1];
            pts.push(format!("{:.2},{:.2}", x_of(v0 as f64), y_of(f0)));
            pts.push(format!("{:.2},{:.2}", x_of(v1 as f64), y_of(f0)));
        }
        if let Some(&(v, f)) = steps.last() {
            pts.push(format!("{:.2},{:.2}", x_of(v as f64), y_of(f)));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}" font-size="14">{name}</text>"#,
            WIDTH - MARGIN - 150.0,
            MARGIN + 20.0 * (k + 1) as f64
        );
    }
    let _ = writeln!(
        out,
        r##"<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="#999"/>"##,
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        out,
        r##"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="#999"/>"##,
        HEIGHT - MARGIN
    );
    out.push_str("</svg>\n");
    out
}

/// Grouped bars of the local-assortativity histograms; the all-node
/// distribution is drawn as a grey background.
pub fn histogram_svg(set: &HistogramSet) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let bins = set.all.len();
    let max_mass = set
        .all
        .iter()
        .chain(&set.majority)
        .chain(&set.minority)
        .chain(&set.intermediate)
        .fold(0.0f64, |a, &b| a.max(b))
        .max(1e-12);
    let bin_w = (WIDTH - 2.0 * MARGIN) / bins as f64;
    let y_of = |m: f64| HEIGHT - MARGIN - (m / max_mass) * (HEIGHT - 2.0 * MARGIN);
    for (i, &mass) in set.all.iter().enumerate() {
        let x = MARGIN + i as f64 * bin_w;
        let y = y_of(mass);
        let _ = writeln!(
            out,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{bin_w:.2}" height="{:.2}" fill="#cccccc"/>"##,
            HEIGHT - MARGIN - y
        );
    }
    let groups = [
        (&set.majority, label_color(Label::Majority)),
        (&set.minority, label_color(Label::Minority)),
        (&set.intermediate, label_color(Label::Intermediate)),
    ];
    let sub_w = bin_w / 3.0;
    for (k, (masses, color)) in groups.iter().enumerate() {
        for (i, &mass) in masses.iter().enumerate() {
            if mass <= 0.0 {
                continue;
            }
            let x = MARGIN + i as f64 * bin_w + k as f64 * sub_w;
            let y = y_of(mass);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{sub_w:.2}" height="{:.2}" fill="{color}" fill-opacity="0.8"/>"#,
                HEIGHT - MARGIN - y
            );
        }
    }
    // x axis with -1, 0, 1 ticks
    let _ = writeln!(
        out,
        r##"<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="#333"/>"##,
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN
    );
    for (t, lbl) in [(0.0, "-1"), (0.5, "0"), (1.0, "1")] {
        let x = MARGIN + t * (WIDTH - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle">{lbl}</text>"#,
            HEIGHT - MARGIN + 16.0
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::UserId;

    #[test]
    fn layout_svg_is_well_formed() {
        let emb = LayoutEmbedding::from_pairs([
            (UserId::new("a"), (0.0, 0.0)),
            (UserId::new("b"), (10.0, 5.0)),
        ]);
        let spec = BoundarySpec::split_along((-5.0, 0.0), (15.0, 0.0), 0.2).unwrap();
        let svg = layout_svg(&emb, None, Some(&spec)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<line").count(), 2);
    }

    #[test]
    fn ccdf_svg_draws_each_series() {
        let a = [(1u64, 1.0), (5, 0.4), (20, 0.1)];
        let b = [(1u64, 1.0), (3, 0.5)];
        let svg = ccdf_svg(&[("size", &a), ("depth", &b)]);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn histogram_svg_has_background_bars() {
        let set = HistogramSet {
            edges: vec![-1.0, 0.0, 1.0],
            majority: vec![0.2, 0.8],
            minority: vec![0.7, 0.3],
            intermediate: vec![0.0, 0.0],
            all: vec![0.5, 0.5],
        };
        let svg = histogram_svg(&set);
        assert!(svg.matches("<rect").count() >= 6);
    }
}
