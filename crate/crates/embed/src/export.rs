//! Scatter export: CSV with 12 significant digits and a static SVG 1.1
//! plot, colored by class label with marker shape by real/synthetic.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{EmbedError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointSource {
    Real,
    Synthetic,
}

impl PointSource {
    fn label(self) -> &'static str {
        match self {
            PointSource::Real => "real",
            PointSource::Synthetic => "synthetic",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddingLayout {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub sources: Vec<PointSource>,
    pub final_kl: Option<f64>,
}

impl EmbeddingLayout {
    pub fn new(points: Vec<[f64; 2]>, labels: Vec<usize>, sources: Vec<PointSource>, final_kl: Option<f64>) -> Result<Self> {
        if points.len() != labels.len() || points.len() != sources.len() {
            return Err(EmbedError::Invalid(format!(
                "{} points vs {} labels / {} sources",
                points.len(),
                labels.len(),
                sources.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EmbedError::Invalid("non-finite coordinate in layout".into()));
        }
        Ok(EmbeddingLayout { points, labels, sources, final_kl })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn layout_to_csv(layout: &EmbeddingLayout) -> String {
    let mut out = String::from("x,y,label,source\n");
    for i in 0..layout.len() {
        let _ = writeln!(
            out,
            "{:.11e},{:.11e},{},{}",
            layout.points[i][0],
            layout.points[i][1],
            layout.labels[i],
            layout.sources[i].label()
        );
    }
    out
}

pub fn read_layout_csv(text: &str) -> Result<EmbeddingLayout> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| EmbedError::Format("empty layout file".into()))?;
    if header.trim() != "x,y,label,source" {
        return Err(EmbedError::Format(format!("unexpected header {header:?}")));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut sources = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(EmbedError::Format(format!("line {}: expected 4 fields", lineno + 2)));
        }
        let x: f64 = fields[0].parse().map_err(|_| EmbedError::Format(format!("line {}: bad x", lineno + 2)))?;
        let y: f64 = fields[1].parse().map_err(|_| EmbedError::Format(format!("line {}: bad y", lineno + 2)))?;
        let label: usize = fields[2].parse().map_err(|_| EmbedError::Format(format!("line {}: bad label", lineno + 2)))?;
        let source = match fields[3].trim() {
            "real" => PointSource::Real,
            "synthetic" => PointSource::Synthetic,
            other => return Err(EmbedError::Format(format!("line {}: bad source {other:?}", lineno + 2))),
        };
        if !x.is_finite() || !y.is_finite() {
            return Err(EmbedError::Format(format!("line {}: non-finite coordinate", lineno + 2)));
        }
        points.push([x, y]);
        labels.push(label);
        sources.push(source);
    }
    EmbeddingLayout::new(points, labels, sources, None)
}

const PALETTE: [&str; 10] = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
    "#aa3377", "#bbbbbb", "#e07020", "#117755", "#552288",
];

pub fn layout_to_svg(layout: &EmbeddingLayout) -> String {
    let side = 640.0;
    let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &layout.points {
        lo_x = lo_x.min(p[0]);
        hi_x = hi_x.max(p[0]);
        lo_y = lo_y.min(p[1]);
        hi_y = hi_y.max(p[1]);
    }
    if layout.is_empty() {
        lo_x = 0.0;
        hi_x = 1.0;
        lo_y = 0.0;
        hi_y = 1.0;
    }
    // 5% margin on each side; degenerate extents widen to a unit box.
    let pad = |lo: &mut f64, hi: &mut f64| {
        if *hi - *lo < 1e-12 {
            *lo -= 0.5;
            *hi += 0.5;
        }
        let m = 0.05 * (*hi - *lo);
        *lo -= m;
        *hi += m;
    };
    pad(&mut lo_x, &mut hi_x);
    pad(&mut lo_y, &mut hi_y);
    let sx = side / (hi_x - lo_x);
    let sy = side / (hi_y - lo_y);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{side}\" height=\"{side}\" viewBox=\"0 0 {side} {side}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{side}\" height=\"{side}\" fill=\"white\"/>");
    for i in 0..layout.len() {
        let x = (layout.points[i][0] - lo_x) * sx;
        // SVG y grows downward.
        let y = side - (layout.points[i][1] - lo_y) * sy;
        let color = PALETTE[layout.labels[i] % PALETTE.len()];
        match layout.sources[i] {
            PointSource::Real => {
                let _ = writeln!(svg, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.5\" fill=\"{color}\" fill-opacity=\"0.8\"/>");
            }
            PointSource::Synthetic => {
                let _ = writeln!(
                    svg,
                    "<path d=\"M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}\" stroke=\"{color}\" stroke-width=\"1.6\"/>",
                    x - 3.5, y - 3.5, x + 3.5, y + 3.5, x - 3.5, y + 3.5, x + 3.5, y - 3.5
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write `<stem>.csv` and `<stem>.svg` next to each other.
pub fn export_scatter(layout: &EmbeddingLayout, stem: &Path) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let csv_path = stem.with_extension("csv");
    let svg_path = stem.with_extension("svg");
    std::fs::write(&csv_path, layout_to_csv(layout))?;
    std::fs::write(&svg_path, layout_to_svg(layout))?;
    Ok((csv_path, svg_path))
}
