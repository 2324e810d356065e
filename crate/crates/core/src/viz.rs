//! SVG kurtographs and correlation heatmaps, PNG-ready texel montages.
//!
//! All numbers are written with fixed precision so identical inputs give
//! byte-identical documents.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{CorrelationMatrix, GridLayout};
use crate::corpus::Texel;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Smallest plotted value of `κ + α`.
pub const KURTOGRAPH_FLOOR: f64 = 0.1;
const KURTOGRAPH_RADIUS: f64 = 200.0;
const KURTOGRAPH_MARGIN: f64 = 120.0;
const LEGEND_WIDTH: f64 = 180.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KurtographSeries {
    pub name: String,
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KurtographSpec {
    pub series: Vec<KurtographSeries>,
    pub feature_labels: Vec<String>,
}

/// Radial layout of a kurtograph: `radii[s][f]` for series `s` on spoke `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct KurtographGeometry {
    pub alpha: f64,
    /// `log10` of the innermost and outermost plotted `κ + α`.
    pub log_min: f64,
    pub log_max: f64,
    pub radius: f64,
    pub angles: Vec<f64>,
    pub radii: Vec<Vec<f64>>,
}

impl KurtographGeometry {
    /// Radius of `log10(κ + α) = decade`.
    pub fn radius_of_log(&self, decade: f64) -> f64 {
        if self.log_max <= self.log_min {
            return self.radius;
        }
        self.radius * (decade - self.log_min) / (self.log_max - self.log_min)
    }
}

pub fn kurtograph_geometry(spec: &KurtographSpec) -> Result<KurtographGeometry> {
    if spec.series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let f = spec.feature_labels.len();
    if f == 0 {
        return Err(Error::Empty("kurtograph has no features".into()));
    }
    for s in &spec.series {
        if s.kappa.len() != f {
            return Err(Error::ShapeMismatch(format!(
                "series `{}` has {} values for {f} features",
                s.name,
                s.kappa.len()
            )));
        }
        if s.kappa.iter().any(|k| !k.is_finite()) {
            return Err(Error::NonFinite(s.name.clone()));
        }
    }
    let min = spec.series.iter().flat_map(|s| s.kappa.iter().copied()).fold(f64::INFINITY, f64::min);
    let max = spec.series.iter().flat_map(|s| s.kappa.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    let alpha = (KURTOGRAPH_FLOOR - min).max(0.0);
    let log_min = KURTOGRAPH_FLOOR.log10();
    let log_max = (max + alpha).log10();
    let mut geo = KurtographGeometry {
        alpha,
        log_min,
        log_max,
        radius: KURTOGRAPH_RADIUS,
        angles: (0..f).map(|i| -PI / 2.0 + 2.0 * PI * i as f64 / f as f64).collect(),
        radii: Vec::new(),
    };
    geo.radii = spec
        .series
        .iter()
        .map(|s| s.kappa.iter().map(|k| geo.radius_of_log((k + alpha).log10())).collect())
        .collect();
    Ok(geo)
}

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Fixed-precision number without a negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub fn render_kurtograph(spec: &KurtographSpec) -> Result<String> {
    let geo = kurtograph_geometry(spec)?;
    let c = KURTOGRAPH_RADIUS + KURTOGRAPH_MARGIN;
    let width = 2.0 * c + LEGEND_WIDTH;
    let height = 2.0 * c;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="11">"#,
        num(width),
        num(height),
        num(width),
        num(height)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // decade rings
    let first = geo.log_min.ceil() as i32;
    let last = geo.log_max.floor() as i32;
    let _ = writeln!(svg, r##"<g class="rings" fill="none" stroke="#cccccc" stroke-width="0.8">"##);
    for d in first..=last {
        let r = geo.radius_of_log(d as f64);
        if r <= 0.0 {
            continue;
        }
        let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="{}"/>"#, num(c), num(c), num(r));
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" fill="#888888" stroke="none" font-size="9">1e{d}</text>"##,
            num(c + 3.0),
            num(c - r - 2.0)
        );
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r##"<g class="spokes" stroke="#999999" stroke-width="0.6">"##);
    for (i, &a) in geo.angles.iter().enumerate() {
        let (x, y) = (c + geo.radius * a.cos(), c + geo.radius * a.sin());
        let _ = writeln!(svg, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(c), num(c), num(x), num(y));
        let lr = geo.radius + 14.0;
        let anchor = if a.cos() > 0.2 {
            "start"
        } else if a.cos() < -0.2 {
            "end"
        } else {
            "middle"
        };
        let _ = writeln!(
            svg,
            r#"<text class="spoke-label" x="{}" y="{}" text-anchor="{anchor}" stroke="none" fill="black">{}</text>"#,
            num(c + lr * a.cos()),
            num(c + lr * a.sin() + 4.0),
            xml_escape(&spec.feature_labels[i])
        );
    }
    let _ = writeln!(svg, "</g>");

    for (s, series) in spec.series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let points: Vec<String> = geo.radii[s]
            .iter()
            .zip(&geo.angles)
            .map(|(r, a)| format!("{},{}", num(c + r * a.cos()), num(c + r * a.sin())))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="series" data-name="{}" points="{}" fill="{color}" fill-opacity="0.12" stroke="{color}" stroke-width="1.6"/>"#,
            xml_escape(&series.name),
            points.join(" ")
        );
        let ly = 24.0 + 18.0 * s as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            num(2.0 * c + 10.0),
            num(ly - 10.0),
            num(2.0 * c + 28.0),
            num(ly),
            xml_escape(&series.name)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="{}" fill="#555555">log10(κ + α), α = {}</text>"##,
        num(2.0 * c + 10.0),
        num(height - 16.0),
        num(geo.alpha)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Diverging blue–white–red color for `r ∈ [−1, 1]`.
pub fn diverging_color(r: f64) -> [u8; 3] {
    const NEG: [f64; 3] = [59.0, 76.0, 192.0];
    const POS: [f64; 3] = [180.0, 4.0, 38.0];
    let t = r.clamp(-1.0, 1.0);
    let (end, w) = if t < 0.0 { (NEG, -t) } else { (POS, t) };
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = (255.0 + (end[k] - 255.0) * w).round() as u8;
    }
    out
}

pub fn format_correlation(r: f64) -> String {
    let s = format!("{r:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub fn render_heatmap(m: &CorrelationMatrix) -> Result<String> {
    let k = m.len();
    if k == 0 || m.r.len() != k || m.r.iter().any(|row| row.len() != k) {
        return Err(Error::ShapeMismatch("correlation matrix must be square and non-empty".into()));
    }
    let cell = 56.0;
    let label_w = 170.0;
    let size = label_w + cell * k as f64 + 20.0;
    let labels: Vec<String> = m
        .labels
        .iter()
        .map(|l| xml_escape(&format!("{}/{}", l.corpus, l.class)))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="11">"#,
        num(size),
        num(size),
        num(size),
        num(size)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, label) in labels.iter().enumerate() {
        let y = label_w + cell * (i as f64 + 0.5) + 4.0;
        let _ = writeln!(svg, r#"<text class="row-label" x="{}" y="{}" text-anchor="end">{label}</text>"#, num(label_w - 6.0), num(y));
        let x = label_w + cell * (i as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text class="col-label" x="{}" y="{}" text-anchor="start" transform="rotate(-60 {} {})">{label}</text>"#,
            num(x),
            num(label_w - 6.0),
            num(x),
            num(label_w - 6.0)
        );
    }
    for i in 0..k {
        for j in 0..k {
            let r = m.r[i][j];
            let [cr, cg, cb] = diverging_color(r);
            let x = label_w + cell * j as f64;
            let y = label_w + cell * i as f64;
            let ink = if r.abs() > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                svg,
                r##"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="#{cr:02x}{cg:02x}{cb:02x}" stroke="white"/><text class="value" x="{}" y="{}" text-anchor="middle" fill="{ink}">{}</text>"##,
                num(x),
                num(y),
                num(cell),
                num(cell),
                num(x + cell / 2.0),
                num(y + cell / 2.0 + 4.0),
                format_correlation(r)
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub const MONTAGE_FILL: [u8; 3] = [128, 128, 128];

/// Nearest-neighbor resampling sampling pixel centers.
pub fn resample_nearest(src: &RgbImage, width: u32, height: u32) -> Result<RgbImage> {
    let (sw, sh) = (src.width() as u64, src.height() as u64);
    RgbImage::from_fn(width, height, |x, y| {
        let sx = ((2 * x as u64 + 1) * sw / (2 * width as u64)).min(sw - 1);
        let sy = ((2 * y as u64 + 1) * sh / (2 * height as u64)).min(sh - 1);
        src.pixel(sx as u32, sy as u32)
    })
}

pub fn render_montage(texels: &[Texel], layout: &GridLayout, cell: u32) -> Result<RgbImage> {
    if layout.assignment.len() != texels.len() {
        return Err(Error::LayoutMismatch {
            layout: layout.assignment.len(),
            texels: texels.len(),
        });
    }
    if cell == 0 {
        return Err(Error::InvalidParameter("montage cell size must be positive".into()));
    }
    if let Some(&(r, c)) = layout.assignment.iter().find(|&&(r, c)| r >= layout.rows || c >= layout.cols) {
        return Err(Error::InvalidParameter(format!(
            "cell ({r}, {c}) outside {}x{} grid",
            layout.rows, layout.cols
        )));
    }
    let width = layout.cols as u32 * cell;
    let height = layout.rows as u32 * cell;
    let mut out = RgbImage::filled(width, height, MONTAGE_FILL)?;
    for (texel, &(r, c)) in texels.iter().zip(&layout.assignment) {
        let tile = resample_nearest(&texel.pixels, cell, cell)?;
        let (ox, oy) = (c as u32 * cell, r as u32 * cell);
        for y in 0..cell {
            for x in 0..cell {
                out.put_pixel(ox + x, oy + y, tile.pixel(x, y));
            }
        }
    }
    Ok(out)
}
