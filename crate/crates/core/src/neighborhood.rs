//! Circular neighbor sampling shared by the LBP descriptor and the ablation chain.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Offsets closer than this to an integer are snapped onto the pixel grid.
const SNAP: f64 = 1e-9;

/// Comparison slack for interpolated neighbors on a {0, 1} plane.
pub(crate) const GREATER_EPS: f64 = 1e-9;

/// `points` sample offsets `(dx, dy)` on a circle of `radius`, counter-clockwise from +x.
///
/// When `points` is a multiple of 8 the set is built from one octant and
/// mirrored, so it is exactly closed under 90° rotations and axis mirrors.
pub(crate) fn circle_offsets(points: usize, radius: f64) -> Vec<(f64, f64)> {
    let unit: Vec<(f64, f64)> = if points % 8 == 0 {
        let quarter = points / 4;
        let eighth = points / 8;
        let mut first = Vec::with_capacity(quarter);
        for i in 0..quarter {
            let (c, s) = if i < eighth {
                let a = 2.0 * PI * i as f64 / points as f64;
                (a.cos(), a.sin())
            } else if i == eighth {
                (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
            } else {
                let a = 2.0 * PI * (quarter - i) as f64 / points as f64;
                (a.sin(), a.cos())
            };
            first.push((c, s));
        }
        let mut all = Vec::with_capacity(points);
        all.extend(first.iter().copied());
        all.extend(first.iter().map(|&(c, s)| (-s, c)));
        all.extend(first.iter().map(|&(c, s)| (-c, -s)));
        all.extend(first.iter().map(|&(c, s)| (s, -c)));
        all
    } else {
        (0..points)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / points as f64;
                (a.cos(), a.sin())
            })
            .collect()
    };
    // image rows grow downward, so counter-clockwise means negative dy
    unit.into_iter()
        .map(|(c, s)| (snap(radius * c), snap(-radius * s)))
        .collect()
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP {
        r + 0.0
    } else {
        v
    }
}

/// Bilinear sample of a row-major plane, clamping coordinates to the border.
pub(crate) fn bilinear(plane: &[f64], width: usize, height: usize, fx: f64, fy: f64) -> f64 {
    let fx = fx.clamp(0.0, (width - 1) as f64);
    let fy = fy.clamp(0.0, (height - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let at = |x: usize, y: usize| plane[y * width + x];
    if tx == 0.0 && ty == 0.0 {
        return at(x0, y0);
    }
    let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
    let bottom = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Neighbor bits (`neighbor > center`) of pixel `(x, y)`.
pub(crate) fn pattern_bits(
    plane: &[f64],
    width: usize,
    height: usize,
    x: usize,
    y: usize,
    offsets: &[(f64, f64)],
    bits: &mut Vec<bool>,
) {
    bits.clear();
    let center = plane[y * width + x];
    for &(dx, dy) in offsets {
        let v = bilinear(plane, width, height, x as f64 + dx, y as f64 + dy);
        bits.push(v > center + GREATER_EPS);
    }
}
