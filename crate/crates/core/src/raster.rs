//! Pixel-level primitives: image buffers, grayscale, Otsu thresholding,
//! channel z-scoring and the ablation transform chain.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood;

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero dimension {width}x{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "buffer has {} bytes, expected {expected}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, rgb.repeat(n))
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Copies the `w`×`h` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w as usize * h as usize * 3);
        for row in y..y + h {
            let start = (row as usize * self.width as usize + x as usize) * 3;
            data.extend_from_slice(&self.data[start..start + w as usize * 3]);
        }
        Self::new(w, h, data)
    }

    /// Splits into three real-valued channel planes.
    pub fn channels(&self) -> [RealPlane; 3] {
        let n = self.width as usize * self.height as usize;
        let mut out = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for p in self.pixels() {
            for c in 0..3 {
                out[c].push(p[c] as f64);
            }
        }
        out.map(|data| RealPlane {
            width: self.width,
            height: self.height,
            data,
        })
    }
}

/// 8-bit single-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero dimension {width}x{height}")));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "buffer has {} bytes, expected {}",
                data.len(),
                width as usize * height as usize
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn to_rgb(&self) -> RgbImage {
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RgbImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Clockwise quarter turn.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |x, y| self.get(y, h - 1 - x)).expect("same pixel count")
    }

    pub fn transpose(&self) -> GrayImage {
        GrayImage::from_fn(self.height, self.width, |x, y| self.get(y, x)).expect("same pixel count")
    }

    pub fn flip_horizontal(&self) -> GrayImage {
        let w = self.width;
        GrayImage::from_fn(w, self.height, |x, y| self.get(w - 1 - x, y)).expect("same pixel count")
    }

    fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }
}

/// Real-valued single-channel plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPlane {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl RealPlane {
    pub fn new(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "plane has {} values, expected {}",
                data.len(),
                width as usize * height as usize
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("plane contains non-finite values".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w as usize * h as usize);
        for row in y..y + h {
            let start = row as usize * self.width as usize + x as usize;
            data.extend_from_slice(&self.data[start..start + w as usize]);
        }
        Ok(Self {
            width: w,
            height: h,
            data,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        }
    }
}

/// ITU-R BT.601 luma, rounded.
pub fn luma(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    y.round().clamp(0.0, 255.0) as u8
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.pixels().map(luma).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtsuThreshold {
    /// Pixels strictly above this value are foreground.
    pub threshold: u8,
    /// Set when the image holds a single intensity.
    pub degenerate: bool,
}

/// Otsu's threshold on the 256-bin histogram.
///
/// The between-class variance for a split at `t` is proportional to
/// `(n1·s0 − n0·s1)² / (n0·n1)`, which is compared exactly in integers so
/// ties resolve to the lowest `t` independently of float rounding.
pub fn otsu_threshold(img: &GrayImage) -> OtsuThreshold {
    otsu_from_histogram(&img.histogram())
}

pub(crate) fn otsu_from_histogram(hist: &[u64; 256]) -> OtsuThreshold {
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let occupied: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
    if occupied.len() <= 1 {
        return OtsuThreshold {
            threshold: occupied.first().copied().unwrap_or(0) as u8,
            degenerate: true,
        };
    }

    // best score kept as the fraction num / den
    let mut best: Option<(u8, u128, u64)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        let diff = (n1 as i128 * s0 as i128 - n0 as i128 * s1 as i128).unsigned_abs();
        let num = diff * diff;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => cmp_fraction(num, den, bn, bd) == Ordering::Greater,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    OtsuThreshold {
        threshold: best.map(|b| b.0).unwrap_or(0),
        degenerate: false,
    }
}

/// Compares `a/b` with `c/d` exactly via 256-bit cross products.
fn cmp_fraction(a: u128, b: u64, c: u128, d: u64) -> Ordering {
    wide_mul(a, d).cmp(&wide_mul(c, b))
}

fn wide_mul(a: u128, b: u64) -> (u128, u128) {
    let lo = (a as u64 as u128) * b as u128;
    let hi = (a >> 64) * b as u128;
    let (low, carry) = lo.overflowing_add(hi << 64);
    ((hi >> 64) + carry as u128, low)
}

/// Maps pixels above the Otsu threshold to 255 and the rest to 0.
/// A constant image becomes all-foreground.
pub fn binarize(img: &GrayImage) -> (GrayImage, OtsuThreshold) {
    let otsu = otsu_threshold(img);
    let data = if otsu.degenerate {
        vec![255; img.data.len()]
    } else {
        img.data
            .iter()
            .map(|&v| if v > otsu.threshold { 255 } else { 0 })
            .collect()
    };
    (
        GrayImage {
            width: img.width,
            height: img.height,
            data,
        },
        otsu,
    )
}

/// `(x − mean) / std` with the population standard deviation.
pub fn zscore_channel(channel: &RealPlane) -> Result<RealPlane> {
    let n = channel.data.len();
    if n < 2 {
        return Err(Error::InvalidParameter("z-score needs at least 2 pixels".into()));
    }
    let mean = channel.data.iter().sum::<f64>() / n as f64;
    let var = channel.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if sd == 0.0 || sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::ZeroVariance);
    }
    let data = channel.data.iter().map(|v| (v - mean) / sd).collect();
    Ok(RealPlane {
        width: channel.width,
        height: channel.height,
        data,
    })
}

/// Z-scores each color channel of a whole map. A constant channel maps to zeros.
pub fn normalize_channels(img: &RgbImage) -> [RealPlane; 3] {
    img.channels().map(|ch| match zscore_channel(&ch) {
        Ok(z) => z,
        Err(_) => RealPlane::zeros(ch.width, ch.height),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    Reference,
    Gray,
    Binary,
    TexturelessBinary,
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Self::Reference),
            "gray" => Ok(Self::Gray),
            "binary" => Ok(Self::Binary),
            "textureless" | "textureless_binary" => Ok(Self::TexturelessBinary),
            other => Err(Error::InvalidParameter(format!("unknown ablation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ablated {
    pub image: RgbImage,
    /// A thresholding step saw a constant image.
    pub degenerate: bool,
}

pub const ABLATION_LBP_RADIUS: u32 = 3;

pub fn ablate(img: &RgbImage, mode: AblationMode, lbp_radius: u32) -> Result<Ablated> {
    match mode {
        AblationMode::Reference => Ok(Ablated {
            image: img.clone(),
            degenerate: false,
        }),
        AblationMode::Gray => Ok(Ablated {
            image: to_grayscale(img).to_rgb(),
            degenerate: false,
        }),
        AblationMode::Binary => {
            let (bin, otsu) = binarize(&to_grayscale(img));
            Ok(Ablated {
                image: bin.to_rgb(),
                degenerate: otsu.degenerate,
            })
        }
        AblationMode::TexturelessBinary => {
            if lbp_radius == 0 {
                return Err(Error::InvalidParameter("LBP radius must be positive".into()));
            }
            let (bin, first) = binarize(&to_grayscale(img));
            let codes = lbp_code_map(&bin, lbp_radius);
            let (out, second) = binarize(&codes);
            Ok(Ablated {
                image: out.to_rgb(),
                degenerate: first.degenerate || second.degenerate,
            })
        }
    }
}

/// Raw (non rotation-invariant) LBP codes with `8·radius` points, rescaled to 0..=255.
/// Border pixels sample with clamp-to-edge.
pub fn lbp_code_map(img: &GrayImage, radius: u32) -> GrayImage {
    let points = 8 * radius as usize;
    let offsets = neighborhood::circle_offsets(points, radius as f64);
    let (w, h) = (img.width as usize, img.height as usize);
    let plane: Vec<f64> = img.data.iter().map(|&v| v as f64 / 255.0).collect();
    let max_code = ((1u64 << points) - 1) as f64;
    let mut bits = Vec::with_capacity(points);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            neighborhood::pattern_bits(&plane, w, h, x, y, &offsets, &mut bits);
            let code = bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
            data.push((code as f64 / max_code * 255.0).round() as u8);
        }
    }
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}
