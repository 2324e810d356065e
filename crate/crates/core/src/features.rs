//! Texel descriptors: color moments, rotation-invariant LBP, HOG superbins,
//! and their assembly into the L1-normalized feature vector.
//!
//! Layout of the full vector (29 values with the default configuration):
//!
//! | range  | content                                                     |
//! |--------|-------------------------------------------------------------|
//! | 0..12  | mean, std, skewness, kurtosis for R, then G, then B         |
//! | 12..24 | LBP: 9 folded uniform keys, then 3 non-uniform residue bins |
//! | 24..29 | HOG superbins in [`HogSuperbin`] order                      |
//!
//! The LBP reduction from 17 ones-count keys to 12 bins folds key `k` onto
//! `P − k` (a pattern and its complement), keeps uniform patterns per folded
//! key, and pools non-uniform patterns into three residue bins covering the
//! folded keys `2..=3`, `4..=5` and `6..=8`. Keys 0 and 1 cannot be
//! non-uniform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Texel;
use crate::error::{Error, Result};
use crate::neighborhood;
use crate::raster::{self, GrayImage, RealPlane, RgbImage};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub lbp_radius: u32,
    pub lbp_points: usize,
    pub hog_orientations: usize,
    /// Moments are exact on 8-bit values, which is what a 256-bin histogram holds.
    pub histogram_bins_per_channel: usize,
    pub texel_size: u32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            lbp_radius: 2,
            lbp_points: 16,
            hog_orientations: 24,
            histogram_bins_per_channel: 256,
            texel_size: 50,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lbp_radius == 0 || self.lbp_points != 8 * self.lbp_radius as usize {
            return Err(Error::InvalidParameter(format!(
                "lbp_points ({}) must equal 8 × lbp_radius ({})",
                self.lbp_points, self.lbp_radius
            )));
        }
        if self.hog_orientations == 0 || self.hog_orientations % 12 != 0 {
            return Err(Error::InvalidParameter(format!(
                "hog_orientations ({}) must be a positive multiple of 12",
                self.hog_orientations
            )));
        }
        if self.histogram_bins_per_channel != 256 {
            return Err(Error::InvalidParameter(
                "color histograms use 256 bins per 8-bit channel".into(),
            ));
        }
        Ok(())
    }

    pub fn lbp_bins(&self) -> usize {
        self.lbp_points / 2 + 4
    }

    pub fn dimension(&self) -> usize {
        COLOR_FEATURES + self.lbp_bins() + HOG_SUPERBINS
    }

    /// Column names of the full vector.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dimension());
        for ch in ["r", "g", "b"] {
            for m in ["mean", "std", "skew", "kurt"] {
                names.push(format!("{ch}_{m}"));
            }
        }
        for k in 0..=self.lbp_points / 2 {
            names.push(format!("lbp_u{k}"));
        }
        names.extend(["lbp_nu_low", "lbp_nu_mid", "lbp_nu_high"].map(String::from));
        names.extend(HogSuperbin::ALL.iter().map(|s| s.name().to_string()));
        names
    }
}

pub const COLOR_FEATURES: usize = 12;
pub const HOG_SUPERBINS: usize = 5;
pub const SIMPLIFIED_DIM: usize = 14;

pub const SIMPLIFIED_NAMES: [&str; SIMPLIFIED_DIM] = [
    "mean_r",
    "mean_g",
    "mean_b",
    "value_std",
    "value_skew",
    "value_kurt",
    "lbp_flat",
    "lbp_edge",
    "lbp_corner",
    "hog_vertical",
    "hog_horizontal",
    "hog_diagonal",
    "hog_regular_oblique",
    "hog_irregular_oblique",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degeneracy {
    /// Channels (R, G, B) with zero variance inside the texel.
    pub flat_channels: [bool; 3],
    pub zero_gradient: bool,
    pub all_zero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub norm_applied: bool,
    pub degeneracy: Degeneracy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedFeatureVector {
    pub values: [f64; SIMPLIFIED_DIM],
    pub norm_applied: bool,
    pub degeneracy: Degeneracy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorMoments {
    pub values: [f64; COLOR_FEATURES],
    pub flat_channels: [bool; 3],
}

pub fn color_moments(channels: &[RealPlane; 3]) -> ColorMoments {
    let mut values = [0.0; COLOR_FEATURES];
    let mut flat_channels = [false; 3];
    for (c, plane) in channels.iter().enumerate() {
        let m = stats::moments(plane.data());
        values[4 * c..4 * c + 4].copy_from_slice(&[m.mean, m.std, m.skewness, m.kurtosis]);
        flat_channels[c] = m.degenerate;
    }
    ColorMoments {
        values,
        flat_channels,
    }
}

/// Per-pattern LBP statistics of a texel's interior pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpCounts {
    pub points: usize,
    /// Patterns per ones-count `0..=P`.
    pub ones: Vec<u64>,
    /// Non-uniform patterns (more than two circular transitions) per ones-count.
    pub non_uniform: Vec<u64>,
}

impl LbpCounts {
    pub fn total(&self) -> u64 {
        self.ones.iter().sum()
    }

    fn folded(&self, k: usize) -> usize {
        k.min(self.points - k)
    }
}

/// Counts rotation-invariant LBP patterns on the Otsu-binarized texel.
pub fn lbp_counts(gray: &GrayImage, cfg: &FeatureConfig) -> Result<LbpCounts> {
    cfg.validate()?;
    let r = cfg.lbp_radius;
    let min = 2 * r + 1;
    if gray.width() < min || gray.height() < min {
        return Err(Error::TexelTooSmall {
            width: gray.width(),
            height: gray.height(),
            min,
        });
    }
    let (bin, _) = raster::binarize(gray);
    let plane: Vec<f64> = bin.data().iter().map(|&v| (v > 0) as u8 as f64).collect();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let p = cfg.lbp_points;
    let offsets = neighborhood::circle_offsets(p, r as f64);
    let mut ones = vec![0u64; p + 1];
    let mut non_uniform = vec![0u64; p + 1];
    let mut bits = Vec::with_capacity(p);
    let r = r as usize;
    for y in r..h - r {
        for x in r..w - r {
            neighborhood::pattern_bits(&plane, w, h, x, y, &offsets, &mut bits);
            let k = bits.iter().filter(|&&b| b).count();
            let transitions = (0..p).filter(|&i| bits[i] != bits[(i + 1) % p]).count();
            ones[k] += 1;
            if transitions > 2 {
                non_uniform[k] += 1;
            }
        }
    }
    Ok(LbpCounts {
        points: p,
        ones,
        non_uniform,
    })
}

/// Residue bin (0, 1, 2) of a folded key ≥ 2.
fn residue_bin(folded: usize, half: usize) -> usize {
    // keys 2..=half split into three contiguous runs, the last one absorbing the remainder
    let span = half - 1;
    let third = span / 3;
    ((folded - 2) / third.max(1)).min(2)
}

/// Reduced LBP histogram (`P/2 + 4` bins), L1-normalized.
pub fn lbp_histogram(gray: &GrayImage, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    let counts = lbp_counts(gray, cfg)?;
    Ok(reduce_lbp(&counts))
}

pub fn reduce_lbp(counts: &LbpCounts) -> Vec<f64> {
    let half = counts.points / 2;
    let mut bins = vec![0u64; half + 4];
    for k in 0..=counts.points {
        let f = counts.folded(k);
        let nu = counts.non_uniform[k];
        bins[f] += counts.ones[k] - nu;
        if nu > 0 {
            bins[half + 1 + residue_bin(f, half)] += nu;
        }
    }
    let total = counts.total() as f64;
    bins.into_iter().map(|b| b as f64 / total).collect()
}

/// Texture classes of a pattern by its folded ones-count `f` out of `P` points:
/// flat when `16·f ≤ P`, corner when `3P ≤ 16·f ≤ 5P`, edge when `16·f ≥ 7P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbpClass {
    Flat,
    Edge,
    Corner,
}

pub fn lbp_class(ones: usize, points: usize) -> Option<LbpClass> {
    let f = 16 * ones.min(points - ones);
    if f <= points {
        Some(LbpClass::Flat)
    } else if f >= 7 * points {
        Some(LbpClass::Edge)
    } else if f >= 3 * points && f <= 5 * points {
        Some(LbpClass::Corner)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbpSemantic {
    pub flat: f64,
    pub edge: f64,
    pub corner: f64,
    /// No interior pattern fell in any of the three groups.
    pub unclassified: bool,
}

impl LbpSemantic {
    pub fn as_array(&self) -> [f64; 3] {
        [self.flat, self.edge, self.corner]
    }
}

pub fn lbp_semantic(gray: &GrayImage, cfg: &FeatureConfig) -> Result<LbpSemantic> {
    Ok(semantic_from_counts(&lbp_counts(gray, cfg)?))
}

pub fn semantic_from_counts(counts: &LbpCounts) -> LbpSemantic {
    let mut acc = [0u64; 3];
    for (k, &n) in counts.ones.iter().enumerate() {
        match lbp_class(k, counts.points) {
            Some(LbpClass::Flat) => acc[0] += n,
            Some(LbpClass::Edge) => acc[1] += n,
            Some(LbpClass::Corner) => acc[2] += n,
            None => {}
        }
    }
    let total: u64 = acc.iter().sum();
    if total == 0 {
        return LbpSemantic {
            flat: 0.0,
            edge: 0.0,
            corner: 0.0,
            unclassified: true,
        };
    }
    let t = total as f64;
    LbpSemantic {
        flat: acc[0] as f64 / t,
        edge: acc[1] as f64 / t,
        corner: acc[2] as f64 / t,
        unclassified: false,
    }
}

/// Orientation groups over unsigned gradient angles in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HogSuperbin {
    /// Gradient angle 0: horizontal intensity change, i.e. vertical edges.
    Vertical,
    Horizontal,
    Diagonal,
    RegularOblique,
    IrregularOblique,
}

impl HogSuperbin {
    pub const ALL: [HogSuperbin; HOG_SUPERBINS] = [
        Self::Vertical,
        Self::Horizontal,
        Self::Diagonal,
        Self::RegularOblique,
        Self::IrregularOblique,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Vertical => "hog_vertical",
            Self::Horizontal => "hog_horizontal",
            Self::Diagonal => "hog_diagonal",
            Self::RegularOblique => "hog_regular_oblique",
            Self::IrregularOblique => "hog_irregular_oblique",
        }
    }

    /// Superbin of orientation bin `j` (center `j·π/n`) out of `n`.
    pub fn of_bin(j: usize, n: usize) -> Self {
        // compare j/n against fractions of a half-turn in integers
        let at = |num: usize, den: usize| j * den == num * n;
        if j == 0 {
            Self::Vertical
        } else if at(1, 2) {
            Self::Horizontal
        } else if at(1, 4) || at(3, 4) {
            Self::Diagonal
        } else if at(1, 6) || at(1, 3) || at(2, 3) || at(5, 6) {
            Self::RegularOblique
        } else {
            Self::IrregularOblique
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogFeatures {
    pub values: [f64; HOG_SUPERBINS],
    pub zero_gradient: bool,
}

/// Magnitude-weighted histogram of unsigned gradient orientations over the
/// whole texel (one cell), binned at `π/n` with bin `j` centered on `j·π/n`.
pub fn hog_orientation_histogram(gray: &GrayImage, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let (w, h) = (gray.width(), gray.height());
    if w < 3 || h < 3 {
        return Err(Error::TexelTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let n = cfg.hog_orientations;
    let step = std::f64::consts::PI / n as f64;
    let mut hist = vec![0.0; n];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = gray.get(x + 1, y) as f64 - gray.get(x - 1, y) as f64;
            let gy = gray.get(x, y + 1) as f64 - gray.get(x, y - 1) as f64;
            if gx == 0.0 && gy == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += std::f64::consts::PI;
            }
            let bin = ((theta / step + 0.5).floor() as usize) % n;
            hist[bin] += (gx * gx + gy * gy).sqrt();
        }
    }
    Ok(hist)
}

pub fn hog_superbins(gray: &GrayImage, cfg: &FeatureConfig) -> Result<HogFeatures> {
    let hist = hog_orientation_histogram(gray, cfg)?;
    let n = hist.len();
    let mut values = [0.0; HOG_SUPERBINS];
    for (j, m) in hist.into_iter().enumerate() {
        values[HogSuperbin::of_bin(j, n) as usize] += m;
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return Ok(HogFeatures {
            values,
            zero_gradient: true,
        });
    }
    Ok(HogFeatures {
        values: values.map(|v| v / total),
        zero_gradient: false,
    })
}

fn l1_normalize(values: &mut [f64]) -> bool {
    let norm: f64 = values.iter().map(|v| v.abs()).sum();
    if norm == 0.0 {
        return false;
    }
    for v in values.iter_mut() {
        *v /= norm;
    }
    true
}

/// Full descriptor of one texel.
///
/// `rgb` feeds the grayscale LBP and HOG descriptors; `channels` are the
/// texel's window of the map-level z-scored color planes and feed the color
/// moments.
pub fn feature_vector(
    rgb: &RgbImage,
    channels: &[RealPlane; 3],
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let gray = raster::to_grayscale(rgb);
    let color = color_moments(channels);
    let lbp = lbp_histogram(&gray, cfg)?;
    let hog = hog_superbins(&gray, cfg)?;

    let mut values = Vec::with_capacity(cfg.dimension());
    values.extend_from_slice(&color.values);
    values.extend_from_slice(&lbp);
    values.extend_from_slice(&hog.values);
    let norm_applied = l1_normalize(&mut values);
    Ok(FeatureVector {
        values,
        norm_applied,
        degeneracy: Degeneracy {
            flat_channels: color.flat_channels,
            zero_gradient: hog.zero_gradient,
            all_zero: !norm_applied,
        },
    })
}

/// Value plane of normalized channels, with the grayscale weights.
fn value_plane(channels: &[RealPlane; 3]) -> Vec<f64> {
    let [r, g, b] = channels;
    r.data()
        .iter()
        .zip(g.data())
        .zip(b.data())
        .map(|((r, g), b)| 0.299 * r + 0.587 * g + 0.114 * b)
        .collect()
}

/// Unnormalized 14-value descriptor.
pub fn simplified_raw(
    rgb: &RgbImage,
    channels: &[RealPlane; 3],
    cfg: &FeatureConfig,
) -> Result<([f64; SIMPLIFIED_DIM], Degeneracy)> {
    let gray = raster::to_grayscale(rgb);
    let value = stats::moments(&value_plane(channels));
    let counts = lbp_counts(&gray, cfg)?;
    let semantic = semantic_from_counts(&counts);
    let hog = hog_superbins(&gray, cfg)?;

    let mut v = [0.0; SIMPLIFIED_DIM];
    for (c, plane) in channels.iter().enumerate() {
        v[c] = stats::mean(plane.data());
    }
    v[3..6].copy_from_slice(&[value.std, value.skewness, value.kurtosis]);
    v[6..9].copy_from_slice(&semantic.as_array());
    v[9..14].copy_from_slice(&hog.values);
    Ok((
        v,
        Degeneracy {
            flat_channels: [value.degenerate; 3],
            zero_gradient: hog.zero_gradient,
            all_zero: false,
        },
    ))
}

pub fn simplify(
    rgb: &RgbImage,
    channels: &[RealPlane; 3],
    cfg: &FeatureConfig,
) -> Result<SimplifiedFeatureVector> {
    let (mut values, mut degeneracy) = simplified_raw(rgb, channels, cfg)?;
    let norm_applied = l1_normalize(&mut values);
    degeneracy.all_zero = !norm_applied;
    Ok(SimplifiedFeatureVector {
        values,
        norm_applied,
        degeneracy,
    })
}

fn texel_channels(planes: &[RealPlane; 3], t: &Texel) -> Result<[RealPlane; 3]> {
    let crop = |p: &RealPlane| p.crop(t.x, t.y, t.size, t.size);
    Ok([crop(&planes[0])?, crop(&planes[1])?, crop(&planes[2])?])
}

/// Descriptors of texels cut from `map`, in input order. Color moments use
/// the map's z-scored channels.
pub fn map_features(map: &RgbImage, texels: &[Texel], cfg: &FeatureConfig) -> Result<Vec<FeatureVector>> {
    cfg.validate()?;
    let planes = raster::normalize_channels(map);
    texels
        .par_iter()
        .map(|t| feature_vector(&t.pixels, &texel_channels(&planes, t)?, cfg))
        .collect()
}

pub fn map_simplified(
    map: &RgbImage,
    texels: &[Texel],
    cfg: &FeatureConfig,
) -> Result<Vec<SimplifiedFeatureVector>> {
    cfg.validate()?;
    let planes = raster::normalize_channels(map);
    texels
        .par_iter()
        .map(|t| simplify(&t.pixels, &texel_channels(&planes, t)?, cfg))
        .collect()
}
