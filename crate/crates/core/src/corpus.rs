//! Map manifests, the label ontologies, label-raster decoding and texel cutting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RgbImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    SubSaharanAfrica,
    NorthAfrica,
    EasternEuropeCentralAsia,
    SouthAmerica,
    WesternEurope,
    NorthAmerica,
    SouthAsia,
    MiddleEast,
    EastAsia,
    Oceania,
    CentralAmerica,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrbanForm {
    Regular,
    Irregular,
    Mixed,
}

pub const YEAR_RANGE: std::ops::RangeInclusive<i32> = 1700..=1994;

/// One map of a corpus manifest. Fields not listed here survive a
/// load/save round trip through `extra`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub institution: String,
    #[serde(default)]
    pub source_url: String,
    #[serde(default)]
    pub city: String,
    #[serde(default)]
    pub country: String,
    #[serde(default)]
    pub publication_countries: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urban_form: Option<UrbanForm>,
    pub image_path: std::path::PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_path: Option<std::path::PathBuf>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl MapRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::malformed("manifest", "map record with empty id"));
        }
        if let Some(year) = self.year {
            if !YEAR_RANGE.contains(&year) {
                return Err(Error::malformed(
                    "manifest",
                    format!("map `{}`: year {year} outside {YEAR_RANGE:?}", self.id),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassDef {
    pub name: &'static str,
    pub color: [u8; 3],
}

const FIVE: [ClassDef; 5] = [
    ClassDef { name: "frame", color: [0, 0, 0] },
    ClassDef { name: "road_network", color: [255, 255, 255] },
    ClassDef { name: "blocks", color: [255, 0, 255] },
    ClassDef { name: "water", color: [0, 0, 255] },
    ClassDef { name: "non_built", color: [0, 255, 255] },
];

const THREE: [ClassDef; 3] = [
    ClassDef { name: "frame", color: [0, 0, 0] },
    ClassDef { name: "road_network", color: [255, 255, 255] },
    ClassDef { name: "map_content", color: [255, 0, 255] },
];

/// The two label ontologies. Class indices follow the listed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ontology {
    #[serde(rename = "3")]
    ThreeClass,
    #[serde(rename = "5")]
    FiveClass,
}

impl Ontology {
    pub fn from_arity(arity: usize) -> Result<Self> {
        match arity {
            3 => Ok(Self::ThreeClass),
            5 => Ok(Self::FiveClass),
            n => Err(Error::InvalidParameter(format!("ontology arity must be 3 or 5, got {n}"))),
        }
    }

    pub fn classes(self) -> &'static [ClassDef] {
        match self {
            Self::ThreeClass => &THREE,
            Self::FiveClass => &FIVE,
        }
    }

    pub fn arity(self) -> usize {
        self.classes().len()
    }

    pub fn name(self, class: u8) -> &'static str {
        self.classes()[class as usize].name
    }

    pub fn index_of(self, name: &str) -> Option<u8> {
        self.classes().iter().position(|c| c.name == name).map(|i| i as u8)
    }

    /// Nearest class color by Euclidean RGB distance; ties go to the lower index.
    pub fn nearest(self, rgb: [u8; 3]) -> (u8, f64) {
        let mut best = (0u8, f64::INFINITY);
        for (i, c) in self.classes().iter().enumerate() {
            let d2: i32 = (0..3)
                .map(|k| {
                    let d = rgb[k] as i32 - c.color[k] as i32;
                    d * d
                })
                .sum();
            let d = (d2 as f64).sqrt();
            if d < best.1 {
                best = (i as u8, d);
            }
        }
        best
    }
}

pub const DEFAULT_DECODE_TOLERANCE: f64 = 48.0;

/// Per-pixel class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    width: u32,
    height: u32,
    data: Vec<u8>,
    ontology: Ontology,
}

impl ClassMap {
    pub fn new(width: u32, height: u32, data: Vec<u8>, ontology: Ontology) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "class map has {} pixels, expected {}",
                data.len(),
                width as usize * height as usize
            )));
        }
        if let Some(&bad) = data.iter().find(|&&c| c as usize >= ontology.arity()) {
            return Err(Error::InvalidParameter(format!(
                "class index {bad} outside {}-class ontology",
                ontology.arity()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
            ontology,
        })
    }

    pub fn filled(width: u32, height: u32, class: u8, ontology: Ontology) -> Result<Self> {
        Self::new(width, height, vec![class; width as usize * height as usize], ontology)
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

    pub fn ontology(&self) -> Ontology {
        self.ontology
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
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
            ontology: self.ontology,
        })
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.ontology.arity()];
        for &c in &self.data {
            counts[c as usize] += 1;
        }
        counts
    }
}

pub fn decode_label(label: &RgbImage, ont: Ontology, tolerance: f64) -> Result<ClassMap> {
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative decode tolerance {tolerance}")));
    }
    let w = label.width();
    let mut data = Vec::with_capacity(label.data().len() / 3);
    // labels are mostly flat areas, so cache the last color
    let mut last: Option<([u8; 3], u8)> = None;
    for (i, rgb) in label.pixels().enumerate() {
        let class = match last {
            Some((c, k)) if c == rgb => k,
            _ => {
                let (k, d) = ont.nearest(rgb);
                if d > tolerance {
                    return Err(Error::UnknownColor {
                        x: i as u32 % w,
                        y: i as u32 / w,
                        rgb,
                    });
                }
                last = Some((rgb, k));
                k
            }
        };
        data.push(class);
    }
    ClassMap::new(w, label.height(), data, ont)
}

/// Paints each class with its anchor color.
pub fn encode_label(map: &ClassMap) -> RgbImage {
    let classes = map.ontology.classes();
    let data = map
        .data
        .iter()
        .flat_map(|&c| classes[c as usize].color)
        .collect();
    RgbImage::new(map.width, map.height, data).expect("dimensions come from a valid class map")
}

/// Merges blocks, water and non-built into a single map-content class.
pub fn collapse_to_3(map5: &ClassMap) -> Result<ClassMap> {
    if map5.ontology != Ontology::FiveClass {
        return Err(Error::WrongArity {
            expected: 5,
            got: map5.ontology.arity(),
        });
    }
    let data = map5.data.iter().map(|&c| c.min(2)).collect();
    ClassMap::new(map5.width, map5.height, data, Ontology::ThreeClass)
}

pub const DEFAULT_TEXEL_SIZE: u32 = 50;
pub const MIN_TEXEL_SIZE: u32 = 8;
pub const DEFAULT_PURITY: f64 = 0.75;

/// A square tile cut from a map.
#[derive(Debug, Clone)]
pub struct Texel {
    pub map_id: String,
    pub x: u32,
    pub y: u32,
    pub size: u32,
    pub pixels: RgbImage,
    pub label: Option<ClassMap>,
    pub assigned_class: Option<u8>,
}

/// Texel origins of a regular grid anchored at (0, 0); tiles crossing the
/// right or bottom edge are dropped.
pub fn texel_grid(width: u32, height: u32, size: u32, stride: u32) -> Result<Vec<(u32, u32)>> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    if size < MIN_TEXEL_SIZE {
        return Err(Error::InvalidParameter(format!(
            "texel size {size} below minimum {MIN_TEXEL_SIZE}"
        )));
    }
    if size > width.min(height) {
        return Err(Error::ImageTooSmall { width, height, size });
    }
    let nx = (width - size) / stride + 1;
    let ny = (height - size) / stride + 1;
    Ok((0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i * stride, j * stride)))
        .collect())
}

pub fn extract_texels(
    map_id: &str,
    img: &RgbImage,
    label: Option<&ClassMap>,
    size: u32,
    stride: u32,
) -> Result<Vec<Texel>> {
    if let Some(l) = label {
        if l.width() != img.width() || l.height() != img.height() {
            return Err(Error::ShapeMismatch(format!(
                "label {}x{} vs image {}x{}",
                l.width(),
                l.height(),
                img.width(),
                img.height()
            )));
        }
    }
    texel_grid(img.width(), img.height(), size, stride)?
        .into_iter()
        .map(|(x, y)| {
            Ok(Texel {
                map_id: map_id.to_string(),
                x,
                y,
                size,
                pixels: img.crop(x, y, size, size)?,
                label: label.map(|l| l.crop(x, y, size, size)).transpose()?,
                assigned_class: None,
            })
        })
        .collect()
}

/// The class covering at least `threshold` of the tile, if any.
pub fn assign_texel_class(tile: &ClassMap, threshold: f64) -> Result<Option<u8>> {
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "purity threshold {threshold} outside (0.5, 1]"
        )));
    }
    let n = tile.data.len() as f64;
    let required = (threshold * n - 1e-9).ceil() as u64;
    Ok(tile
        .class_counts()
        .into_iter()
        .enumerate()
        .find(|&(_, count)| count >= required)
        .map(|(c, _)| c as u8))
}

/// Fills `assigned_class` on every texel that carries a label tile.
pub fn assign_classes(texels: &mut [Texel], threshold: f64) -> Result<()> {
    for t in texels {
        t.assigned_class = match &t.label {
            Some(tile) => assign_texel_class(tile, threshold)?,
            None => None,
        };
    }
    Ok(())
}

/// Class fractions pooled over every pixel of every map.
pub fn area_proportions(maps: &[ClassMap]) -> Result<Vec<f64>> {
    let first = maps.first().ok_or_else(|| Error::Empty("no class maps".into()))?;
    let ont = first.ontology;
    let mut counts = vec![0u64; ont.arity()];
    for m in maps {
        if m.ontology != ont {
            return Err(Error::MixedOntologies);
        }
        for (acc, c) in counts.iter_mut().zip(m.class_counts()) {
            *acc += c;
        }
    }
    let total: u64 = counts.iter().sum();
    Ok(counts.into_iter().map(|c| c as f64 / total as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FRAME: u8 = 0;
    const ROAD: u8 = 1;
    const BLOCKS: u8 = 2;
    const WATER: u8 = 3;
    const NON_BUILT: u8 = 4;

    fn label_of(pixels: &[[u8; 3]]) -> RgbImage {
        RgbImage::new(pixels.len() as u32, 1, pixels.concat()).unwrap()
    }

    #[test]
    fn decode_anchor_colors() {
        let img = label_of(&[[255, 0, 255], [0, 0, 0], [10, 10, 10], [0, 0, 255], [0, 255, 255]]);
        let m = decode_label(&img, Ontology::FiveClass, 32.0).unwrap();
        assert_eq!(m.data(), &[BLOCKS, FRAME, FRAME, WATER, NON_BUILT]);
    }

    #[test]
    fn decode_nearest_matches_brute_force() {
        // (10,10,10): distances to the five anchors
        let p = [10i32, 10, 10];
        let d: Vec<f64> = FIVE
            .iter()
            .map(|c| {
                (0..3)
                    .map(|k| ((p[k] - c.color[k] as i32) as f64).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let argmin = (0..5).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert_eq!(argmin, FRAME as usize);
        assert!(d[argmin] <= 32.0);
    }

    #[test]
    fn decode_rejects_far_colors() {
        let img = label_of(&[[0, 0, 0], [128, 128, 0]]);
        match decode_label(&img, Ontology::FiveClass, 48.0) {
            Err(Error::UnknownColor { x, y, rgb }) => {
                assert_eq!((x, y, rgb), (1, 0, [128, 128, 0]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collapse_examples() {
        let water = ClassMap::filled(4, 4, WATER, Ontology::FiveClass).unwrap();
        let c = collapse_to_3(&water).unwrap();
        assert!(c.data().iter().all(|&k| k == 2));
        assert_eq!(c.ontology(), Ontology::ThreeClass);

        let mixed = ClassMap::new(
            5,
            2,
            vec![FRAME, ROAD, BLOCKS, WATER, NON_BUILT, FRAME, FRAME, ROAD, WATER, WATER],
            Ontology::FiveClass,
        )
        .unwrap();
        let p5 = area_proportions(std::slice::from_ref(&mixed)).unwrap();
        let p3 = area_proportions(&[collapse_to_3(&mixed).unwrap()]).unwrap();
        assert_eq!(p3[0], p5[0]);
        assert_eq!(p3[1], p5[1]);
        assert!((p3[2] - (p5[2] + p5[3] + p5[4])).abs() < 1e-12);
        assert!(matches!(collapse_to_3(&c), Err(Error::WrongArity { .. })));
    }

    #[test]
    fn grid_arithmetic() {
        assert_eq!(texel_grid(1000, 1000, 50, 50).unwrap().len(), 400);
        assert_eq!(texel_grid(1000, 1000, 50, 25).unwrap().len(), 39 * 39);
        assert!(matches!(
            texel_grid(49, 49, 50, 50),
            Err(Error::ImageTooSmall { .. })
        ));
        let img = RgbImage::filled(120, 60, [1, 2, 3]).unwrap();
        let t = extract_texels("m", &img, None, 50, 50).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!((t[1].x, t[1].y), (50, 0));
        assert_eq!(t[0].pixels.width(), 50);
    }

    #[test]
    fn purity_threshold() {
        let water = ClassMap::filled(50, 50, WATER, Ontology::FiveClass).unwrap();
        assert_eq!(assign_texel_class(&water, 0.75).unwrap(), Some(WATER));

        // 74% blocks / 26% road
        let mut data = vec![BLOCKS; 1850];
        data.extend(vec![ROAD; 650]);
        let tile = ClassMap::new(50, 50, data, Ontology::FiveClass).unwrap();
        assert_eq!(assign_texel_class(&tile, 0.75).unwrap(), None);

        // exactly 1875 of 2500 pixels
        let mut data = vec![FRAME; 1875];
        data.extend(vec![WATER; 625]);
        let tile = ClassMap::new(50, 50, data, Ontology::FiveClass).unwrap();
        assert_eq!(assign_texel_class(&tile, 0.75).unwrap(), Some(FRAME));

        // 7 of 10 at 0.7 must not be pushed up by 0.7·10 = 7.000000000000001
        let mut data = vec![FRAME; 7];
        data.extend(vec![WATER; 3]);
        let tile = ClassMap::new(10, 1, data, Ontology::FiveClass).unwrap();
        assert_eq!(assign_texel_class(&tile, 0.7).unwrap(), Some(FRAME));

        assert!(assign_texel_class(&tile, 0.5).is_err());
    }

    #[test]
    fn proportions_examples() {
        let frame = ClassMap::filled(3, 3, FRAME, Ontology::FiveClass).unwrap();
        assert_eq!(area_proportions(&[frame]).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);

        let a = ClassMap::filled(3, 3, WATER, Ontology::FiveClass).unwrap();
        let b = ClassMap::filled(3, 3, BLOCKS, Ontology::FiveClass).unwrap();
        assert_eq!(area_proportions(&[a.clone(), b]).unwrap(), vec![0.0, 0.0, 0.5, 0.5, 0.0]);

        let c = ClassMap::filled(3, 3, 0, Ontology::ThreeClass).unwrap();
        assert!(matches!(area_proportions(&[a, c]), Err(Error::MixedOntologies)));
        assert!(area_proportions(&[]).is_err());
    }

    #[test]
    fn manifest_round_trip_keeps_unknown_fields() {
        let json = r#"[{"id":"m1","title":"Plan","year":1850,"institution":"BnF","source_url":"u",
            "city":"Paris","country":"France","publication_countries":["France"],
            "region":"western_europe","urban_form":"mixed","image_path":"a.png",
            "label_path":"a_label.png","scan_dpi":400}]"#;
        let recs: Vec<MapRecord> = serde_json::from_str(json).unwrap();
        assert_eq!(recs[0].extra["scan_dpi"], 400);
        assert_eq!(recs[0].region, Some(Region::WesternEurope));
        let back = serde_json::to_string(&recs).unwrap();
        let again: Vec<MapRecord> = serde_json::from_str(&back).unwrap();
        assert_eq!(recs, again);
        assert!(recs[0].validate().is_ok());
    }

    fn class_map_strategy() -> impl Strategy<Value = ClassMap> {
        (1u32..12, 1u32..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u8..5, (w * h) as usize)
                .prop_map(move |d| ClassMap::new(w, h, d, Ontology::FiveClass).unwrap())
        })
    }

    proptest! {
        #[test]
        fn decode_encode_is_a_fixpoint(
            px in proptest::collection::vec(any::<[u8; 3]>(), 1..64),
        ) {
            let img = RgbImage::new(px.len() as u32, 1, px.concat()).unwrap();
            let first = decode_label(&img, Ontology::FiveClass, 500.0).unwrap();
            let again = decode_label(&encode_label(&first), Ontology::FiveClass, 0.0).unwrap();
            prop_assert_eq!(first, again);
        }

        #[test]
        fn proportions_sum_to_one(maps in proptest::collection::vec(class_map_strategy(), 1..4)) {
            let p = area_proportions(&maps).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn assigned_class_has_enough_pixels(m in class_map_strategy(), thr in 0.51f64..=1.0) {
            if let Some(c) = assign_texel_class(&m, thr).unwrap() {
                let count = m.data().iter().filter(|&&k| k == c).count() as f64;
                prop_assert!(count >= (thr * m.data().len() as f64 - 1e-9).ceil());
            }
        }

        #[test]
        fn texels_tile_the_cropped_grid(w in 8u32..80, h in 8u32..80, size in 8u32..20, extra in 0u32..5) {
            prop_assume!(size <= w.min(h));
            let stride = size + extra;
            let grid = texel_grid(w, h, size, stride).unwrap();
            let mut cover = vec![0u8; (w * h) as usize];
            for &(x, y) in &grid {
                prop_assert!(x + size <= w && y + size <= h);
                for yy in y..y + size {
                    for xx in x..x + size {
                        cover[(yy * w + xx) as usize] += 1;
                    }
                }
            }
            prop_assert!(cover.iter().all(|&c| c <= 1));
            if extra == 0 {
                let nx = (w - size) / stride + 1;
                let ny = (h - size) / stride + 1;
                for yy in 0..h {
                    for xx in 0..w {
                        let inside = xx < nx * size && yy < ny * size;
                        prop_assert_eq!(cover[(yy * w + xx) as usize] == 1, inside);
                    }
                }
            }
        }
    }
}
