//! File formats: PNG/JPEG rasters, JSON manifests, the feature store (CSV and
//! a binary sidecar), and CSV exports of correlation matrices and embeddings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageEncoder};
use serde::{Deserialize, Serialize};

use crate::analysis::{CorrelationMatrix, Embedding2D, GridLayout};
use crate::corpus::MapRecord;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn high_bytes(samples: &[u16]) -> Vec<u8> {
    samples.iter().map(|v| (v >> 8) as u8).collect()
}

/// Decodes a PNG or JPEG; alpha is dropped and 16-bit samples keep their high byte.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    let img = image::load_from_memory(bytes)?;
    let (w, h) = (img.width(), img.height());
    let rgb: Vec<u8> = match img {
        DynamicImage::ImageRgb16(buf) => high_bytes(buf.as_raw()),
        DynamicImage::ImageRgba16(buf) => buf.as_raw().chunks_exact(4).flat_map(|p| high_bytes(&p[..3])).collect(),
        DynamicImage::ImageLuma16(buf) => buf.as_raw().iter().flat_map(|&v| [(v >> 8) as u8; 3]).collect(),
        DynamicImage::ImageLumaA16(buf) => buf.as_raw().chunks_exact(2).flat_map(|p| [(p[0] >> 8) as u8; 3]).collect(),
        other => other.into_rgb8().into_raw(),
    };
    RgbImage::new(w, h, rgb)
}

pub fn load_image(path: &Path) -> Result<RgbImage> {
    decode_image(&read_bytes(path)?)
}

/// Non-interlaced 8-bit RGB PNG.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out).write_image(
        img.data(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(out)
}

pub fn save_png(path: &Path, img: &RgbImage) -> Result<()> {
    write_bytes(path, &encode_png(img)?)
}

/// Parses and validates a JSON array of map records.
pub fn parse_manifest(bytes: &[u8]) -> Result<Vec<MapRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::malformed("manifest", e.to_string()))?;
    let records: Vec<MapRecord> = serde_json::from_str(text).map_err(|e| Error::malformed("manifest", e.to_string()))?;
    let mut ids = std::collections::BTreeSet::new();
    for r in &records {
        r.validate()?;
        if !ids.insert(r.id.as_str()) {
            return Err(Error::malformed("manifest", format!("duplicate map id `{}`", r.id)));
        }
    }
    Ok(records)
}

pub fn load_manifest(path: &Path) -> Result<Vec<MapRecord>> {
    parse_manifest(&read_bytes(path)?)
}

pub fn manifest_json(records: &[MapRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)? + "\n")
}

/// `path` relative to the directory holding the manifest, unless absolute.
pub fn resolve(manifest: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        manifest.parent().unwrap_or_else(|| Path::new("")).join(path)
    }
}

/// One texel of the feature store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub map_id: String,
    pub x: u32,
    pub y: u32,
    /// Class name when the texel passed the purity threshold.
    pub class: Option<String>,
    pub values: Vec<f64>,
}

pub fn feature_column(i: usize) -> String {
    format!("f{i:02}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::malformed("csv", e.to_string()))
}

pub fn feature_csv(records: &[FeatureRecord]) -> Result<Vec<u8>> {
    let dim = records.first().map_or(0, |r| r.values.len());
    let mut w = csv_writer();
    let mut header = vec!["map_id".to_string(), "x".into(), "y".into(), "class".into()];
    header.extend((0..dim).map(feature_column));
    w.write_record(&header)?;
    for r in records {
        if r.values.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "texel {}@{},{} has {} features, expected {dim}",
                r.map_id,
                r.x,
                r.y,
                r.values.len()
            )));
        }
        let mut row = vec![r.map_id.clone(), r.x.to_string(), r.y.to_string(), r.class.clone().unwrap_or_default()];
        row.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn parse_feature_csv(bytes: &[u8]) -> Result<Vec<FeatureRecord>> {
    let bad = |detail: String| Error::malformed("feature csv", detail);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = rdr.headers()?.clone();
    let fixed = ["map_id", "x", "y", "class"];
    if header.len() < fixed.len() || header.iter().zip(fixed).any(|(h, f)| h != f) {
        return Err(bad("header must start with map_id,x,y,class".into()));
    }
    let dim = header.len() - fixed.len();
    for (i, h) in header.iter().skip(fixed.len()).enumerate() {
        if h != feature_column(i) {
            return Err(bad(format!("column {} is `{h}`, expected `{}`", i + 4, feature_column(i))));
        }
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != dim + 4 {
            return Err(bad(format!("record {} has {} fields", line + 1, rec.len())));
        }
        let int = |s: &str| s.parse::<u32>().map_err(|e| bad(format!("record {}: {e}", line + 1)));
        let values = rec
            .iter()
            .skip(4)
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(format!("record {}: bad value `{s}`", line + 1))),
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(FeatureRecord {
            map_id: rec[0].to_string(),
            x: int(&rec[1])?,
            y: int(&rec[2])?,
            class: Some(rec[3].to_string()).filter(|c| !c.is_empty()),
            values,
        });
    }
    Ok(out)
}

pub const FEATURE_BINARY_MAGIC: &[u8; 4] = b"FGKF";
pub const FEATURE_BINARY_VERSION: u16 = 1;

/// Little-endian sidecar: magic, version u16, dim u16, count u64, then per
/// record map_id (u32 length + UTF-8), x u32, y u32, class (u8 flag, u32
/// length + UTF-8 when present) and `dim` f64 values.
pub fn encode_feature_binary(records: &[FeatureRecord]) -> Result<Vec<u8>> {
    let dim = records.first().map_or(0, |r| r.values.len());
    if dim > u16::MAX as usize {
        return Err(Error::InvalidParameter(format!("{dim} features exceed the sidecar limit")));
    }
    let mut out = Vec::new();
    out.extend_from_slice(FEATURE_BINARY_MAGIC);
    out.extend_from_slice(&FEATURE_BINARY_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u16).to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    let put_str = |out: &mut Vec<u8>, s: &str| {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    };
    for r in records {
        if r.values.len() != dim {
            return Err(Error::ShapeMismatch(format!("texel {} has {} features, expected {dim}", r.map_id, r.values.len())));
        }
        put_str(&mut out, &r.map_id);
        out.extend_from_slice(&r.x.to_le_bytes());
        out.extend_from_slice(&r.y.to_le_bytes());
        match &r.class {
            Some(c) => {
                out.push(1);
                put_str(&mut out, c);
            }
            None => out.push(0),
        }
        for v in &r.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::malformed("feature sidecar", format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn string(&mut self) -> Result<String> {
        let len = u32::from_le_bytes(self.array()?) as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|e| Error::malformed("feature sidecar", e.to_string()))
    }
}

pub fn decode_feature_binary(bytes: &[u8]) -> Result<Vec<FeatureRecord>> {
    let bad = |d: String| Error::malformed("feature sidecar", d);
    let mut c = Cursor { bytes, pos: 0 };
    if &c.array::<4>()? != FEATURE_BINARY_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u16::from_le_bytes(c.array()?);
    if version != FEATURE_BINARY_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dim = u16::from_le_bytes(c.array()?) as usize;
    let count = u64::from_le_bytes(c.array()?);
    // every record needs at least 13 header bytes plus its values
    let min_record = 13 + 8 * dim as u64;
    if count.saturating_mul(min_record) > (bytes.len() - c.pos) as u64 {
        return Err(bad(format!("{count} records cannot fit in {} bytes", bytes.len())));
    }
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let map_id = c.string()?;
        let x = u32::from_le_bytes(c.array()?);
        let y = u32::from_le_bytes(c.array()?);
        let class = match c.array::<1>()?[0] {
            0 => None,
            1 => Some(c.string()?),
            f => return Err(bad(format!("bad class flag {f}"))),
        };
        let values = (0..dim)
            .map(|_| {
                let v = f64::from_le_bytes(c.array()?);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad("non-finite feature value".into()))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(FeatureRecord { map_id, x, y, class, values });
    }
    if c.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn matrix_csv(labels: &[String], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in labels.iter().zip(rows) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    finish(w)
}

fn corr_labels(m: &CorrelationMatrix) -> Vec<String> {
    m.labels.iter().map(|l| format!("{}/{}", l.corpus, l.class)).collect()
}

/// Pearson r with `corpus/class` row and column labels.
pub fn correlation_csv(m: &CorrelationMatrix) -> Result<Vec<u8>> {
    matrix_csv(&corr_labels(m), &m.r)
}

pub fn pvalue_csv(m: &CorrelationMatrix) -> Result<Vec<u8>> {
    matrix_csv(&corr_labels(m), &m.p)
}

/// `map_id,x,y,row,col` with embedding coordinates and grid cells, one line per texel.
pub fn embedding_csv(map_ids: &[String], emb: &Embedding2D, layout: &GridLayout) -> Result<Vec<u8>> {
    let n = emb.coords.len();
    if map_ids.len() != n || layout.assignment.len() != n {
        return Err(Error::LayoutMismatch {
            layout: layout.assignment.len(),
            texels: map_ids.len(),
        });
    }
    let mut w = csv_writer();
    w.write_record(["map_id", "x", "y", "row", "col"])?;
    for i in 0..n {
        let (r, c) = layout.assignment[i];
        w.write_record([
            map_ids[i].clone(),
            emb.coords[i][0].to_string(),
            emb.coords[i][1].to_string(),
            r.to_string(),
            c.to_string(),
        ])?;
    }
    finish(w)
}

/// Two-column CSV of per-patch mIoU.
pub fn miou_csv(rows: &[(String, f64)]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(["patch_id", "miou"])?;
    for (id, v) in rows {
        w.write_record([id.clone(), v.to_string()])?;
    }
    finish(w)
}

/// Plain-text table of class proportions, one `name,fraction` per line.
pub fn proportions_csv(names: &[&str], fractions: &[f64]) -> String {
    let mut s = String::from("class,fraction\n");
    for (n, f) in names.iter().zip(fractions) {
        let _ = writeln!(s, "{n},{f}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::SignatureLabel;

    fn records() -> Vec<FeatureRecord> {
        vec![
            FeatureRecord {
                map_id: "paris,1850".into(),
                x: 0,
                y: 50,
                class: Some("water".into()),
                values: vec![0.1, -2.5e-17, 1.0 / 3.0],
            },
            FeatureRecord {
                map_id: "m\"2".into(),
                x: 100,
                y: 0,
                class: None,
                values: vec![0.0, 1e300, -7.25],
            },
        ]
    }

    #[test]
    fn feature_csv_round_trip() {
        let recs = records();
        let bytes = feature_csv(&recs).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("map_id,x,y,class,f00,f01,f02\n"));
        assert!(text.contains(",,0,"), "unassigned class is empty: {text}");
        assert_eq!(parse_feature_csv(&bytes).unwrap(), recs);
    }

    #[test]
    fn feature_csv_rejects_bad_input() {
        assert!(parse_feature_csv(b"map,x,y,class\n").is_err());
        assert!(parse_feature_csv(b"map_id,x,y,class,f01\n").is_err());
        assert!(parse_feature_csv(b"map_id,x,y,class,f00\nm,1,2,,nan\n").is_err());
        assert!(parse_feature_csv(b"map_id,x,y,class,f00\nm,-1,2,,0\n").is_err());
    }

    #[test]
    fn binary_round_trip_and_truncation() {
        let recs = records();
        let bytes = encode_feature_binary(&recs).unwrap();
        assert_eq!(&bytes[..4], FEATURE_BINARY_MAGIC);
        assert_eq!(decode_feature_binary(&bytes).unwrap(), recs);
        for cut in 0..bytes.len() {
            assert!(decode_feature_binary(&bytes[..cut]).is_err());
        }
        let mut huge = bytes[..8].to_vec();
        huge.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_feature_binary(&huge).is_err());
    }

    #[test]
    fn png_round_trip() {
        let img = RgbImage::from_fn(7, 5, |x, y| [x as u8 * 30, y as u8 * 40, 200]).unwrap();
        let bytes = encode_png(&img).unwrap();
        assert_eq!(decode_image(&bytes).unwrap(), img);
        assert_eq!(encode_png(&img).unwrap(), bytes);
    }

    #[test]
    fn sixteen_bit_keeps_high_byte() {
        let buf: image::ImageBuffer<image::Rgb<u16>, Vec<u16>> =
            image::ImageBuffer::from_fn(2, 1, |x, _| image::Rgb([0x12ff + x as u16, 0x8001, 0x00ff]));
        let mut bytes = Vec::new();
        DynamicImage::ImageRgb16(buf)
            .write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
            .unwrap();
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.pixel(0, 0), [0x12, 0x80, 0x00]);
        assert_eq!(img.pixel(1, 0), [0x13, 0x80, 0x00]);
    }

    #[test]
    fn manifest_checks() {
        let ok = br#"[{"id":"a","image_path":"a.png"},{"id":"b","image_path":"b.png","year":1900}]"#;
        let recs = parse_manifest(ok).unwrap();
        assert_eq!(recs.len(), 2);
        let dup = br#"[{"id":"a","image_path":"a.png"},{"id":"a","image_path":"b.png"}]"#;
        assert!(matches!(parse_manifest(dup), Err(Error::Malformed { .. })));
        assert!(parse_manifest(br#"{"id":"a"}"#).is_err());
        assert!(parse_manifest(br#"[{"id":"a","image_path":"a.png","year":1600}]"#).is_err());
        assert!(parse_manifest(&[0xff, 0xfe]).is_err());
        assert_eq!(
            resolve(Path::new("data/manifest.json"), Path::new("maps/a.png")),
            PathBuf::from("data/maps/a.png")
        );
    }

    #[test]
    fn correlation_and_embedding_csv() {
        let m = CorrelationMatrix {
            labels: vec![
                SignatureLabel { corpus: "w".into(), class: "water".into() },
                SignatureLabel { corpus: "w".into(), class: "blocks".into() },
            ],
            r: vec![vec![1.0, 0.81], vec![0.81, 1.0]],
            p: vec![vec![0.0, 0.01], vec![0.01, 0.0]],
        };
        let text = String::from_utf8(correlation_csv(&m).unwrap()).unwrap();
        assert_eq!(text, ",w/water,w/blocks\nw/water,1,0.81\nw/blocks,0.81,1\n");
        let emb = Embedding2D {
            coords: vec![[0.5, -1.0]],
            perplexity: 30.0,
            seed: 0,
            iterations: 1,
        };
        let layout = GridLayout { rows: 1, cols: 1, assignment: vec![(0, 0)], cost: 0.0 };
        let text = String::from_utf8(embedding_csv(&["m".into()], &emb, &layout).unwrap()).unwrap();
        assert_eq!(text, "map_id,x,y,row,col\nm,0.5,-1,0,0\n");
    }
}
