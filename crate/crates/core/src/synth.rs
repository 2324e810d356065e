//! Procedural mini-corpus: small "city plans" with known class geometry and a
//! distinct texture per class, plus perturbed predictions for evaluation demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::corpus::{encode_label, ClassMap, MapRecord, Ontology, Region, UrbanForm};
use crate::error::Result;
use crate::raster::RgbImage;

pub const SYNTH_MAPS: usize = 3;
pub const SYNTH_SIZE: u32 = 500;

const FRAME: u8 = 0;
const ROAD: u8 = 1;
const BLOCKS: u8 = 2;
const WATER: u8 = 3;
const NON_BUILT: u8 = 4;

const FRAME_WIDTH: u32 = 40;

#[derive(Debug, Clone)]
pub struct SynthMap {
    pub record: MapRecord,
    pub image: RgbImage,
    pub label: ClassMap,
    /// The label with a few rectangular regions relabeled.
    pub prediction: ClassMap,
}

impl SynthMap {
    pub fn label_image(&self) -> RgbImage {
        encode_label(&self.label)
    }

    pub fn prediction_image(&self) -> RgbImage {
        encode_label(&self.prediction)
    }
}

struct Plan {
    river_y: f64,
    river_width: f64,
    river_amp: f64,
    plaza: (u32, u32, u32),
    park: (u32, u32, u32, u32),
    spacing: u32,
    street: u32,
    skew: f64,
}

impl Plan {
    fn class_at(&self, x: u32, y: u32, size: u32) -> u8 {
        if x < FRAME_WIDTH || y < FRAME_WIDTH || x >= size - FRAME_WIDTH || y >= size - FRAME_WIDTH {
            return FRAME;
        }
        let (fx, fy) = (x as f64, y as f64);
        let center = self.river_y + self.river_amp * (fx / 70.0).sin();
        if (fy - center).abs() < self.river_width / 2.0 {
            return WATER;
        }
        let (px, py, ps) = self.plaza;
        if x >= px && x < px + ps && y >= py && y < py + ps {
            return ROAD;
        }
        let (kx, ky, kw, kh) = self.park;
        if x >= kx && x < kx + kw && y >= ky && y < ky + kh {
            return NON_BUILT;
        }
        // street grid, sheared for irregular plans
        let u = (fx + self.skew * fy).rem_euclid(self.spacing as f64);
        let v = fy.rem_euclid(self.spacing as f64);
        if u < self.street as f64 || v < self.street as f64 {
            ROAD
        } else {
            BLOCKS
        }
    }
}

fn texture(class: u8, x: u32, y: u32, rng: &mut ChaCha12Rng) -> [u8; 3] {
    let (fx, fy) = (x as f64, y as f64);
    let base: [f64; 3] = match class {
        FRAME => {
            if (x / 4) % 3 == 0 {
                [110.0, 85.0, 55.0]
            } else {
                [60.0, 45.0, 30.0]
            }
        }
        ROAD => [248.0, 244.0, 232.0],
        BLOCKS => {
            if (x + y) % 7 < 2 {
                [150.0, 90.0, 80.0]
            } else {
                [225.0, 180.0, 170.0]
            }
        }
        WATER => {
            if (fy + 3.0 * (fx / 8.0).sin()).rem_euclid(9.0) < 2.0 {
                [70.0, 100.0, 160.0]
            } else {
                [120.0, 160.0, 200.0]
            }
        }
        _ => {
            if rng.gen_bool(0.08) {
                [90.0, 120.0, 60.0]
            } else {
                [190.0, 210.0, 160.0]
            }
        }
    };
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = (base[k] + rng.gen_range(-8.0..=8.0)).round().clamp(0.0, 255.0) as u8;
    }
    out
}

fn plan_for(index: usize, rng: &mut ChaCha12Rng) -> Plan {
    Plan {
        river_y: rng.gen_range(300.0..340.0),
        river_width: rng.gen_range(110.0..130.0),
        river_amp: rng.gen_range(4.0..12.0),
        plaza: (rng.gen_range(55..80), rng.gen_range(55..70), 150),
        park: (rng.gen_range(240..270), rng.gen_range(55..70), 170, 130),
        spacing: 90,
        street: 10,
        skew: [0.0, 0.35, 0.15][index % 3],
    }
}

fn perturb(label: &ClassMap, rng: &mut ChaCha12Rng) -> Result<ClassMap> {
    let (w, h) = (label.width(), label.height());
    let mut data = label.data().to_vec();
    let arity = label.ontology().arity() as u8;
    for _ in 0..6 {
        let (rw, rh) = (rng.gen_range(20..60), rng.gen_range(20..60));
        let (x0, y0) = (rng.gen_range(0..w - rw), rng.gen_range(0..h - rh));
        let class = rng.gen_range(0..arity);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                data[(y * w + x) as usize] = class;
            }
        }
    }
    ClassMap::new(w, h, data, label.ontology())
}

const CITIES: [(&str, &str, Region, UrbanForm, i32); SYNTH_MAPS] = [
    ("Gridville", "Nowhere", Region::NorthAmerica, UrbanForm::Regular, 1855),
    ("Shearbury", "Elsewhere", Region::WesternEurope, UrbanForm::Irregular, 1790),
    ("Rivermouth", "Someplace", Region::SouthAmerica, UrbanForm::Mixed, 1910),
];

/// Deterministic corpus of `SYNTH_MAPS` maps for `seed`.
pub fn generate(seed: u64) -> Result<Vec<SynthMap>> {
    (0..SYNTH_MAPS).map(|i| generate_map(seed, i)).collect()
}

pub fn generate_map(seed: u64, index: usize) -> Result<SynthMap> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(index as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"synthmap");
    let mut rng = ChaCha12Rng::from_seed(key);
    let plan = plan_for(index, &mut rng);
    let size = SYNTH_SIZE;
    let classes: Vec<u8> = (0..size * size).map(|i| plan.class_at(i % size, i / size, size)).collect();
    let label = ClassMap::new(size, size, classes, Ontology::FiveClass)?;
    let image = RgbImage::from_fn(size, size, |x, y| texture(label.get(x, y), x, y, &mut rng))?;
    let prediction = perturb(&label, &mut rng)?;
    let (city, country, region, form, year) = CITIES[index % SYNTH_MAPS];
    let id = format!("synth{:02}", index + 1);
    let record = MapRecord {
        title: format!("Plan of {city}"),
        year: Some(year),
        institution: "Synthetic Archive".into(),
        source_url: String::new(),
        city: city.into(),
        country: country.into(),
        publication_countries: vec![country.into()],
        region: Some(region),
        urban_form: Some(form),
        image_path: format!("maps/{id}.png").into(),
        label_path: Some(format!("labels/{id}.png").into()),
        extra: Default::default(),
        id,
    };
    Ok(SynthMap {
        record,
        image,
        label,
        prediction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assign_texel_class, texel_grid, DEFAULT_PURITY, DEFAULT_TEXEL_SIZE};

    #[test]
    fn deterministic_and_valid() {
        let a = generate(5).unwrap();
        let b = generate(5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.image, y.image);
            assert_eq!(x.label, y.label);
            assert_eq!(x.prediction, y.prediction);
            assert!(x.record.validate().is_ok());
        }
        assert_ne!(generate(6).unwrap()[0].image, a[0].image);
    }

    #[test]
    fn every_class_has_pure_texels() {
        for seed in 0..6 {
            let maps = generate(seed).unwrap();
            let mut pure = [0usize; 5];
            let mut total = 0;
            for m in &maps {
                for (x, y) in texel_grid(SYNTH_SIZE, SYNTH_SIZE, DEFAULT_TEXEL_SIZE, DEFAULT_TEXEL_SIZE).unwrap() {
                    total += 1;
                    let tile = m.label.crop(x, y, DEFAULT_TEXEL_SIZE, DEFAULT_TEXEL_SIZE).unwrap();
                    if let Some(c) = assign_texel_class(&tile, DEFAULT_PURITY).unwrap() {
                        pure[c as usize] += 1;
                    }
                }
            }
            assert!(total > 90);
            assert!(pure.iter().all(|&n| n >= 8), "seed {seed}: pure texels per class {pure:?}");
        }
    }
}
