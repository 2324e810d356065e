use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use figkit::analysis::{self, SignatureLabel, TsneConfig};
use figkit::corpus::{self, ClassMap, MapRecord, Ontology, Texel};
use figkit::features::{self, FeatureConfig, SIMPLIFIED_NAMES};
use figkit::io::{self, FeatureRecord};
use figkit::kappa::{self, FeatureSampleSet, KappaReport, MIN_SAMPLES};
use figkit::raster::{self, RgbImage};
use figkit::segeval::{self, Extrapolation, FitOptions, PatchResult};
use figkit::{synth, viz};

use crate::artifacts::{file_name, Artifacts, Meta};
use crate::error::{CliError, CliResult};
use crate::{
    AblateArgs, CorrelateArgs, EmbedArgs, ExtractArgs, ExtrapolateArgs, FeaturesArgs, GroupBy, KappaArgs,
    KurtographArgs, ProportionsArgs, SegevalArgs, SynthArgs, TexelArgs,
};

/// Independent seed for one named pipeline stage.
fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    for (k, b) in key[8..].iter_mut().zip(stage.bytes()) {
        *k = b;
    }
    ChaCha12Rng::from_seed(key).next_u64()
}

struct LoadedMap {
    record: MapRecord,
    image: RgbImage,
    label: Option<ClassMap>,
}

/// Decodes a label raster in either ontology and converts it to `target`.
fn decode_label_as(img: &RgbImage, target: Ontology) -> figkit::Result<ClassMap> {
    let tol = corpus::DEFAULT_DECODE_TOLERANCE;
    let map = match corpus::decode_label(img, Ontology::FiveClass, tol) {
        Ok(m) => m,
        Err(figkit::Error::UnknownColor { .. }) => corpus::decode_label(img, Ontology::ThreeClass, tol)?,
        Err(e) => return Err(e),
    };
    match (map.ontology(), target) {
        (a, b) if a == b => Ok(map),
        (Ontology::FiveClass, Ontology::ThreeClass) => corpus::collapse_to_3(&map),
        (have, want) => Err(figkit::Error::WrongArity {
            expected: want.arity(),
            got: have.arity(),
        }),
    }
}

fn load_records(manifest: &Path) -> CliResult<Vec<MapRecord>> {
    let records = io::load_manifest(manifest)?;
    if records.is_empty() {
        return Err(CliError::Config(format!("{} lists no maps", manifest.display())));
    }
    Ok(records)
}

fn load_maps(manifest: &Path, target: Ontology, labels: bool) -> CliResult<Vec<LoadedMap>> {
    load_records(manifest)?
        .into_iter()
        .map(|record| {
            let image = io::load_image(&io::resolve(manifest, &record.image_path))?;
            let label = match (&record.label_path, labels) {
                (Some(p), true) => {
                    let raw = io::load_image(&io::resolve(manifest, p))?;
                    if (raw.width(), raw.height()) != (image.width(), image.height()) {
                        return Err(CliError::Config(format!(
                            "label of map `{}` is {}x{}, image is {}x{}",
                            record.id,
                            raw.width(),
                            raw.height(),
                            image.width(),
                            image.height()
                        )));
                    }
                    Some(decode_label_as(&raw, target)?)
                }
                _ => None,
            };
            Ok(LoadedMap { record, image, label })
        })
        .collect()
}

fn texel_config(t: &TexelArgs) -> Value {
    json!({
        "manifest": file_name(&t.manifest),
        "texel_size": t.texel_size,
        "stride": t.stride.unwrap_or(t.texel_size),
        "threshold": t.threshold,
        "classes": t.classes.ontology().arity(),
    })
}

fn cut_texels(map: &LoadedMap, t: &TexelArgs) -> CliResult<Vec<Texel>> {
    let stride = t.stride.unwrap_or(t.texel_size);
    let mut texels = corpus::extract_texels(&map.record.id, &map.image, map.label.as_ref(), t.texel_size, stride)?;
    corpus::assign_classes(&mut texels, t.threshold)?;
    Ok(texels)
}

fn class_name(t: &Texel, ont: Ontology) -> Option<String> {
    t.assigned_class.map(|c| ont.name(c).to_string())
}

pub fn synth(args: SynthArgs) -> CliResult<()> {
    let seed = args.seed.seed;
    let meta = Meta::new("synth", seed, json!({ "maps": synth::SYNTH_MAPS, "size": synth::SYNTH_SIZE }));
    let mut out = Artifacts::new(&args.out.out, meta)?;
    let maps = synth::generate(seed)?;
    for m in &maps {
        let id = &m.record.id;
        out.png_bare(&format!("maps/{id}.png"), &m.image)?;
        out.png_bare(&format!("labels/{id}.png"), &m.label_image())?;
        out.png_bare(&format!("predictions/{id}.png"), &m.prediction_image())?;
    }
    for dir in ["maps", "labels", "predictions"] {
        out.directory_meta(dir)?;
    }
    let records: Vec<MapRecord> = maps.into_iter().map(|m| m.record).collect();
    out.plain_json("manifest.json", &io::manifest_json(&records)?)?;

    // learning curve following a known power law with small seeded jitter
    let mut rng = ChaCha12Rng::seed_from_u64(stage_seed(seed, "curve"));
    let mut curve = String::from("size,score\n");
    for size in [20u32, 40, 80, 160, 320, 640] {
        let jitter = (rng.next_u32() as f64 / u32::MAX as f64 - 0.5) * 0.004;
        let score = 0.93 - 2.1 * (size as f64).powf(-0.6) + jitter;
        curve.push_str(&format!("{size},{score}\n"));
    }
    out.csv("learning_curve.csv", curve.as_bytes())?;
    Ok(())
}

pub fn extract(args: ExtractArgs) -> CliResult<()> {
    let t = &args.texels;
    let ont = t.classes.ontology();
    let meta = Meta::new("extract", 0, texel_config(t));
    let mut out = Artifacts::new(&args.out.out, meta)?;
    let maps = load_maps(&t.manifest, ont, true)?;
    let mut index = Vec::new();
    for map in &maps {
        for texel in cut_texels(map, t)? {
            out.png_bare(&format!("texels/{}_{}_{}.png", texel.map_id, texel.x, texel.y), &texel.pixels)?;
            index.push(FeatureRecord {
                class: class_name(&texel, ont),
                map_id: texel.map_id,
                x: texel.x,
                y: texel.y,
                values: Vec::new(),
            });
        }
    }
    out.directory_meta("texels")?;
    out.csv("texels.csv", &io::feature_csv(&index)?)?;
    Ok(())
}

pub fn features(args: FeaturesArgs) -> CliResult<()> {
    let t = &args.texels;
    let ont = t.classes.ontology();
    let cfg = FeatureConfig {
        texel_size: t.texel_size,
        ..FeatureConfig::default()
    };
    let mut config = texel_config(t);
    config["features"] = serde_json::to_value(cfg).expect("config serializes");
    let mut out = Artifacts::new(&args.out.out, Meta::new("features", 0, config))?;
    let maps = load_maps(&t.manifest, ont, true)?;

    let mut full = Vec::new();
    let mut simple = Vec::new();
    let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
    let (mut flat, mut zero_grad, mut all_zero) = (0usize, 0usize, 0usize);
    for map in &maps {
        let texels = cut_texels(map, t)?;
        let vectors = features::map_features(&map.image, &texels, &cfg)?;
        let simplified = features::map_simplified(&map.image, &texels, &cfg)?;
        for ((texel, v), s) in texels.iter().zip(vectors).zip(simplified) {
            let class = class_name(texel, ont);
            *per_class.entry(class.clone().unwrap_or_else(|| "unassigned".into())).or_default() += 1;
            flat += v.degeneracy.flat_channels.iter().any(|&f| f) as usize;
            zero_grad += v.degeneracy.zero_gradient as usize;
            all_zero += v.degeneracy.all_zero as usize;
            let record = |values: Vec<f64>| FeatureRecord {
                map_id: texel.map_id.clone(),
                x: texel.x,
                y: texel.y,
                class: class.clone(),
                values,
            };
            full.push(record(v.values));
            simple.push(record(s.values.to_vec()));
        }
    }
    out.csv("features.csv", &io::feature_csv(&full)?)?;
    out.bytes("features.bin", &io::encode_feature_binary(&full)?)?;
    out.csv("simplified.csv", &io::feature_csv(&simple)?)?;
    out.json(
        "features.json",
        vec![
            ("texels", json!(full.len())),
            ("per_class", json!(per_class)),
            ("feature_names", json!(cfg.feature_names())),
            ("simplified_names", json!(SIMPLIFIED_NAMES)),
            (
                "degenerate",
                json!({ "flat_channel": flat, "zero_gradient": zero_grad, "all_zero": all_zero }),
            ),
        ],
    )?;
    Ok(())
}

/// Column names for a feature store of width `dim`.
fn feature_names(dim: usize) -> Vec<String> {
    let full = FeatureConfig::default();
    if dim == full.dimension() {
        full.feature_names()
    } else if dim == SIMPLIFIED_NAMES.len() {
        SIMPLIFIED_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(io::feature_column).collect()
    }
}

fn load_store(path: &Path) -> CliResult<Vec<FeatureRecord>> {
    let rows = io::parse_feature_csv(&io::read_bytes(path)?)?;
    if rows.is_empty() {
        return Err(CliError::Degenerate(format!("{} holds no texels", path.display())));
    }
    Ok(rows)
}

/// Sample sets keyed by group name, in name order, plus the groups too small to use.
fn group_sets(rows: &[FeatureRecord], by: GroupBy) -> CliResult<(Vec<FeatureSampleSet>, Vec<(String, usize)>)> {
    let names = feature_names(rows[0].values.len());
    let mut groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for r in rows {
        let key = match by {
            GroupBy::Class => match &r.class {
                Some(c) => c.clone(),
                None => continue,
            },
            GroupBy::Map => r.map_id.clone(),
        };
        groups.entry(key).or_default().push(r.values.clone());
    }
    let mut sets = Vec::new();
    let mut skipped = Vec::new();
    for (name, rows) in groups {
        if rows.len() < MIN_SAMPLES {
            eprintln!("figkit: skipping set `{name}` with {} texels (need {MIN_SAMPLES})", rows.len());
            skipped.push((name, rows.len()));
            continue;
        }
        sets.push(FeatureSampleSet::new(name, names.clone(), rows)?);
    }
    Ok((sets, skipped))
}

pub fn kappa(args: KappaArgs) -> CliResult<()> {
    if args.trials == 0 {
        return Err(CliError::Config("--trials must be positive".into()));
    }
    let seed = args.seed.seed;
    let group = match args.group_by {
        GroupBy::Class => "class",
        GroupBy::Map => "map",
    };
    let config = json!({ "features": file_name(&args.features), "trials": args.trials, "group_by": group });
    let mut out = Artifacts::new(&args.out.out, Meta::new("kappa", seed, config))?;
    let rows = load_store(&args.features)?;
    let (sets, skipped) = group_sets(&rows, args.group_by)?;
    if sets.is_empty() {
        return Err(CliError::Degenerate(format!(
            "no {group} group has at least {MIN_SAMPLES} texels"
        )));
    }
    let reports = kappa::bootstrap_kappa(&sets, args.trials, stage_seed(seed, "kappa"))?;
    out.json(
        "kappa.json",
        vec![
            ("reports", serde_json::to_value(&reports).map_err(figkit::Error::from)?),
            (
                "skipped",
                json!(skipped.iter().map(|(n, c)| json!({ "set": n, "texels": c })).collect::<Vec<_>>()),
            ),
        ],
    )?;
    Ok(())
}

#[derive(Deserialize)]
struct KappaFile {
    reports: Vec<KappaReport>,
}

pub fn kurtograph(args: KurtographArgs) -> CliResult<()> {
    let file: KappaFile = serde_json::from_slice(&io::read_bytes(&args.kappa)?).map_err(figkit::Error::from)?;
    let first = file.reports.first().ok_or(figkit::Error::EmptySeries)?;
    let spec = viz::KurtographSpec {
        feature_labels: first.features.iter().map(|f| f.name.clone()).collect(),
        series: file
            .reports
            .iter()
            .map(|r| viz::KurtographSeries {
                name: r.set.clone(),
                kappa: r.features.iter().map(|f| f.kappa_median).collect(),
            })
            .collect(),
    };
    let seed = first.seed;
    let config = json!({ "kappa": file_name(&args.kappa), "series": spec.series.len() });
    let mut out = Artifacts::new(&args.out.out, Meta::new("kurtograph", seed, config))?;
    out.svg("kurtograph.svg", &viz::render_kurtograph(&spec)?)?;
    Ok(())
}

pub fn correlate(args: CorrelateArgs) -> CliResult<()> {
    let config = json!({ "features": file_name(&args.features), "corpus": args.corpus });
    let mut out = Artifacts::new(&args.out.out, Meta::new("correlate", 0, config))?;
    let rows = load_store(&args.features)?;
    let (sets, skipped) = group_sets(&rows, GroupBy::Class)?;
    if sets.len() < 2 {
        return Err(CliError::Degenerate(format!(
            "need 2 classes with at least {MIN_SAMPLES} texels, found {}",
            sets.len()
        )));
    }
    let labelled: Vec<(SignatureLabel, &FeatureSampleSet)> = sets
        .iter()
        .map(|s| {
            (
                SignatureLabel {
                    corpus: args.corpus.clone(),
                    class: s.name().to_string(),
                },
                s,
            )
        })
        .collect();
    let signatures = analysis::class_signatures(&labelled)?;
    let matrix = analysis::correlate(&signatures)?;
    let means = analysis::mean_interclass(&matrix, &args.corpus)?;
    out.json(
        "correlation.json",
        vec![
            ("matrix", serde_json::to_value(&matrix).map_err(figkit::Error::from)?),
            ("interclass", serde_json::to_value(&means).map_err(figkit::Error::from)?),
            ("skipped", json!(skipped.iter().map(|(n, _)| n).collect::<Vec<_>>())),
        ],
    )?;
    out.csv("correlation.csv", &io::correlation_csv(&matrix)?)?;
    out.csv("pvalues.csv", &io::pvalue_csv(&matrix)?)?;
    out.svg("heatmap.svg", &viz::render_heatmap(&matrix)?)?;
    Ok(())
}

pub fn embed(args: EmbedArgs) -> CliResult<()> {
    let seed = args.seed.seed;
    let config = json!({
        "features": file_name(&args.features),
        "manifest": file_name(&args.manifest),
        "perplexity": args.perplexity,
        "iterations": args.iterations,
        "texel_size": args.texel_size,
        "cell": args.cell,
        "max_texels": args.max_texels,
    });
    let mut out = Artifacts::new(&args.out.out, Meta::new("embed", seed, config))?;
    if !(args.perplexity > 0.0) || args.max_texels == 0 || args.cell == 0 {
        return Err(CliError::Config("--perplexity, --max-texels and --cell must be positive".into()));
    }
    let mut rows = load_store(&args.features)?;
    if rows.len() > args.max_texels {
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        idx.shuffle(&mut ChaCha12Rng::seed_from_u64(stage_seed(seed, "embed-subsample")));
        idx.truncate(args.max_texels);
        idx.sort_unstable();
        rows = idx.into_iter().map(|i| rows[i].clone()).collect();
    }

    let data: Vec<Vec<f64>> = rows.iter().map(|r| r.values.clone()).collect();
    let cfg = TsneConfig {
        perplexity: args.perplexity,
        iterations: args.iterations,
        seed: stage_seed(seed, "tsne"),
        ..TsneConfig::default()
    };
    let emb = analysis::tsne_project(&data, &cfg)?;
    let layout = analysis::grid_assign(&emb)?;

    let records = load_records(&args.manifest)?;
    let mut images: BTreeMap<&str, RgbImage> = BTreeMap::new();
    for r in &rows {
        if images.contains_key(r.map_id.as_str()) {
            continue;
        }
        let rec = records
            .iter()
            .find(|m| m.id == r.map_id)
            .ok_or_else(|| CliError::Config(format!("map `{}` is not in the manifest", r.map_id)))?;
        images.insert(&rec.id, io::load_image(&io::resolve(&args.manifest, &rec.image_path))?);
    }
    let s = args.texel_size;
    let texels = rows
        .iter()
        .map(|r| {
            Ok(Texel {
                map_id: r.map_id.clone(),
                x: r.x,
                y: r.y,
                size: s,
                pixels: images[r.map_id.as_str()].crop(r.x, r.y, s, s)?,
                label: None,
                assigned_class: None,
            })
        })
        .collect::<CliResult<Vec<Texel>>>()?;
    let montage = viz::render_montage(&texels, &layout, args.cell)?;

    let ids: Vec<String> = rows.iter().map(|r| r.map_id.clone()).collect();
    out.csv("embedding.csv", &io::embedding_csv(&ids, &emb, &layout)?)?;
    out.png("montage.png", &montage)?;
    out.json(
        "embedding.json",
        vec![
            ("texels", json!(rows.len())),
            ("perplexity", json!(emb.perplexity)),
            ("grid", json!({ "rows": layout.rows, "cols": layout.cols, "cost": layout.cost })),
            (
                "texel_origins",
                json!(rows.iter().map(|r| json!([r.map_id, r.x, r.y])).collect::<Vec<_>>()),
            ),
        ],
    )?;
    Ok(())
}

pub fn ablate(args: AblateArgs) -> CliResult<()> {
    let mode = serde_json::to_value(args.mode).map_err(figkit::Error::from)?;
    let config = json!({ "manifest": file_name(&args.manifest), "mode": mode, "lbp_radius": raster::ABLATION_LBP_RADIUS });
    let mut out = Artifacts::new(&args.out.out, Meta::new("ablate", 0, config))?;
    let mut summary = Vec::new();
    for rec in load_records(&args.manifest)? {
        let img = io::load_image(&io::resolve(&args.manifest, &rec.image_path))?;
        let result = raster::ablate(&img, args.mode, raster::ABLATION_LBP_RADIUS)?;
        out.png_bare(&format!("ablated/{}.png", rec.id), &result.image)?;
        summary.push(json!({ "id": rec.id, "degenerate": result.degenerate }));
    }
    out.directory_meta("ablated")?;
    out.json("ablation.json", vec![("maps", json!(summary))])?;
    Ok(())
}

pub fn segeval(args: SegevalArgs) -> CliResult<()> {
    let ont = args.classes.ontology();
    let config = json!({
        "manifest": file_name(&args.manifest),
        "predictions": file_name(&args.predictions),
        "classes": ont.arity(),
        "patch_size": args.patch_size,
    });
    let mut out = Artifacts::new(&args.out.out, Meta::new("segeval", 0, config))?;
    let maps = load_maps(&args.manifest, ont, true)?;
    let mut patches = Vec::new();
    for map in &maps {
        let Some(gt) = &map.label else { continue };
        let path: PathBuf = args.predictions.join(format!("{}.png", map.record.id));
        let pred = decode_label_as(&io::load_image(&path)?, ont)?;
        if args.patch_size == 0 {
            patches.push(PatchResult {
                id: map.record.id.clone(),
                confusion: segeval::confusion(&pred, gt)?,
            });
            continue;
        }
        let ps = args.patch_size;
        for (x, y) in corpus::texel_grid(gt.width(), gt.height(), ps, ps)? {
            patches.push(PatchResult {
                id: format!("{}@{x},{y}", map.record.id),
                confusion: segeval::confusion(&pred.crop(x, y, ps, ps)?, &gt.crop(x, y, ps, ps)?)?,
            });
        }
    }
    if patches.is_empty() {
        return Err(CliError::Degenerate("no map in the manifest has a label raster".into()));
    }
    let pooled = segeval::ConfusionMatrix::pooled(&patches.iter().map(|p| p.confusion.clone()).collect::<Vec<_>>())?;
    let metrics = segeval::metrics(&pooled)?;
    let normalized = segeval::normalize_confusion(&pooled);
    let per_patch = patches
        .iter()
        .map(|p| Ok((p.id.clone(), segeval::metrics(&p.confusion)?.miou())))
        .collect::<figkit::Result<Vec<(String, f64)>>>()?;
    let best = if patches.len() >= 2 {
        serde_json::to_value(segeval::best_half(&patches)?).map_err(figkit::Error::from)?
    } else {
        Value::Null
    };
    out.json(
        "segeval.json",
        vec![
            ("confusion", to_value(&pooled)),
            ("metrics", to_value(&metrics)),
            ("normalized_confusion", to_value(&normalized)),
            ("best_half", best),
            ("patches", json!(per_patch.len())),
        ],
    )?;
    out.csv("miou.csv", &io::miou_csv(&per_patch)?)?;
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn read_curve(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let bytes = io::read_bytes(path)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header = rdr.headers().map_err(figkit::Error::from)?.clone();
    if header.iter().collect::<Vec<_>>() != ["size", "score"] {
        return Err(CliError::Config(format!("{} must have the header `size,score`", path.display())));
    }
    let (mut sizes, mut scores) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(figkit::Error::from)?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("{}: `{s}`: {e}", path.display())))
        };
        sizes.push(parse(&rec[0])?);
        scores.push(parse(&rec[1])?);
    }
    Ok((sizes, scores))
}

pub fn extrapolate(args: ExtrapolateArgs) -> CliResult<()> {
    let options = FitOptions {
        weighting: args.weighting.into(),
        target: args.fit_target.into(),
        ..FitOptions::default()
    };
    let config = json!({
        "input": file_name(&args.input),
        "options": serde_json::to_value(options).map_err(figkit::Error::from)?,
        "target_score": args.target_score,
        "target_size": args.target_size,
    });
    let mut out = Artifacts::new(&args.out.out, Meta::new("extrapolate", 0, config))?;
    let (sizes, scores) = read_curve(&args.input)?;
    let fit = segeval::fit_power_law(&sizes, &scores, options)?;
    let mut predictions = Vec::new();
    for &s in &args.target_score {
        let Extrapolation::Size(x) = segeval::extrapolate(&fit, Extrapolation::Score(s))? else {
            unreachable!("score queries return sizes")
        };
        predictions.push(json!({ "target_score": s, "size": x }));
    }
    for &x in &args.target_size {
        let Extrapolation::Score(s) = segeval::extrapolate(&fit, Extrapolation::Size(x))? else {
            unreachable!("size queries return scores")
        };
        predictions.push(json!({ "target_size": x, "score": s }));
    }
    out.json(
        "extrapolation.json",
        vec![
            ("fit", serde_json::to_value(&fit).map_err(figkit::Error::from)?),
            ("predictions", json!(predictions)),
        ],
    )?;
    Ok(())
}

pub fn proportions(args: ProportionsArgs) -> CliResult<()> {
    let ont = args.classes.ontology();
    let config = json!({ "manifest": file_name(&args.manifest), "classes": ont.arity() });
    let mut out = Artifacts::new(&args.out.out, Meta::new("proportions", 0, config))?;
    let labels: Vec<ClassMap> = load_maps(&args.manifest, ont, true)?
        .into_iter()
        .filter_map(|m| m.label)
        .collect();
    if labels.is_empty() {
        return Err(CliError::Degenerate("no map in the manifest has a label raster".into()));
    }
    let fractions = corpus::area_proportions(&labels)?;
    let names: Vec<&str> = ont.classes().iter().map(|c| c.name).collect();
    out.json(
        "proportions.json",
        vec![
            ("maps", json!(labels.len())),
            (
                "classes",
                json!(names
                    .iter()
                    .zip(&fractions)
                    .map(|(n, f)| json!({ "name": n, "fraction": f }))
                    .collect::<Vec<_>>()),
            ),
        ],
    )?;
    out.csv("proportions.csv", io::proportions_csv(&names, &fractions).as_bytes())?;
    Ok(())
}
