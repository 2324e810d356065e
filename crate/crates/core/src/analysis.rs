//! Inter-class figurative proximity and the texel embedding.
//!
//! Class signatures are per-feature 32-bin histograms over pooled value
//! ranges; classes are compared by Pearson correlation of the flattened
//! histograms. The embedding is an exact t-SNE projected onto a grid by
//! optimal linear assignment.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::assignment;
use crate::error::{Error, Result};
use crate::kappa::FeatureSampleSet;

pub const SIGNATURE_BINS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignatureLabel {
    pub corpus: String,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSignature {
    pub label: SignatureLabel,
    /// One 32-bin histogram per feature.
    pub histograms: Vec<Vec<u64>>,
    pub samples: usize,
}

impl ClassSignature {
    pub fn flattened(&self) -> Vec<u64> {
        self.histograms.iter().flatten().copied().collect()
    }
}

/// Per-feature `(min, max)` over all the given sets.
pub fn pooled_ranges(sets: &[&FeatureSampleSet]) -> Result<Vec<(f64, f64)>> {
    let first = sets.first().ok_or_else(|| Error::Empty("no sample sets".into()))?;
    let f = first.features();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); f];
    for s in sets {
        if s.features() != f {
            return Err(Error::ShapeMismatch(format!(
                "set `{}` has {} features, expected {f}",
                s.name(),
                s.features()
            )));
        }
        for i in 0..s.len() {
            for (r, &v) in ranges.iter_mut().zip(s.row(i)) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
    }
    Ok(ranges)
}

fn signature_bin(v: f64, (lo, hi): (f64, f64)) -> usize {
    if hi <= lo {
        return 0;
    }
    (((v - lo) / (hi - lo) * SIGNATURE_BINS as f64).floor().max(0.0) as usize).min(SIGNATURE_BINS - 1)
}

pub fn class_signature(
    label: SignatureLabel,
    set: &FeatureSampleSet,
    ranges: &[(f64, f64)],
) -> Result<ClassSignature> {
    if set.is_empty() {
        return Err(Error::EmptyClass(label.class));
    }
    if ranges.len() != set.features() {
        return Err(Error::ShapeMismatch(format!(
            "{} ranges for {} features",
            ranges.len(),
            set.features()
        )));
    }
    let mut histograms = vec![vec![0u64; SIGNATURE_BINS]; set.features()];
    for i in 0..set.len() {
        for (j, &v) in set.row(i).iter().enumerate() {
            histograms[j][signature_bin(v, ranges[j])] += 1;
        }
    }
    Ok(ClassSignature {
        label,
        histograms,
        samples: set.len(),
    })
}

/// Signatures of several sets sharing pooled bin ranges.
pub fn class_signatures(sets: &[(SignatureLabel, &FeatureSampleSet)]) -> Result<Vec<ClassSignature>> {
    let refs: Vec<&FeatureSampleSet> = sets.iter().map(|(_, s)| *s).collect();
    let ranges = pooled_ranges(&refs)?;
    sets.iter()
        .map(|(label, set)| class_signature(label.clone(), set, &ranges))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<SignatureLabel>,
    pub r: Vec<Vec<f64>>,
    /// Two-sided p-values of `r` under the t distribution with `n − 2` degrees of freedom.
    pub p: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Pearson r of two count vectors, with every sum taken exactly in integers.
fn pearson_counts(x: &[u64], y: &[u64]) -> Option<f64> {
    let n = x.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as i128, b as i128);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let dx = n * sxx - sx * sx;
    let dy = n * syy - sy * sy;
    if dx == 0 || dy == 0 {
        return None;
    }
    let num = (n * sxy - sx * sy) as f64;
    let r = num / ((dx as f64) * (dy as f64)).sqrt();
    Some(r.clamp(-1.0, 1.0))
}

fn p_value(r: f64, n: usize) -> f64 {
    if n <= 2 {
        return 1.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

pub fn correlate(signatures: &[ClassSignature]) -> Result<CorrelationMatrix> {
    if signatures.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 signatures to correlate".into()));
    }
    let flat: Vec<Vec<u64>> = signatures.iter().map(ClassSignature::flattened).collect();
    let len = flat[0].len();
    if let Some((i, _)) = flat.iter().enumerate().find(|(_, v)| v.len() != len) {
        return Err(Error::ShapeMismatch(format!(
            "signature `{}/{}` has a different feature count",
            signatures[i].label.corpus, signatures[i].label.class
        )));
    }
    let k = signatures.len();
    let mut r = vec![vec![1.0; k]; k];
    let mut p = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = pearson_counts(&flat[i], &flat[j]).ok_or_else(|| {
                let bad = if pearson_counts(&flat[i], &flat[i]).is_none() { i } else { j };
                let l = &signatures[bad].label;
                Error::ZeroVarianceVector(format!("{}/{}", l.corpus, l.class))
            })?;
            r[i][j] = v;
            r[j][i] = v;
            let pv = p_value(v, len);
            p[i][j] = pv;
            p[j][i] = pv;
        }
    }
    Ok(CorrelationMatrix {
        labels: signatures.iter().map(|s| s.label.clone()).collect(),
        r,
        p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterclassMeans {
    pub corpus: String,
    pub overall: f64,
    pub per_class: Vec<(String, f64)>,
}

/// Mean off-diagonal correlation within one corpus.
pub fn mean_interclass(m: &CorrelationMatrix, corpus: &str) -> Result<InterclassMeans> {
    let idx: Vec<usize> = (0..m.len()).filter(|&i| m.labels[i].corpus == corpus).collect();
    if idx.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "corpus `{corpus}` has {} classes, need at least 2",
            idx.len()
        )));
    }
    let per_class = idx
        .iter()
        .map(|&i| {
            let others: Vec<f64> = idx.iter().filter(|&&j| j != i).map(|&j| m.r[i][j]).collect();
            (m.labels[i].class.clone(), others.iter().sum::<f64>() / others.len() as f64)
        })
        .collect();
    let mut pairs = Vec::new();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            pairs.push(m.r[i][j]);
        }
    }
    Ok(InterclassMeans {
        corpus: corpus.to_string(),
        overall: pairs.iter().sum::<f64>() / pairs.len() as f64,
        per_class,
    })
}

/// Correlation of each class of `a` with the same-named class of `b`.
pub fn counterpart_correlations(m: &CorrelationMatrix, a: &str, b: &str) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for i in 0..m.len() {
        if m.labels[i].corpus != a {
            continue;
        }
        if let Some(j) = (0..m.len()).find(|&j| m.labels[j].corpus == b && m.labels[j].class == m.labels[i].class) {
            out.push((m.labels[i].class.clone(), m.r[i][j]));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    /// `None` selects `max(N / exaggeration / 4, 50)`.
    pub learning_rate: Option<f64>,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: None,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub coords: Vec<[f64; 2]>,
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: usize,
}

/// Conditional affinities of row `i` at precision `beta`; returns the entropy (nats).
fn row_affinities(d2: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    // shift by the smallest distance for numerical range
    let dmin = d2
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, &d) in d2.iter().enumerate() {
        out[j] = if j == i { 0.0 } else { (-(d - dmin) * beta).exp() };
        sum += out[j];
    }
    let mut weighted = 0.0;
    for (j, &d) in d2.iter().enumerate() {
        out[j] /= sum;
        weighted += out[j] * (d - dmin);
    }
    sum.ln() + beta * weighted
}

/// Symmetric joint probabilities matched to `perplexity` by bisection on each row's precision.
fn joint_probabilities(data: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = data.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = data[i].iter().zip(&data[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d2[i * n + j] = d;
            d2[j * n + i] = d;
        }
    }
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let di = &d2[i * n..(i + 1) * n];
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        for _ in 0..200 {
            let h = row_affinities(di, i, beta, &mut row);
            let diff = h - target;
            if diff.abs() < 1e-10 {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        row_affinities(di, i, beta, &mut row);
        p[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = ((p[i * n + j] + p[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
    }
    joint
}

/// Exact (O(N²) per iteration) t-SNE, deterministic for a given seed.
///
/// Identical rows are embedded once and share coordinates; the recorded
/// perplexity is clamped to `(unique − 1) / 3` when duplicates leave too few
/// distinct rows.
pub fn tsne_project(data: &[Vec<f64>], cfg: &TsneConfig) -> Result<Embedding2D> {
    let n = data.len();
    let needed = (3.0 * cfg.perplexity).floor() as usize;
    if n <= needed || n < 2 {
        return Err(Error::TooFewSamples { needed, got: n });
    }
    if let Some(bad) = data.iter().find(|r| r.len() != data[0].len()) {
        return Err(Error::ShapeMismatch(format!(
            "row of length {} among rows of length {}",
            bad.len(),
            data[0].len()
        )));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("t-SNE input".into()));
    }

    // identical rows are embedded once and share coordinates
    let mut first_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique: Vec<Vec<f64>> = Vec::new();
    let representative: Vec<usize> = data
        .iter()
        .map(|row| {
            let key = row.iter().map(|v| (v + 0.0).to_bits()).collect();
            *first_of.entry(key).or_insert_with(|| {
                unique.push(row.clone());
                unique.len() - 1
            })
        })
        .collect();
    let perplexity = cfg.perplexity.min((unique.len() as f64 - 1.0) / 3.0);
    let coords = if unique.len() < 2 || perplexity < 1.0 {
        vec![[0.0; 2]; unique.len()]
    } else {
        optimize(&unique, perplexity, cfg)
    };
    Ok(Embedding2D {
        coords: representative.iter().map(|&u| coords[u]).collect(),
        perplexity,
        seed: cfg.seed,
        iterations: cfg.iterations,
    })
}

fn optimize(data: &[Vec<f64>], perplexity: f64, cfg: &TsneConfig) -> Vec<[f64; 2]> {
    let n = data.len();
    let p = joint_probabilities(data, perplexity);
    let learning_rate = cfg.learning_rate.unwrap_or_else(|| (n as f64 / cfg.early_exaggeration / 4.0).max(50.0));
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [1e-4 * rng.sample::<f64, _>(StandardNormal), 1e-4 * rng.sample::<f64, _>(StandardNormal)])
        .collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![[0.0; 2]; n];

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iterations { cfg.early_exaggeration } else { 1.0 };
        let momentum = if iter < cfg.exaggeration_iterations { 0.5 } else { 0.8 };

        let mut z = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                num[j * n + i] = q;
                z += 2.0 * q;
            }
        }
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = num[i * n + j];
                let coeff = (exaggeration * p[i * n + j] - (q / z).max(1e-12)) * q;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        for i in 0..n {
            for d in 0..2 {
                let flipped = grad[i][d] * velocity[i][d] < 0.0;
                gains[i][d] = if flipped { gains[i][d] + 0.2 } else { gains[i][d] * 0.8 };
                gains[i][d] = gains[i][d].max(0.01);
                velocity[i][d] = momentum * velocity[i][d] - learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += velocity[i][d];
            }
        }
        let mean = [
            y.iter().map(|p| p[0]).sum::<f64>() / n as f64,
            y.iter().map(|p| p[1]).sum::<f64>() / n as f64,
        ];
        for pt in &mut y {
            pt[0] -= mean[0];
            pt[1] -= mean[1];
        }
    }
    y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col)` of each input point.
    pub assignment: Vec<(usize, usize)>,
    /// Sum of squared distances between normalized points and their cell centers.
    pub cost: f64,
}

pub fn grid_shape(n: usize) -> (usize, usize) {
    let mut cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    while cols > 1 && (cols - 1) * (cols - 1) >= n {
        cols -= 1;
    }
    while cols * cols < n {
        cols += 1;
    }
    let rows = n.div_ceil(cols).max(1);
    (rows, cols)
}

/// Coordinates rescaled to `[0, 1]` per axis; a flat axis maps to 0.5.
pub fn normalized_coords(coords: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in coords {
        for d in 0..2 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    coords
        .iter()
        .map(|c| {
            let mut out = [0.5; 2];
            for d in 0..2 {
                if hi[d] > lo[d] {
                    out[d] = (c[d] - lo[d]) / (hi[d] - lo[d]);
                }
            }
            out
        })
        .collect()
}

pub fn cell_center(row: usize, col: usize, rows: usize, cols: usize) -> [f64; 2] {
    [(col as f64 + 0.5) / cols as f64, (row as f64 + 0.5) / rows as f64]
}

/// Optimal bijective placement of embedded points onto grid cells (x → column, y → row).
pub fn grid_assign(emb: &Embedding2D) -> Result<GridLayout> {
    let n = emb.coords.len();
    if n == 0 {
        return Err(Error::Empty("embedding has no points".into()));
    }
    let (rows, cols) = grid_shape(n);
    let cells = rows * cols;
    let pts = normalized_coords(&emb.coords);
    let mut cost = Vec::with_capacity(n * cells);
    for p in &pts {
        for cell in 0..cells {
            let c = cell_center(cell / cols, cell % cols, rows, cols);
            cost.push((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2));
        }
    }
    let (assign, total) = assignment::solve(&cost, n, cells)?;
    Ok(GridLayout {
        rows,
        cols,
        assignment: assign.into_iter().map(|cell| (cell / cols, cell % cols)).collect(),
        cost: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(corpus: &str, class: &str, counts: Vec<u64>) -> ClassSignature {
        ClassSignature {
            label: SignatureLabel {
                corpus: corpus.into(),
                class: class.into(),
            },
            histograms: vec![counts],
            samples: 0,
        }
    }

    #[test]
    fn pearson_examples() {
        let v: Vec<u64> = vec![3, 7, 1, 0, 9, 4, 4, 12];
        let affine: Vec<u64> = v.iter().map(|x| 2 * x + 3).collect();
        let m = correlate(&[sig("a", "x", v.clone()), sig("a", "y", v.clone()), sig("a", "z", affine)]).unwrap();
        assert_eq!(m.r[0][1], 1.0);
        assert_eq!(m.r[0][2], 1.0);
        assert_eq!(m.p[0][2], 0.0);

        let m = correlate(&[sig("a", "x", vec![1, 2, 3]), sig("a", "y", vec![6, 5, 4])]).unwrap();
        assert_eq!(m.r[0][1], -1.0);

        let flat = correlate(&[sig("a", "x", vec![1, 2, 3]), sig("a", "y", vec![5, 5, 5])]);
        assert!(matches!(flat, Err(Error::ZeroVarianceVector(ref s)) if s == "a/y"));
    }

    #[test]
    fn p_value_matches_known_quantile() {
        // t = 2.228 is the two-sided 5% critical value at 10 degrees of freedom
        let n = 12usize;
        let t = 2.228_138_851_986_274f64;
        let r = t / (t * t + (n - 2) as f64).sqrt();
        assert!((p_value(r, n) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn interclass_means() {
        let labels = ["a", "b", "c"]
            .iter()
            .map(|c| SignatureLabel {
                corpus: "w".into(),
                class: c.to_string(),
            })
            .collect();
        let r = vec![vec![1.0, 0.9, 0.8], vec![0.9, 1.0, 0.7], vec![0.8, 0.7, 1.0]];
        let m = CorrelationMatrix {
            labels,
            r,
            p: vec![vec![0.0; 3]; 3],
        };
        let means = mean_interclass(&m, "w").unwrap();
        assert!((means.overall - 0.8).abs() < 1e-12);
        assert!((means.per_class[0].1 - 0.85).abs() < 1e-12);
        assert!(mean_interclass(&m, "paris").is_err());

        let two = CorrelationMatrix {
            labels: m.labels[..2].to_vec(),
            r: vec![vec![1.0, 0.8], vec![0.8, 1.0]],
            p: vec![vec![0.0; 2]; 2],
        };
        let means = mean_interclass(&two, "w").unwrap();
        assert_eq!(means.overall, 0.8);
        assert_eq!(means.per_class, vec![("a".into(), 0.8), ("b".into(), 0.8)]);
    }

    #[test]
    fn signatures_use_pooled_ranges() {
        let names = vec!["f0".to_string(), "f1".to_string()];
        let a = FeatureSampleSet::new("a", names.clone(), (0..8).map(|i| vec![i as f64, 1.0]).collect()).unwrap();
        let b = FeatureSampleSet::new("b", names, (0..8).map(|i| vec![i as f64 + 8.0, 1.0]).collect()).unwrap();
        let la = SignatureLabel { corpus: "c".into(), class: "a".into() };
        let lb = SignatureLabel { corpus: "c".into(), class: "b".into() };
        let sigs = class_signatures(&[(la, &a), (lb, &b)]).unwrap();
        // pooled range [0, 15]: value v lands in floor(v / 15 · 32), last value clamped
        let manual = |vals: &[f64]| {
            let mut h = vec![0u64; 32];
            for &v in vals {
                h[((v / 15.0 * 32.0).floor() as usize).min(31)] += 1;
            }
            h
        };
        let av: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let bv: Vec<f64> = (0..8).map(|i| i as f64 + 8.0).collect();
        assert_eq!(sigs[0].histograms[0], manual(&av));
        assert_eq!(sigs[1].histograms[0], manual(&bv));
        // constant feature: single spike
        assert_eq!(sigs[0].histograms[1][0], 8);
        assert!(sigs.iter().all(|s| s.histograms.iter().all(|h| h.iter().sum::<u64>() == 8)));
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(grid_shape(1), (1, 1));
        assert_eq!(grid_shape(4), (2, 2));
        assert_eq!(grid_shape(5), (2, 3));
        assert_eq!(grid_shape(10), (3, 4));
        for n in 1..200 {
            let (r, c) = grid_shape(n);
            assert!(r * c >= n && r * c - n < c, "n = {n}");
        }
    }

    #[test]
    fn grid_small_cases() {
        let emb = |coords: Vec<[f64; 2]>| Embedding2D {
            coords,
            perplexity: 1.0,
            seed: 0,
            iterations: 0,
        };
        let one = grid_assign(&emb(vec![[3.0, 4.0]])).unwrap();
        assert_eq!((one.rows, one.cols, one.assignment.clone()), (1, 1, vec![(0, 0)]));
        let four = grid_assign(&emb(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])).unwrap();
        assert_eq!(four.assignment, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    fn emb(coords: Vec<[f64; 2]>) -> Embedding2D {
        Embedding2D {
            coords,
            perplexity: 1.0,
            seed: 0,
            iterations: 0,
        }
    }

    fn brute_grid_cost(pts: &[[f64; 2]], rows: usize, cols: usize) -> f64 {
        fn go(pts: &[[f64; 2]], i: usize, used: &mut [bool], rows: usize, cols: usize) -> f64 {
            if i == pts.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for cell in 0..used.len() {
                if used[cell] {
                    continue;
                }
                used[cell] = true;
                let c = cell_center(cell / cols, cell % cols, rows, cols);
                let d = (pts[i][0] - c[0]).powi(2) + (pts[i][1] - c[1]).powi(2);
                best = best.min(d + go(pts, i + 1, used, rows, cols));
                used[cell] = false;
            }
            best
        }
        go(pts, 0, &mut vec![false; rows * cols], rows, cols)
    }

    #[test]
    fn grid_matches_exhaustive_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for n in 1..=7 {
            for _ in 0..4 {
                let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]).collect();
                let layout = grid_assign(&emb(coords.clone())).unwrap();
                let mut cells = layout.assignment.clone();
                cells.sort();
                cells.dedup();
                assert_eq!(cells.len(), n);
                assert!(cells.iter().all(|&(r, c)| r < layout.rows && c < layout.cols));
                let oracle = brute_grid_cost(&normalized_coords(&coords), layout.rows, layout.cols);
                assert!((layout.cost - oracle).abs() < 1e-9, "n = {n}");
            }
        }
    }

    fn gaussian_clusters(per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0, 0.0, 0.0], [10.0, 0.0, 0.0, 0.0], [0.0, 10.0, 0.0, 10.0]];
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (k, c) in centers.iter().enumerate() {
            for _ in 0..per {
                data.push(c.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect());
                labels.push(k);
            }
        }
        (data, labels)
    }

    #[test]
    fn tsne_separates_clusters() {
        let (data, labels) = gaussian_clusters(100, 3);
        let cfg = TsneConfig { seed: 7, ..TsneConfig::default() };
        let e = tsne_project(&data, &cfg).unwrap();
        assert!(e.coords.iter().flatten().all(|v| v.is_finite()));
        let n = e.coords.len();
        let mean = [
            e.coords.iter().map(|p| p[0]).sum::<f64>() / n as f64,
            e.coords.iter().map(|p| p[1]).sum::<f64>() / n as f64,
        ];
        assert!(mean[0].abs() < 1e-9 && mean[1].abs() < 1e-9);

        let k = 15;
        let mut agree = 0usize;
        for i in 0..n {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dx = e.coords[i][0] - e.coords[j][0];
                    let dy = e.coords[i][1] - e.coords[j][1];
                    (dx * dx + dy * dy, j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            agree += d[..k].iter().filter(|&&(_, j)| labels[j] == labels[i]).count();
        }
        let purity = agree as f64 / (n * k) as f64;
        assert!(purity >= 0.9, "purity {purity}");

        let again = tsne_project(&data, &cfg).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn tsne_collapses_duplicates() {
        let (mut data, _) = gaussian_clusters(33, 4);
        data.push(data[5].clone());
        data.push(data[40].clone());
        let cfg = TsneConfig {
            perplexity: 10.0,
            iterations: 500,
            seed: 1,
            ..TsneConfig::default()
        };
        let e = tsne_project(&data, &cfg).unwrap();
        let n = e.coords.len();
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = ((e.coords[i][0] - e.coords[j][0]).powi(2) + (e.coords[i][1] - e.coords[j][1]).powi(2)).sqrt();
                diameter = diameter.max(d);
            }
        }
        for (a, b) in [(5, n - 2), (40, n - 1)] {
            let d = ((e.coords[a][0] - e.coords[b][0]).powi(2) + (e.coords[a][1] - e.coords[b][1]).powi(2)).sqrt();
            assert!(diameter > 0.0);
            assert!(d <= 1e-3 * diameter, "duplicate gap {d} vs diameter {diameter}");
        }
    }

    #[test]
    fn tsne_rejects_small_inputs() {
        let data = vec![vec![0.0, 1.0]; 50];
        let cfg = TsneConfig::default();
        assert!(matches!(tsne_project(&data, &cfg), Err(Error::TooFewSamples { .. })));
    }
}
