//! Multimodal convergence coefficient κ.
//!
//! A feature's values are binned into a 32-bin histogram, smoothed, and split
//! at the local minima of the smoothed counts. κ is the population-weighted
//! sum of the (non-excess) kurtosis of the raw values inside each mode.
//! [`bootstrap_kappa`] makes κ comparable between sample sets of different
//! sizes by repeatedly downsampling every set to the smallest one.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const HISTOGRAM_BINS: usize = 32;

/// κ assigned to a point-mass mode (zero spread or fewer than 4 values).
pub const SPIKE_CAP: f64 = 1e4;

pub const MIN_MODE_POPULATION: usize = 4;
pub const MIN_SAMPLES: usize = 8;
pub const DEFAULT_TRIALS: usize = 5000;

/// Below this the spread of a mode is treated as zero.
const ZERO_SPREAD: f64 = 1e-12;

/// Equal-width histogram over `[min, max]`; the maximum lands in the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram32 {
    pub edges: [f64; HISTOGRAM_BINS + 1],
    pub counts: [u64; HISTOGRAM_BINS],
    min: f64,
    width: f64,
}

impl Histogram32 {
    pub fn bin_of(&self, v: f64) -> usize {
        if self.width == 0.0 {
            return 0;
        }
        (((v - self.min) / self.width * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1)
    }
}

pub fn histogram32(values: &[f64]) -> Histogram32 {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = max - min;
    let mut edges = [0.0; HISTOGRAM_BINS + 1];
    for (i, e) in edges.iter_mut().enumerate() {
        *e = min + width * i as f64 / HISTOGRAM_BINS as f64;
    }
    edges[HISTOGRAM_BINS] = max;
    let mut h = Histogram32 {
        edges,
        counts: [0; HISTOGRAM_BINS],
        min,
        width,
    };
    for &v in values {
        let b = h.bin_of(v);
        h.counts[b] += 1;
    }
    h
}

/// Savitzky–Golay smoothing with mirror padding (the edge sample is not repeated).
pub fn savgol_smooth(counts: &[f64], window: usize, degree: usize) -> Result<Vec<f64>> {
    if window % 2 == 0 || window > counts.len() || degree >= window {
        return Err(Error::InvalidParameter(format!(
            "Savitzky-Golay window {window} / degree {degree} invalid for {} samples",
            counts.len()
        )));
    }
    let coeffs = savgol_coefficients(window, degree);
    let half = (window / 2) as isize;
    let n = counts.len() as isize;
    let mirror = |i: isize| -> f64 {
        let j = if i < 0 {
            -i
        } else if i >= n {
            2 * (n - 1) - i
        } else {
            i
        };
        counts[j.clamp(0, n - 1) as usize]
    };
    Ok((0..n)
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * mirror(i + k as isize - half))
                .sum()
        })
        .collect())
}

/// Weights giving the value at the window center of the least-squares
/// polynomial fit: the first row of `(AᵀA)⁻¹Aᵀ` for `A[i][p] = (i − half)^p`.
fn savgol_coefficients(window: usize, degree: usize) -> Vec<f64> {
    let half = (window / 2) as f64;
    let m = degree + 1;
    let xs: Vec<f64> = (0..window).map(|i| i as f64 - half).collect();
    // normal matrix AᵀA
    let mut ata = vec![vec![0.0; m]; m];
    for r in 0..m {
        for c in 0..m {
            ata[r][c] = xs.iter().map(|x| x.powi((r + c) as i32)).sum();
        }
    }
    // solve AᵀA·u = e₀; coefficients are A·u
    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0;
    let u = solve(ata, rhs);
    xs.iter()
        .map(|x| (0..m).map(|p| u[p] * x.powi(p as i32)).sum())
        .collect()
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Interior local minima of smoothed counts.
///
/// Bin `i` is a minimum when it is strictly below both neighbors; a flat run
/// of equal values bounded by higher values on both sides counts once, at its
/// leftmost bin.
pub fn local_minima(smoothed: &[f64]) -> Vec<usize> {
    let n = smoothed.len();
    let mut minima = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if smoothed[i] < smoothed[i - 1] {
            let mut j = i;
            while j + 1 < n && smoothed[j + 1] == smoothed[i] {
                j += 1;
            }
            if j + 1 < n && smoothed[j + 1] > smoothed[i] {
                minima.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    minima
}

/// Histogram, smoothing and split points of one feature's values.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSplit {
    pub histogram: Histogram32,
    pub smoothed_counts: Vec<f64>,
    pub minima: Vec<usize>,
    /// Value ranges of the modes, closed on the right.
    pub mode_intervals: Vec<(f64, f64)>,
}

impl ModeSplit {
    /// Mode index of a value: modes end at each minimum's bin.
    pub fn mode_of(&self, v: f64) -> usize {
        let b = self.histogram.bin_of(v);
        self.minima.partition_point(|&m| m < b)
    }

    pub fn mode_count(&self) -> usize {
        self.minima.len() + 1
    }
}

pub fn split_modes(values: &[f64]) -> ModeSplit {
    let histogram = histogram32(values);
    let counts: Vec<f64> = histogram.counts.iter().map(|&c| c as f64).collect();
    let smoothed_counts = savgol_smooth(&counts, 3, 1).expect("window 3 fits 32 bins");
    let minima = local_minima(&smoothed_counts);
    let mut mode_intervals = Vec::with_capacity(minima.len() + 1);
    let mut lo = histogram.edges[0];
    for &m in &minima {
        let hi = histogram.edges[m + 1];
        mode_intervals.push((lo, hi));
        lo = hi;
    }
    mode_intervals.push((lo, histogram.edges[HISTOGRAM_BINS]));
    ModeSplit {
        histogram,
        smoothed_counts,
        minima,
        mode_intervals,
    }
}

/// Population kurtosis `E[z⁴]`; point-like samples get [`SPIKE_CAP`].
pub fn kurtosis(values: &[f64]) -> f64 {
    if values.len() < MIN_MODE_POPULATION {
        return SPIKE_CAP;
    }
    let m = stats::moments(values);
    if m.std < ZERO_SPREAD || m.degenerate {
        return SPIKE_CAP;
    }
    m.kurtosis
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaValue {
    pub kappa: f64,
    /// Values per mode, in mode order.
    pub populations: Vec<usize>,
    pub kurtoses: Vec<f64>,
    /// All values were equal.
    pub degenerate: bool,
}

pub fn kappa_detailed(values: &[f64]) -> Result<KappaValue> {
    if values.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES - 1,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kappa input".into()));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Ok(KappaValue {
            kappa: SPIKE_CAP,
            populations: vec![values.len()],
            kurtoses: vec![SPIKE_CAP],
            degenerate: true,
        });
    }
    let split = split_modes(values);
    let mut modes: Vec<Vec<f64>> = vec![Vec::new(); split.mode_count()];
    for &v in values {
        modes[split.mode_of(v)].push(v);
    }
    let n = values.len() as f64;
    let mut kappa = 0.0;
    let mut kurtoses = Vec::with_capacity(modes.len());
    for m in &modes {
        let k = if m.is_empty() { 0.0 } else { kurtosis(m) };
        kappa += m.len() as f64 / n * k;
        kurtoses.push(k);
    }
    Ok(KappaValue {
        kappa,
        populations: modes.iter().map(Vec::len).collect(),
        kurtoses,
        degenerate: false,
    })
}

pub fn kappa(values: &[f64]) -> Result<f64> {
    kappa_detailed(values).map(|k| k.kappa)
}

/// A named N×F sample matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSampleSet {
    name: String,
    feature_names: Vec<String>,
    rows: usize,
    data: Vec<f64>,
}

impl FeatureSampleSet {
    pub fn new(name: impl Into<String>, feature_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        if rows.len() < MIN_SAMPLES {
            return Err(Error::EmptySet(format!("{name} ({} samples, need {MIN_SAMPLES})", rows.len())));
        }
        let f = feature_names.len();
        let mut data = Vec::with_capacity(rows.len() * f);
        for r in &rows {
            if r.len() != f {
                return Err(Error::ShapeMismatch(format!(
                    "set `{name}`: row has {} features, expected {f}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            name,
            feature_names,
            rows: rows.len(),
            data,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let f = self.features();
        &self.data[i * f..(i + 1) * f]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.features() + j]).collect()
    }

    fn column_at(&self, j: usize, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.data[i * self.features() + j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureKappa {
    pub name: String,
    /// κ of the full, undownsampled set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub kappa_median: f64,
    /// `(q97.5 − q2.5) / (2·median)`, in percent.
    pub ci95_halfwidth_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub set: String,
    pub seed: u64,
    pub trials: usize,
    pub downsample_size: usize,
    pub features: Vec<FeatureKappa>,
    pub mean_kappa: f64,
    pub median_kappa: f64,
}

impl KappaReport {
    /// Largest relative half-width over features.
    pub fn max_ci95_halfwidth_pct(&self) -> f64 {
        self.features
            .iter()
            .map(|f| f.ci95_halfwidth_pct)
            .fold(0.0, f64::max)
    }
}

/// The RNG stream for one (trial, set) pair, independent of scheduling.
pub fn trial_rng(seed: u64, trial: u64, set: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&set.to_le_bytes());
    key[24..].copy_from_slice(b"kappa-ds");
    ChaCha12Rng::from_seed(key)
}

/// Repeated downsampling estimate of κ for each set.
///
/// Every set is subsampled without replacement to the size of the smallest
/// set; sets already at that size are used whole. The per-feature median
/// over trials is the estimate.
pub fn bootstrap_kappa(sets: &[FeatureSampleSet], trials: usize, seed: u64) -> Result<Vec<KappaReport>> {
    if sets.is_empty() {
        return Err(Error::EmptySet("no sample sets".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let f = sets[0].features();
    if let Some(bad) = sets.iter().find(|s| s.features() != f) {
        return Err(Error::ShapeMismatch(format!(
            "set `{}` has {} features, expected {f}",
            bad.name(),
            bad.features()
        )));
    }
    let size = sets.iter().map(FeatureSampleSet::len).min().unwrap_or(0);

    sets.iter()
        .enumerate()
        .map(|(s, set)| {
            let full: Vec<f64> = (0..f)
                .map(|j| kappa(&set.column(j)))
                .collect::<Result<_>>()?;
            // trial × feature, filled by trial index
            let per_trial: Vec<Vec<f64>> = if set.len() == size {
                vec![full.clone()]
            } else {
                (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = trial_rng(seed, t as u64, s as u64);
                        let mut rows = rand::seq::index::sample(&mut rng, set.len(), size).into_vec();
                        rows.sort_unstable();
                        (0..f).map(|j| kappa(&set.column_at(j, &rows))).collect()
                    })
                    .collect::<Result<_>>()?
            };
            let features = (0..f)
                .map(|j| {
                    let mut vals: Vec<f64> = per_trial.iter().map(|t| t[j]).collect();
                    vals.sort_by(f64::total_cmp);
                    let median = stats::quantile_sorted(&vals, 0.5);
                    let spread = stats::quantile_sorted(&vals, 0.975) - stats::quantile_sorted(&vals, 0.025);
                    let pct = if spread == 0.0 { 0.0 } else { spread / (2.0 * median) * 100.0 };
                    FeatureKappa {
                        name: set.feature_names()[j].clone(),
                        kappa: Some(full[j]),
                        kappa_median: median,
                        ci95_halfwidth_pct: pct,
                    }
                })
                .collect();
            let mut report = KappaReport {
                set: set.name().to_string(),
                seed,
                trials,
                downsample_size: size,
                features,
                mean_kappa: 0.0,
                median_kappa: 0.0,
            };
            let (mean, median) = mean_median_kappa(&report);
            report.mean_kappa = mean;
            report.median_kappa = median;
            Ok(report)
        })
        .collect()
}

/// Mean and median of the per-feature median κ.
pub fn mean_median_kappa(report: &KappaReport) -> (f64, f64) {
    let v: Vec<f64> = report.features.iter().map(|f| f.kappa_median).collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    (stats::mean(&v), stats::median(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn histogram_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..32_000).map(|_| rng.gen()).collect();
        let h = histogram32(&u);
        assert!(h.counts.iter().all(|&c| (800..=1200).contains(&c)), "{:?}", h.counts);
        assert_eq!(h.counts.iter().sum::<u64>(), 32_000);

        let mut v = vec![0.0; 9];
        v.push(1.0);
        let h = histogram32(&v);
        let mut expected = [0u64; 32];
        expected[0] = 9;
        expected[31] = 1;
        assert_eq!(h.counts, expected);
    }

    #[test]
    fn savgol_examples() {
        let c = vec![4.0; 32];
        for v in savgol_smooth(&c, 3, 1).unwrap() {
            assert!((v - 4.0).abs() < 1e-12);
        }
        let mut c = vec![0.0; 32];
        c[1] = 3.0;
        let s = savgol_smooth(&c, 3, 1).unwrap();
        assert!((s[1] - 1.0).abs() < 1e-12);
        // mirror padding: s[0] = (c[1] + c[0] + c[1]) / 3
        assert!((s[0] - 2.0).abs() < 1e-12);

        let line: Vec<f64> = (0..32).map(|i| 2.0 * i as f64 + 1.0).collect();
        let s = savgol_smooth(&line, 3, 1).unwrap();
        for i in 1..31 {
            assert!((s[i] - line[i]).abs() < 1e-9);
        }
        // degree 2 over 5 points reproduces a parabola in the interior
        let para: Vec<f64> = (0..32).map(|i| (i * i) as f64).collect();
        let s = savgol_smooth(&para, 5, 2).unwrap();
        for i in 2..30 {
            assert!((s[i] - para[i]).abs() < 1e-9);
        }
        assert!(savgol_smooth(&line, 4, 1).is_err());
    }

    #[test]
    fn savgol_window3_degree1_is_a_running_mean() {
        let c = savgol_coefficients(3, 1);
        for v in c {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn minima_examples() {
        let bell: Vec<f64> = (0..32).map(|i| (-(i as f64 - 15.5).powi(2) / 30.0).exp()).collect();
        assert!(local_minima(&bell).is_empty());

        let mut two = vec![1.0; 32];
        for i in 0..32 {
            let d4 = (i as f64 - 4.0).abs();
            let d27 = (i as f64 - 27.0).abs();
            two[i] = 100.0 / (1.0 + d4) + 100.0 / (1.0 + d27);
        }
        // symmetric peaks leave a two-bin plateau at 15/16, which resolves leftmost
        assert_eq!(two[15], two[16]);
        assert!(two[15] < two[14] && two[16] < two[17]);
        assert_eq!(local_minima(&two), vec![15]);

        let inc: Vec<f64> = (0..32).map(|i| i as f64).collect();
        assert!(local_minima(&inc).is_empty());

        let plateau = [5.0, 2.0, 2.0, 2.0, 5.0];
        assert_eq!(local_minima(&plateau), vec![1]);
        let shelf = [5.0, 2.0, 2.0, 1.0, 5.0];
        assert_eq!(local_minima(&shelf), vec![3]);
    }

    #[test]
    fn split_at_valley_edge() {
        // dense ramps around 4.5 and 26 joined by a thin floor
        let mut values = Vec::new();
        for i in 0..3200 {
            let x = i as f64 / 100.0;
            let density = 1 + (60.0 / (1.0 + (x - 4.5).abs()) + 60.0 / (1.0 + (x - 26.0).abs())) as usize;
            values.extend(std::iter::repeat(x).take(density));
        }
        let split = split_modes(&values);
        // direct scan over maximal runs of equal smoothed counts
        let s = &split.smoothed_counts;
        let mut direct = Vec::new();
        let mut start = 0;
        while start < s.len() {
            let mut end = start;
            while end + 1 < s.len() && s[end + 1] == s[start] {
                end += 1;
            }
            if start > 0 && end + 1 < s.len() && s[start - 1] > s[start] && s[end + 1] > s[start] {
                direct.push(start);
            }
            start = end + 1;
        }
        assert_eq!(split.minima, direct);
        assert_eq!(split.mode_count(), 2, "{:?}", split.smoothed_counts);
        let m = split.minima[0];
        assert!((14..=17).contains(&m));
        assert_eq!(split.mode_intervals[0].1, split.histogram.edges[m + 1]);
        assert_eq!(split.mode_intervals[1].0, split.histogram.edges[m + 1]);
    }

    #[test]
    fn kurtosis_examples() {
        let v: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        assert_eq!(kurtosis(&v), 1.0);
        assert_eq!(kurtosis(&[1.0, 2.0, 3.0]), SPIKE_CAP);
        assert_eq!(kurtosis(&[2.0; 10]), SPIKE_CAP);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..100_000).map(|_| rng.gen()).collect();
        assert!((kurtosis(&u) - 1.8).abs() < 0.05);
        let g: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!((kurtosis(&g) - 3.0).abs() < 0.1);
    }

    #[test]
    fn kappa_of_gaussian_and_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let k = kappa(&g).unwrap();
        assert!((k - 3.0).abs() < 0.3, "gaussian κ = {k}");

        let u: Vec<f64> = (0..100_000).map(|_| rng.gen()).collect();
        let k = kappa_detailed(&u).unwrap();
        assert!((k.kappa - 1.8).abs() < 0.2, "uniform κ = {}", k.kappa);
    }

    #[test]
    fn kappa_of_two_well_separated_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut v = Vec::new();
        for _ in 0..50_000 {
            v.push(0.1 * rng.sample::<f64, _>(StandardNormal));
            v.push(10.0 + 0.1 * rng.sample::<f64, _>(StandardNormal));
        }
        // oracle: each half on its own
        let left: Vec<f64> = v.iter().copied().filter(|&x| x < 5.0).collect();
        let right: Vec<f64> = v.iter().copied().filter(|&x| x >= 5.0).collect();
        let expected = 0.5 * kurtosis(&left) + 0.5 * kurtosis(&right);
        let k = kappa(&v).unwrap();
        assert!((expected - 3.0).abs() < 0.5);
        assert!((k - 3.0).abs() < 0.5, "κ = {k}");
    }

    #[test]
    fn degenerate_and_small_inputs() {
        let k = kappa_detailed(&[1.5; 20]).unwrap();
        assert!(k.degenerate);
        assert_eq!(k.kappa, SPIKE_CAP);
        assert!(kappa(&[1.0, 2.0, 3.0]).is_err());
        assert!(kappa(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, f64::NAN]).is_err());
    }

    #[test]
    fn mode_populations_sum_to_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(8..2000);
            let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(3)).collect();
            let k = kappa_detailed(&v).unwrap();
            assert_eq!(k.populations.iter().sum::<usize>(), n);
            let w: f64 = k.populations.iter().map(|&p| p as f64 / n as f64).sum();
            assert!((w - 1.0).abs() < 1e-12);
            assert!(k.kappa >= 0.0);
        }
    }

    fn set(name: &str, n: usize, f: usize, rng: &mut ChaCha8Rng) -> FeatureSampleSet {
        let names = (0..f).map(|j| format!("f{j}")).collect();
        let rows = (0..n)
            .map(|_| (0..f).map(|j| rng.gen::<f64>() * (j + 1) as f64).collect())
            .collect();
        FeatureSampleSet::new(name, names, rows).unwrap()
    }

    #[test]
    fn bootstrap_equal_sizes_has_no_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sets = vec![set("a", 40, 3, &mut rng), set("b", 40, 3, &mut rng)];
        let reports = bootstrap_kappa(&sets, 50, 1).unwrap();
        for (r, s) in reports.iter().zip(&sets) {
            assert_eq!(r.downsample_size, 40);
            for (j, f) in r.features.iter().enumerate() {
                assert_eq!(f.ci95_halfwidth_pct, 0.0);
                assert_eq!(f.kappa_median, kappa(&s.column(j)).unwrap());
            }
        }
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sets = vec![set("big", 300, 4, &mut rng), set("small", 60, 4, &mut rng)];
        let a = bootstrap_kappa(&sets, 40, 99).unwrap();
        let b = bootstrap_kappa(&sets, 40, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].downsample_size, 60);
        assert!(a[0].max_ci95_halfwidth_pct() > 0.0);
        let c = bootstrap_kappa(&sets, 40, 100).unwrap();
        assert_ne!(a[0], c[0]);
    }

    #[test]
    fn bootstrap_errors() {
        assert!(matches!(bootstrap_kappa(&[], 10, 0), Err(Error::EmptySet(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = set("x", 10, 2, &mut rng);
        assert!(bootstrap_kappa(std::slice::from_ref(&s), 0, 0).is_err());
        let short = FeatureSampleSet::new("y", vec!["a".into()], vec![vec![1.0]; 3]);
        assert!(matches!(short, Err(Error::EmptySet(_))));
    }

    #[test]
    fn mean_median_examples() {
        let mk = |ks: &[f64]| KappaReport {
            set: "s".into(),
            seed: 0,
            trials: 1,
            downsample_size: 8,
            features: ks
                .iter()
                .map(|&k| FeatureKappa {
                    name: "f".into(),
                    kappa: None,
                    kappa_median: k,
                    ci95_halfwidth_pct: 0.0,
                })
                .collect(),
            mean_kappa: 0.0,
            median_kappa: 0.0,
        };
        assert_eq!(mean_median_kappa(&mk(&[3.0, 3.0, 3.0])), (3.0, 3.0));
        let (mean, median) = mean_median_kappa(&mk(&[1.0, 2.0, 100.0]));
        assert!((mean - 103.0 / 3.0).abs() < 1e-12);
        assert!((mean - 34.33).abs() < 0.01);
        assert_eq!(median, 2.0);
    }
}
