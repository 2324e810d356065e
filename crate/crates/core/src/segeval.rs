//! Segmentation evaluation: confusion matrices, per-class scores, best-half
//! pooling and the training-size power law `f(x) = b + a·x^(−c)`.

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassMap, Ontology};
use crate::error::{Error, Result};
use crate::stats;

/// Pixel counts indexed `[ground truth][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub ontology: Ontology,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(ontology: Ontology) -> Self {
        let k = ontology.arity();
        Self {
            ontology,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.ontology != other.ontology {
            return Err(Error::MixedOntologies);
        }
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
        Ok(())
    }

    /// Sum of several matrices sharing one ontology.
    pub fn pooled(matrices: &[ConfusionMatrix]) -> Result<ConfusionMatrix> {
        let first = matrices.first().ok_or_else(|| Error::Empty("no confusion matrices".into()))?;
        let mut acc = ConfusionMatrix::zeros(first.ontology);
        for m in matrices {
            acc.merge(m)?;
        }
        Ok(acc)
    }
}

pub fn confusion(pred: &ClassMap, gt: &ClassMap) -> Result<ConfusionMatrix> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if pred.ontology() != gt.ontology() {
        return Err(Error::MixedOntologies);
    }
    let mut cm = ConfusionMatrix::zeros(gt.ontology());
    for (&g, &p) in gt.data().iter().zip(pred.data()) {
        cm.counts[g as usize][p as usize] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub iou: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub names: Vec<String>,
    /// `None` for a class absent from both ground truth and prediction.
    pub per_class: Vec<Option<ClassScores>>,
    /// Means over defined classes only.
    pub mean: ClassScores,
    pub undefined: Vec<usize>,
}

impl ClassMetrics {
    pub fn miou(&self) -> f64 {
        self.mean.iou
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<ClassMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix has no pixels".into()));
    }
    let k = cm.classes();
    let mut per_class = Vec::with_capacity(k);
    let mut undefined = Vec::new();
    for c in 0..k {
        let tp = cm.counts[c][c];
        let row: u64 = cm.counts[c].iter().sum();
        let col: u64 = cm.counts.iter().map(|r| r[c]).sum();
        if row == 0 && col == 0 {
            per_class.push(None);
            undefined.push(c);
            continue;
        }
        let fn_ = row - tp;
        let fp = col - tp;
        let tn = total - tp - fn_ - fp;
        per_class.push(Some(ClassScores {
            iou: ratio(tp, tp + fp + fn_),
            accuracy: ratio(tp + tn, total),
            precision: ratio(tp, col),
            recall: ratio(tp, row),
        }));
    }
    let defined: Vec<&ClassScores> = per_class.iter().flatten().collect();
    let n = defined.len() as f64;
    let avg = |f: fn(&ClassScores) -> f64| defined.iter().map(|s| f(s)).sum::<f64>() / n;
    Ok(ClassMetrics {
        names: (0..k).map(|c| cm.ontology.name(c as u8).to_string()).collect(),
        mean: ClassScores {
            iou: avg(|s| s.iou),
            accuracy: avg(|s| s.accuracy),
            precision: avg(|s| s.precision),
            recall: avg(|s| s.recall),
        },
        per_class,
        undefined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedConfusion {
    pub rows: Vec<Vec<f64>>,
    /// Ground-truth classes with no pixels; their rows are all zero.
    pub empty_rows: Vec<usize>,
}

/// Rows divided by their ground-truth totals; the diagonal is the recall.
pub fn normalize_confusion(cm: &ConfusionMatrix) -> NormalizedConfusion {
    let mut empty_rows = Vec::new();
    let rows = cm
        .counts
        .iter()
        .enumerate()
        .map(|(g, row)| {
            let sum: u64 = row.iter().sum();
            if sum == 0 {
                empty_rows.push(g);
            }
            row.iter().map(|&v| ratio(v, sum)).collect()
        })
        .collect();
    NormalizedConfusion { rows, empty_rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchResult {
    pub id: String,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestHalf {
    pub median_miou: f64,
    pub selected: Vec<String>,
    /// Set when no patch strictly exceeded the median and `≥` was used instead.
    pub tie_fallback: bool,
    pub metrics: ClassMetrics,
}

/// Pooled metrics over the patches whose mIoU exceeds the median mIoU.
pub fn best_half(patches: &[PatchResult]) -> Result<BestHalf> {
    if patches.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: patches.len(),
        });
    }
    let mious = patches
        .iter()
        .map(|p| metrics(&p.confusion).map(|m| m.miou()))
        .collect::<Result<Vec<f64>>>()?;
    let median = stats::median(&mious);
    let mut chosen: Vec<usize> = (0..patches.len()).filter(|&i| mious[i] > median).collect();
    let tie_fallback = chosen.is_empty();
    if tie_fallback {
        chosen = (0..patches.len()).filter(|&i| mious[i] >= median).collect();
    }
    let pooled = ConfusionMatrix::pooled(&chosen.iter().map(|&i| patches[i].confusion.clone()).collect::<Vec<_>>())?;
    Ok(BestHalf {
        median_miou: median,
        selected: chosen.iter().map(|&i| patches[i].id.clone()).collect(),
        tie_fallback,
        metrics: metrics(&pooled)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    /// `w_i ∝ x_i`.
    #[default]
    Linear,
}

/// Quantity the curve is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    #[default]
    Score,
    /// `1 − score`, an error rate.
    Complement,
}

impl FitTarget {
    fn apply(self, y: f64) -> f64 {
        match self {
            Self::Score => y,
            Self::Complement => 1.0 - y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub target: FitTarget,
    /// Grid points over `c ∈ (0, C_MAX]`.
    pub grid_points: usize,
    /// Golden-section refinement around the best grid point.
    pub refine: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weighting: Weighting::Linear,
            target: FitTarget::Score,
            grid_points: 2000,
            refine: true,
        }
    }
}

pub const C_MAX: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Root-mean-square error in the fitted target space.
    pub residual: f64,
    /// Weighted sum of squared errors that was minimized.
    pub weighted_sse: f64,
    pub sizes: Vec<f64>,
    pub scores: Vec<f64>,
    pub options: FitOptions,
}

struct Candidate {
    a: f64,
    b: f64,
    c: f64,
    sse: f64,
}

fn solve_linear(x: &[f64], y: &[f64], w: &[f64], c: f64) -> Candidate {
    let z: Vec<f64> = x.iter().map(|v| v.powf(-c)).collect();
    let sw: f64 = w.iter().sum();
    let zm = z.iter().zip(w).map(|(z, w)| z * w).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut szz = 0.0;
    let mut szy = 0.0;
    for i in 0..z.len() {
        szz += w[i] * (z[i] - zm) * (z[i] - zm);
        szy += w[i] * (z[i] - zm) * (y[i] - ym);
    }
    let a = if szz > 0.0 { szy / szz } else { 0.0 };
    let b = ym - a * zm;
    let sse = (0..z.len()).map(|i| w[i] * (b + a * z[i] - y[i]).powi(2)).sum();
    Candidate { a, b, c, sse }
}

pub fn fit_power_law(sizes: &[f64], scores: &[f64], options: FitOptions) -> Result<PowerLawFit> {
    if sizes.len() != scores.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} sizes vs {} scores",
            sizes.len(),
            scores.len()
        )));
    }
    if sizes.iter().any(|&x| !(x > 0.0 && x.is_finite())) || scores.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidParameter("sizes must be positive and scores finite".into()));
    }
    if options.grid_points == 0 {
        return Err(Error::InvalidParameter("grid_points must be positive".into()));
    }
    let mut distinct = sizes.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: distinct.len(),
        });
    }
    let y: Vec<f64> = scores.iter().map(|&s| options.target.apply(s)).collect();
    let w: Vec<f64> = match options.weighting {
        Weighting::Uniform => vec![1.0; sizes.len()],
        Weighting::Linear => {
            let total: f64 = sizes.iter().sum();
            sizes.iter().map(|x| x / total).collect()
        }
    };

    let g = options.grid_points;
    let mut best_k = 1;
    let mut best = solve_linear(sizes, &y, &w, C_MAX / g as f64);
    for k in 2..=g {
        let cand = solve_linear(sizes, &y, &w, C_MAX * k as f64 / g as f64);
        if cand.sse < best.sse {
            best = cand;
            best_k = k;
        }
    }

    if options.refine {
        let step = C_MAX / g as f64;
        let lo = (best_k as f64 - 1.0) * step;
        let hi = ((best_k as f64 + 1.0) * step).min(C_MAX);
        let refined = golden_section(lo.max(step * 1e-6), hi, |c| solve_linear(sizes, &y, &w, c).sse);
        let cand = solve_linear(sizes, &y, &w, refined);
        if cand.sse < best.sse {
            best = cand;
        }
    }

    let residual = (sizes
        .iter()
        .zip(&y)
        .map(|(x, y)| (best.b + best.a * x.powf(-best.c) - y).powi(2))
        .sum::<f64>()
        / sizes.len() as f64)
        .sqrt();
    Ok(PowerLawFit {
        a: best.a,
        b: best.b,
        c: best.c,
        residual,
        weighted_sse: best.sse,
        sizes: sizes.to_vec(),
        scores: scores.to_vec(),
        options,
    })
}

fn golden_section(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
        // ties keep the lower bracket
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

impl PowerLawFit {
    /// Curve value in the fitted target space.
    pub fn curve(&self, size: f64) -> f64 {
        self.b + self.a * size.powf(-self.c)
    }

    /// Predicted score at `size`.
    pub fn score_at(&self, size: f64) -> f64 {
        self.options.target.apply(self.curve(size))
    }

    /// Size at which the predicted score reaches `score`.
    pub fn size_for(&self, score: f64) -> Result<f64> {
        let t = self.options.target.apply(score);
        let ratio = self.a / (t - self.b);
        let x = ratio.powf(1.0 / self.c);
        if !(ratio > 0.0) || !x.is_finite() {
            return Err(Error::Unreachable(score));
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    Score(f64),
    Size(f64),
}

/// Forward (`Size → Score`) or inverse (`Score → Size`) evaluation.
pub fn extrapolate(fit: &PowerLawFit, query: Extrapolation) -> Result<Extrapolation> {
    match query {
        Extrapolation::Size(x) => {
            if !(x > 0.0) {
                return Err(Error::InvalidParameter(format!("size must be positive, got {x}")));
            }
            Ok(Extrapolation::Score(fit.score_at(x)))
        }
        Extrapolation::Score(s) => fit.size_for(s).map(Extrapolation::Size),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(data: Vec<u8>, w: u32, ont: Ontology) -> ClassMap {
        let h = data.len() as u32 / w;
        ClassMap::new(w, h, data, ont).unwrap()
    }

    fn toy() -> ConfusionMatrix {
        let gt = map(vec![0, 0, 1, 1], 2, Ontology::ThreeClass);
        let pred = map(vec![0, 1, 1, 1], 2, Ontology::ThreeClass);
        confusion(&pred, &gt).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let cm = toy();
        assert_eq!(cm.counts, vec![vec![1, 1, 0], vec![0, 2, 0], vec![0, 0, 0]]);

        let gt = map(vec![0, 1, 2, 3, 4, 4], 3, Ontology::FiveClass);
        let diag = confusion(&gt, &gt).unwrap();
        for g in 0..5 {
            for p in 0..5 {
                assert_eq!(diag.counts[g][p] != 0, g == p);
            }
        }
        let constant = map(vec![3; 6], 3, Ontology::FiveClass);
        let cm = confusion(&constant, &gt).unwrap();
        assert!(cm.counts.iter().all(|r| r.iter().enumerate().all(|(p, &v)| v == 0 || p == 3)));

        let other = map(vec![0; 4], 2, Ontology::FiveClass);
        assert!(matches!(confusion(&other, &gt), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn toy_metrics() {
        let m = metrics(&toy()).unwrap();
        let a = m.per_class[0].unwrap();
        let b = m.per_class[1].unwrap();
        assert_eq!(a.iou, 0.5);
        assert_eq!(b.iou, 2.0 / 3.0);
        assert_eq!(m.per_class[2], None);
        assert_eq!(m.undefined, vec![2]);
        assert!((m.miou() - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(a.precision, 1.0);
        assert_eq!(a.recall, 0.5);
        assert_eq!(b.precision, 2.0 / 3.0);
        assert_eq!(a.accuracy, 0.75);

        let n = normalize_confusion(&toy());
        assert_eq!(n.rows[0], vec![0.5, 0.5, 0.0]);
        assert_eq!(n.rows[1], vec![0.0, 1.0, 0.0]);
        assert_eq!(n.empty_rows, vec![2]);
    }

    #[test]
    fn perfect_prediction() {
        let gt = map(vec![0, 1, 2, 2, 1, 0], 3, Ontology::ThreeClass);
        let m = metrics(&confusion(&gt, &gt).unwrap()).unwrap();
        for s in m.per_class.iter().flatten() {
            assert_eq!((s.iou, s.accuracy, s.precision, s.recall), (1.0, 1.0, 1.0, 1.0));
        }
        let n = normalize_confusion(&confusion(&gt, &gt).unwrap());
        assert_eq!(n.rows, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    }

    fn patch(id: &str, miou_hits: u64) -> PatchResult {
        // 2 classes, 10 pixels per class; `miou_hits` correct in each
        let miss = 10 - miou_hits;
        PatchResult {
            id: id.into(),
            confusion: ConfusionMatrix {
                ontology: Ontology::ThreeClass,
                counts: vec![vec![miou_hits, miss, 0], vec![miss, miou_hits, 0], vec![0, 0, 0]],
            },
        }
    }

    #[test]
    fn best_half_examples() {
        let patches: Vec<PatchResult> = [2, 4, 6, 8].iter().map(|&h| patch(&format!("p{h}"), h)).collect();
        let bh = best_half(&patches).unwrap();
        assert_eq!(bh.selected, vec!["p6".to_string(), "p8".to_string()]);
        assert!(!bh.tie_fallback);
        let pooled = ConfusionMatrix::pooled(&[patches[2].confusion.clone(), patches[3].confusion.clone()]).unwrap();
        assert_eq!(bh.metrics, metrics(&pooled).unwrap());

        let same: Vec<PatchResult> = (0..3).map(|i| patch(&format!("s{i}"), 5)).collect();
        let bh = best_half(&same).unwrap();
        assert!(bh.tie_fallback);
        assert_eq!(bh.selected.len(), 3);
        assert!(best_half(&same[..1]).is_err());
    }

    fn synthetic(a: f64, b: f64, c: f64) -> (Vec<f64>, Vec<f64>) {
        let sizes: Vec<f64> = (1..=10).map(|k| 10.0 * k as f64).collect();
        let scores = sizes.iter().map(|x| b + a * x.powf(-c)).collect();
        (sizes, scores)
    }

    #[test]
    fn power_law_round_trip() {
        let (sizes, scores) = synthetic(2.0, 0.5, 1.0);
        let fit = fit_power_law(&sizes, &scores, FitOptions::default()).unwrap();
        for (got, want) in [(fit.a, 2.0), (fit.b, 0.5), (fit.c, 1.0)] {
            assert!(((got - want) / want).abs() < 1e-4, "{got} vs {want}");
        }
        assert!(fit.residual < 1e-6);
        let x = fit.size_for(0.7).unwrap();
        assert!((x - 10.0).abs() < 1e-9);
        for s in [12.5, 40.0, 333.0] {
            let back = fit.size_for(fit.score_at(s)).unwrap();
            assert!((back - s).abs() / s < 1e-9);
        }
        assert!(matches!(fit.size_for(0.4), Err(Error::Unreachable(_))));
    }

    #[test]
    fn exact_inverse_from_known_parameters() {
        let (sizes, scores) = synthetic(2.0, 0.5, 1.0);
        let fit = PowerLawFit {
            a: 2.0,
            b: 0.5,
            c: 1.0,
            residual: 0.0,
            weighted_sse: 0.0,
            sizes,
            scores,
            options: FitOptions::default(),
        };
        assert!((fit.size_for(0.7).unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(extrapolate(&fit, Extrapolation::Size(10.0)).unwrap(), Extrapolation::Score(0.7));
    }

    #[test]
    fn flat_scores_pick_smallest_exponent() {
        let sizes = vec![10.0, 20.0, 30.0, 40.0];
        let fit = fit_power_law(&sizes, &[0.7; 4], FitOptions::default()).unwrap();
        assert!(fit.a.abs() < 1e-9);
        assert!((fit.b - 0.7).abs() < 1e-12);
        assert_eq!(fit.c, C_MAX / 2000.0);
    }

    #[test]
    fn complement_target() {
        let (sizes, errors) = synthetic(2.0, 0.1, 0.8);
        let scores: Vec<f64> = errors.iter().map(|e| 1.0 - e).collect();
        let opts = FitOptions {
            target: FitTarget::Complement,
            ..FitOptions::default()
        };
        let fit = fit_power_law(&sizes, &scores, opts).unwrap();
        assert!((fit.c - 0.8).abs() < 1e-4);
        assert!((fit.score_at(50.0) - scores[4]).abs() < 1e-9);
    }

    #[test]
    fn too_few_sizes() {
        let r = fit_power_law(&[10.0, 10.0, 20.0], &[0.1, 0.2, 0.3], FitOptions::default());
        assert!(matches!(r, Err(Error::InsufficientPoints { needed: 3, got: 2 })));
    }

    #[test]
    fn finer_grids_never_worse() {
        let sizes = [5.0, 9.0, 17.0, 40.0, 80.0, 150.0];
        let scores = [0.31, 0.52, 0.61, 0.74, 0.78, 0.83];
        let mut last = f64::INFINITY;
        for g in [25, 50, 100, 200, 400, 800] {
            let fit = fit_power_law(
                &sizes,
                &scores,
                FitOptions {
                    grid_points: g,
                    refine: false,
                    ..FitOptions::default()
                },
            )
            .unwrap();
            assert!(fit.weighted_sse <= last);
            last = fit.weighted_sse;
        }
    }

    fn brute_counts(pred: &[u8], gt: &[u8], k: usize) -> Vec<(u64, u64, u64)> {
        (0..k as u8)
            .map(|c| {
                let mut tp = 0;
                let mut fp = 0;
                let mut fn_ = 0;
                for (&p, &g) in pred.iter().zip(gt) {
                    match (p == c, g == c) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fn_ += 1,
                        _ => {}
                    }
                }
                (tp, fp, fn_)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn metrics_match_pixel_counting(
            gt in proptest::collection::vec(0u8..5, 64),
            pred in proptest::collection::vec(0u8..5, 64),
        ) {
            let cm = confusion(&map(pred.clone(), 8, Ontology::FiveClass), &map(gt.clone(), 8, Ontology::FiveClass)).unwrap();
            let m = metrics(&cm).unwrap();
            for (c, (tp, fp, fn_)) in brute_counts(&pred, &gt, 5).into_iter().enumerate() {
                let col: u64 = cm.counts.iter().map(|r| r[c]).sum();
                let row: u64 = cm.counts[c].iter().sum();
                prop_assert_eq!(cm.counts[c][c], tp);
                prop_assert_eq!(col - tp, fp);
                prop_assert_eq!(row - tp, fn_);
                if let Some(s) = m.per_class[c] {
                    prop_assert!(s.iou <= s.precision + 1e-15 && s.iou <= s.recall + 1e-15);
                    prop_assert_eq!(normalize_confusion(&cm).rows[c][c], s.recall);
                } else {
                    prop_assert_eq!(tp + fp + fn_, 0);
                }
            }
        }

        #[test]
        fn miou_invariant_under_relabeling(
            gt in proptest::collection::vec(0u8..5, 36),
            pred in proptest::collection::vec(0u8..5, 36),
            perm in Just([0u8, 1, 2, 3, 4]).prop_shuffle(),
        ) {
            let ont = Ontology::FiveClass;
            let base = metrics(&confusion(&map(pred.clone(), 6, ont), &map(gt.clone(), 6, ont)).unwrap()).unwrap();
            let relabel = |v: &[u8]| v.iter().map(|&c| perm[c as usize]).collect::<Vec<u8>>();
            let moved = metrics(&confusion(&map(relabel(&pred), 6, ont), &map(relabel(&gt), 6, ont)).unwrap()).unwrap();
            prop_assert!((base.miou() - moved.miou()).abs() < 1e-12);
        }
    }
}
