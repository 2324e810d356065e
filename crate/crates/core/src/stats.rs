//! Descriptive statistics with population (divisor n) conventions.

/// Mean, population standard deviation and standardized third/fourth moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    /// `E[z³]`
    pub skewness: f64,
    /// `E[z⁴]`, not excess
    pub kurtosis: f64,
    /// Zero variance: skewness and kurtosis were set to 0.
    pub degenerate: bool,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Below this standard deviation (relative to the mean's magnitude) a sample counts as constant.
const RELATIVE_ZERO_STD: f64 = 1e-12;

pub fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= RELATIVE_ZERO_STD * mu.abs().max(1.0) {
        return Moments {
            mean: mu,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            degenerate: true,
        };
    }
    let (mut m3, mut m4) = (0.0, 0.0);
    for v in values {
        let z = (v - mu) / sd;
        let z2 = z * z;
        m3 += z2 * z;
        m4 += z2 * z2;
    }
    Moments {
        mean: mu,
        std: sd,
        skewness: m3 / n,
        kurtosis: m4 / n,
        degenerate: false,
    }
}

/// Quantile by linear interpolation between order statistics (`h = (n−1)·p`).
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}
