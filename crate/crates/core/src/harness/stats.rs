use serde::{Deserialize, Serialize};

/// Median by linear interpolation; `NaN` for an empty sample.
pub fn median(values: &[f64]) -> f64 {
    quantile(&sorted(values), 0.5)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile of a sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = q * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Summary of a sample, reduced in index order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Standard error of the mean; absent for a single observation.
    pub std_error: Option<f64>,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mut sum = 0.0;
        for v in values {
            sum += v;
        }
        let mean = sum / n as f64;
        let std_error = (n > 1).then(|| {
            let mut ss = 0.0;
            for v in values {
                ss += (v - mean) * (v - mean);
            }
            (ss / (n - 1) as f64 / n as f64).sqrt()
        });
        let s = sorted(values);
        Self {
            n,
            mean,
            median: quantile(&s, 0.5),
            std_error,
            q05: quantile(&s, 0.05),
            q25: quantile(&s, 0.25),
            q75: quantile(&s, 0.75),
            q95: quantile(&s, 0.95),
            min: s.first().copied().unwrap_or(f64::NAN),
            max: s.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_samples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let s = SampleStats::of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.q25, 2.0);
        assert_eq!(s.min, 1.0);
        assert!((s.std_error.unwrap() - (2.5f64 / 5.0).sqrt()).abs() < 1e-15);
        assert_eq!(SampleStats::of(&[7.0]).std_error, None);
    }
}
