//! Means and Student-t confidence intervals over independent runs.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Half-width of the two-sided interval; NaN with fewer than two samples.
    pub half_width: f64,
    pub n: usize,
}

impl Estimate {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean with a two-sided Student-t interval at `level` (e.g. 0.95).
/// `None` for an empty sample.
pub fn mean_ci(xs: &[f64], level: f64) -> Option<Estimate> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return Some(Estimate { mean: m, half_width: f64::NAN, n });
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("n >= 2")
        .inverse_cdf(0.5 + level / 2.0);
    let half_width = t * (sample_variance(xs) / n as f64).sqrt();
    Some(Estimate { mean: m, half_width, n })
}

/// Welch's t statistic and its approximate degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (va, vb) = (sample_variance(a) / a.len() as f64, sample_variance(b) / b.len() as f64);
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2)
        / (va.powi(2) / (a.len() - 1) as f64 + vb.powi(2) / (b.len() - 1) as f64);
    (t, df)
}

/// One-sided test that `mean(a) > mean(b)` at significance `alpha`.
pub fn greater_than(a: &[f64], b: &[f64], alpha: f64) -> bool {
    let (t, df) = welch_t(a, b);
    if !t.is_finite() || !df.is_finite() {
        return mean(a) > mean(b) && sample_variance(a) == 0.0 && sample_variance(b) == 0.0;
    }
    let crit = StudentsT::new(0.0, 1.0, df).expect("df > 0").inverse_cdf(1.0 - alpha);
    t > crit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_interval_matches_table() {
        // t_{0.975, 4} = 2.7764
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let e = mean_ci(&xs, 0.95).unwrap();
        assert_eq!(e.mean, 3.0);
        let expected = 2.776_445 * (2.5f64 / 5.0).sqrt();
        assert!((e.half_width - expected).abs() < 1e-4, "{}", e.half_width);
        assert!(mean_ci(&[], 0.95).is_none());
        assert!(mean_ci(&[1.0], 0.95).unwrap().half_width.is_nan());
    }

    #[test]
    fn overlap_and_welch() {
        let a = mean_ci(&[0.5, 0.6, 0.7], 0.95).unwrap();
        let b = mean_ci(&[0.65, 0.75, 0.85], 0.95).unwrap();
        assert!(a.overlaps(&b));
        assert!(greater_than(&[10.0, 11.0, 12.0, 10.5], &[1.0, 2.0, 1.5, 2.5], 0.05));
        assert!(!greater_than(&[1.0, 2.0, 3.0], &[1.5, 2.5, 2.0], 0.05));
    }
}
