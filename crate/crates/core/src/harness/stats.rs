//! Summary statistics over trial results.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Standard error of the mean from the sample variance; 0 for one value.
    pub stderr: f64,
    pub median: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Some(SummaryStats {
            count: n,
            mean,
            stderr,
            median,
            p95: v[rank - 1],
            min: v[0],
            max: v[n - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = SummaryStats::of(&[5.0; 7]).unwrap();
        assert_eq!((s.mean, s.stderr), (5.0, 0.0));
        let s = SummaryStats::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.stderr, s.median), (2.0, 1.0, 2.0));
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = SummaryStats::of(&v).unwrap();
        assert_eq!((s.median, s.p95, s.min, s.max), (50.5, 95.0, 1.0, 100.0));
        assert!(SummaryStats::of(&[]).is_none());
    }
}
