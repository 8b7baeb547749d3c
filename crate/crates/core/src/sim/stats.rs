use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample mean with a batch-means confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width
    }
}

/// Splits `samples` (in arrival order) into `batches` contiguous batches and
/// builds a Student-t interval from the batch means. Trailing samples that do
/// not fill a batch still count toward the point estimate.
pub fn batch_means(samples: &[f64], batches: usize, confidence: f64) -> MeanEstimate {
    let n = samples.len();
    let mean = if n == 0 {
        0.0
    } else {
        samples.iter().sum::<f64>() / n as f64
    };
    let size = n.checked_div(batches).unwrap_or(0);
    if batches < 2 || size == 0 {
        return MeanEstimate {
            mean,
            half_width: f64::INFINITY,
        };
    }
    let means: Vec<f64> = samples
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let k = means.len() as f64;
    let grand = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (k - 1.0);
    let t = StudentsT::new(0.0, 1.0, k - 1.0)
        .expect("degrees of freedom positive")
        .inverse_cdf(0.5 + confidence / 2.0);
    MeanEstimate {
        mean,
        half_width: t * (var / k).sqrt(),
    }
}

/// Nearest-rank percentile, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_batches_match_textbook_interval() {
        // 4 batches of 2: means 1.5, 3.5, 5.5, 7.5; s = sqrt(20/3)
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let est = batch_means(&xs, 4, 0.95);
        assert_eq!(est.mean, 4.5);
        let se = (20.0f64 / 3.0 / 4.0).sqrt();
        // t_{0.975, 3}
        assert!((est.half_width - 3.182446 * se).abs() < 1e-4);
        assert!(est.contains(4.5 + est.half_width * 0.99));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(batch_means(&[1.0], 4, 0.95).half_width.is_infinite());
        assert!(batch_means(&[], 4, 0.95).half_width.is_infinite());
    }

    #[test]
    fn percentiles() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&xs, 0.5), 50.0);
        assert_eq!(percentile(&xs, 0.99), 99.0);
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 1.0), 100.0);
    }
}
