//! Histograms, distances between distributions, and error bars.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<usize>,
    pub width: f64,
    pub total: usize,
}

/// Density-normalized histogram: Σ density·width equals the fraction of
/// values that fall inside the range.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Invalid("histogram of empty input".into()));
    }
    if bins == 0 || !(hi > lo) {
        return Err(Error::Invalid("histogram needs bins ≥ 1 and lo < hi".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = values.len() as f64;
    Ok(Histogram {
        centers: (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect(),
        densities: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        counts,
        width,
        total: values.len(),
    })
}

impl Histogram {
    /// L¹ distance to a density, comparing each bin with the bin average of
    /// the density. Mass outside the histogram range counts fully.
    pub fn l1_distance<F: Fn(f64) -> f64>(&self, density: F) -> f64 {
        let inside: f64 = self.counts.iter().sum::<usize>() as f64 / self.total as f64;
        let mut d = 0.0;
        for (c, h) in self.centers.iter().zip(&self.densities) {
            let lo = c - 0.5 * self.width;
            let avg = crate::quad::integrate(&density, lo, lo + self.width, 4, 8) / self.width;
            d += (h - avg).abs() * self.width;
        }
        d + (1.0 - inside)
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Leave-one-out jackknife standard error of the sample mean.
pub fn jackknife_stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = xs.iter().sum();
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1) as f64).collect();
    let m = mean(&loo);
    let s: f64 = loo.iter().map(|x| (x - m) * (x - m)).sum();
    ((n - 1) as f64 / n as f64 * s).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_single_bin() {
        let h = histogram(&[0.3], 1, 0.0, 0.5).unwrap();
        assert_eq!(h.densities, vec![2.0]);
    }

    #[test]
    fn flat_for_uniform_grid() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let h = histogram(&xs, 10, 0.0, 1.0).unwrap();
        assert!(h.densities.iter().all(|d| (d - 1.0).abs() < 1e-12));
        assert!(h.l1_distance(|_| 1.0) < 1e-12);
        assert!(histogram(&[], 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn ks_of_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&xs, |x| x) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn jackknife_matches_classical_for_mean() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let (_, se) = mean_stderr(&xs);
        assert!((jackknife_stderr(&xs) - se).abs() < 1e-12);
    }
}
