//! Mergeable running statistics and log-log exponent fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Count, mean, sum of squared deviations, min and max of one named statistic.
///
/// Updates use Welford's recurrence and merges the pairwise formula of Chan,
/// Golub and LeVeque, so merging is exact up to rounding and independent of
/// how observations were split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub statistic: String,
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl RunningStats {
    pub fn new(statistic: impl Into<String>) -> Self {
        Self {
            statistic: statistic.into(),
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn from_values(statistic: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::new(statistic);
        for x in values {
            s.push(x);
        }
        s
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Unbiased sample variance (zero for fewer than two observations).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn merge(&self, other: &RunningStats) -> Result<RunningStats> {
        if self.statistic != other.statistic {
            return Err(Error::StatisticMismatch {
                left: self.statistic.clone(),
                right: other.statistic.clone(),
            });
        }
        if other.count == 0 {
            return Ok(self.clone());
        }
        if self.count == 0 {
            return Ok(other.clone());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        Ok(RunningStats {
            statistic: self.statistic.clone(),
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        })
    }
}

pub fn merge_statistics(a: &RunningStats, b: &RunningStats) -> Result<RunningStats> {
    a.merge(b)
}

/// Least-squares line through `(ln n, ln value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

impl ExponentFit {
    /// Fitted value at `n`.
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

/// Fits `value ~ C n^slope` to `(n, value, stderr)` triples by ordinary least
/// squares in log-log coordinates. The slope error comes from the residuals;
/// the per-point errors are not used as weights.
pub fn fit_exponent(points: &[(f64, f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::InvalidFit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(n, v, _)) = points.iter().find(|&&(n, v, _)| !(n > 0.0 && v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidFit(format!("size and value must be positive, got ({n}, {v})")));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, v, _)| (n.ln(), v.ln())).collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidFit("all sizes are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_stderr = (sse / (k - 2.0) / sxx).sqrt();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(ExponentFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        points: xy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn basic_moments() {
        let s = RunningStats::from_values("x", [3.0, 5.0]);
        assert_eq!(s.count, 2);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.variance(), 2.0);
        assert_eq!((s.min, s.max), (3.0, 5.0));
        let one = RunningStats::from_values("x", [7.0]);
        assert_eq!(one.mean, 7.0);
        assert_eq!(one.stderr(), 0.0);
    }

    #[test]
    fn merge_identities() {
        let x = RunningStats::from_values("x", [1.0, 2.0, 4.0]);
        assert_eq!(merge_statistics(&x, &RunningStats::new("x")).unwrap(), x);
        assert_eq!(merge_statistics(&RunningStats::new("x"), &x).unwrap(), x);
        let a = RunningStats::from_values("x", [3.0]);
        let b = RunningStats::from_values("x", [5.0]);
        let m = merge_statistics(&a, &b).unwrap();
        assert_eq!((m.count, m.mean), (2, 4.0));
        assert!(merge_statistics(&a, &RunningStats::new("y")).is_err());
    }

    #[test]
    fn random_splits_agree_with_single_pass() {
        let mut rng = SplitMix64::new(4);
        let values: Vec<f64> = (0..1000).map(|_| rng.next_f64() * 100.0 - 30.0).collect();
        let whole = RunningStats::from_values("v", values.iter().copied());
        for _ in 0..20 {
            let mut parts: Vec<RunningStats> = Vec::new();
            let mut i = 0;
            while i < values.len() {
                let len = 1 + rng.below(80) as usize;
                let end = (i + len).min(values.len());
                parts.push(RunningStats::from_values("v", values[i..end].iter().copied()));
                i = end;
            }
            // Merge in a random order.
            while parts.len() > 1 {
                let a = parts.swap_remove(rng.below(parts.len() as u64) as usize);
                let b = parts.swap_remove(rng.below(parts.len() as u64) as usize);
                parts.push(a.merge(&b).unwrap());
            }
            let m = &parts[0];
            assert_eq!(m.count, whole.count);
            assert!((m.mean - whole.mean).abs() < 1e-9);
            assert!((m.variance() - whole.variance()).abs() < 1e-9 * whole.variance());
            assert_eq!((m.min, m.max), (whole.min, whole.max));
        }
    }

    #[test]
    fn planted_power_laws() {
        let pts: Vec<(f64, f64, f64)> = [16.0, 32.0, 64.0, 128.0].iter().map(|&n| (n, n * n, 0.0)).collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.predict(256.0) - 65536.0).abs() < 1e-6);
        let flat: Vec<(f64, f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&n| (n, 3.0, 0.0)).collect();
        let fit = fit_exponent(&flat).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn noisy_power_law_within_two_stderr() {
        let mut rng = SplitMix64::new(8);
        let mut inside = 0;
        for _ in 0..200 {
            let pts: Vec<(f64, f64, f64)> = (0..8)
                .map(|k| {
                    let n = 8.0 * 2f64.powi(k);
                    let noise = 1.0 + 0.05 * (2.0 * rng.next_f64() - 1.0);
                    (n, 0.7 * n.powf(1.13) * noise, 0.0)
                })
                .collect();
            let fit = fit_exponent(&pts).unwrap();
            if (fit.slope - 1.13).abs() <= 2.0 * fit.slope_stderr {
                inside += 1;
            }
        }
        // Roughly 95% coverage for a t-interval with 6 degrees of freedom at 2 se.
        assert!(inside >= 170, "{inside}");
    }

    #[test]
    fn fit_errors() {
        assert!(fit_exponent(&[(1.0, 1.0, 0.0), (2.0, 2.0, 0.0)]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0, 0.0), (2.0, 0.0, 0.0), (3.0, 1.0, 0.0)]).is_err());
        assert!(fit_exponent(&[(2.0, 1.0, 0.0), (2.0, 2.0, 0.0), (2.0, 1.0, 0.0)]).is_err());
    }
}
