//! Chi-square tests used by the statistical oracles.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
}

impl ChiSquare {
    fn from_statistic(statistic: f64, degrees_of_freedom: u64) -> Self {
        let p_value = if degrees_of_freedom == 0 {
            1.0
        } else {
            ChiSquared::new(degrees_of_freedom as f64)
                .map(|d| d.sf(statistic))
                .unwrap_or(f64::NAN)
        };
        ChiSquare {
            statistic,
            degrees_of_freedom,
            p_value,
        }
    }

    pub fn rejects_at(&self, significance: f64) -> bool {
        self.p_value < significance
    }
}

/// Goodness of fit of `observed` counts against category probabilities.
pub fn goodness_of_fit(observed: &[u64], expected_probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut statistic = 0.0;
    let mut categories = 0u64;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = total * p;
        if e > 0.0 {
            statistic += (o as f64 - e).powi(2) / e;
            categories += 1;
        }
    }
    ChiSquare::from_statistic(statistic, categories.saturating_sub(1))
}

/// Goodness of fit against the uniform distribution over `observed.len()` categories.
pub fn uniformity(observed: &[u64]) -> ChiSquare {
    let p = 1.0 / observed.len() as f64;
    goodness_of_fit(observed, &vec![p; observed.len()])
}

/// Two-sample homogeneity test on a 2 x K contingency table. Categories that
/// are empty in both samples are dropped.
pub fn homogeneity(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let total = (na + nb) as f64;
    if na == 0 || nb == 0 {
        return ChiSquare::from_statistic(0.0, 0);
    }
    let mut statistic = 0.0;
    let mut categories = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        categories += 1;
        let ea = col * na as f64 / total;
        let eb = col * nb as f64 / total;
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    ChiSquare::from_statistic(statistic, categories.saturating_sub(1))
}

/// Total-variation distance between the empirical distributions of two count vectors.
pub fn total_variation(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    0.5 * a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na as f64 - y as f64 / nb as f64).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_zero_statistic() {
        let r = uniformity(&[100, 100, 100, 100]);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.degrees_of_freedom, 3);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_statistic() {
        // (10-25)^2/25 + (40-25)^2/25 = 18, df = 1
        let r = uniformity(&[10, 40]);
        assert!((r.statistic - 18.0).abs() < 1e-12);
        // P(chi2_1 > 18) = erfc(3) ≈ 2.209e-5
        assert!((r.p_value - 2.209_049_699_858_544e-5).abs() < 1e-9);
        assert!(r.rejects_at(0.001));
    }

    #[test]
    fn homogeneity_identical_samples() {
        let r = homogeneity(&[5, 7, 0, 9], &[5, 7, 0, 9]);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.degrees_of_freedom, 2);
        assert_eq!(total_variation(&[5, 7, 0, 9], &[10, 14, 0, 18]), 0.0);
    }

    #[test]
    fn homogeneity_detects_shift() {
        let r = homogeneity(&[1000, 0], &[0, 1000]);
        assert!(r.rejects_at(0.001));
        assert!((total_variation(&[1000, 0], &[0, 1000]) - 1.0).abs() < 1e-12);
    }
}
