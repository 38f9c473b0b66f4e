use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::params::CoverageParams;
use crate::combinatorics::binomial;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageBounds {
    /// Union (Markov) bound on the probability that some index is covered
    /// by no hint: `n * binom(M - S_y, m) / binom(M, m)`, clamped to 1.
    pub markov_failure_bound: f64,
    /// `n^(1 - δ² C)`, clamped to 1.
    pub chernoff_failure_bound: f64,
    /// `E[Y_y] = m k / (n + k - 1)`.
    #[serde(serialize_with = "ratio_as_f64")]
    pub expected_cover_count: Ratio<u128>,
}

fn ratio_as_f64<S: serde::Serializer>(r: &Ratio<u128>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(*r.numer() as f64 / *r.denom() as f64)
}

impl CoverageBounds {
    pub fn expected_cover_count_f64(&self) -> f64 {
        *self.expected_cover_count.numer() as f64 / *self.expected_cover_count.denom() as f64
    }
}

/// `a / b` as f64 for arbitrarily large integers (relative error ~1e-16).
fn big_ratio(a: &BigUint, b: &BigUint) -> f64 {
    let shift = b.bits().saturating_sub(64);
    let a = (a >> shift).to_f64().unwrap_or(f64::INFINITY);
    let b = (b >> shift).to_f64().unwrap_or(f64::INFINITY);
    a / b
}

/// `ln( binom(M - S, m) / binom(M, m) ) = sum_{t<m} ln(1 - S / (M - t))`,
/// or `None` when the numerator binomial is zero.
fn log_avoid_probability(total: &BigUint, containing: &BigUint, m: u64) -> Option<f64> {
    let avoiding = total - containing;
    if avoiding < BigUint::from(m) {
        return None;
    }
    let mut log_sum = 0.0;
    let mut denom = total.clone();
    for _ in 0..m {
        let q = big_ratio(containing, &denom);
        log_sum += (-q).ln_1p();
        denom -= 1u32;
    }
    Some(log_sum)
}

pub fn coverage_bounds(params: &CoverageParams) -> CoverageBounds {
    let CoverageParams { n, k, m, .. } = *params;
    let total = binomial(n + k - 1, k);
    let containing = binomial(n + k - 2, k - 1);

    let markov = if total.is_zero() {
        1.0
    } else {
        match log_avoid_probability(&total, &containing, m) {
            None => 0.0,
            Some(log_p) => ((n as f64).ln() + log_p).exp().min(1.0),
        }
    };

    let exponent = 1.0 - params.delta_slack * params.delta_slack * params.coverage_constant;
    let chernoff = (n as f64).powf(exponent).min(1.0);

    let expected = Ratio::new(u128::from(m) * u128::from(k), u128::from(n + k - 1));

    CoverageBounds {
        markov_failure_bound: markov,
        chernoff_failure_bound: chernoff,
        expected_cover_count: expected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hints::params::compute_params;
    use num_rational::BigRational;

    fn exact_markov(n: u64, k: u64, m: u64) -> f64 {
        let total = binomial(n + k - 1, k);
        let containing = binomial(n + k - 2, k - 1);
        let num = binomial((&total - &containing).to_u64().unwrap(), m);
        let den = binomial(total.to_u64().unwrap(), m);
        let r = BigRational::new((num * n).into(), den.into());
        r.to_f64().unwrap().min(1.0)
    }

    #[test]
    fn chernoff_at_1024() {
        let p = compute_params(1024, 8, 4.0, 0.6).unwrap();
        let b = coverage_bounds(&p);
        let oracle = 1024f64.powf(-0.44);
        assert!((b.chernoff_failure_bound - oracle).abs() < 1e-12);
        assert!((b.chernoff_failure_bound - 0.047).abs() < 0.001);
        assert!(b.markov_failure_bound < 1e-15);
    }

    #[test]
    fn no_hints_means_certain_failure() {
        let p = CoverageParams::explicit(10, 3, 0, 1, 4.0, 0.6).unwrap();
        assert_eq!(coverage_bounds(&p).markov_failure_bound, 1.0);
    }

    #[test]
    fn impossible_avoidance_gives_zero() {
        // M = 6, S_y = 3; binom(3, 5) = 0
        let p = CoverageParams::explicit(3, 2, 5, 1, 4.0, 0.6).unwrap();
        assert_eq!(coverage_bounds(&p).markov_failure_bound, 0.0);
        assert_eq!(exact_markov(3, 2, 5), 0.0);
    }

    #[test]
    fn log_path_matches_exact_hypergeometric() {
        for &(n, k, m) in &[(3, 2, 1), (3, 2, 2), (3, 2, 3), (6, 3, 10), (8, 2, 12), (10, 4, 40)] {
            let p = CoverageParams::explicit(n, k, m, 1, 4.0, 0.6).unwrap();
            let got = coverage_bounds(&p).markov_failure_bound;
            let want = exact_markov(n, k, m);
            assert!((got - want).abs() <= 1e-12 * want.max(1e-300), "{n},{k},{m}: {got} vs {want}");
        }
    }

    #[test]
    fn expected_cover_count_is_exact() {
        let p = compute_params(1024, 8, 4.0, 0.6).unwrap();
        let b = coverage_bounds(&p);
        assert_eq!(b.expected_cover_count, Ratio::new(1775 * 32, 1055));
        let two_c_ln_n = 8.0 * 1024f64.ln();
        assert!((b.expected_cover_count_f64() - two_c_ln_n).abs() / two_c_ln_n < 0.05);
    }
}
