use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sizing of a hint pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageParams {
    /// Number of database entries.
    pub n: u64,
    /// Indices per hint.
    pub k: u64,
    /// Number of hints.
    pub m: u64,
    /// Coverage constant `C`; the expected number of hints covering an
    /// index is about `2 C ln n`.
    pub coverage_constant: f64,
    /// Chernoff slack, distinct from the failure probability of the
    /// minimum-coverage bound.
    pub delta_slack: f64,
    /// Entry size in bytes.
    pub beta: u64,
}

/// `ceil(sqrt(n))` computed exactly on integers.
pub fn ceil_sqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while r.saturating_mul(r) < n {
        r += 1;
    }
    r
}

/// `ceil(2 C ln(n) n / k)`.
pub fn hint_count(n: u64, k: u64, coverage_constant: f64) -> u64 {
    let n_f = n as f64;
    (2.0 * coverage_constant * n_f.ln() * n_f / k as f64).ceil() as u64
}

fn check_constants(coverage_constant: f64, delta_slack: f64) -> Result<()> {
    if !(coverage_constant > 0.0 && coverage_constant.is_finite()) {
        return Err(Error::param("coverage constant C must be positive"));
    }
    if !(delta_slack > 0.0 && delta_slack < 1.0) {
        return Err(Error::param("delta_slack must lie in (0, 1)"));
    }
    Ok(())
}

/// Default sizing: `k = ceil(sqrt n)`, `m = ceil(2 C ln(n) n / k)`.
pub fn compute_params(n: u64, beta: u64, coverage_constant: f64, delta_slack: f64) -> Result<CoverageParams> {
    if n < 2 {
        return Err(Error::param(format!("need at least 2 entries, got n = {n}")));
    }
    CoverageParams::with_hint_size(n, ceil_sqrt(n), beta, coverage_constant, delta_slack)
}

impl CoverageParams {
    /// Same `m` formula with a caller-chosen `k`.
    pub fn with_hint_size(n: u64, k: u64, beta: u64, coverage_constant: f64, delta_slack: f64) -> Result<Self> {
        check_constants(coverage_constant, delta_slack)?;
        let m = if n < 2 { 1 } else { hint_count(n, k, coverage_constant) };
        CoverageParams::explicit(n, k, m, beta, coverage_constant, delta_slack)
    }

    pub fn explicit(n: u64, k: u64, m: u64, beta: u64, coverage_constant: f64, delta_slack: f64) -> Result<Self> {
        check_constants(coverage_constant, delta_slack)?;
        if n == 0 || k == 0 {
            return Err(Error::param("n and k must be at least 1"));
        }
        if k > u64::from(u16::MAX) {
            return Err(Error::param("k must fit the 16-bit replacement position"));
        }
        if m > u64::from(u32::MAX) {
            return Err(Error::param("m must fit in 32 bits"));
        }
        if beta == 0 {
            return Err(Error::param("entry size beta must be positive"));
        }
        Ok(CoverageParams {
            n,
            k,
            m,
            coverage_constant,
            delta_slack,
            beta,
        })
    }

    /// Whether `δ² C > 1`, the condition for the union-bounded Chernoff
    /// guarantee to vanish with `n`.
    pub fn intended_coverage(&self) -> bool {
        self.delta_slack * self.delta_slack * self.coverage_constant > 1.0
    }

    /// Indices sent per online query.
    pub fn redacted_len(&self) -> u64 {
        self.k - 1
    }

    /// Bytes per stored hint record: seed, parity, slot position, slot
    /// index, slot value, flag.
    pub fn hint_record_len(&self) -> u64 {
        8 + self.beta + 2 + 8 + self.beta + 1
    }

    pub fn beta_usize(&self) -> usize {
        self.beta as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_sqrt_exact() {
        assert_eq!(ceil_sqrt(1), 1);
        assert_eq!(ceil_sqrt(2), 2);
        assert_eq!(ceil_sqrt(1024), 32);
        assert_eq!(ceil_sqrt(1025), 33);
        assert_eq!(ceil_sqrt(1 << 20), 1024);
        assert_eq!(ceil_sqrt(u64::MAX), 1 << 32);
    }

    #[test]
    fn sizing_at_one_million() {
        // 8 * 20 ln 2 * 1024 = 113565.23...
        let p = compute_params(1 << 20, 64, 4.0, 0.6).unwrap();
        assert_eq!(p.k, 1024);
        let oracle = (8.0 * 20.0 * std::f64::consts::LN_2 * 1024.0_f64).ceil() as u64;
        assert_eq!(oracle, 113_566);
        assert_eq!(p.m, oracle);
    }

    #[test]
    fn sizing_at_1024() {
        let p = compute_params(1024, 64, 4.0, 0.6).unwrap();
        assert_eq!(p.k, 32);
        assert_eq!(p.m, 1775);
        assert_eq!(p.hint_record_len(), 2 * 64 + 19);
    }

    #[test]
    fn intended_coverage_flag() {
        let p = compute_params(1024, 1, 4.0, 0.6).unwrap();
        assert!((p.delta_slack * p.delta_slack * p.coverage_constant - 1.44).abs() < 1e-12);
        assert!(p.intended_coverage());
        assert!(!compute_params(1024, 1, 4.0, 0.4).unwrap().intended_coverage());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(compute_params(1, 8, 4.0, 0.6).is_err());
        assert!(compute_params(16, 8, 0.0, 0.6).is_err());
        assert!(compute_params(16, 8, 4.0, 1.0).is_err());
        assert!(compute_params(16, 0, 4.0, 0.5).is_err());
    }
}
