use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{contract, Result};

/// One-sided p-value of the paired t-test that `policy` losses are lower
/// than `baseline` losses: `P(T_{n-1} ≥ t)` with `t` computed on the
/// differences `baseline − policy`.
///
/// Zero spread gives `0` for a positive mean difference and `1` otherwise.
pub fn paired_p_value(policy: &[f64], baseline: &[f64]) -> Result<f64> {
    if policy.len() != baseline.len() || policy.len() < 2 {
        return Err(contract("paired t-test needs two equal samples of size ≥ 2"));
    }
    let n = policy.len() as f64;
    let d: Vec<f64> = baseline.iter().zip(policy).map(|(b, p)| b - p).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(if mean > 0.0 { 0.0 } else { 1.0 });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| contract(e.to_string()))?;
    Ok(dist.sf(t))
}

/// Whether the baseline should be replaced by the policy.
pub fn baseline_refresh_test(policy: &[f64], baseline: &[f64], alpha: f64) -> Result<bool> {
    Ok(paired_p_value(policy, baseline)? < alpha)
}
