//! Cross-seed aggregation and scaling-exponent fits.

use crate::records::{CurvePoint, RunRecord};
use crate::runner::HarnessError;
use std::collections::BTreeMap;

/// Sample mean and standard error (n - 1 denominator).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Pointwise mean and standard error of the regret at each recorded round,
/// grouped by (policy, adversary). Fails when seeds of one policy disagree
/// on the recorded rounds (ragged records) or fewer than two seeds back a
/// point.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<CurvePoint>, HarnessError> {
    let mut groups: BTreeMap<(String, String), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    let mut seeds_per_group: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
    for r in records {
        let key = (r.policy.clone(), r.adversary.clone());
        groups
            .entry(key.clone())
            .or_default()
            .entry(r.t)
            .or_default()
            .push(r.regret);
        let seeds = seeds_per_group.entry(key).or_default();
        if !seeds.contains(&r.seed) {
            seeds.push(r.seed);
        }
    }

    let mut out = Vec::new();
    for ((policy, adversary), by_t) in groups {
        let n_seeds = seeds_per_group[&(policy.clone(), adversary.clone())].len();
        if n_seeds < 2 {
            return Err(HarnessError::Aggregation(format!(
                "policy {policy} has {n_seeds} seed(s); standard errors need at least 2"
            )));
        }
        for (t, regrets) in by_t {
            if regrets.len() != n_seeds {
                return Err(HarnessError::Aggregation(format!(
                    "ragged records: policy {policy} has {} values at t = {t}, expected {n_seeds}",
                    regrets.len()
                )));
            }
            let (mean, se) = mean_and_se(&regrets);
            out.push(CurvePoint {
                policy: policy.clone(),
                adversary: adversary.clone(),
                t,
                mean_regret: mean,
                se_regret: se,
                n_seeds,
            });
        }
    }
    Ok(out)
}

/// Ordinary least squares on `(ln x, ln y)`: returns the fitted exponent
/// and the coefficient of determination.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<(f64, f64), HarnessError> {
    if points.len() < 3 {
        return Err(HarnessError::Aggregation(format!(
            "exponent fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| *x <= 0.0 || *y <= 0.0) {
        return Err(HarnessError::Aggregation(format!(
            "exponent fit needs positive values, got ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::Aggregation(
            "exponent fit needs at least two distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok((slope, r_squared))
}
