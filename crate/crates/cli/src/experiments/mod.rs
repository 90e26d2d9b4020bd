use anyhow::{Context, Result};
use serde_json::Value;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::table::ResultTable;

pub mod coherent_mismatch;
pub mod derangement_zne;
pub mod ground_state;
pub mod resource_plan;
pub mod suppression_sweep;
pub mod twirl_compare;

/// Table plus experiment-specific summary fields.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub table: ResultTable,
    pub summary: Value,
}

/// Runs the configured experiment on a pool of `workers` threads (rayon's
/// default when `None`).
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().context("building worker pool")?;
    pool.install(|| match cfg.experiment {
        ExperimentKind::SuppressionSweep => suppression_sweep::run(&cfg.suppression_sweep, cfg.seed),
        ExperimentKind::DerangementZne => derangement_zne::run(&cfg.derangement_zne, cfg.seed),
        ExperimentKind::GroundState => ground_state::run(&cfg.ground_state, cfg.seed),
        ExperimentKind::CoherentMismatch => coherent_mismatch::run(&cfg.coherent_mismatch, cfg.seed),
        ExperimentKind::TwirlCompare => twirl_compare::run(&cfg.twirl_compare, cfg.seed),
        ExperimentKind::ResourcePlan => resource_plan::run(&cfg.resource_plan),
    })
}

/// Median of the finite values (NaN when there are none).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolated quantile of the finite values.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// `k` evenly spaced values on [a, b].
pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(quantile(&[0.0, 4.0], 0.25), 1.0);
        assert!(median(&[f64::NAN]).is_nan());
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
    }
}
