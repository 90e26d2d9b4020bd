//! Copy numbers, overhead exponents and shot counts over a parameter grid.

use anyhow::Result;
use esd_core::estimator::{attenuation_qubit_limit, plan_resources};
use serde_json::json;

use super::ExperimentOutput;
use crate::config::ResourceConfig;
use crate::table::{Cell, ResultTable};

pub const COLUMNS: [&str; 11] =
    ["precision", "lambda", "p_max", "status", "n", "Q", "Q_n", "f", "shots_a_prob0", "shots_a_prob0_prime", "shots_b"];

pub fn run(cfg: &ResourceConfig) -> Result<ExperimentOutput> {
    let mut table = ResultTable::new(&COLUMNS);
    let mut plans = Vec::new();
    for &lambda in &cfg.lambda {
        for &p_max in &cfg.p_max {
            for &eps in &cfg.precision {
                let head: Vec<Cell> = vec![eps.into(), lambda.into(), p_max.into()];
                let row = match plan_resources(eps, lambda, p_max, None, None) {
                    Ok(p) => {
                        let r = vec![
                            "ok".into(),
                            p.n.into(),
                            p.q.into(),
                            p.q_n.into(),
                            p.f.into(),
                            p.shots_a[0].into(),
                            p.shots_a[1].into(),
                            p.shots_b.into(),
                        ];
                        plans.push(p);
                        r
                    }
                    Err(e) => {
                        let mut r = vec![Cell::Text(format!("undefined: {e}"))];
                        r.extend(std::iter::repeat_n(Cell::Empty, 7));
                        r
                    }
                };
                table.push(head.into_iter().chain(row).collect())?;
            }
        }
    }
    let summary = json!({
        "plans": plans,
        "attenuation_qubit_limit": attenuation_qubit_limit(cfg.gate_error, cfg.attenuation_threshold),
        "gate_error": cfg.gate_error,
        "attenuation_threshold": cfg.attenuation_threshold,
    });
    Ok(ExperimentOutput { table, summary })
}
