//! Extrapolating away noise in the derangement circuit itself.

use std::collections::BTreeMap;

use anyhow::Result;
use esd_core::derangement::DerangementSpec;
use esd_core::esd::{build_esd_circuit, prob0_circuit, EsdCircuitSpec};
use esd_core::random::{random_pauli, rng_from_seed};
use esd_core::zne::fit;
use esd_core::{random_alternating_ansatz, run_circuit, DensityMatrix, FitKind, NoiseScaleSeries};
use rayon::prelude::*;
use serde_json::json;

use super::{linspace, median, ExperimentOutput};
use crate::config::DerangementZneConfig;
use crate::seeds::sub_seed;
use crate::table::{Cell, ResultTable};

const LABEL: &str = "derangement-zne";

pub const COLUMNS: [&str; 5] = ["state_id", "observable", "fit_kind", "points", "extrapolation_error"];

/// Fits tried with `k` points.
fn fits_for(k: usize, max_degree: usize, nu: usize) -> Vec<FitKind> {
    let mut kinds = vec![FitKind::Linear];
    kinds.extend((2..=max_degree).filter(|&d| k > d).map(FitKind::Poly));
    if k >= 6 {
        kinds.push(FitKind::Pade33);
    }
    if k == nu + 1 {
        kinds.push(FitKind::ExactInterp);
    }
    kinds
}

pub fn run(cfg: &DerangementZneConfig, seed: u64) -> Result<ExperimentOutput> {
    let variant = DerangementSpec::cyclic(cfg.copies, 0)?;
    let mut grid: BTreeMap<u64, f64> = BTreeMap::new();
    for &k in &cfg.points {
        for e in linspace(cfg.base_eps, cfg.max_eps, k) {
            grid.insert(e.to_bits(), e);
        }
    }
    let nu = build_esd_circuit(&EsdCircuitSpec::new(
        esd_core::PauliString::identity(cfg.qubits),
        variant.clone(),
        false,
    ))?
    .noisy_gate_count(&cfg.derangement_noise, 1.0);

    let per_state: Vec<Vec<Vec<Cell>>> = (0..cfg.states)
        .into_par_iter()
        .map(|s| -> Result<Vec<Vec<Cell>>> {
            let circuit = random_alternating_ansatz(cfg.qubits, cfg.blocks, sub_seed(seed, LABEL, &[0, s as u64]))?;
            let rho = run_circuit(&DensityMatrix::basis(cfg.qubits, 0), &circuit, Some(&cfg.state_noise), 1.0)?;
            let mut rng = rng_from_seed(sub_seed(seed, LABEL, &[1, s as u64]));
            let sigma = random_pauli(&mut rng, cfg.qubits, false);
            let copies = vec![rho; cfg.copies];
            let spec = EsdCircuitSpec::new(sigma.clone(), variant.clone(), true);
            let ideal = prob0_circuit(&copies, &spec, None, 1.0)?;
            let mut value = BTreeMap::new();
            for (&bits, &e) in &grid {
                value.insert(bits, prob0_circuit(&copies, &spec, Some(&cfg.derangement_noise), e / cfg.base_eps)?);
            }
            let at_base = value[&cfg.base_eps.to_bits()];
            let obs = sigma.to_string();
            let mut rows = vec![vec![s.into(), obs.clone().into(), "none".into(), 1usize.into(), (at_base - ideal).abs().into()]];
            for &k in &cfg.points {
                let pairs: Vec<(f64, f64)> =
                    linspace(cfg.base_eps, cfg.max_eps, k).into_iter().map(|e| (e, value[&e.to_bits()])).collect();
                let series = NoiseScaleSeries::from_pairs(&pairs, None)?;
                for kind in fits_for(k, cfg.max_degree, nu) {
                    let err = fit(&series, kind).map_or(f64::NAN, |f| (f.zero_noise_value - ideal).abs());
                    rows.push(vec![s.into(), obs.clone().into(), kind.label().into(), k.into(), err.into()]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut table = ResultTable::new(&COLUMNS);
    for r in per_state.into_iter().flatten() {
        table.push(r)?;
    }
    let kmax = cfg.points.iter().copied().max().unwrap_or(2);
    let med = |kind: &str, k: usize| {
        let errs: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r[2].as_str() == Some(kind) && r[3].as_f64() == Some(k as f64))
            .filter_map(|r| r[4].as_f64())
            .collect();
        median(&errs)
    };
    let unmitigated: Vec<f64> =
        table.rows.iter().filter(|r| r[2].as_str() == Some("none")).filter_map(|r| r[4].as_f64()).collect();
    let mut degree_medians = vec![med("linear", kmax)];
    degree_medians.extend((2..=cfg.max_degree).map(|d| med(&format!("poly{d}"), kmax)));
    let summary = json!({
        "noisy_gates": nu,
        "max_unmitigated_error": unmitigated.iter().cloned().fold(0.0, f64::max),
        "median_unmitigated_error": median(&unmitigated),
        "points_for_medians": kmax,
        "median_error_by_degree": degree_medians,
        "median_pade_error": med("pade33", kmax),
    });
    Ok(ExperimentOutput { table, summary })
}
