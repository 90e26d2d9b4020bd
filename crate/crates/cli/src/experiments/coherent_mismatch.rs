//! Coherent mismatch between the dominant eigenvector and the ideal state,
//! against the per-gate error and the gate count, plus its removal by
//! state-preparation extrapolation.

use std::collections::BTreeMap;

use anyhow::Result;
use esd_core::circuit::run_pure;
use esd_core::estimator::{bound_qn, eigen_expectations, power_expectation};
use esd_core::random::{random_pauli, rng_from_seed};
use esd_core::state::pure_expectation;
use esd_core::zne::fit;
use esd_core::{
    coherent_mismatch, random_alternating_ansatz, run_circuit, spectral_data, Circuit, DensityMatrix, FitKind,
    NoiseModel, NoiseScaleSeries, SpectralData,
};
use rayon::prelude::*;
use serde_json::json;

use super::{linspace, ExperimentOutput};
use crate::config::MismatchConfig;
use crate::seeds::sub_seed;
use crate::table::{Cell, ResultTable};

const LABEL: &str = "coherent-mismatch";

pub const COLUMNS: [&str; 13] = [
    "sweep",
    "eps",
    "nu",
    "xi",
    "c",
    "eta1",
    "eta2",
    "eta_ratio",
    "observable",
    "fit_kind",
    "points",
    "zne_error",
    "bound",
];

fn noise(cfg: &MismatchConfig, eps: f64) -> NoiseModel {
    NoiseModel::depolarizing(cfg.single_ratio * eps, eps)
}

fn noisy_state(circuit: &Circuit, nm: &NoiseModel) -> Result<DensityMatrix> {
    let start = DensityMatrix::basis(circuit.qubit_count(), 0);
    Ok(run_circuit(&start, circuit, (!nm.is_empty()).then_some(nm), 1.0)?)
}

fn ideal_vector(circuit: &Circuit) -> Result<Vec<esd_core::C64>> {
    let mut psi = esd_core::random::zero_vector(1 << circuit.qubit_count());
    psi[0] = esd_core::C64::new(1.0, 0.0);
    Ok(run_pure(&psi, circuit)?)
}

/// Row of the ε or ν sweep.
fn mismatch_row(sweep: &str, eps: f64, circuit: &Circuit, nm: &NoiseModel) -> Result<Vec<Cell>> {
    let rho = noisy_state(circuit, nm)?;
    let psi = ideal_vector(circuit)?;
    let c = coherent_mismatch(&rho, &psi)?.c;
    let data = spectral_data(&rho, &[])?;
    let eta1 = 1.0 - c;
    let eta2 = data.lambda;
    Ok(vec![
        sweep.into(),
        eps.into(),
        circuit.noisy_gate_count(nm, 1.0).into(),
        circuit.expected_errors(nm, 1.0).into(),
        c.into(),
        eta1.into(),
        eta2.into(),
        (eta2 / eta1).into(),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ])
}

pub fn run(cfg: &MismatchConfig, seed: u64) -> Result<ExperimentOutput> {
    let circuit = random_alternating_ansatz(cfg.qubits, cfg.blocks, sub_seed(seed, LABEL, &[0]))?;
    let mut rows: Vec<Vec<Cell>> =
        cfg.eps.par_iter().map(|&e| mismatch_row("eps", e, &circuit, &noise(cfg, e))).collect::<Result<_>>()?;

    let len = circuit.len();
    let prefixes: Vec<usize> =
        (1..=cfg.nu_points).map(|j| ((j * len) as f64 / cfg.nu_points as f64).round() as usize).collect();
    let nm_nu = noise(cfg, cfg.nu_eps);
    let nu_rows: Vec<Vec<Cell>> = prefixes
        .par_iter()
        .map(|&l| {
            let prefix = Circuit::from_gates(cfg.qubits, circuit.gates()[..l].to_vec())?;
            mismatch_row("nu", cfg.nu_eps, &prefix, &nm_nu)
        })
        .collect::<Result<_>>()?;
    rows.extend(nu_rows);

    if !cfg.zne_points.is_empty() {
        let mut grid: BTreeMap<u64, f64> = BTreeMap::new();
        for &k in &cfg.zne_points {
            for e in linspace(cfg.zne_base_eps, cfg.zne_max_eps, k) {
                grid.insert(e.to_bits(), e);
            }
        }
        let spectra: BTreeMap<u64, SpectralData> = grid
            .par_iter()
            .map(|(&bits, &e)| Ok((bits, spectral_data(&noisy_state(&circuit, &noise(cfg, e))?, &[])?)))
            .collect::<Result<_>>()?;
        let psi = ideal_vector(&circuit)?;
        let n = cfg.zne_copies;
        let base = &spectra[&cfg.zne_base_eps.to_bits()];
        let bound = bound_qn(base.lambda, &base.error_probs, n).bound_a;
        let zne_rows: Vec<Vec<Vec<Cell>>> = (0..cfg.zne_observables)
            .into_par_iter()
            .map(|o| -> Result<Vec<Vec<Cell>>> {
                let mut rng = rng_from_seed(sub_seed(seed, LABEL, &[1, o as u64]));
                let sigma = random_pauli(&mut rng, cfg.qubits, false);
                let ideal = pure_expectation(&psi, &sigma)?;
                let estimate = |bits: u64| -> Result<f64> {
                    let d = &spectra[&bits];
                    let exp = eigen_expectations(d.spectrum(), &sigma)?;
                    let ones = vec![1.0; exp.len()];
                    Ok(power_expectation(d.eigenvalues(), &exp, n) / power_expectation(d.eigenvalues(), &ones, n))
                };
                let row = |kind: &str, k: usize, err: f64| -> Vec<Cell> {
                    vec![
                        "zne".into(),
                        cfg.zne_base_eps.into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        sigma.to_string().into(),
                        kind.into(),
                        k.into(),
                        err.into(),
                        bound.into(),
                    ]
                };
                let mut out = vec![row("none", 1, (estimate(cfg.zne_base_eps.to_bits())? - ideal).abs())];
                for &k in &cfg.zne_points {
                    let pairs = linspace(cfg.zne_base_eps, cfg.zne_max_eps, k)
                        .into_iter()
                        .map(|e| Ok((e, estimate(e.to_bits())?)))
                        .collect::<Result<Vec<_>>>()?;
                    let series = NoiseScaleSeries::from_pairs(&pairs, None)?;
                    for d in (1..=cfg.zne_max_degree).filter(|&d| k > d) {
                        let kind = if d == 1 { FitKind::Linear } else { FitKind::Poly(d) };
                        let err = fit(&series, kind).map_or(f64::NAN, |f| (f.zero_noise_value - ideal).abs());
                        out.push(row(&kind.label(), k, err));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        rows.extend(zne_rows.into_iter().flatten());
    }

    let mut table = ResultTable::new(&COLUMNS);
    for r in rows {
        table.push(r)?;
    }
    let (slope, _) = eps_slope(&table, 1e-4, 1e-2);
    let summary = json!({
        "circuit_gates": circuit.len(),
        "loglog_slope_c_vs_eps": slope,
        "nu_correlation": nu_correlation(&table),
    });
    Ok(ExperimentOutput { table, summary })
}

fn sweep_points(table: &ResultTable, sweep: &str, x: &str) -> Vec<(f64, f64)> {
    let (s, xc, cc) = (table.column("sweep").unwrap(), table.column(x).unwrap(), table.column("c").unwrap());
    table
        .rows
        .iter()
        .filter(|r| r[s].as_str() == Some(sweep))
        .filter_map(|r| Some((r[xc].as_f64()?, r[cc].as_f64()?)))
        .collect()
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy / (sxx * syy).sqrt())
}

/// Least-squares slope of ln c against ln ε over ε ∈ [lo, hi], with the
/// number of points used.
pub fn eps_slope(table: &ResultTable, lo: f64, hi: f64) -> (f64, usize) {
    let pts: Vec<(f64, f64)> = sweep_points(table, "eps", "eps")
        .into_iter()
        .filter(|&(e, c)| e >= lo * (1.0 - 1e-12) && e <= hi * (1.0 + 1e-12) && c > 0.0)
        .map(|(e, c)| (e.ln(), c.ln()))
        .collect();
    if pts.len() < 2 {
        return (f64::NAN, pts.len());
    }
    (linear_fit(&pts).0, pts.len())
}

/// Pearson correlation of c with the noisy gate count ν.
pub fn nu_correlation(table: &ResultTable) -> f64 {
    let pts = sweep_points(table, "nu", "nu");
    if pts.len() < 2 {
        return f64::NAN;
    }
    linear_fit(&pts).2
}
