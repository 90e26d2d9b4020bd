//! Noisy native derangement with and without randomized Pauli twirling.

use anyhow::Result;
use esd_core::derangement::DerangementSpec;
use esd_core::esd::{build_esd_circuit, lower_cswaps, prob0_batch, EsdCircuitSpec};
use esd_core::estimator::method_a;
use esd_core::random::{random_density_matrix, random_pauli, rng_from_seed};
use esd_core::{NoiseModel, PauliString};
use rayon::prelude::*;
use serde_json::json;

use super::{median, quantile, ExperimentOutput};
use crate::config::TwirlConfig;
use crate::native::{cswap_lowering, device_noise, eps_for_xi};
use crate::seeds::sub_seed;
use crate::table::{Cell, ResultTable};

const LABEL: &str = "twirl-compare";

pub const COLUMNS: [&str; 8] =
    ["xi", "eps", "f_q25", "f_median", "f_q75", "error_plain_median", "error_twirl_median", "observables"];

/// Below this both errors are numerically zero and F is undefined.
const ZERO_ERROR: f64 = 1e-13;

/// Method A estimate from probabilities averaged over twirl samples
/// (`None` = the plain circuit).
fn estimate(
    copies: &[esd_core::DensityMatrix],
    sigma: &PauliString,
    twirls: Option<&[Vec<PauliString>]>,
    nm: Option<&NoiseModel>,
    lowering: &esd_core::Circuit,
) -> Result<f64> {
    let swap = DerangementSpec::swap();
    let requests = [(sigma.clone(), true), (PauliString::identity(sigma.qubit_count()), false)];
    let (mut p, mut pp) = (0.0, 0.0);
    let samples: Vec<Option<&[PauliString]>> = match twirls {
        None => vec![None],
        Some(t) => t.iter().map(|x| Some(x.as_slice())).collect(),
    };
    for tw in &samples {
        let probs = prob0_batch(copies, &swap, &requests, *tw, nm, 1.0, Some(lowering))?;
        p += probs[0];
        pp += probs[1];
    }
    let m = samples.len() as f64;
    Ok(method_a(p / m, pp / m)?)
}

pub fn run(cfg: &TwirlConfig, seed: u64) -> Result<ExperimentOutput> {
    let lowering = cswap_lowering(&cfg.native, sub_seed(seed, LABEL, &[0]))?;
    let model = |eps: f64| device_noise(eps, cfg.damping_ratio, cfg.fixed_ratio, cfg.two_qubit_factor);
    let base =
        build_esd_circuit(&EsdCircuitSpec::new(PauliString::identity(cfg.qubits), DerangementSpec::swap(), false))?;
    let derangement = lower_cswaps(&base, &lowering)?;
    let eps: Vec<f64> = cfg.xi.iter().map(|&x| eps_for_xi(&derangement, x, model)).collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> =
        (0..cfg.xi.len()).flat_map(|x| (0..cfg.observables).map(move |o| (x, o))).collect();
    let errors: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(x, o)| -> Result<(f64, f64)> {
            let mut rng = rng_from_seed(sub_seed(seed, LABEL, &[1, o as u64]));
            let rho = random_density_matrix(&mut rng, cfg.qubits);
            let sigma = random_pauli(&mut rng, cfg.qubits, false);
            let twirls: Vec<Vec<PauliString>> = (0..cfg.twirl_samples)
                .map(|_| (0..2).map(|_| random_pauli(&mut rng, cfg.qubits, true)).collect())
                .collect();
            let copies = vec![rho.clone(); 2];
            let rho2 = rho.matrix().matmul(rho.matrix())?;
            let exact = sigma.trace_with(&rho2)?.re / rho2.trace().re;
            let nm = model(eps[x]);
            let nm = (eps[x] > 0.0).then_some(&nm);
            let plain = estimate(&copies, &sigma, None, nm, &lowering)?;
            let twirled = estimate(&copies, &sigma, Some(&twirls), nm, &lowering)?;
            Ok(((plain - exact).abs(), (twirled - exact).abs()))
        })
        .collect::<Result<_>>()?;

    let mut table = ResultTable::new(&COLUMNS);
    let mut medians = Vec::new();
    for (x, &xi) in cfg.xi.iter().enumerate() {
        let block = &errors[x * cfg.observables..(x + 1) * cfg.observables];
        let plain: Vec<f64> = block.iter().map(|e| e.0).collect();
        let twirl: Vec<f64> = block.iter().map(|e| e.1).collect();
        let ratios: Vec<f64> = block.iter().filter(|e| e.0 > ZERO_ERROR).map(|e| e.1 / e.0).collect();
        let q = |p: f64| -> Cell {
            if ratios.is_empty() {
                "undefined".into()
            } else {
                quantile(&ratios, p).into()
            }
        };
        medians.push(if ratios.is_empty() { None } else { Some(median(&ratios)) });
        table.push(vec![
            xi.into(),
            eps[x].into(),
            q(0.25),
            q(0.5),
            q(0.75),
            median(&plain).into(),
            median(&twirl).into(),
            cfg.observables.into(),
        ])?;
    }
    let summary = json!({
        "derangement_gates": derangement.len(),
        "median_f": medians,
    });
    Ok(ExperimentOutput { table, summary })
}
