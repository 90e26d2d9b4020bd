//! Method A/B errors against their bounds as the copy number grows.

use anyhow::{ensure, Result};
use esd_core::estimator::{
    bound_qn_effective, bound_qn_entropy, bound_qn_general, eigen_expectations, method_a, method_b, sample_prob,
    spectral_estimates, EffectiveBound, Method, QnBounds,
};
use esd_core::random::{rng_from_seed, sample_paulis};
use esd_core::state::pure_expectation;
use esd_core::{random_alternating_ansatz, run_circuit, spectral_data, DensityMatrix, RenyiOrder};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::ExperimentOutput;
use crate::config::{CopyMode, SuppressionConfig};
use crate::seeds::sub_seed;
use crate::table::{Cell, ResultTable};

const LABEL: &str = "suppression-sweep";

pub const COLUMNS: [&str; 9] =
    ["n", "method", "observable", "error", "bound_entropy", "bound_general", "bound_effective", "error_sampled", "xi"];

/// Eigenvalues of `n_copies` copies sharing the base eigenvectors, each at
/// trace distance `distance` from the base spectrum (smaller when the
/// perturbation would make an eigenvalue negative).
fn perturbed_spectra(base: &[f64], n_copies: usize, distance: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..n_copies)
        .map(|_| {
            let mut d: Vec<f64> = (0..base.len()).map(|_| rng.random::<f64>() - 0.5).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            d.iter_mut().for_each(|x| *x -= mean);
            let l1: f64 = d.iter().map(|x| x.abs()).sum();
            let mut scale = if l1 > 0.0 { 2.0 * distance / l1 } else { 0.0 };
            for (e, x) in base.iter().zip(&d) {
                if *x < 0.0 {
                    scale = scale.min(e / -x);
                }
            }
            base.iter().zip(&d).map(|(e, x)| (e + scale * x).max(0.0)).collect()
        })
        .collect()
}

fn qn_for(b: QnBounds, m: Method) -> f64 {
    b.for_method(m)
}

fn general_for(q_n: f64, m: Method) -> f64 {
    match m {
        Method::A => 2.0 * q_n / (1.0 + q_n),
        Method::B => q_n,
    }
}

pub fn run(cfg: &SuppressionConfig, seed: u64) -> Result<ExperimentOutput> {
    let circuit = random_alternating_ansatz(cfg.qubits, cfg.blocks, sub_seed(seed, LABEL, &[0]))?;
    let rho = run_circuit(&DensityMatrix::basis(cfg.qubits, 0), &circuit, Some(&cfg.noise), 1.0)?;
    let xi = circuit.expected_errors(&cfg.noise, 1.0);
    let orders: Vec<RenyiOrder> = (1..=cfg.n_max).map(RenyiOrder::Finite).collect();
    let data = spectral_data(&rho, &orders)?;
    ensure!(!data.error_probs.is_empty(), "the prepared state is pure; add noise");
    let lambda = data.lambda;
    let mut rng = rng_from_seed(sub_seed(seed, LABEL, &[1]));
    let sigmas = sample_paulis(&mut rng, cfg.qubits, cfg.observables, cfg.include_identity);

    let copies_spectra = match cfg.mode {
        CopyMode::Identical => None,
        CopyMode::Commuting => {
            Some(perturbed_spectra(data.eigenvalues(), cfg.n_max as usize, cfg.trace_distance, sub_seed(seed, LABEL, &[2])))
        }
    };
    // Element-wise maximal error probabilities and smallest λ over the copies.
    let effective = copies_spectra.as_ref().map(|sp| {
        let lambda_min = sp.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min);
        let p_max: Vec<f64> = (1..sp[0].len())
            .map(|j| sp.iter().map(|s| s[j] / (1.0 - s[0])).fold(0.0, f64::max))
            .collect();
        (lambda_min, p_max)
    });

    let rows: Vec<Vec<Vec<Cell>>> = sigmas
        .par_iter()
        .enumerate()
        .map(|(k, sigma)| -> Result<Vec<Vec<Cell>>> {
            let exp = eigen_expectations(data.spectrum(), sigma)?;
            let ideal = pure_expectation(&data.dominant_vector, sigma)?;
            let mut out = Vec::new();
            for n in 1..=cfg.n_max {
                let h_n = data.renyi[&RenyiOrder::Finite(n)];
                let ent = bound_qn_entropy(lambda, h_n, n);
                let general = bound_qn_general(lambda, data.p_max, n);
                // (tr[σ ρ₁…ρₙ], tr[ρ₁…ρₙ], Π λ_k) for the chosen copies.
                let (t_sigma, t_id, lambda_prod, eff) = match (&copies_spectra, &effective) {
                    (Some(sp), Some((lmin, pmax))) => {
                        let prod: Vec<f64> =
                            (0..exp.len()).map(|i| sp[..n as usize].iter().map(|s| s[i]).product()).collect();
                        let ts: f64 = prod.iter().zip(&exp).map(|(p, s)| p * s).sum();
                        let lp: f64 = sp[..n as usize].iter().map(|s| s[0]).product();
                        let eff = match bound_qn_effective(*lmin, pmax, n) {
                            EffectiveBound::Commuting(q) => Some(q),
                            _ => None,
                        };
                        (ts, prod.iter().sum::<f64>(), lp, eff)
                    }
                    _ => {
                        let (a, b) = spectral_estimates(data.eigenvalues(), &exp, &data.error_probs, n)?;
                        let ts = 2.0 * a.prob0 - 1.0;
                        let ti = 2.0 * a.normaliser - 1.0;
                        debug_assert!((b.value - ts / lambda.powi(n as i32)).abs() < 1e-9);
                        (ts, ti, lambda.powi(n as i32), None)
                    }
                };
                let prob0 = 0.5 + 0.5 * t_sigma;
                let prob0_prime = 0.5 + 0.5 * t_id;
                for method in [Method::A, Method::B] {
                    let value = match method {
                        Method::A => t_sigma / t_id,
                        Method::B => t_sigma / lambda_prod,
                    };
                    let sampled = match cfg.shots {
                        None => None,
                        Some(shots) => {
                            let s = |tag: u64| sub_seed(seed, LABEL, &[3, k as u64, n as u64, tag]);
                            let p = sample_prob(prob0.clamp(0.0, 1.0), shots, s(0))?;
                            let v = match method {
                                Method::A => method_a(p, sample_prob(prob0_prime.clamp(0.0, 1.0), shots, s(1))?).ok(),
                                Method::B => method_b(p, lambda_prod.powf(1.0 / n as f64), n).ok(),
                            };
                            Some(v.map_or(f64::NAN, |v| (v - ideal).abs()))
                        }
                    };
                    out.push(vec![
                        n.into(),
                        format!("{method:?}").into(),
                        sigma.to_string().into(),
                        (value - ideal).abs().into(),
                        qn_for(ent, method).into(),
                        general_for(general, method).into(),
                        eff.map(|q| general_for(q, method)).into(),
                        sampled.into(),
                        xi.into(),
                    ]);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut table = ResultTable::new(&COLUMNS);
    for r in rows.into_iter().flatten() {
        table.push(r)?;
    }
    let summary = json!({
        "xi": xi,
        "lambda": lambda,
        "p_max": data.p_max,
        "Q": esd_core::estimator::suppression_factor(lambda, data.p_max),
        "renyi": (1..=cfg.n_max).map(|n| data.renyi[&RenyiOrder::Finite(n)]).collect::<Vec<_>>(),
        "noisy_gates": circuit.noisy_gate_count(&cfg.noise, 1.0),
        "dominance_violated": data.dominance_violated,
    });
    Ok(ExperimentOutput { table, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_hits_trace_distance() {
        let base = vec![0.7, 0.2, 0.06, 0.04];
        for s in perturbed_spectra(&base, 3, 0.01, 5) {
            let td: f64 = 0.5 * base.iter().zip(&s).map(|(a, b)| (a - b).abs()).sum::<f64>();
            assert!((td - 0.01).abs() < 1e-12);
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
