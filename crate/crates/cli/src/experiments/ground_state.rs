//! Spin-ring ground-state energy with and without mitigation as the
//! state-preparation error count ξ grows.

use anyhow::Result;
use esd_core::estimator::Method;
use esd_core::vqe::{
    dominant_energy, optimize_vha, spectral_energy, vha_state, DerangementZne, EsdBackend, EsdEnergyOptions,
    OptimizerConfig,
};
use esd_core::zne::zne_pipeline;
use esd_core::{build_spin_ring, build_vha, energy_with_esd, exact_ground_energy, expectation, SpinRingSpec};
use rayon::prelude::*;
use serde_json::json;

use super::{linspace, ExperimentOutput};
use crate::config::{GroundStateConfig, OmegaSpec};
use crate::native::{cswap_lowering, device_noise, eps_for_xi};
use crate::seeds::sub_seed;
use crate::table::ResultTable;

const LABEL: &str = "ground-state";

pub const COLUMNS: [&str; 12] = [
    "xi",
    "eps",
    "lambda",
    "raw_error",
    "zne_error",
    "esd_error",
    "esd_plus_zne_error",
    "esd_clean_error",
    "clean_spectral_gap",
    "spectral_dashed",
    "coherent_floor",
    "n",
];

pub fn ring_spec(cfg: &GroundStateConfig) -> Result<SpinRingSpec> {
    Ok(match (&cfg.omega, cfg.omega.seed()?) {
        (OmegaSpec::Values(v), _) => SpinRingSpec::new(cfg.qubits, cfg.coupling, v.clone())?,
        (_, Some(s)) => SpinRingSpec::random(cfg.qubits, cfg.coupling, s)?,
        _ => unreachable!("validated omega spec"),
    })
}

pub fn run(cfg: &GroundStateConfig, seed: u64) -> Result<ExperimentOutput> {
    let spec = ring_spec(cfg)?;
    let h = build_spin_ring(&spec);
    let (e0, _) = exact_ground_energy(&h)?;
    let opt_cfg = OptimizerConfig { max_iters: cfg.max_iters, adiabatic_time: cfg.adiabatic_time, ..Default::default() };
    let opt = optimize_vha(&spec, cfg.layers, &opt_cfg, sub_seed(seed, LABEL, &[0]))?;
    let circuit = build_vha(&spec, &opt.params)?;
    let noiseless_gap = opt.trajectory.last().copied().unwrap_or(f64::NAN) - e0;
    let lowering = if cfg.copies > 1 { Some(cswap_lowering(&cfg.native, sub_seed(seed, LABEL, &[1]))?) } else { None };
    let model = |eps: f64| device_noise(eps, cfg.damping_ratio, cfg.fixed_ratio, cfg.two_qubit_factor);
    let factors = linspace(1.0, cfg.zne_span, cfg.zne_points);
    let n = cfg.copies;

    let rows = cfg
        .xi
        .par_iter()
        .map(|&xi| -> Result<_> {
            let eps = eps_for_xi(&circuit, xi, model)?;
            let nm = model(eps);
            let noisy = eps > 0.0;
            let rho = vha_state(&spec, &opt.params, noisy.then_some(&nm), 1.0)?;
            let raw = expectation(&rho, &h)?;
            let zne = if noisy {
                zne_pipeline(|f| expectation(&vha_state(&spec, &opt.params, Some(&nm), f)?, &h), &factors, cfg.zne_fit)?
                    .0
                    .zero_noise_value
            } else {
                raw
            };
            let copies = vec![rho.clone(); n];
            let mut opts = EsdEnergyOptions::noiseless(n, EsdBackend::Circuit);
            opts.method = Method::A;
            opts.derangement_noise = noisy.then(|| nm.clone());
            opts.cswap_lowering = lowering.clone();
            let esd = energy_with_esd(&copies, &h, &opts)?;
            opts.zne = Some(DerangementZne { factors: factors.clone(), kind: cfg.zne_fit });
            let esd_zne = energy_with_esd(&copies, &h, &opts)?;
            // exact CSWAPs without noise: must agree with the spectral form
            let clean = energy_with_esd(&copies, &h, &EsdEnergyOptions::noiseless(n, EsdBackend::Circuit))?;
            let spectral = spectral_energy(&rho, &h, n as u32)?;
            let floor = dominant_energy(&rho, &h)?;
            let lambda = esd_core::hermitian_eig(rho.matrix())?.eigenvalues[0];
            Ok(vec![
                xi.into(),
                eps.into(),
                lambda.into(),
                (raw - e0).abs().into(),
                (zne - e0).abs().into(),
                (esd - e0).abs().into(),
                (esd_zne - e0).abs().into(),
                (clean - e0).abs().into(),
                (clean - spectral).abs().into(),
                (spectral - e0).abs().into(),
                (floor - e0).abs().into(),
                n.into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = ResultTable::new(&COLUMNS);
    for r in rows {
        table.push(r)?;
    }
    let summary = json!({
        "ground_energy": e0,
        "omega": spec.omega,
        "noiseless_gap": noiseless_gap,
        "optimizer_converged": opt.converged,
        "optimizer_iterations": opt.trajectory.len() - 1,
        "ansatz_entangling_gates": circuit.entangling_count(),
        "derangement_lowering_gates": lowering.as_ref().map(|c| c.len()),
    });
    Ok(ExperimentOutput { table, summary })
}
