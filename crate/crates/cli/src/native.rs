//! Hardware-native derangement circuits and the device noise model.

use anyhow::{ensure, Result};
use esd_core::recompile::{cswap_target, table1, RecompileOptions};
use esd_core::{equivalence_full, recompile, Circuit, EquivalenceType, NoiseModel};

use crate::config::NativeDerangement;

/// Type-A recompilation of CSWAP (control, a, b) into the native gate set,
/// at the entangling count of the published table.
pub fn cswap_lowering(native: &NativeDerangement, seed: u64) -> Result<Circuit> {
    let e = table1(native.gateset, EquivalenceType::A);
    let opts = RecompileOptions { restarts: native.restarts, seed, ..Default::default() };
    let report = recompile(native.gateset, EquivalenceType::A, e.three_qubit, e.two_qubit, &opts)?;
    ensure!(
        report.achieved,
        "no {} CSWAP recompilation found in {} restarts (best fidelity {:.3e})",
        native.gateset.label(),
        native.restarts,
        report.fidelity
    );
    let circuit = report.template()?.circuit(&report.best_params)?;
    let f = equivalence_full(&circuit.unitary()?, &cswap_target(EquivalenceType::A))?;
    ensure!(f > 1.0 - 1e-6, "lowered CSWAP has fidelity {f}");
    Ok(circuit)
}

/// Dephasing ε and damping (amplifiable) plus fixed depolarizing on every
/// gate; two-qubit probabilities multiplied by `two_qubit_factor`.
pub fn device_noise(eps: f64, damping_ratio: f64, fixed_ratio: f64, two_qubit_factor: f64) -> NoiseModel {
    NoiseModel::dephasing_damping(eps, damping_ratio, fixed_ratio, two_qubit_factor)
}

/// Per-gate level ε at which `circuit` has `xi` expected errors under
/// `model(ε)`, found by bisection (ξ is increasing in ε).
pub fn eps_for_xi(circuit: &Circuit, xi: f64, model: impl Fn(f64) -> NoiseModel) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    let valid = |e: f64| model(e).validate(1.0).is_ok();
    let mut hi = 1e-3;
    while circuit.expected_errors(&model(hi), 1.0) < xi {
        hi *= 2.0;
        ensure!(valid(hi), "ξ = {xi} needs gate error probabilities above 1");
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if circuit.expected_errors(&model(mid), 1.0) < xi {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use esd_core::random_alternating_ansatz;

    #[test]
    fn bisection_hits_target() {
        let c = random_alternating_ansatz(3, 2, 1).unwrap();
        let model = |e: f64| device_noise(e, 0.1, 0.07, 5.0);
        let eps = eps_for_xi(&c, 0.5, model).unwrap();
        assert!((c.expected_errors(&model(eps), 1.0) - 0.5).abs() < 1e-10);
        assert_eq!(eps_for_xi(&c, 0.0, model).unwrap(), 0.0);
    }
}
