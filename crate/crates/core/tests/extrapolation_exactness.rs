use esd_core::noise::{ChannelFamily, NoiseEntry};
use esd_core::random::{random_pauli, rng_from_seed};
use esd_core::{expectation, fit_exact, run_circuit, Circuit, DensityMatrix, Gate, GateKind, NoiseModel, NoiseScaleSeries};
use rand::Rng;

// Noise on `xx` (joint depolarizing) and `rx` (dephasing) only, so each of
// these gates contributes exactly one affine channel and E(ε) is a
// polynomial of degree ν.
fn noise() -> NoiseModel {
    NoiseModel::new()
        .with("xx", vec![NoiseEntry::new(ChannelFamily::Depolarizing, 1.0, true)])
        .with("rx", vec![NoiseEntry::new(ChannelFamily::Dephasing, 1.0, true)])
}

fn random_circuit(seed: u64, nu: usize) -> Circuit {
    let mut rng = rng_from_seed(seed);
    let mut c = Circuit::new(2);
    for k in 0..nu {
        c.push(Gate::ry(0, rng.random_range(-3.0..3.0))).unwrap();
        c.push(Gate::rz(1, rng.random_range(-3.0..3.0))).unwrap();
        if k % 2 == 0 {
            c.push(Gate::two_qubit(GateKind::XX, 0, 1, rng.random_range(-3.0..3.0)).unwrap()).unwrap();
        } else {
            c.push(Gate::rx(k % 2, rng.random_range(-3.0..3.0))).unwrap();
        }
    }
    c
}

#[test]
fn interpolation_through_nu_plus_one_points_is_exact() {
    let nm = noise();
    for nu in 2..=6 {
        for trial in 0..3u64 {
            let c = random_circuit(100 * nu as u64 + trial, nu);
            assert_eq!(c.noisy_gate_count(&nm, 0.01), nu);
            let mut rng = rng_from_seed(trial);
            let sigma = random_pauli(&mut rng, 2, false);
            let rho0 = DensityMatrix::basis(2, 0);
            let value = |eps: f64| {
                let out = run_circuit(&rho0, &c, if eps > 0.0 { Some(&nm) } else { None }, eps).unwrap();
                expectation(&out, &sigma).unwrap()
            };
            let eps: Vec<f64> = (1..=nu + 1).map(|k| 0.01 * k as f64).collect();
            let pairs: Vec<(f64, f64)> = eps.iter().map(|&e| (e, value(e))).collect();
            let fit = fit_exact(&NoiseScaleSeries::from_pairs(&pairs, Some(nu)).unwrap()).unwrap();
            let truth = value(0.0);
            assert!((fit.zero_noise_value - truth).abs() < 1e-8, "ν={nu}: {} vs {truth}", fit.zero_noise_value);
            let off = 0.037;
            assert!((fit.evaluate(off) - value(off)).abs() < 1e-9);
        }
    }
}

#[test]
fn too_few_points_miss_the_noiseless_value() {
    let nm = noise();
    let c = random_circuit(42, 5);
    let sigma: esd_core::PauliString = "ZZ".parse().unwrap();
    let rho0 = DensityMatrix::basis(2, 0);
    let value = |eps: f64| {
        let out = run_circuit(&rho0, &c, Some(&nm), eps).unwrap();
        expectation(&out, &sigma).unwrap()
    };
    let pairs: Vec<(f64, f64)> = (1..=3).map(|k| (0.05 * k as f64, value(0.05 * k as f64))).collect();
    let fit = fit_exact(&NoiseScaleSeries::from_pairs(&pairs, None).unwrap()).unwrap();
    assert!((fit.zero_noise_value - value(0.0)).abs() > 1e-9);
}
