use esd_core::derangement::DerangementSpec;
use esd_core::esd::{prob0_circuit, prob0_twirl_average, EsdCircuitSpec};
use esd_core::random::{random_density_matrix, random_pauli, rng_from_seed};
use esd_core::{NoiseModel, PauliString};

fn twirl_samples(seed: u64, n: usize, qubits: usize, count: usize) -> Vec<Vec<PauliString>> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| (0..n).map(|_| random_pauli(&mut rng, qubits, true)).collect()).collect()
}

#[test]
fn twirl_leaves_noiseless_outcome_unchanged() {
    let mut rng = rng_from_seed(3);
    for (n, qubits) in [(2, 1), (2, 2), (3, 1)] {
        let copies: Vec<_> = (0..n).map(|_| random_density_matrix(&mut rng, qubits)).collect();
        let sigma = random_pauli(&mut rng, qubits, false);
        for variant in DerangementSpec::all(n).unwrap() {
            let spec = EsdCircuitSpec::new(sigma.clone(), variant, true);
            let plain = prob0_circuit(&copies, &spec, None, 1.0).unwrap();
            for tw in twirl_samples(n as u64 * 31 + qubits as u64, n, qubits, 6) {
                let twirled = prob0_circuit(&copies, &spec.clone().with_twirl(tw), None, 1.0).unwrap();
                assert!((twirled - plain).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn single_sample_average_is_the_twirled_run() {
    let mut rng = rng_from_seed(9);
    let copies: Vec<_> = (0..2).map(|_| random_density_matrix(&mut rng, 2)).collect();
    let spec = EsdCircuitSpec::new("XZ".parse().unwrap(), DerangementSpec::swap(), true);
    let nm = NoiseModel::depolarizing(1e-3, 5e-3);
    let tw = twirl_samples(4, 2, 2, 1);
    let avg = prob0_twirl_average(&copies, &spec, &tw, Some(&nm), 1.0).unwrap();
    let single = prob0_circuit(&copies, &spec.clone().with_twirl(tw[0].clone()), Some(&nm), 1.0).unwrap();
    assert_eq!(avg, single);
}
