use esd_core::estimator::{bound_qn, bound_qn_entropy, bound_qn_general, eigen_expectations, spectral_estimates};
use esd_core::random::{density_with_spectrum, dominant_spectrum, random_pauli, rng_from_seed};
use esd_core::state::pure_expectation;
use esd_core::{renyi_entropy, spectral_data, RenyiOrder};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // Method A/B errors sit below Q_n-based bounds, and the entropy and
    // general forms agree with or dominate the direct sum.
    #[test]
    fn estimates_respect_bounds(seed in any::<u64>(), lambda in 0.55f64..0.99, qubits in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let dim = 1 << qubits;
        let spectrum = dominant_spectrum(&mut rng, dim, lambda);
        let rho = density_with_spectrum(&mut rng, qubits, &spectrum);
        let data = spectral_data(&rho, &[RenyiOrder::Finite(2), RenyiOrder::Finite(3), RenyiOrder::Finite(4)]).unwrap();
        let sigma = random_pauli(&mut rng, qubits, false);
        let exp = eigen_expectations(data.spectrum(), &sigma).unwrap();
        let ideal = pure_expectation(&data.dominant_vector, &sigma).unwrap();
        for n in 2u32..=4 {
            let (a, b) = spectral_estimates(data.eigenvalues(), &exp, &data.error_probs, n).unwrap();
            prop_assert!((a.value - ideal).abs() <= a.bound + 1e-12);
            prop_assert!((b.value - ideal).abs() <= b.bound + 1e-12);
            let direct = bound_qn(data.lambda, &data.error_probs, n);
            let h = renyi_entropy(&data.error_probs, RenyiOrder::Finite(n)).unwrap();
            let ent = bound_qn_entropy(data.lambda, h, n);
            prop_assert!((direct.q_n - ent.q_n).abs() <= 1e-10 * direct.q_n.max(1e-300) + 1e-14);
            prop_assert!(direct.q_n <= bound_qn_general(data.lambda, data.p_max, n) * (1.0 + 1e-12));
        }
    }
}
