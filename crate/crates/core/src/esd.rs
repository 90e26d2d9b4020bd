//! The controlled-derangement Hadamard test and its two backends.
//!
//! Layout: ancilla is qubit 0, register r (0-based) holds qubits
//! `1 + r·N .. 1 + (r+1)·N`. The ancilla reads 0 with probability
//! ½ + ½ Re tr[(σ ⊗ Id) D (ρ₁ ⊗ … ⊗ ρₙ)].

use serde::{Deserialize, Serialize};

use crate::circuit::{run_matrix_with, Circuit};
use crate::derangement::DerangementSpec;
use crate::error::{EsdError, Result};
use crate::gates::{Gate, GateKind};
use crate::kernel;
use crate::linalg::{kron, product_trace, ComplexMatrix};
use crate::noise::NoiseModel;
use crate::pauli::PauliString;
use crate::state::DensityMatrix;

/// Default qubit cap of the full-circuit backend.
pub const DEFAULT_QUBIT_CAP: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsdCircuitSpec {
    /// Qubits per register.
    pub register_qubits: usize,
    pub observable: PauliString,
    pub variant: DerangementSpec,
    /// Apply controlled-σ (prob₀) or not (prob′₀).
    pub include_observable: bool,
    /// Per-register Pauli strings P₁..Pₙ for the twirled variant.
    #[serde(default)]
    pub twirl: Option<Vec<PauliString>>,
}

impl EsdCircuitSpec {
    pub fn new(observable: PauliString, variant: DerangementSpec, include_observable: bool) -> Self {
        Self { register_qubits: observable.qubit_count(), observable, variant, include_observable, twirl: None }
    }

    pub fn with_twirl(mut self, twirl: Vec<PauliString>) -> Self {
        self.twirl = Some(twirl);
        self
    }

    pub fn n(&self) -> usize {
        self.variant.n()
    }

    pub fn total_qubits(&self) -> usize {
        self.n() * self.register_qubits + 1
    }

    /// Qubit indices of register r.
    pub fn register(&self, r: usize) -> Vec<usize> {
        let start = 1 + r * self.register_qubits;
        (start..start + self.register_qubits).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.register_qubits == 0 {
            return Err(EsdError::InvalidArgument("registers need at least one qubit".into()));
        }
        if self.observable.qubit_count() != self.register_qubits {
            return Err(EsdError::DimensionMismatch(format!(
                "observable on {} qubits, registers of {}",
                self.observable.qubit_count(),
                self.register_qubits
            )));
        }
        if let Some(tw) = &self.twirl {
            if tw.len() != self.n() || tw.iter().any(|p| p.qubit_count() != self.register_qubits) {
                return Err(EsdError::DimensionMismatch("twirl needs one N-qubit string per register".into()));
            }
        }
        Ok(())
    }
}

/// Builds the Hadamard-test circuit (parts before and after the point where
/// controlled-σ is applied, so callers can inject operations there).
pub fn build_esd_parts(spec: &EsdCircuitSpec) -> Result<(Circuit, Circuit)> {
    spec.validate()?;
    let total = spec.total_qubits();
    let mut pre = Circuit::new(total);
    pre.push(Gate::h(0))?;
    if let Some(tw) = &spec.twirl {
        for (r, p) in tw.iter().enumerate() {
            for (&q, &l) in spec.register(r).iter().zip(p.letters()) {
                if let Some(g) = Gate::pauli(q, l) {
                    pre.push(g)?;
                }
            }
        }
    }
    for &(a, b) in spec.variant.transpositions() {
        for (qa, qb) in spec.register(a).into_iter().zip(spec.register(b)) {
            pre.push(Gate::cswap(0, qa, qb))?;
        }
    }
    if let Some(tw) = &spec.twirl {
        for (r, p) in tw.iter().enumerate() {
            if !p.is_identity() {
                pre.push(Gate::controlled_pauli(0, &spec.register(r), p.clone(), true)?)?;
            }
        }
        for r in 0..spec.n() {
            let p = &tw[spec.variant.s(r)];
            if !p.is_identity() {
                pre.push(Gate::controlled_pauli(0, &spec.register(r), p.clone(), false)?)?;
            }
        }
    }
    let mut post = Circuit::new(total);
    if spec.include_observable && !spec.observable.is_identity() {
        post.push(Gate::controlled_pauli(0, &spec.register(0), spec.observable.clone(), false)?)?;
    }
    post.push(Gate::h(0))?;
    Ok((pre, post))
}

pub fn build_esd_circuit(spec: &EsdCircuitSpec) -> Result<Circuit> {
    let (mut pre, post) = build_esd_parts(spec)?;
    pre.extend(&post)?;
    Ok(pre)
}

/// |0><0| ⊗ ρ₁ ⊗ … ⊗ ρₙ.
pub fn esd_input(copies: &[DensityMatrix]) -> Result<ComplexMatrix> {
    let mut m = DensityMatrix::basis(1, 0).into_matrix();
    for c in copies {
        m = kron(&m, c.matrix());
    }
    Ok(m)
}

fn check_copies(copies: &[DensityMatrix], spec: &EsdCircuitSpec) -> Result<()> {
    if copies.len() != spec.n() {
        return Err(EsdError::DimensionMismatch(format!("{} copies for n = {}", copies.len(), spec.n())));
    }
    if let Some(c) = copies.iter().find(|c| c.qubit_count() != spec.register_qubits) {
        return Err(EsdError::DimensionMismatch(format!(
            "copy on {} qubits, registers of {}",
            c.qubit_count(),
            spec.register_qubits
        )));
    }
    Ok(())
}

/// Probability that the ancilla of `circuit` reads 0 on the input
/// |0><0| ⊗ copies.
pub fn prob0_of_circuit(
    copies: &[DensityMatrix],
    circuit: &Circuit,
    nm: Option<&NoiseModel>,
    eps_scale: f64,
    cap: usize,
) -> Result<f64> {
    let total = circuit.qubit_count();
    if total > cap {
        return Err(EsdError::QubitCapExceeded { needed: total, cap });
    }
    let mut m = esd_input(copies)?;
    if m.rows() != 1 << total {
        return Err(EsdError::DimensionMismatch("copies do not fill the circuit registers".into()));
    }
    run_matrix_with(&mut m, circuit, nm, eps_scale, |_, _| {})?;
    Ok(kernel::prob_zero(&m, 0, total))
}

/// Full-circuit backend with the default qubit cap.
pub fn prob0_circuit(
    copies: &[DensityMatrix],
    spec: &EsdCircuitSpec,
    nm: Option<&NoiseModel>,
    eps_scale: f64,
) -> Result<f64> {
    prob0_circuit_capped(copies, spec, nm, eps_scale, DEFAULT_QUBIT_CAP)
}

pub fn prob0_circuit_capped(
    copies: &[DensityMatrix],
    spec: &EsdCircuitSpec,
    nm: Option<&NoiseModel>,
    eps_scale: f64,
    cap: usize,
) -> Result<f64> {
    check_copies(copies, spec)?;
    if spec.total_qubits() > cap {
        return Err(EsdError::QubitCapExceeded { needed: spec.total_qubits(), cap });
    }
    prob0_of_circuit(copies, &build_esd_circuit(spec)?, nm, eps_scale, cap)
}

/// Twirled prob₀ averaged over several Pauli assignments.
pub fn prob0_twirl_average(
    copies: &[DensityMatrix],
    spec: &EsdCircuitSpec,
    twirls: &[Vec<PauliString>],
    nm: Option<&NoiseModel>,
    eps_scale: f64,
) -> Result<f64> {
    if twirls.is_empty() {
        return Err(EsdError::InvalidArgument("no twirl samples".into()));
    }
    let mut total = 0.0;
    for tw in twirls {
        total += prob0_circuit(copies, &spec.clone().with_twirl(tw.clone()), nm, eps_scale)?;
    }
    Ok(total / twirls.len() as f64)
}

/// Replaces every CSWAP of `circuit` by `replacement`, a three-qubit circuit
/// on (control, a, b), mapped onto the gate's qubits.
pub fn lower_cswaps(circuit: &Circuit, replacement: &Circuit) -> Result<Circuit> {
    if replacement.qubit_count() != 3 {
        return Err(EsdError::DimensionMismatch(format!(
            "CSWAP replacement acts on {} qubits, not 3",
            replacement.qubit_count()
        )));
    }
    let mut out = Circuit::new(circuit.qubit_count());
    for g in circuit.gates() {
        if g.kind == GateKind::CSwap {
            for r in replacement.gates() {
                let mut mapped = r.clone();
                mapped.qubits = r.qubits.iter().map(|&q| g.qubits[q]).collect();
                out.push(mapped)?;
            }
        } else {
            out.push(g.clone())?;
        }
    }
    Ok(out)
}

/// prob₀ for several (observable, include) pairs that share one derangement.
/// The part before controlled-σ is simulated once and reused.
pub fn prob0_batch(
    copies: &[DensityMatrix],
    variant: &DerangementSpec,
    observables: &[(PauliString, bool)],
    twirl: Option<&[PauliString]>,
    nm: Option<&NoiseModel>,
    eps_scale: f64,
    cswap_lowering: Option<&Circuit>,
) -> Result<Vec<f64>> {
    let first = copies.first().ok_or_else(|| EsdError::InvalidArgument("no copies".into()))?;
    let qubits = first.qubit_count();
    let mut base = EsdCircuitSpec::new(PauliString::identity(qubits), variant.clone(), false);
    if let Some(tw) = twirl {
        base = base.with_twirl(tw.to_vec());
    }
    check_copies(copies, &base)?;
    let total = base.total_qubits();
    if total > DEFAULT_QUBIT_CAP {
        return Err(EsdError::QubitCapExceeded { needed: total, cap: DEFAULT_QUBIT_CAP });
    }
    let (pre, _) = build_esd_parts(&base)?;
    let pre = match cswap_lowering {
        Some(r) => lower_cswaps(&pre, r)?,
        None => pre,
    };
    let mut shared = esd_input(copies)?;
    run_matrix_with(&mut shared, &pre, nm, eps_scale, |_, _| {})?;
    observables
        .iter()
        .map(|(sigma, include)| {
            let mut spec = base.clone();
            spec.observable = sigma.clone();
            spec.include_observable = *include;
            let (_, post) = build_esd_parts(&spec)?;
            let mut m = shared.clone();
            run_matrix_with(&mut m, &post, nm, eps_scale, |_, _| {})?;
            Ok(kernel::prob_zero(&m, 0, total))
        })
        .collect()
}

fn observable_or_identity(copies: &[DensityMatrix], sigma: &PauliString, include: bool) -> Result<Option<ComplexMatrix>> {
    let first = copies.first().ok_or_else(|| EsdError::InvalidArgument("no copies".into()))?;
    if sigma.qubit_count() != first.qubit_count() {
        return Err(EsdError::DimensionMismatch(format!(
            "observable on {} qubits, copies on {}",
            sigma.qubit_count(),
            first.qubit_count()
        )));
    }
    if copies.iter().any(|c| c.qubit_count() != first.qubit_count()) {
        return Err(EsdError::DimensionMismatch("copies differ in size".into()));
    }
    Ok(if include && !sigma.is_identity() { Some(sigma.matrix()) } else { None })
}

/// ½ + ½ Re tr[σ ρ₁ ρ₂ … ρₙ] (σ = Id when `include_observable` is false).
///
/// For identical copies this is ½ + ½ tr[ρⁿσ]. For distinct copies it equals
/// the circuit value of the default shift variant, because the real part of
/// a trace of Hermitian factors is unchanged by reversing their order.
pub fn prob0_fast(copies: &[DensityMatrix], sigma: &PauliString, include_observable: bool) -> Result<f64> {
    let s = observable_or_identity(copies, sigma, include_observable)?;
    let mut factors: Vec<&ComplexMatrix> = Vec::with_capacity(copies.len() + 1);
    if let Some(s) = &s {
        factors.push(s);
    }
    factors.extend(copies.iter().map(DensityMatrix::matrix));
    Ok(0.5 + 0.5 * product_trace(&factors)?.re)
}

/// ½ + ½ Re tr[σ ρ_{s(1)} ρ_{s²(1)} … ρ₁] for an arbitrary variant s.
pub fn prob0_fast_variant(
    copies: &[DensityMatrix],
    sigma: &PauliString,
    include_observable: bool,
    variant: &DerangementSpec,
) -> Result<f64> {
    if copies.len() != variant.n() {
        return Err(EsdError::DimensionMismatch(format!("{} copies for n = {}", copies.len(), variant.n())));
    }
    let s = observable_or_identity(copies, sigma, include_observable)?;
    let mut factors: Vec<&ComplexMatrix> = Vec::with_capacity(copies.len() + 1);
    if let Some(s) = &s {
        factors.push(s);
    }
    let cycle = variant.cycle_from_first();
    factors.extend(cycle[1..].iter().map(|&k| copies[k].matrix()));
    factors.push(copies[0].matrix());
    Ok(0.5 + 0.5 * product_trace(&factors)?.re)
}

/// ½ + ½ tr[ρⁿ σ] from the spectrum of a single state:
/// Σ_i e_iⁿ <v_i|σ|v_i>.
pub fn prob0_spectral(spectrum: &crate::linalg::Spectrum, sigma: &PauliString, n: u32) -> Result<f64> {
    let mut t = 0.0;
    for (i, &e) in spectrum.eigenvalues.iter().enumerate() {
        let w = e.max(0.0).powi(n as i32);
        if w == 0.0 {
            continue;
        }
        t += w * crate::state::pure_expectation(&spectrum.vector(i), sigma)?;
    }
    Ok(0.5 + 0.5 * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_matches_single_runs() {
        let mut rng = crate::random::rng_from_seed(12);
        let copies: Vec<_> = (0..2).map(|_| crate::random::random_density_matrix(&mut rng, 2)).collect();
        let nm = NoiseModel::depolarizing(2e-3, 1e-2);
        let variant = DerangementSpec::swap();
        let obs: Vec<(PauliString, bool)> =
            vec![("XZ".parse().unwrap(), true), ("YY".parse().unwrap(), true), (PauliString::identity(2), false)];
        let batch = prob0_batch(&copies, &variant, &obs, None, Some(&nm), 1.0, None).unwrap();
        for ((sigma, inc), b) in obs.iter().zip(&batch) {
            let spec = EsdCircuitSpec::new(sigma.clone(), variant.clone(), *inc);
            assert!((prob0_circuit(&copies, &spec, Some(&nm), 1.0).unwrap() - b).abs() < 1e-13);
        }
    }

    #[test]
    fn lowering_maps_qubits_in_order() {
        let spec = EsdCircuitSpec::new("ZX".parse().unwrap(), DerangementSpec::cyclic(3, 1).unwrap(), true);
        let circuit = build_esd_circuit(&spec).unwrap();
        let local = Gate::cswap(0, 1, 2).matrix();
        let replacement = Circuit::from_gates(3, vec![Gate::custom(local, vec![0, 1, 2]).unwrap()]).unwrap();
        let lowered = lower_cswaps(&circuit, &replacement).unwrap();
        assert_eq!(lowered.len(), circuit.len());
        assert!(lowered.unitary().unwrap().max_abs_diff(&circuit.unitary().unwrap()) < 1e-12);
        let wrong = Circuit::from_gates(3, vec![Gate::cswap(1, 0, 2)]).unwrap();
        assert!(lower_cswaps(&circuit, &wrong).unwrap().unitary().unwrap().max_abs_diff(&circuit.unitary().unwrap()) > 0.1);
    }

    use crate::gates::GateKind;
    use crate::random::{haar_state, random_density_matrix, random_pauli, rng_from_seed};

    #[test]
    fn smallest_instance_gate_census() {
        let spec = EsdCircuitSpec::new("Z".parse().unwrap(), DerangementSpec::swap(), true);
        let c = build_esd_circuit(&spec).unwrap();
        assert_eq!(c.count_kind(|k| *k == GateKind::CSwap), 1);
        assert_eq!(c.count_kind(|k| matches!(k, GateKind::CPauli(_))), 1);
        assert_eq!(c.count_kind(|k| *k == GateKind::H), 2);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn cswap_count_is_linear() {
        for n in 2..=4 {
            for nq in 1..=3 {
                let spec = EsdCircuitSpec::new(PauliString::identity(nq), DerangementSpec::cyclic(n, 0).unwrap(), false);
                let c = build_esd_circuit(&spec).unwrap();
                assert_eq!(c.count_kind(|k| *k == GateKind::CSwap), nq * (n - 1));
            }
        }
    }

    #[test]
    fn twirl_layers_on_two_copies() {
        let spec = EsdCircuitSpec::new("XZ".parse().unwrap(), DerangementSpec::swap(), true)
            .with_twirl(vec!["XY".parse().unwrap(), "ZX".parse().unwrap()]);
        let c = build_esd_circuit(&spec).unwrap();
        let single_paulis = c.count_kind(|k| matches!(k, GateKind::X | GateKind::Y | GateKind::Z));
        assert_eq!(single_paulis, 4);
        assert_eq!(c.count_kind(|k| matches!(k, GateKind::AntiCPauli(_))), 2);
        // two twirl post-layers plus the observable
        assert_eq!(c.count_kind(|k| matches!(k, GateKind::CPauli(_))), 3);
    }

    #[test]
    fn hadamard_test_on_pure_copies() {
        let mut rng = rng_from_seed(17);
        let psi = haar_state(&mut rng, 4);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let sigma: PauliString = "XZ".parse().unwrap();
        let v = crate::state::pure_expectation(&psi, &sigma).unwrap();
        let spec = EsdCircuitSpec::new(sigma, DerangementSpec::swap(), true);
        let p = prob0_circuit(&[rho.clone(), rho], &spec, None, 1.0).unwrap();
        assert!((p - (1.0 + v) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn backends_agree_on_distinct_copies() {
        let mut rng = rng_from_seed(23);
        for (n, nq) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
            let copies: Vec<DensityMatrix> = (0..n).map(|_| random_density_matrix(&mut rng, nq)).collect();
            let sigma = random_pauli(&mut rng, nq, false);
            for variant in DerangementSpec::all(n).unwrap() {
                let spec = EsdCircuitSpec::new(sigma.clone(), variant.clone(), true);
                let circ = prob0_circuit(&copies, &spec, None, 1.0).unwrap();
                let fast = prob0_fast_variant(&copies, &sigma, true, &variant).unwrap();
                assert!((circ - fast).abs() < 1e-12, "n={n} N={nq}");
            }
            let spec = EsdCircuitSpec::new(sigma.clone(), DerangementSpec::cyclic(n, 0).unwrap(), true);
            let circ = prob0_circuit(&copies, &spec, None, 1.0).unwrap();
            assert!((circ - prob0_fast(&copies, &sigma, true).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn non_shift_variants_follow_their_cycle() {
        let mut rng = rng_from_seed(29);
        let copies: Vec<DensityMatrix> = (0..4).map(|_| random_density_matrix(&mut rng, 1)).collect();
        let sigma: PauliString = "Y".parse().unwrap();
        for variant in DerangementSpec::all(4).unwrap() {
            let spec = EsdCircuitSpec::new(sigma.clone(), variant.clone(), true);
            let circ = prob0_circuit(&copies, &spec, None, 1.0).unwrap();
            let fast = prob0_fast_variant(&copies, &sigma, true, &variant).unwrap();
            assert!((circ - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_purity() {
        let rho = DensityMatrix::maximally_mixed(1);
        let p = prob0_fast(&[rho.clone(), rho], &PauliString::identity(1), false).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let copies = vec![DensityMatrix::maximally_mixed(7); 2];
        let spec = EsdCircuitSpec::new(PauliString::identity(7), DerangementSpec::swap(), false);
        assert!(matches!(prob0_circuit(&copies, &spec, None, 1.0), Err(EsdError::QubitCapExceeded { .. })));
    }
}
