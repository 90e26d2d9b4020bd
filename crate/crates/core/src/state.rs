//! Density matrices and their spectral analysis.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{EsdError, Result};
use crate::linalg::{self, hermitian_eig, kron, ComplexMatrix, Spectrum, DEGENERACY_GAP};
use crate::pauli::{ObservableSum, PauliString};

/// Tolerance on Hermiticity and unit trace of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

/// Eigenvalues below this are excluded from the error distribution.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// A density matrix on `qubit_count` qubits.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    matrix: ComplexMatrix,
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix({} qubits) {:?}", self.qubits, self.matrix)
    }
}

impl DensityMatrix {
    /// Validates dimension, Hermiticity and trace. Positivity is checked by
    /// [`DensityMatrix::new_checked`] since it needs a full eigensolve.
    pub fn new(qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dim = 1usize << qubits;
        if !matrix.is_square() || matrix.rows() != dim {
            return Err(EsdError::DimensionMismatch(format!(
                "{qubits} qubits need a {dim}x{dim} matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let dev = matrix.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(EsdError::NotHermitian { deviation: dev });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(EsdError::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(Self { qubits, matrix })
    }

    pub fn new_checked(qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::new(qubits, matrix)?;
        let spec = hermitian_eig(&rho.matrix)?;
        let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(EsdError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Wraps a matrix produced by trace-preserving evolution of a valid state.
    pub(crate) fn from_evolved(qubits: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), 1usize << qubits);
        Self { qubits, matrix }
    }

    pub fn pure(state: &[C64]) -> Result<Self> {
        let dim = state.len();
        if !dim.is_power_of_two() || dim == 0 {
            return Err(EsdError::DimensionMismatch(format!("state vector of length {dim}")));
        }
        let norm = linalg::vec_norm(state);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(EsdError::InvalidState(format!("state vector norm {norm}")));
        }
        Ok(Self { qubits: dim.trailing_zeros() as usize, matrix: ComplexMatrix::outer(state) })
    }

    /// |index><index|.
    pub fn basis(qubits: usize, index: usize) -> Self {
        let dim = 1usize << qubits;
        assert!(index < dim, "basis index out of range");
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(index, index)] = linalg::ONE;
        Self { qubits, matrix: m }
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self { qubits, matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    /// rho_1 ⊗ rho_2 ⊗ ...
    pub fn tensor(parts: &[&DensityMatrix]) -> Result<Self> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| EsdError::InvalidArgument("tensor product of no states".into()))?;
        let mut m = first.matrix.clone();
        let mut qubits = first.qubits;
        for p in rest {
            m = kron(&m, &p.matrix);
            qubits += p.qubits;
        }
        Ok(Self { qubits, matrix: m })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// tr[rho^2].
    pub fn purity(&self) -> f64 {
        // tr[rho^2] = sum |rho_ij|^2 for Hermitian rho
        self.matrix.data().iter().map(|z| z.norm_sqr()).sum()
    }

    /// tr[rho^n] by repeated multiplication.
    pub fn power_trace(&self, n: u32) -> f64 {
        match n {
            0 => self.dim() as f64,
            1 => self.trace().re,
            _ => {
                let factors: Vec<&ComplexMatrix> = (0..n).map(|_| &self.matrix).collect();
                linalg::product_trace(&factors).expect("square").re
            }
        }
    }

    /// <psi|rho|psi>.
    pub fn fidelity_with_pure(&self, psi: &[C64]) -> Result<f64> {
        let v = self.matrix.mul_vec(psi)?;
        Ok(linalg::vdot(psi, &v).re)
    }

    /// Trace distance ½‖rho − sigma‖₁.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let diff = self.matrix.sub(&other.matrix)?;
        let spec = hermitian_eig(&diff)?;
        Ok(0.5 * spec.eigenvalues.iter().map(|e| e.abs()).sum::<f64>())
    }
}

/// Order of a Rényi entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RenyiOrder {
    /// Integer order n ≥ 1 (n = 1 is the Shannon limit).
    Finite(u32),
    Infinity,
}

/// Rényi entropy H_n(p) = ln(Σ p_k^n) / (1 − n); H_∞ = −ln max p_k.
///
/// An empty distribution (no error support) has entropy +∞.
pub fn renyi_entropy(p: &[f64], order: RenyiOrder) -> Result<f64> {
    if p.is_empty() {
        return Ok(f64::INFINITY);
    }
    if let Some(bad) = p.iter().find(|&&x| !(x >= 0.0)) {
        return Err(EsdError::InvalidArgument(format!("negative probability {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(EsdError::InvalidArgument(format!("probabilities sum to {total}")));
    }
    match order {
        RenyiOrder::Infinity => {
            let max = p.iter().copied().fold(0.0, f64::max);
            Ok(-max.ln())
        }
        RenyiOrder::Finite(0) => Err(EsdError::InvalidArgument("Rényi order must be ≥ 1".into())),
        RenyiOrder::Finite(1) => {
            Ok(-p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>())
        }
        RenyiOrder::Finite(n) => {
            let s: f64 = p.iter().map(|&x| x.powi(n as i32)).sum();
            Ok(s.ln() / (1.0 - n as f64))
        }
    }
}

/// The decomposition rho = λ|ψ><ψ| + (1−λ) Σ_k p_k |ψ_k><ψ_k|.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Dominant eigenvalue λ.
    pub lambda: f64,
    pub dominant_vector: Vec<C64>,
    /// Normalised error distribution, descending. Empty for pure states.
    pub error_probs: Vec<f64>,
    pub p_max: f64,
    pub renyi: BTreeMap<RenyiOrder, f64>,
    /// n → tr[rho^n].
    pub purity_powers: BTreeMap<u32, f64>,
    /// Set when λ is not strictly larger than the next eigenvalue; bounds
    /// derived from this data are then unreliable.
    pub dominance_violated: bool,
    spectrum: Spectrum,
    support: usize,
}

impl SpectralData {
    /// Eigenvector of the k-th error probability (k = 0 is the largest).
    pub fn error_vector(&self, k: usize) -> Vec<C64> {
        assert!(k < self.error_probs.len(), "error index out of range");
        self.spectrum.vector(k + 1)
    }

    /// All eigenvalues of rho, descending, negatives clamped to zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Error weights (1−λ) p_k as they appear in rho.
    pub fn error_weights(&self) -> Vec<f64> {
        self.error_probs.iter().map(|p| (1.0 - self.lambda) * p).collect()
    }

    /// λ|ψ><ψ| + (1−λ) Σ p_k |ψ_k><ψ_k|.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.dominant_vector.len();
        let mut m = ComplexMatrix::outer(&self.dominant_vector).scale_real(self.lambda);
        for (k, w) in self.error_weights().iter().enumerate() {
            let v = self.error_vector(k);
            m.add_scaled(&ComplexMatrix::outer(&v), C64::new(*w, 0.0)).expect("same dim");
        }
        debug_assert_eq!(m.rows(), dim);
        m
    }

    pub fn support_size(&self) -> usize {
        self.support
    }
}

/// Spectral analysis of a state, with Rényi entropies of the error
/// distribution for each requested order and tr[rho^n] for each finite order.
pub fn spectral_data(rho: &DensityMatrix, orders: &[RenyiOrder]) -> Result<SpectralData> {
    let mut spectrum = hermitian_eig(rho.matrix())?;
    for e in &mut spectrum.eigenvalues {
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    let eig = &spectrum.eigenvalues;
    let lambda = eig[0];
    let dominance_violated = eig.len() > 1 && eig[0] - eig[1] <= DEGENERACY_GAP;

    let kept: Vec<f64> = eig[1..].iter().copied().take_while(|&e| e >= SUPPORT_CUTOFF).collect();
    let kept_total: f64 = kept.iter().sum();
    let error_probs: Vec<f64> =
        if kept_total > 0.0 { kept.iter().map(|e| e / kept_total).collect() } else { Vec::new() };
    let p_max = error_probs.first().copied().unwrap_or(0.0);

    let mut renyi = BTreeMap::new();
    let mut purity_powers = BTreeMap::new();
    for &order in orders {
        renyi.insert(order, renyi_entropy(&error_probs, order)?);
        if let RenyiOrder::Finite(n) = order {
            purity_powers.insert(n, eig.iter().map(|e| e.powi(n as i32)).sum());
        }
    }

    let dominant_vector = spectrum.vector(0);
    Ok(SpectralData {
        lambda,
        dominant_vector,
        support: error_probs.len(),
        error_probs,
        p_max,
        renyi,
        purity_powers,
        dominance_violated,
        spectrum,
    })
}

/// Something with a real expectation value tr[rho O].
pub trait Observable {
    fn qubit_count(&self) -> usize;
    fn expectation_in(&self, rho: &DensityMatrix) -> Result<f64>;
}

fn real_part_checked(z: C64) -> Result<f64> {
    if z.im.abs() > 1e-10 {
        return Err(EsdError::InvalidState(format!("expectation has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

impl Observable for PauliString {
    fn qubit_count(&self) -> usize {
        PauliString::qubit_count(self)
    }

    fn expectation_in(&self, rho: &DensityMatrix) -> Result<f64> {
        check_qubits(self.qubit_count(), rho)?;
        real_part_checked(self.trace_with(rho.matrix())?)
    }
}

impl Observable for ObservableSum {
    fn qubit_count(&self) -> usize {
        ObservableSum::qubit_count(self)
    }

    fn expectation_in(&self, rho: &DensityMatrix) -> Result<f64> {
        check_qubits(self.qubit_count(), rho)?;
        let mut total = C64::new(0.0, 0.0);
        for (c, p) in self.terms() {
            total += p.trace_with(rho.matrix())? * *c;
        }
        real_part_checked(total)
    }
}

fn check_qubits(q: usize, rho: &DensityMatrix) -> Result<()> {
    if q != rho.qubit_count() {
        return Err(EsdError::DimensionMismatch(format!(
            "observable on {q} qubits, state on {}",
            rho.qubit_count()
        )));
    }
    Ok(())
}

/// tr[rho O], real part.
pub fn expectation(rho: &DensityMatrix, obs: &dyn Observable) -> Result<f64> {
    obs.expectation_in(rho)
}

/// <psi|O|psi> for a pure vector.
pub fn pure_expectation(psi: &[C64], obs: &PauliString) -> Result<f64> {
    let v = obs.apply_to_vector(psi)?;
    Ok(linalg::vdot(psi, &v).re)
}

/// Coherent mismatch between the dominant eigenvector of a state and an
/// ideal pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchReport {
    /// c = 1 − |<ψ_id|ψ_1>|², in [0, 1].
    pub c: f64,
    /// The dominant eigenvalue is degenerate, so ψ_1 is not unique.
    pub degenerate: bool,
}

pub fn coherent_mismatch(rho: &DensityMatrix, psi_id: &[C64]) -> Result<MismatchReport> {
    if psi_id.len() != rho.dim() {
        return Err(EsdError::DimensionMismatch(format!(
            "ideal state of length {} for a {}-dimensional state",
            psi_id.len(),
            rho.dim()
        )));
    }
    let norm = linalg::vec_norm(psi_id);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(EsdError::InvalidArgument(format!("ideal state has norm {norm}")));
    }
    let spec = hermitian_eig(rho.matrix())?;
    let degenerate = spec.eigenvalues.len() > 1 && spec.eigenvalues[0] - spec.eigenvalues[1] <= DEGENERACY_GAP;
    let overlap = linalg::vdot(psi_id, &spec.vector(0)).norm_sqr();
    Ok(MismatchReport { c: (1.0 - overlap).clamp(0.0, 1.0), degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, random_density_matrix, rng_from_seed};
    use approx::assert_abs_diff_eq;

    /// 0.8|ψ><ψ| + Σ_{k=2}^{101} 0.002|ψ_k><ψ_k| on 7 qubits, in a random basis.
    fn example_one_state() -> DensityMatrix {
        let mut spec = vec![0.0; 128];
        spec[0] = 0.8;
        for s in spec.iter_mut().skip(1).take(100) {
            *s = 0.002;
        }
        let u = haar_unitary(&mut rng_from_seed(11), 128);
        let m = u.matmul(&ComplexMatrix::real_diag(&spec)).unwrap().matmul(&u.adjoint()).unwrap();
        DensityMatrix::new(7, m).unwrap()
    }

    #[test]
    fn pure_state_spectral_data() {
        let rho = DensityMatrix::basis(2, 0);
        let sd = spectral_data(&rho, &[RenyiOrder::Finite(2), RenyiOrder::Finite(3)]).unwrap();
        assert_abs_diff_eq!(sd.lambda, 1.0, epsilon = 1e-12);
        assert!(sd.error_probs.is_empty());
        for n in [2, 3] {
            assert_abs_diff_eq!(sd.purity_powers[&n], 1.0, epsilon = 1e-12);
        }
        assert_eq!(sd.renyi[&RenyiOrder::Finite(2)], f64::INFINITY);
    }

    #[test]
    fn example_one_values() {
        let rho = example_one_state();
        let sd = spectral_data(&rho, &[RenyiOrder::Finite(3)]).unwrap();
        assert_abs_diff_eq!(sd.lambda, 0.8, epsilon = 1e-12);
        assert_eq!(sd.error_probs.len(), 100);
        for p in &sd.error_probs {
            assert_abs_diff_eq!(*p, 0.01, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(sd.purity_powers[&3], 0.5120008, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.renyi[&RenyiOrder::Finite(3)], -0.5 * 1e-4f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn renyi_examples() {
        let uniform = vec![0.01; 100];
        assert_abs_diff_eq!(renyi_entropy(&uniform, RenyiOrder::Finite(3)).unwrap(), 4.605170185988091, epsilon = 1e-9);
        for order in [RenyiOrder::Finite(2), RenyiOrder::Finite(5), RenyiOrder::Infinity] {
            assert_eq!(renyi_entropy(&[1.0], order).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(renyi_entropy(&[0.5, 0.5], RenyiOrder::Finite(2)).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(renyi_entropy(&[], RenyiOrder::Finite(2)).unwrap(), f64::INFINITY);
        assert!(renyi_entropy(&[0.5, 0.4], RenyiOrder::Finite(2)).is_err());
    }

    #[test]
    fn expectation_examples() {
        let z: PauliString = "Z".parse().unwrap();
        assert_abs_diff_eq!(expectation(&DensityMatrix::basis(1, 0), &z).unwrap(), 1.0);
        let mixed = DensityMatrix::maximally_mixed(3);
        for s in ["XII", "IYZ", "ZZZ"] {
            let p: PauliString = s.parse().unwrap();
            assert_abs_diff_eq!(expectation(&mixed, &p).unwrap(), 0.0, epsilon = 1e-15);
        }
        let rho = random_density_matrix(&mut rng_from_seed(5), 3);
        assert_abs_diff_eq!(expectation(&rho, &PauliString::identity(3)).unwrap(), 1.0, epsilon = 1e-12);
        assert!(expectation(&rho, &z).is_err());
    }

    #[test]
    fn reconstruction_and_monotone_renyi() {
        let mut rng = rng_from_seed(9);
        for _ in 0..10 {
            let rho = random_density_matrix(&mut rng, 3);
            let orders = [RenyiOrder::Finite(2), RenyiOrder::Finite(3), RenyiOrder::Finite(4), RenyiOrder::Infinity];
            let sd = spectral_data(&rho, &orders).unwrap();
            assert!(sd.reconstruct().max_abs_diff(rho.matrix()) < 1e-9);
            let h: Vec<f64> = orders.iter().map(|o| sd.renyi[o]).collect();
            for w in h.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
            let powers: Vec<f64> = (2..=4).map(|n| sd.purity_powers[&n]).collect();
            assert!(powers[0] > powers[1] && powers[1] > powers[2]);
        }
    }

    #[test]
    fn coherent_mismatch_zero_cases() {
        let mut rng = rng_from_seed(4);
        let psi = crate::random::haar_state(&mut rng, 4);
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert_abs_diff_eq!(coherent_mismatch(&rho, &psi).unwrap().c, 0.0, epsilon = 1e-12);

        // Mixture in the eigenbasis of |psi>: eigenvectors unchanged.
        let u = haar_unitary(&mut rng, 4);
        let basis0 = u.column(0);
        let rho = DensityMatrix::new(
            2,
            u.matmul(&ComplexMatrix::real_diag(&[0.7, 0.2, 0.06, 0.04])).unwrap().matmul(&u.adjoint()).unwrap(),
        )
        .unwrap();
        let report = coherent_mismatch(&rho, &basis0).unwrap();
        assert_abs_diff_eq!(report.c, 0.0, epsilon = 1e-12);
        assert!(!report.degenerate);

        // Global phase of the ideal state is irrelevant.
        let phased: Vec<C64> = basis0.iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect();
        assert_abs_diff_eq!(coherent_mismatch(&rho, &phased).unwrap().c, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_dominance_is_flagged() {
        let rho = DensityMatrix::maximally_mixed(1);
        let sd = spectral_data(&rho, &[]).unwrap();
        assert!(sd.dominance_violated);
    }
}
