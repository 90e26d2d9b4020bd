//! Seeded random matrices, states and observables.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, ZERO};
use crate::pauli::{Pauli, PauliString};
use crate::state::DensityMatrix;

/// Deterministic generator used across the crate.
pub type EsdRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> EsdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / std::f64::consts::SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng))
}

/// Haar-random unitary (QR of a Ginibre matrix with the R-diagonal phases
/// pushed into Q).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim).to_nalgebra();
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = ComplexMatrix::from_nalgebra(&q);
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            u[(row, c)] *= phase;
        }
    }
    u
}

pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
    let norm = crate::linalg::vec_norm(&v);
    for z in &mut v {
        *z /= norm;
    }
    v
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim);
    g.add(&g.adjoint()).expect("same shape").scale_real(0.5)
}

/// Random full-rank density matrix: Hilbert–Schmidt (Ginibre) measure.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, qubits: usize) -> DensityMatrix {
    let dim = 1usize << qubits;
    let g = ginibre(rng, dim);
    let w = g.matmul(&g.adjoint()).expect("square");
    let tr = w.trace().re;
    DensityMatrix::new(qubits, w.scale_real(1.0 / tr)).expect("valid by construction")
}

/// Density matrix `U diag(spectrum) U^dagger` with a Haar-random basis.
/// `spectrum` is normalised to unit sum.
pub fn density_with_spectrum<R: Rng + ?Sized>(
    rng: &mut R,
    qubits: usize,
    spectrum: &[f64],
) -> DensityMatrix {
    let dim = 1usize << qubits;
    assert_eq!(spectrum.len(), dim, "spectrum length must be 2^qubits");
    let total: f64 = spectrum.iter().sum();
    let u = haar_unitary(rng, dim);
    let d = ComplexMatrix::real_diag(&spectrum.iter().map(|x| x / total).collect::<Vec<_>>());
    let m = u.matmul(&d).expect("square").matmul(&u.adjoint()).expect("square");
    DensityMatrix::new(qubits, m).expect("valid by construction")
}

/// A random spectrum with a dominant weight `lambda` and the remainder spread
/// with random (exponential) weights over the other levels.
pub fn dominant_spectrum<R: Rng + ?Sized>(rng: &mut R, dim: usize, lambda: f64) -> Vec<f64> {
    let mut rest: Vec<f64> = (1..dim).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = rest.iter().sum();
    for x in &mut rest {
        *x *= (1.0 - lambda) / s;
    }
    let mut spec = Vec::with_capacity(dim);
    spec.push(lambda);
    spec.extend(rest);
    spec
}

/// Uniformly random Pauli string. When `include_identity` is false the
/// all-identity string is rejected and redrawn.
pub fn random_pauli<R: Rng + ?Sized>(rng: &mut R, qubits: usize, include_identity: bool) -> PauliString {
    loop {
        let letters: Vec<Pauli> = (0..qubits)
            .map(|_| match rng.random_range(0..4u8) {
                0 => Pauli::I,
                1 => Pauli::X,
                2 => Pauli::Y,
                _ => Pauli::Z,
            })
            .collect();
        let p = PauliString::new(letters);
        if include_identity || !p.is_identity() || qubits == 0 {
            return p;
        }
    }
}

/// `count` random Pauli strings (duplicates allowed).
pub fn sample_paulis<R: Rng + ?Sized>(
    rng: &mut R,
    qubits: usize,
    count: usize,
    include_identity: bool,
) -> Vec<PauliString> {
    (0..count).map(|_| random_pauli(rng, qubits, include_identity)).collect()
}

pub fn zero_vector(dim: usize) -> Vec<C64> {
    vec![ZERO; dim]
}
