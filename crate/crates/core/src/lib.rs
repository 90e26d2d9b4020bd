//! Error suppression by derangement: a dense density-matrix laboratory.
//!
//! The crate simulates noisy states and circuits, evaluates the controlled
//! derangement (generalised SWAP) measurement both as a circuit and through
//! its closed trace form, and provides the estimators, bounds, extrapolation
//! fits, gate recompilation checks and spin-ring VQE workload built on top.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! basis index throughout.

// `!(x > 0.0)` style guards are meant to reject NaN too; `%` keeps the
// declared minimum toolchain.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod channels;
pub mod circuit;
pub mod derangement;
pub mod error;
pub mod esd;
pub mod estimator;
pub mod gates;
pub mod kernel;
pub mod linalg;
pub mod noise;
pub mod pauli;
pub mod random;
pub mod recompile;
pub mod state;
pub mod vqe;
pub mod zne;

pub use channels::{apply_channel, KrausChannel};
pub use circuit::{build_alternating_ansatz, random_alternating_ansatz, run_circuit, Circuit};
pub use derangement::DerangementSpec;
pub use error::{EsdError, Result};
pub use esd::{build_esd_circuit, prob0_circuit, prob0_fast, prob0_fast_variant, EsdCircuitSpec};
pub use gates::{Gate, GateKind};
pub use linalg::{hermitian_eig, kron, product_trace, ComplexMatrix, Spectrum};
pub use noise::{amplify, ChannelFamily, NoiseEntry, NoiseModel};
pub use pauli::{ObservableSum, Pauli, PauliString};
pub use recompile::{
    equivalence_full, equivalence_local_su4, recompile, verify_table1, CircuitTemplate, EquivalenceReport, EquivalenceType,
    GateSet, GateSetName,
};
pub use state::{
    coherent_mismatch, expectation, renyi_entropy, spectral_data, DensityMatrix, MismatchReport, Observable,
    RenyiOrder, SpectralData,
};
pub use vqe::{
    build_spin_ring, build_vha, energy_with_esd, exact_ground_energy, optimize_vha, SpinRingSpec, VhaParams,
};
pub use zne::{fit_exact, fit_pade33, fit_polynomial, zne_pipeline, FitKind, FitResult, NoiseScaleSeries};

pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
