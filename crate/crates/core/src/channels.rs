//! Kraus channels: depolarizing, dephasing and amplitude damping.
//!
//! Conventions: depolarizing with probability p is
//! `(1−p)ρ + p·Id/2^k` on the k acted-on qubits; dephasing applies Z with
//! probability p; damping decays |1> → |0> with probability p.

use num_complex::Complex64 as C64;

use crate::error::{EsdError, Result};
use crate::kernel::{self, TargetLayout};
use crate::linalg::{ComplexMatrix, ONE, ZERO};
use crate::pauli::{Pauli, PauliString};
use crate::state::DensityMatrix;

/// Trace-preservation tolerance on Σ K†K.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Remembers channels that have a cheaper closed form than the Kraus sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelShape {
    General,
    Depolarizing { p: f64 },
    Dephasing { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<ComplexMatrix>,
    arity: usize,
    shape: ChannelShape,
}

fn check_prob(p: f64, context: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EsdError::InvalidProbability { value: p, context: context.to_string() });
    }
    Ok(())
}

/// All 4^k Pauli strings on k qubits in lexicographic I < X < Y < Z order.
fn all_paulis(k: usize) -> Vec<PauliString> {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (0..1usize << (2 * k))
        .map(|mut idx| {
            let mut v = vec![Pauli::I; k];
            for slot in v.iter_mut().rev() {
                *slot = letters[idx & 3];
                idx >>= 2;
            }
            PauliString::new(v)
        })
        .collect()
}

impl KrausChannel {
    /// A channel from explicit Kraus operators; completeness is checked.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| EsdError::InvalidArgument("channel needs at least one Kraus operator".into()))?;
        let d = first.rows();
        if !d.is_power_of_two() || operators.iter().any(|k| !k.is_square() || k.rows() != d) {
            return Err(EsdError::DimensionMismatch("Kraus operators must share a 2^k x 2^k shape".into()));
        }
        let ch = Self { operators, arity: d.trailing_zeros() as usize, shape: ChannelShape::General };
        let dev = ch.completeness_deviation();
        if dev > COMPLETENESS_TOL {
            return Err(EsdError::InvalidArgument(format!("Kraus set is not trace preserving (deviation {dev:.3e})")));
        }
        Ok(ch)
    }

    pub fn identity(arity: usize) -> Self {
        Self {
            operators: vec![ComplexMatrix::identity(1 << arity)],
            arity,
            shape: ChannelShape::General,
        }
    }

    pub fn depolarizing(arity: usize, p: f64) -> Result<Self> {
        if !(1..=3).contains(&arity) {
            return Err(EsdError::InvalidArgument(format!("depolarizing arity {arity} not in 1..=3")));
        }
        check_prob(p, "depolarizing")?;
        let n = (1usize << (2 * arity)) as f64;
        let w_id = (1.0 - p * (n - 1.0) / n).sqrt();
        let w = (p / n).sqrt();
        let operators = all_paulis(arity)
            .into_iter()
            .map(|s| {
                let c = if s.is_identity() { w_id } else { w };
                s.matrix().scale_real(c)
            })
            .collect();
        Ok(Self { operators, arity, shape: ChannelShape::Depolarizing { p } })
    }

    pub fn dephasing(p: f64) -> Result<Self> {
        check_prob(p, "dephasing")?;
        let operators = vec![
            ComplexMatrix::identity(2).scale_real((1.0 - p).sqrt()),
            Pauli::Z.matrix().scale_real(p.sqrt()),
        ];
        Ok(Self { operators, arity: 1, shape: ChannelShape::Dephasing { p } })
    }

    pub fn damping(p: f64) -> Result<Self> {
        check_prob(p, "damping")?;
        let k0 = ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, C64::new((1.0 - p).sqrt(), 0.0)]]);
        let k1 = ComplexMatrix::from_rows(&[&[ZERO, C64::new(p.sqrt(), 0.0)], &[ZERO, ZERO]]);
        Ok(Self { operators: vec![k0, k1], arity: 1, shape: ChannelShape::General })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn shape(&self) -> ChannelShape {
        self.shape
    }

    /// max |Σ K†K − Id|.
    pub fn completeness_deviation(&self) -> f64 {
        let d = 1usize << self.arity;
        let mut sum = ComplexMatrix::zeros(d, d);
        for k in &self.operators {
            sum.add_scaled(&k.adjoint().matmul(k).expect("square"), ONE).expect("same shape");
        }
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }

    /// Applies the channel to a raw matrix on `qubits` total qubits.
    pub fn apply_in_place(&self, m: &mut ComplexMatrix, targets: &[usize], qubits: usize) -> Result<()> {
        if targets.len() != self.arity {
            return Err(EsdError::InvalidArgument(format!(
                "channel on {} qubits applied to {} targets",
                self.arity,
                targets.len()
            )));
        }
        let layout = TargetLayout::new(targets, qubits)?;
        match self.shape {
            ChannelShape::Depolarizing { p } => kernel::depolarize(m, p, &layout),
            ChannelShape::Dephasing { p } => kernel::dephase(m, p, targets[0], qubits),
            ChannelShape::General => kernel::kraus_sum(m, &self.operators, &layout),
        }
        Ok(())
    }

    /// The explicit Kraus sum, bypassing any closed-form shortcut.
    pub fn apply_kraus_sum(&self, m: &mut ComplexMatrix, targets: &[usize], qubits: usize) -> Result<()> {
        let layout = TargetLayout::new(targets, qubits)?;
        kernel::kraus_sum(m, &self.operators, &layout);
        Ok(())
    }
}

/// Σ_K K ρ K† with each K embedded on `qubits`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel, qubits: &[usize]) -> Result<DensityMatrix> {
    let mut m = rho.matrix().clone();
    ch.apply_in_place(&mut m, qubits, rho.qubit_count())?;
    Ok(DensityMatrix::from_evolved(rho.qubit_count(), m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::embed;
    use crate::linalg::kron;
    use crate::random::{random_density_matrix, rng_from_seed};

    #[test]
    fn completeness_of_builtin_channels() {
        for p in [0.0, 0.013, 0.5, 1.0] {
            for k in 1..=3 {
                assert!(KrausChannel::depolarizing(k, p).unwrap().completeness_deviation() < 1e-12);
            }
            assert!(KrausChannel::dephasing(p).unwrap().completeness_deviation() < 1e-12);
            assert!(KrausChannel::damping(p).unwrap().completeness_deviation() < 1e-12);
        }
        assert!(KrausChannel::depolarizing(1, 1.2).is_err());
        assert!(KrausChannel::dephasing(-0.1).is_err());
        assert!(KrausChannel::depolarizing(4, 0.1).is_err());
    }

    #[test]
    fn closed_forms_match_kraus_sums() {
        let mut rng = rng_from_seed(8);
        let rho = random_density_matrix(&mut rng, 4).into_matrix();
        let cases: Vec<(KrausChannel, Vec<usize>)> = vec![
            (KrausChannel::depolarizing(1, 0.3).unwrap(), vec![2]),
            (KrausChannel::depolarizing(2, 0.17).unwrap(), vec![3, 1]),
            (KrausChannel::depolarizing(3, 0.9).unwrap(), vec![0, 2, 3]),
            (KrausChannel::dephasing(0.21).unwrap(), vec![1]),
        ];
        for (ch, targets) in cases {
            let mut fast = rho.clone();
            ch.apply_in_place(&mut fast, &targets, 4).unwrap();
            let mut slow = rho.clone();
            ch.apply_kraus_sum(&mut slow, &targets, 4).unwrap();
            assert!(fast.max_abs_diff(&slow) < 1e-14);
        }
    }

    #[test]
    fn full_depolarization_gives_maximally_mixed() {
        let mut rng = rng_from_seed(2);
        let rho = random_density_matrix(&mut rng, 1);
        let out = apply_channel(&rho, &KrausChannel::depolarizing(1, 1.0).unwrap(), &[0]).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let same = apply_channel(&rho, &KrausChannel::depolarizing(1, 0.0).unwrap(), &[0]).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn depolarizing_one_qubit_of_product_state() {
        let mut rng = rng_from_seed(12);
        let a = random_density_matrix(&mut rng, 1);
        let b = random_density_matrix(&mut rng, 2);
        let rho = DensityMatrix::tensor(&[&a, &b]).unwrap();
        let out = apply_channel(&rho, &KrausChannel::depolarizing(1, 1.0).unwrap(), &[0]).unwrap();
        let expected = kron(&ComplexMatrix::identity(2).scale_real(0.5), b.matrix());
        assert!(out.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn dephasing_and_damping_conventions() {
        let plus = DensityMatrix::pure(&[C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)]).unwrap();
        let half = apply_channel(&plus, &KrausChannel::dephasing(0.5).unwrap(), &[0]).unwrap();
        assert!(half.matrix()[(0, 1)].norm() < 1e-15);
        let full = apply_channel(&plus, &KrausChannel::dephasing(1.0).unwrap(), &[0]).unwrap();
        assert!((full.matrix()[(0, 1)] + 0.5).norm() < 1e-15);

        let one = DensityMatrix::basis(1, 1);
        let decayed = apply_channel(&one, &KrausChannel::damping(1.0).unwrap(), &[0]).unwrap();
        assert!(decayed.matrix().max_abs_diff(DensityMatrix::basis(1, 0).matrix()) < 1e-15);
    }

    #[test]
    fn channels_preserve_trace_and_hermiticity() {
        let mut rng = rng_from_seed(30);
        let rho = random_density_matrix(&mut rng, 3);
        for ch in [KrausChannel::damping(0.37).unwrap(), KrausChannel::dephasing(0.2).unwrap()] {
            let out = apply_channel(&rho, &ch, &[1]).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-12);
            assert!(out.matrix().hermitian_deviation() < 1e-12);
        }
    }

    #[test]
    fn general_channel_matches_dense_embedding() {
        let mut rng = rng_from_seed(5);
        let rho = random_density_matrix(&mut rng, 3);
        let ch = KrausChannel::damping(0.4).unwrap();
        let out = apply_channel(&rho, &ch, &[2]).unwrap();
        let mut expected = ComplexMatrix::zeros(8, 8);
        for k in ch.operators() {
            let e = embed(k, &[2], 3);
            expected.add_scaled(&e.matmul(rho.matrix()).unwrap().matmul(&e.adjoint()).unwrap(), ONE).unwrap();
        }
        assert!(out.matrix().max_abs_diff(&expected) < 1e-14);
    }
}
