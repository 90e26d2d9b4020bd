//! In-place density-matrix kernels.
//!
//! A k-qubit operator is applied by walking the 2^k-element index groups that
//! differ only in the target bits, so no full-register matrix is built.

use num_complex::Complex64 as C64;

use crate::error::{EsdError, Result};
use crate::linalg::{ComplexMatrix, ZERO};

/// Index offsets of the target bits inside a register of `qubits` qubits.
#[derive(Debug, Clone)]
pub struct TargetLayout {
    offsets: Vec<usize>,
    mask: usize,
    dim: usize,
}

impl TargetLayout {
    pub fn new(targets: &[usize], qubits: usize) -> Result<Self> {
        for (i, &q) in targets.iter().enumerate() {
            if q >= qubits {
                return Err(EsdError::QubitOutOfRange { index: q, qubits });
            }
            if targets[..i].contains(&q) {
                return Err(EsdError::DuplicateQubit(q));
            }
        }
        let k = targets.len();
        let bits: Vec<usize> = targets.iter().map(|&q| 1usize << (qubits - 1 - q)).collect();
        let offsets = (0..1usize << k)
            .map(|m| (0..k).filter(|t| (m >> (k - 1 - t)) & 1 == 1).map(|t| bits[t]).sum())
            .collect();
        Ok(Self { offsets, mask: bits.iter().sum(), dim: 1usize << qubits })
    }

    pub fn group_size(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Indices with every target bit cleared.
    pub fn bases(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |i| i & self.mask == 0)
    }
}

/// Each row of a monomial matrix has exactly one non-zero entry.
fn monomial_form(op: &ComplexMatrix) -> Option<Vec<(usize, C64)>> {
    let mut out = Vec::with_capacity(op.rows());
    for r in 0..op.rows() {
        let mut entry = None;
        for (c, z) in op.row(r).iter().enumerate() {
            if *z != ZERO {
                if entry.is_some() {
                    return None;
                }
                entry = Some((c, *z));
            }
        }
        out.push(entry?);
    }
    Some(out)
}

/// m ← op · m on the target rows.
fn left_apply(m: &mut ComplexMatrix, op: &ComplexMatrix, layout: &TargetLayout) {
    let dim = m.cols();
    let g = layout.group_size();
    let offs = layout.offsets();
    let mono = monomial_form(op);
    let mut rows_in: Vec<Vec<C64>> = vec![vec![ZERO; dim]; g];
    let bases: Vec<usize> = layout.bases().collect();
    for b in bases {
        for (j, buf) in rows_in.iter_mut().enumerate() {
            buf.copy_from_slice(m.row(b + offs[j]));
        }
        let data = m.data_mut();
        for (i, &off) in offs.iter().enumerate() {
            let dst = &mut data[(b + off) * dim..(b + off + 1) * dim];
            match &mono {
                Some(mono) => {
                    let (j, z) = mono[i];
                    for (d, s) in dst.iter_mut().zip(&rows_in[j]) {
                        *d = z * s;
                    }
                }
                None => {
                    dst.fill(ZERO);
                    for (j, src) in rows_in.iter().enumerate() {
                        let z = op[(i, j)];
                        if z == ZERO {
                            continue;
                        }
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += z * s;
                        }
                    }
                }
            }
        }
    }
}

/// m ← m · op† on the target columns.
fn right_apply_adjoint(m: &mut ComplexMatrix, op: &ComplexMatrix, layout: &TargetLayout) {
    let dim = m.cols();
    let g = layout.group_size();
    let offs = layout.offsets();
    let conj: Vec<C64> = op.data().iter().map(|z| z.conj()).collect();
    let mono = monomial_form(op);
    let bases: Vec<usize> = layout.bases().collect();
    let mut v = vec![ZERO; g];
    for r in 0..m.rows() {
        let row = &mut m.data_mut()[r * dim..(r + 1) * dim];
        for &b in &bases {
            for (j, x) in v.iter_mut().enumerate() {
                *x = row[b + offs[j]];
            }
            for (i, &off) in offs.iter().enumerate() {
                row[b + off] = match &mono {
                    Some(mono) => {
                        let (j, z) = mono[i];
                        v[j] * z.conj()
                    }
                    None => (0..g).map(|j| v[j] * conj[i * g + j]).sum(),
                };
            }
        }
    }
}

/// m ← op · m · op†.
pub fn conjugate(m: &mut ComplexMatrix, op: &ComplexMatrix, layout: &TargetLayout) {
    debug_assert_eq!(op.rows(), layout.group_size());
    left_apply(m, op, layout);
    right_apply_adjoint(m, op, layout);
}

/// m ← Σ_K K m K†.
pub fn kraus_sum(m: &mut ComplexMatrix, ops: &[ComplexMatrix], layout: &TargetLayout) {
    let (last, rest) = ops.split_last().expect("channel has operators");
    let mut acc = ComplexMatrix::zeros(m.rows(), m.cols());
    for k in rest {
        let mut t = m.clone();
        conjugate(&mut t, k, layout);
        acc.add_scaled(&t, C64::new(1.0, 0.0)).expect("same shape");
    }
    conjugate(m, last, layout);
    m.add_scaled(&acc, C64::new(1.0, 0.0)).expect("same shape");
}

/// m ← (1−p) m + p · (Id/2^k ⊗ tr_targets m), the targets being embedded.
pub fn depolarize(m: &mut ComplexMatrix, p: f64, layout: &TargetLayout) {
    let dim = m.cols();
    let offs = layout.offsets();
    let g = offs.len() as f64;
    let bases: Vec<usize> = layout.bases().collect();
    let keep = 1.0 - p;
    for &rb in &bases {
        for &cb in &bases {
            let tr: C64 = offs.iter().map(|&o| m.data()[(rb + o) * dim + cb + o]).sum();
            let mixed = tr * (p / g);
            for &oi in offs {
                for &oj in offs {
                    let idx = (rb + oi) * dim + cb + oj;
                    let z = m.data()[idx] * keep;
                    m.data_mut()[idx] = if oi == oj { z + mixed } else { z };
                }
            }
        }
    }
}

/// m ← (1−p) m + p Z m Z on one qubit: entries whose row and column differ
/// in that bit are scaled by 1 − 2p.
pub fn dephase(m: &mut ComplexMatrix, p: f64, qubit: usize, qubits: usize) {
    let bit = 1usize << (qubits - 1 - qubit);
    let dim = m.cols();
    let f = 1.0 - 2.0 * p;
    for r in 0..m.rows() {
        let row = &mut m.data_mut()[r * dim..(r + 1) * dim];
        for (c, z) in row.iter_mut().enumerate() {
            if (r ^ c) & bit != 0 {
                *z *= f;
            }
        }
    }
}

/// Superoperator of ρ ↦ Σ_K K ρ K† acting on row-major vec(ρ):
/// S[(i,j),(a,b)] = Σ_K K_ia conj(K_jb).
pub fn superoperator(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let g = ops[0].rows();
    ComplexMatrix::from_fn(g * g, g * g, |r, c| {
        let (i, j, a, b) = (r / g, r % g, c / g, c % g);
        ops.iter().map(|k| k[(i, a)] * k[(j, b)].conj()).sum()
    })
}

/// Applies a superoperator on the target qubits block by block.
pub fn apply_superoperator(m: &mut ComplexMatrix, s: &ComplexMatrix, layout: &TargetLayout) {
    let dim = m.cols();
    let offs = layout.offsets();
    let g = offs.len();
    debug_assert_eq!(s.rows(), g * g);
    let bases: Vec<usize> = layout.bases().collect();
    let sd = s.data();
    let mut v = vec![ZERO; g * g];
    let data = m.data_mut();
    for &rb in &bases {
        for &cb in &bases {
            for (i, &oi) in offs.iter().enumerate() {
                for (j, &oj) in offs.iter().enumerate() {
                    v[i * g + j] = data[(rb + oi) * dim + cb + oj];
                }
            }
            for (i, &oi) in offs.iter().enumerate() {
                for (j, &oj) in offs.iter().enumerate() {
                    let row = &sd[(i * g + j) * g * g..(i * g + j + 1) * g * g];
                    data[(rb + oi) * dim + cb + oj] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// Probability that qubit `q` reads 0: sum of diagonal entries with that bit clear.
pub fn prob_zero(m: &ComplexMatrix, qubit: usize, qubits: usize) -> f64 {
    let bit = 1usize << (qubits - 1 - qubit);
    (0..m.rows()).filter(|i| i & bit == 0).map(|i| m[(i, i)].re).sum()
}
