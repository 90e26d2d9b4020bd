//! Pauli strings and weighted sums of them.
//!
//! Qubit 0 is the leftmost letter and the most significant bit of a basis
//! index, matching the left-to-right order of tensor products.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{EsdError, Result};
use crate::linalg::{kron_all, ComplexMatrix, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
            Pauli::Y => ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
            Pauli::Z => ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(EsdError::Parse(format!("unknown Pauli letter {other:?}"))),
        }
    }

    /// Action on a computational basis bit: sigma|b> = phase |b'>.
    #[inline]
    fn act(self, bit: usize) -> (usize, C64) {
        match (self, bit) {
            (Pauli::I, b) => (b, ONE),
            (Pauli::X, b) => (b ^ 1, ONE),
            (Pauli::Y, 0) => (1, I),
            (Pauli::Y, _) => (0, -I),
            (Pauli::Z, 0) => (0, ONE),
            (Pauli::Z, _) => (1, -ONE),
        }
    }
}

/// A tensor product of single-qubit Paulis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(qubits: usize) -> Self {
        Self { letters: vec![Pauli::I; qubits] }
    }

    /// A string with a single non-identity letter.
    pub fn single(qubits: usize, qubit: usize, p: Pauli) -> Self {
        let mut letters = vec![Pauli::I; qubits];
        letters[qubit] = p;
        Self { letters }
    }

    pub fn qubit_count(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        if self.letters.is_empty() {
            return ComplexMatrix::identity(1);
        }
        let ms: Vec<ComplexMatrix> = self.letters.iter().map(|p| p.matrix()).collect();
        kron_all(ms.iter()).expect("non-empty")
    }

    /// P|col> = phase |row>.
    #[inline]
    pub fn act_on_basis(&self, col: usize) -> (usize, C64) {
        let n = self.letters.len();
        let mut row = 0usize;
        let mut phase = ONE;
        for (q, &p) in self.letters.iter().enumerate() {
            let shift = n - 1 - q;
            let (b, ph) = p.act((col >> shift) & 1);
            row |= b << shift;
            phase *= ph;
        }
        (row, phase)
    }

    /// tr[m P] for a square matrix on the same qubits.
    pub fn trace_with(&self, m: &ComplexMatrix) -> Result<C64> {
        let dim = 1usize << self.letters.len();
        if !m.is_square() || m.rows() != dim {
            return Err(EsdError::DimensionMismatch(format!(
                "Pauli string on {} qubits vs {}x{} matrix",
                self.letters.len(),
                m.rows(),
                m.cols()
            )));
        }
        // tr[mP] = sum_j <j| m P |j> = sum_j phase_j m[j, row_j]
        Ok((0..dim)
            .map(|j| {
                let (row, phase) = self.act_on_basis(j);
                m[(j, row)] * phase
            })
            .sum())
    }

    /// P · m without building the Pauli matrix.
    pub fn left_multiply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let dim = 1usize << self.letters.len();
        if m.rows() != dim {
            return Err(EsdError::DimensionMismatch(format!(
                "Pauli string on {} qubits vs matrix with {} rows",
                self.letters.len(),
                m.rows()
            )));
        }
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        let cols = m.cols();
        for k in 0..dim {
            let (r, phase) = self.act_on_basis(k);
            let src = m.row(k);
            let dst = &mut out.data_mut()[r * cols..(r + 1) * cols];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s * phase;
            }
        }
        Ok(out)
    }

    pub fn apply_to_vector(&self, v: &[C64]) -> Result<Vec<C64>> {
        let dim = 1usize << self.letters.len();
        if v.len() != dim {
            return Err(EsdError::DimensionMismatch(format!(
                "Pauli string on {} qubits vs vector of length {}",
                self.letters.len(),
                v.len()
            )));
        }
        let mut out = vec![ZERO; dim];
        for (k, amp) in v.iter().enumerate() {
            let (r, phase) = self.act_on_basis(k);
            out[r] = amp * phase;
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = EsdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(EsdError::Parse("empty Pauli string".into()));
        }
        let letters = s.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        Ok(Self { letters })
    }
}

/// A real-weighted sum of Pauli strings on a common register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSum {
    qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl ObservableSum {
    pub fn new(qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        for (c, p) in &terms {
            if p.qubit_count() != qubits {
                return Err(EsdError::DimensionMismatch(format!(
                    "term {p} has {} qubits, observable has {qubits}",
                    p.qubit_count()
                )));
            }
            if !c.is_finite() {
                return Err(EsdError::InvalidArgument(format!("non-finite coefficient for {p}")));
            }
        }
        Ok(Self { qubits, terms })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let dim = 1usize << self.qubits;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (c, p) in &self.terms {
            for col in 0..dim {
                let (row, phase) = p.act_on_basis(col);
                m[(row, col)] += phase * *c;
            }
        }
        m
    }

    /// Parses lines of `coefficient<TAB>string`; blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(coeff), Some(string), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(EsdError::Parse(format!("line {}: expected `coeff<TAB>string`", lineno + 1)));
            };
            let c: f64 = coeff
                .parse()
                .map_err(|e| EsdError::Parse(format!("line {}: {e}", lineno + 1)))?;
            terms.push((c, string.parse::<PauliString>()?));
        }
        let qubits = terms
            .first()
            .map(|t| t.1.qubit_count())
            .ok_or_else(|| EsdError::Parse("observable has no terms".into()))?;
        Self::new(qubits, terms)
    }

    pub fn to_text(&self) -> String {
        self.terms.iter().map(|(c, p)| format!("{c}\t{p}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_roundtrip() {
        let p: PauliString = "XIZY".parse().unwrap();
        assert_eq!(p.qubit_count(), 4);
        assert_eq!(p.letters()[0], Pauli::X);
        assert_eq!(p.to_string(), "XIZY");
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn matrix_is_hermitian_and_unitary() {
        let p: PauliString = "XYZ".parse().unwrap();
        let m = p.matrix();
        assert!(m.hermitian_deviation() < 1e-15);
        assert!(m.unitary_deviation() < 1e-15);
    }

    #[test]
    fn fast_paths_match_dense_matrix() {
        let p: PauliString = "YXZ".parse().unwrap();
        let dense = p.matrix();
        let m = ComplexMatrix::from_fn(8, 8, |r, c| C64::new((r * 3 + c) as f64, (r as f64) - (c as f64)));
        let t = p.trace_with(&m).unwrap();
        let expected = m.matmul(&dense).unwrap().trace();
        assert!((t - expected).norm() < 1e-12);
        let left = p.left_multiply(&m).unwrap();
        assert!(left.max_abs_diff(&dense.matmul(&m).unwrap()) < 1e-12);
    }

    #[test]
    fn observable_text_format() {
        let text = "0.5\tZI\n-1.25\tXX\n";
        let h = ObservableSum::parse(text).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.qubit_count(), 2);
        assert_eq!(ObservableSum::parse(&h.to_text()).unwrap(), h);
        assert!(ObservableSum::parse("1.0\tZ\n2.0\tZZ\n").is_err());
    }
}
