//! Dense complex linear algebra.
//!
//! Everything in the crate is stored as a row-major [`ComplexMatrix`]. The
//! matrices are small (at most a few thousand rows), so plain loops are used
//! for products; the Hermitian eigensolver and the SVD delegate to nalgebra.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{EsdError, Result};

/// Relative tolerance used when a matrix has to be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues closer than this are treated as degenerate when ordering.
pub const DEGENERACY_GAP: f64 = 1e-12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(EsdError::DimensionMismatch("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(EsdError::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a square matrix from nested rows. Panics on ragged input, so it
    /// is meant for literal constants.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let m = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |r, c| rows[r][c])
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |r, c| C64::new(rows[r][c], 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// |v><v| for a column vector v.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |r, c| v[r] * v[c].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Self, s: C64) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(EsdError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(EsdError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[p * m..(p + 1) * m];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { rows: n, cols: m, data: out })
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(EsdError::DimensionMismatch(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// max |A - A^dagger|.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// True when the Hermitian deviation is within `HERMITIAN_TOL` relative
    /// to the largest entry (absolute for matrices with entries below 1).
    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    /// max |U^dagger U - I|.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.adjoint().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.rows))
    }

    /// Frobenius inner product tr(A^dagger B).
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }

    /// Singular value decomposition `A = U diag(s) V^dagger`, singular values
    /// in descending order.
    pub fn svd(&self) -> (Self, Vec<f64>, Self) {
        let svd = self.to_nalgebra().svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^dagger");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap_or(Ordering::Equal)
        });
        let k = order.len();
        let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u_sorted = Self::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
        let v_sorted = Self::from_fn(v_t.ncols(), k, |r, c| v_t[(order[c], r)].conj());
        (u_sorted, s, v_sorted)
    }

    /// Sum of singular values.
    pub fn nuclear_norm(&self) -> f64 {
        self.to_nalgebra().singular_values().iter().sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Tensor product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut data = vec![ZERO; rows * cols];
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                let out_row = ar * b.rows + br;
                let base = out_row * cols + ac * b.cols;
                for bc in 0..b.cols {
                    data[base + bc] = x * b[(br, bc)];
                }
            }
        }
    }
    ComplexMatrix { rows, cols, data }
}

/// Tensor product of a sequence, left to right.
pub fn kron_all<'a>(ms: impl IntoIterator<Item = &'a ComplexMatrix>) -> Option<ComplexMatrix> {
    ms.into_iter().fold(None, |acc, m| match acc {
        None => Some(m.clone()),
        Some(a) => Some(kron(&a, m)),
    })
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order. Each eigenvector is fixed up
/// to phase by making its largest-magnitude component real and positive
/// (lowest index on ties). Degenerate eigenvalues are ordered by their
/// eigenvectors' first differing component, which is not stable under
/// perturbation.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, matching `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V diag(e) V^dagger.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| v[(r, k)] * self.eigenvalues[k] * v[(c, k)].conj()).sum()
        })
    }
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<Spectrum> {
    if !h.is_square() {
        return Err(EsdError::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            h.rows, h.cols
        )));
    }
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(EsdError::NotHermitian { deviation });
    }
    let n = h.rows;
    // Symmetrise so roundoff asymmetry does not leak into the solver.
    let sym = ComplexMatrix::from_fn(n, n, |r, c| (h[(r, c)] + h[(c, r)].conj()) * 0.5);
    let eig = sym.to_nalgebra().symmetric_eigen();

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
            normalize_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();

    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() < DEGENERACY_GAP {
            compare_vectors(&b.1, &a.1)
        } else {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal)
        }
    });

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| pairs[c].1[r]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Rotates `v` so that its largest-magnitude component is real and positive.
pub fn normalize_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max - 1e-12).expect("non-empty");
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

fn compare_vectors(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x.re - y.re).abs() > DEGENERACY_GAP {
            return x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal);
        }
        if (x.im - y.im).abs() > DEGENERACY_GAP {
            return x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// tr(m_1 m_2 ... m_k), accumulating the product one factor at a time.
///
/// The last factor is never multiplied in full: only the diagonal of the
/// final product is needed.
pub fn product_trace(ms: &[&ComplexMatrix]) -> Result<C64> {
    let first = ms
        .first()
        .ok_or_else(|| EsdError::InvalidArgument("product_trace of an empty sequence".into()))?;
    let dim = first.rows;
    for m in ms {
        if !m.is_square() || m.rows != dim {
            return Err(EsdError::DimensionMismatch(format!(
                "product_trace expects {dim}x{dim} factors, got {}x{}",
                m.rows, m.cols
            )));
        }
    }
    if ms.len() == 1 {
        return Ok(first.trace());
    }
    let (last, head) = ms.split_last().expect("len >= 2");
    let mut acc = (*head[0]).clone();
    for m in &head[1..] {
        acc = acc.matmul(m)?;
    }
    // tr(A B) = sum_ij A_ij B_ji
    let mut t = ZERO;
    for i in 0..dim {
        let row = acc.row(i);
        for (j, a) in row.iter().enumerate() {
            t += a * last[(j, i)];
        }
    }
    Ok(t)
}

/// <a|b> for column vectors.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    #[test]
    fn kron_identities() {
        let id4 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(id4, ComplexMatrix::identity(4));
        let big = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(8));
        assert_eq!((big.rows(), big.cols()), (16, 16));
    }

    #[test]
    fn kron_x_z_entries() {
        let m = kron(&pauli_x(), &pauli_z());
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 2)] = ONE;
        expected[(1, 3)] = -ONE;
        expected[(2, 0)] = ONE;
        expected[(3, 1)] = -ONE;
        assert_eq!(m, expected);
        assert_eq!(m[(0, 0)], ZERO);
    }

    #[test]
    fn eig_pauli_z() {
        let s = hermitian_eig(&pauli_z()).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, -1.0]);
        assert_abs_diff_eq!(s.eigenvectors[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvectors[(1, 1)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_sorts_descending() {
        let s = hermitian_eig(&ComplexMatrix::real_diag(&[0.2, 0.8])).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvectors[(1, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvectors[(0, 1)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[&[ONE, c(0.0, 1.0)], &[c(0.0, 1.0), ONE]]);
        match hermitian_eig(&m) {
            Err(EsdError::NotHermitian { deviation }) => assert!(deviation > 1.0),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn phase_fix_makes_largest_component_positive() {
        let h = ComplexMatrix::from_rows(&[&[c(1.0, 0.0), c(0.0, 0.5)], &[c(0.0, -0.5), c(2.0, 0.0)]]);
        let s = hermitian_eig(&h).unwrap();
        for k in 0..2 {
            let v = s.vector(k);
            let (idx, _) = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
                .unwrap();
            assert!(v[idx].re > 0.0);
            assert_abs_diff_eq!(v[idx].im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn product_trace_examples() {
        let id4 = ComplexMatrix::identity(4);
        assert_eq!(product_trace(&[&id4]).unwrap(), c(4.0, 0.0));
        let rho = ComplexMatrix::real_diag(&[0.8, 0.2]);
        assert_abs_diff_eq!(product_trace(&[&rho, &rho]).unwrap().re, 0.68, epsilon = 1e-15);
        assert!(product_trace(&[]).is_err());
        let two = ComplexMatrix::identity(2);
        assert!(matches!(product_trace(&[&two, &id4]), Err(EsdError::DimensionMismatch(_))));
    }

    #[test]
    fn svd_reconstructs() {
        let a = ComplexMatrix::from_rows(&[&[c(1.0, 2.0), c(0.5, 0.0)], &[c(0.0, -1.0), c(3.0, 0.1)]]);
        let (u, s, v) = a.svd();
        assert!(s[0] >= s[1]);
        let recon = u.matmul(&ComplexMatrix::real_diag(&s)).unwrap().matmul(&v.adjoint()).unwrap();
        assert!(recon.max_abs_diff(&a) < 1e-12);
        assert_abs_diff_eq!(a.nuclear_norm(), s.iter().sum::<f64>(), epsilon = 1e-12);
    }
}
