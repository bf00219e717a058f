//! Dense complex matrices for the handful of sizes this crate needs
//! (2x2 density matrices up to 16x16 two-qubit process matrices).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use libm::{fabs, sqrt};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance of the Hermiticity precondition on eigenvalue routines.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|ψ⟩⟨ψ|` for a column vector `ψ`.
    pub fn outer(psi: &[C64]) -> Self {
        let n = psi.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        m
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

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |h_ij - conj(h_ji)|`; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut d = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// `max |u†u - I|`; infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&(&self.adjoint() * self) - &Self::identity(self.rows)).max_abs()
    }

    /// Hermitian part `(h + h†)/2`.
    pub fn hermitize(&self) -> Self {
        (&self.adjoint() + self).scale(C64::new(0.5, 0.0))
    }

    /// `Tr(self† other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "hs_inner: shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics when the inner dimensions disagree.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add: shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub: shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// The complex matrix `H = A + iB` is embedded as the real symmetric
/// `[[A, -B], [B, A]]`, whose spectrum is that of `H` with every eigenvalue
/// doubled, and diagonalised by cyclic Jacobi rotations.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: h.rows, found: h.cols });
    }
    let defect = h.hermiticity_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian { defect });
    }
    let n = h.rows;
    let m = 2 * n;
    let mut a = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            // average with the mirrored entry so the embedding is exactly symmetric
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[i * m + j] = z.re;
            a[(i + n) * m + j + n] = z.re;
            a[(i + n) * m + j] = z.im;
            a[i * m + j + n] = -z.im;
        }
    }
    let mut ev = symmetric_eigenvalues(&mut a, m);
    ev.sort_by(f64::total_cmp);
    Ok(ev.into_iter().step_by(2).collect())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(h: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?[0])
}

/// Spectral norm `‖a‖₂` via the eigenvalues of `a†a`.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    let ata = (&a.adjoint() * a).hermitize();
    match hermitian_eigenvalues(&ata) {
        Ok(ev) => sqrt(ev.last().copied().unwrap_or(0.0).max(0.0)),
        Err(_) => f64::INFINITY,
    }
}

/// Cyclic Jacobi on a dense real symmetric `m x m` matrix (destroyed).
fn symmetric_eigenvalues(a: &mut [f64], m: usize) -> Vec<f64> {
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..m {
            for q in p + 1..m {
                off += a[p * m + q] * a[p * m + q];
            }
        }
        if off <= 1e-34 * scale || off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                a[p * m + q] = 0.0;
                a[q * m + p] = 0.0;
            }
        }
    }
    (0..m).map(|i| a[i * m + i]).collect()
}

/// Single-qubit Pauli matrix `σ_k`, `k ∈ 0..4` (`σ_0 = I`).
pub fn sigma(k: usize) -> ComplexMatrix {
    let d = match k {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("Pauli index {k} out of range"),
    };
    ComplexMatrix { rows: 2, cols: 2, data: d.to_vec() }
}

/// `σ_a σ_b = phase · σ_{a^b}` for single-qubit Pauli indices.
#[inline]
pub fn sigma_product(a: usize, b: usize) -> (C64, usize) {
    let phase = match (a, b) {
        (0, _) | (_, 0) => ONE,
        (x, y) if x == y => ONE,
        (1, 2) | (2, 3) | (3, 1) => I,
        _ => -I,
    };
    (phase, a ^ b)
}

/// Product of two `n`-qubit Pauli strings given by base-4 index
/// (most significant digit = first qubit).
pub fn pauli_product(n_qubits: usize, a: usize, b: usize) -> (C64, usize) {
    let mut phase = ONE;
    let mut index = 0;
    for q in (0..n_qubits).rev() {
        let shift = 2 * q;
        let (p, k) = sigma_product((a >> shift) & 3, (b >> shift) & 3);
        phase *= p;
        index |= k << shift;
    }
    (phase, index)
}

/// Ordered Pauli-product basis `σ_{k1} ⊗ … ⊗ σ_{kn}` with index `k1…kn` in base 4.
#[derive(Debug, Clone)]
pub struct PauliBasis {
    n_qubits: usize,
    elements: Vec<ComplexMatrix>,
}

impl PauliBasis {
    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension `2ⁿ`.
    #[inline]
    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_qubits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn get(&self, k: usize) -> &ComplexMatrix {
        &self.elements[k]
    }

    /// Coefficients `Tr(V_k† m) / 2ⁿ` of `m` in this basis.
    pub fn coefficients(&self, m: &ComplexMatrix) -> Vec<C64> {
        let norm = self.hilbert_dim() as f64;
        self.elements.iter().map(|v| v.hs_inner(m) / norm).collect()
    }
}

pub fn pauli_basis(n_qubits: usize) -> Result<PauliBasis> {
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::UnsupportedDimension(n_qubits));
    }
    let mut elements: Vec<ComplexMatrix> = (0..4).map(sigma).collect();
    for _ in 1..n_qubits {
        elements = elements
            .iter()
            .flat_map(|a| (0..4).map(move |k| kron(a, &sigma(k))))
            .collect();
    }
    Ok(PauliBasis { n_qubits, elements })
}

/// `true` when `|a - b| <= tol` for every entry.
pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.rows == b.rows
        && a.cols == b.cols
        && a.data.iter().zip(&b.data).all(|(x, y)| fabs(x.re - y.re) <= tol && fabs(x.im - y.im) <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_identities_and_bit_flips() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));

        let xx = kron(&sigma(1), &sigma(1));
        let ket00 = ComplexMatrix::from_real(4, 1, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let ket11 = ComplexMatrix::from_real(4, 1, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(&xx * &ket00, ket11);

        let zz = kron(&sigma(3), &sigma(3));
        assert_eq!(zz, ComplexMatrix::diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn eigenvalues_of_simple_matrices() {
        let ev = min_eigenvalue_hermitian(&ComplexMatrix::identity(4)).unwrap();
        assert!((ev - 1.0).abs() < 1e-14);
        let d = ComplexMatrix::diagonal(&[0.985, 0.005, 0.005, 0.005]);
        assert!((min_eigenvalue_hermitian(&d).unwrap() - 0.005).abs() < 1e-14);

        // σ_y has eigenvalues ±1 and a purely imaginary off-diagonal
        let ev = hermitian_eigenvalues(&sigma(2)).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = C64::new(1e-6, 0.0);
        assert!(matches!(min_eigenvalue_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pauli_basis_layout() {
        assert!(matches!(pauli_basis(3), Err(Error::UnsupportedDimension(3))));
        let b1 = pauli_basis(1).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let ip = b1.get(j).hs_inner(b1.get(k));
                let expect = if j == k { 2.0 } else { 0.0 };
                assert!((ip - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
        let b2 = pauli_basis(2).unwrap();
        assert_eq!(b2.len(), 16);
        assert_eq!(b2.get(0), &ComplexMatrix::identity(4));
        assert_eq!(b2.get(3), &kron(&sigma(0), &sigma(3)));
    }

    #[test]
    fn pauli_product_table_matches_matrices() {
        for n in 1..=2 {
            let basis = pauli_basis(n).unwrap();
            for a in 0..basis.len() {
                for b in 0..basis.len() {
                    let (phase, k) = pauli_product(n, a, b);
                    let lhs = basis.get(a) * basis.get(b);
                    let rhs = basis.get(k).scale(phase);
                    assert!(approx_eq(&lhs, &rhs, 1e-15), "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn operator_norm_of_scaled_pauli() {
        let m = sigma(2).scale(C64::new(0.0, 3.0));
        assert!((operator_norm(&m) - 3.0).abs() < 1e-12);
    }
}
