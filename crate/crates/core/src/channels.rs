//! Process (χ) matrices in the Pauli-product basis.
//!
//! A channel acts as `E(ρ) = Σ_kl χ_kl V_k ρ V_l†` where `V_k` runs over the
//! Pauli basis of [`crate::linalg::pauli_basis`]. Products of Pauli strings
//! are evaluated through the multiplication table, so most transforms never
//! form the basis matrices explicitly.

use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, log, sqrt};

use crate::linalg::{
    hermitian_eigenvalues, operator_norm, pauli_basis, pauli_product, ComplexMatrix, PauliBasis, C64, ZERO,
};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Tolerance on the defining equalities of [`RestrictedChi`] and [`PauliChannel`].
pub const PARAM_TOL: f64 = 1e-12;

/// Tolerance used when checking that an input state is a density matrix.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    n_qubits: usize,
    chi: ComplexMatrix,
}

/// Outcome of the CPTP checks on a process matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub hermiticity_defect: f64,
    pub diag_sum_defect: f64,
    pub min_eigenvalue: f64,
    /// `‖Σ_kl χ_kl V_l†V_k − I‖₂`.
    pub tp_defect: f64,
    pub is_cp: bool,
    pub is_tp: bool,
}

impl ValidationReport {
    /// CP and TP, with Hermiticity and unit diagonal sum within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.is_cp && self.is_tp && self.hermiticity_defect <= tol && self.diag_sum_defect <= tol
    }
}

impl ProcessMatrix {
    /// Wraps `chi` after checking that it is `4ⁿ x 4ⁿ` for `n ∈ {1, 2}`.
    /// Physicality is not checked here; see [`ProcessMatrix::validate`].
    pub fn new(n_qubits: usize, chi: ComplexMatrix) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::UnsupportedDimension(n_qubits));
        }
        let dim = 1 << (2 * n_qubits);
        if chi.rows() != dim || chi.cols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: chi.rows().max(chi.cols()) });
        }
        Ok(Self { n_qubits, chi })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        let dim = 1 << (2 * n_qubits);
        let mut d = vec![0.0; dim];
        d[0] = 1.0;
        Self::from_diagonal(n_qubits, &d)
    }

    /// Pauli channel with the given diagonal.
    pub fn from_diagonal(n_qubits: usize, diag: &[f64]) -> Result<Self> {
        Self::new(n_qubits, ComplexMatrix::diagonal(diag))
    }

    /// Depolarizing channel: `χ00` on the identity, the rest spread evenly.
    pub fn depolarizing(n_qubits: usize, chi00: f64) -> Result<Self> {
        if !(chi00 > 0.0 && chi00 <= 1.0) {
            return Err(Error::OutOfRange { what: "chi00", value: chi00 });
        }
        let dim = 1 << (2 * n_qubits);
        let mut d = vec![(1.0 - chi00) / (dim - 1) as f64; dim];
        d[0] = chi00;
        Self::from_diagonal(n_qubits, &d)
    }

    /// `χ_kl = Σ_i a_ik conj(a_il)` for Kraus operators `K_i = Σ_k a_ik V_k`.
    pub fn from_kraus(n_qubits: usize, kraus: &[ComplexMatrix]) -> Result<Self> {
        let basis = pauli_basis(n_qubits)?;
        let dim = basis.len();
        let mut chi = ComplexMatrix::zeros(dim, dim);
        for k in kraus {
            if k.rows() != basis.hilbert_dim() || k.cols() != basis.hilbert_dim() {
                return Err(Error::DimensionMismatch { expected: basis.hilbert_dim(), found: k.rows() });
            }
            let a = basis.coefficients(k);
            for i in 0..dim {
                for j in 0..dim {
                    chi[(i, j)] += a[i] * a[j].conj();
                }
            }
        }
        Self::new(n_qubits, chi)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Side length `4ⁿ` of χ.
    #[inline]
    pub fn dim(&self) -> usize {
        self.chi.rows()
    }

    #[inline]
    pub fn chi(&self) -> &ComplexMatrix {
        &self.chi
    }

    #[inline]
    pub fn entry(&self, k: usize, l: usize) -> C64 {
        self.chi[(k, l)]
    }

    #[inline]
    pub fn chi00(&self) -> f64 {
        self.chi[(0, 0)].re
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.chi
    }

    /// The CPTP diagnostics of this matrix, with `is_cp`/`is_tp` judged at `tol`.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let hermiticity_defect = self.chi.hermiticity_defect();
        let diag_sum_defect = (self.chi.trace() - C64::new(1.0, 0.0)).norm();
        let min_eigenvalue = hermitian_eigenvalues(&self.chi.hermitize())
            .map(|ev| ev[0])
            .unwrap_or(f64::NAN);
        let tp_defect = self.tp_defect();
        ValidationReport {
            hermiticity_defect,
            diag_sum_defect,
            min_eigenvalue,
            tp_defect,
            is_cp: min_eigenvalue >= -tol,
            is_tp: tp_defect <= tol,
        }
    }

    /// Pauli coefficients of `Σ_kl χ_kl V_l V_k`.
    fn tp_coefficients(&self) -> Vec<C64> {
        let dim = self.dim();
        let mut c = vec![ZERO; dim];
        for k in 0..dim {
            for l in 0..dim {
                let (w, m) = pauli_product(self.n_qubits, l, k);
                c[m] += self.chi[(k, l)] * w;
            }
        }
        c
    }

    fn tp_defect(&self) -> f64 {
        let mut c = self.tp_coefficients();
        c[0] -= C64::new(1.0, 0.0);
        let basis = match pauli_basis(self.n_qubits) {
            Ok(b) => b,
            Err(_) => return f64::INFINITY,
        };
        let d = basis.hilbert_dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (v, &ck) in basis.elements().iter().zip(&c) {
            if ck != ZERO {
                m = &m + &v.scale(ck);
            }
        }
        operator_norm(&m)
    }

    /// `E(ρ) = Σ_kl χ_kl V_k ρ V_l†` for a density matrix `ρ` of matching size.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let basis = pauli_basis(self.n_qubits)?;
        check_density_matrix(rho, basis.hilbert_dim())?;
        Ok(self.apply_with(&basis, rho))
    }

    /// The linear extension of the channel to an arbitrary operator `m` of
    /// size `2ⁿ` (no density-matrix checks; panics on a size mismatch).
    pub fn apply_linear(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let basis = pauli_basis(self.n_qubits).expect("qubit count checked on construction");
        self.apply_with(&basis, m)
    }

    fn apply_with(&self, basis: &PauliBasis, rho: &ComplexMatrix) -> ComplexMatrix {
        let v_rho: Vec<ComplexMatrix> = basis.elements().iter().map(|v| v * rho).collect();
        let d = basis.hilbert_dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for l in 0..self.dim() {
            let mut acc = ComplexMatrix::zeros(d, d);
            for (k, vr) in v_rho.iter().enumerate() {
                let c = self.chi[(k, l)];
                if c != ZERO {
                    acc = &acc + &vr.scale(c);
                }
            }
            // Pauli strings are Hermitian, so V_l† = V_l
            out = &out + &(&acc * basis.get(l));
        }
        out
    }

    /// Pauli transfer matrix `R_jk = Re Tr(P_j E(P_k)) / 2ⁿ`, row-major.
    ///
    /// With `ρ = (Σ_j c_j P_j)/2ⁿ` the state fidelity is `cᵀ R c / 2ⁿ`.
    pub fn transfer_matrix(&self) -> Vec<f64> {
        let dim = self.dim();
        let n = self.n_qubits;
        let mut r = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let c = self.chi[(a, b)];
                if c == ZERO {
                    continue;
                }
                for k in 0..dim {
                    // V_a P_k V_b = w1 w2 P_y
                    let (w1, x) = pauli_product(n, a, k);
                    let (w2, y) = pauli_product(n, x, b);
                    r[y * dim + k] += (c * w1 * w2).re;
                }
            }
        }
        r
    }

    /// χ of `ρ ↦ U† E_U(ρ) U`, where `self` describes the noisy gate `E_U`.
    pub fn compose_with_ideal_inverse(&self, u: &ComplexMatrix) -> Result<Self> {
        let basis = pauli_basis(self.n_qubits)?;
        check_unitary(u, basis.hilbert_dim())?;
        let ud = u.adjoint();
        // U† V_k = Σ_a A_ak V_a
        let a = change_of_basis(&basis, |v| &ud * v);
        Ok(self.transformed(&a))
    }

    /// χ of `ρ ↦ R† E(R ρ R†) R`.
    ///
    /// Averaging the result over states centered on `+ẑ` equals averaging
    /// `self` over the same shape centered on `R(+ẑ)`.
    pub fn conjugate_rotation(&self, r: &ComplexMatrix) -> Result<Self> {
        let basis = pauli_basis(self.n_qubits)?;
        check_unitary(r, basis.hilbert_dim())?;
        let rd = r.adjoint();
        // R† V_k R = Σ_a B_ak V_a
        let b = change_of_basis(&basis, |v| &(&rd * v) * r);
        Ok(self.transformed(&b))
    }

    /// `A χ A†`.
    fn transformed(&self, a: &ComplexMatrix) -> Self {
        let chi = &(a * &self.chi) * &a.adjoint();
        Self { n_qubits: self.n_qubits, chi }
    }
}

/// Matrix of Pauli coefficients of `f(V_k)`, column `k`.
fn change_of_basis<F: Fn(&ComplexMatrix) -> ComplexMatrix>(basis: &PauliBasis, f: F) -> ComplexMatrix {
    let dim = basis.len();
    let mut a = ComplexMatrix::zeros(dim, dim);
    for (k, v) in basis.elements().iter().enumerate() {
        for (i, c) in basis.coefficients(&f(v)).into_iter().enumerate() {
            a[(i, k)] = c;
        }
    }
    a
}

fn check_unitary(u: &ComplexMatrix, dim: usize) -> Result<()> {
    if u.rows() != dim || u.cols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: u.rows().max(u.cols()) });
    }
    let defect = u.unitarity_defect();
    if !(defect <= PARAM_TOL) {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Hermitian, unit trace and positive semidefinite within [`DENSITY_TOL`].
pub fn check_density_matrix(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.rows() != dim || rho.cols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rho.rows().max(rho.cols()) });
    }
    if !(rho.hermiticity_defect() <= DENSITY_TOL) {
        return Err(Error::InvalidDensityMatrix("not Hermitian"));
    }
    if !((rho.trace() - C64::new(1.0, 0.0)).norm() <= DENSITY_TOL) {
        return Err(Error::InvalidDensityMatrix("trace differs from 1"));
    }
    let ev = hermitian_eigenvalues(&rho.hermitize())?;
    if !(ev[0] >= -DENSITY_TOL) {
        return Err(Error::InvalidDensityMatrix("negative eigenvalue"));
    }
    Ok(())
}

/// The five-parameter single-qubit family with real `χ03 = χ30` and
/// `χ12 = -iχ03`, whose trace-preservation holds identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedChi {
    pub chi00: f64,
    pub chi11: f64,
    pub chi22: f64,
    pub chi33: f64,
    pub chi03: f64,
}

impl RestrictedChi {
    pub fn new(chi00: f64, chi11: f64, chi22: f64, chi33: f64, chi03: f64) -> Result<Self> {
        let rc = Self { chi00, chi11, chi22, chi33, chi03 };
        rc.check()?;
        Ok(rc)
    }

    pub fn check(&self) -> Result<()> {
        let d = [self.chi00, self.chi11, self.chi22, self.chi33];
        if !d.iter().chain(&[self.chi03]).all(|x| x.is_finite()) {
            return Err(Error::InvalidRestrictedChi("non-finite entry"));
        }
        if d.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidRestrictedChi("negative diagonal entry"));
        }
        if fabs(d.iter().sum::<f64>() - 1.0) > PARAM_TOL {
            return Err(Error::InvalidRestrictedChi("diagonal does not sum to 1"));
        }
        let c2 = self.chi03 * self.chi03;
        if self.chi00 * self.chi33 < c2 - PARAM_TOL || self.chi11 * self.chi22 < c2 - PARAM_TOL {
            return Err(Error::InvalidRestrictedChi("chi03 violates positivity"));
        }
        Ok(())
    }

    /// Random member with the given `χ00`: `(χ11, χ22, χ33)` uniform on the
    /// simplex of total `1 - χ00`, then `χ03` uniform on its allowed interval.
    pub fn random(chi00: f64, rng: &mut RngStream) -> Result<Self> {
        if !(chi00 > 0.0 && chi00 <= 1.0) {
            return Err(Error::OutOfRange { what: "chi00", value: chi00 });
        }
        let [a, b, c] = simplex::<3>(rng, 1.0 - chi00);
        let m = sqrt(chi00 * c).min(sqrt(a * b));
        let chi03 = rng.uniform_in(-m, m);
        let rc = Self { chi00, chi11: a, chi22: b, chi33: c, chi03 };
        rc.check().map(|_| rc)
    }

    /// The matrix layout of the family.
    pub fn embed(&self) -> ProcessMatrix {
        let mut m = ComplexMatrix::diagonal(&[self.chi00, self.chi11, self.chi22, self.chi33]);
        m[(0, 3)] = C64::new(self.chi03, 0.0);
        m[(3, 0)] = C64::new(self.chi03, 0.0);
        m[(1, 2)] = C64::new(0.0, -self.chi03);
        m[(2, 1)] = C64::new(0.0, self.chi03);
        ProcessMatrix { n_qubits: 1, chi: m }
    }
}

/// Checks `rc` and returns its process matrix.
pub fn embed_restricted(rc: &RestrictedChi) -> Result<ProcessMatrix> {
    rc.check()?;
    Ok(rc.embed())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Restricted channels of fixed `χ00` with extreme augmented fidelity about `+ẑ`:
/// `p = (1-√χ00)²`, `χ11 = χ22 = √p - p`, `χ33 = p`, `χ03 = ∓(√p - p)`.
pub fn extremal_restricted(chi00: f64, sense: Sense) -> Result<RestrictedChi> {
    if !(chi00 > 0.0 && chi00 <= 1.0) {
        return Err(Error::OutOfRange { what: "chi00", value: chi00 });
    }
    let r = sqrt(chi00);
    // √p = 1 - √χ00, and √p - p = √p·√χ00
    let sp = (1.0 - chi00) / (1.0 + r);
    let off = sp * r;
    let chi03 = match sense {
        Sense::Min => -off,
        Sense::Max => off,
    };
    Ok(RestrictedChi { chi00, chi11: off, chi22: off, chi33: sp * sp, chi03 })
}

/// Single-qubit channel with diagonal χ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliChannel {
    p: [f64; 4],
}

impl PauliChannel {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if !p.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidPauliChannel("non-finite probability"));
        }
        if p.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidPauliChannel("negative probability"));
        }
        if fabs(p.iter().sum::<f64>() - 1.0) > PARAM_TOL {
            return Err(Error::InvalidPauliChannel("probabilities do not sum to 1"));
        }
        Ok(Self { p })
    }

    /// Random channel with the given `χ00` and the rest uniform on the simplex.
    pub fn random(chi00: f64, rng: &mut RngStream) -> Result<Self> {
        if !(chi00 > 0.0 && chi00 <= 1.0) {
            return Err(Error::OutOfRange { what: "chi00", value: chi00 });
        }
        let [a, b, c] = simplex::<3>(rng, 1.0 - chi00);
        Self::new([chi00, a, b, c])
    }

    #[inline]
    pub fn probabilities(&self) -> [f64; 4] {
        self.p
    }

    pub fn to_process(&self) -> ProcessMatrix {
        ProcessMatrix { n_qubits: 1, chi: ComplexMatrix::diagonal(&self.p) }
    }

    pub fn to_restricted(&self) -> RestrictedChi {
        let [a, b, c, d] = self.p;
        RestrictedChi { chi00: a, chi11: b, chi22: c, chi33: d, chi03: 0.0 }
    }
}

/// Pauli channels of fixed `χ00` with all error weight on one axis:
/// `Min` puts it on `χ11`, `Max` on `χ33`.
pub fn extremal_pauli(chi00: f64, sense: Sense) -> Result<PauliChannel> {
    if !(chi00 > 0.0 && chi00 <= 1.0) {
        return Err(Error::OutOfRange { what: "chi00", value: chi00 });
    }
    let q = 1.0 - chi00;
    Ok(PauliChannel {
        p: match sense {
            Sense::Min => [chi00, q, 0.0, 0.0],
            Sense::Max => [chi00, 0.0, 0.0, q],
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBias {
    pub axis: Axis,
    /// Nonnegative, possibly `+∞`.
    pub eta: f64,
}

/// `η_Z = χ33/(χ11+χ22)`, with `X` and `Y` by cyclic substitution.
pub fn noise_bias(pc: &PauliChannel, axis: Axis) -> Result<NoiseBias> {
    let [_, x, y, z] = pc.p;
    let (num, den) = match axis {
        Axis::X => (x, y + z),
        Axis::Y => (y, z + x),
        Axis::Z => (z, x + y),
    };
    let eta = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        return Err(Error::UndefinedBias);
    };
    Ok(NoiseBias { axis, eta })
}

/// Options of the random two-qubit ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    /// Draw real off-diagonal entries only.
    pub real_offdiag: bool,
    /// Remove the trace-preservation violating part of the off-diagonals
    /// before the positivity check.
    pub project_tp: bool,
    /// Multiplies the off-diagonal bound `m = min(d)`.
    pub offdiag_scale: f64,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { real_offdiag: false, project_tp: false, offdiag_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Accepted(ProcessMatrix, ValidationReport),
    Rejected { min_eigenvalue: f64 },
}

/// One proposal of the random two-qubit ensemble.
///
/// The diagonal is `(χ0000, d₁..d₁₅)` with `d` uniform on the simplex of total
/// `1 - χ0000`. Each upper off-diagonal entry has real and imaginary part
/// uniform on `[-m, m]`, `m = min(d)`, and is mirrored to keep χ Hermitian.
/// The proposal is rejected when χ has a negative eigenvalue.
pub fn random_two_qubit_chi(chi0000: f64, rng: &mut RngStream, opts: &EnsembleOptions) -> Result<Proposal> {
    if !(chi0000 > 0.0 && chi0000 <= 1.0) {
        return Err(Error::OutOfRange { what: "chi0000", value: chi0000 });
    }
    let d = simplex::<15>(rng, 1.0 - chi0000);
    let m = d.iter().copied().fold(f64::INFINITY, f64::min) * opts.offdiag_scale;
    let mut chi = ComplexMatrix::zeros(16, 16);
    chi[(0, 0)] = C64::new(chi0000, 0.0);
    for (k, &x) in d.iter().enumerate() {
        chi[(k + 1, k + 1)] = C64::new(x, 0.0);
    }
    for k in 0..16 {
        for l in k + 1..16 {
            let re = rng.uniform_in(-m, m);
            let im = if opts.real_offdiag { 0.0 } else { rng.uniform_in(-m, m) };
            chi[(k, l)] = C64::new(re, im);
            chi[(l, k)] = C64::new(re, -im);
        }
    }
    let mut pm = ProcessMatrix { n_qubits: 2, chi };
    if opts.project_tp {
        pm = project_tp(&pm);
    }
    let report = pm.validate(0.0);
    if report.min_eigenvalue < 0.0 {
        Ok(Proposal::Rejected { min_eigenvalue: report.min_eigenvalue })
    } else {
        Ok(Proposal::Accepted(pm, report))
    }
}

/// Orthogonal projection of the off-diagonal entries onto trace preservation.
///
/// The condition `Σ_kl χ_kl V_l V_k = I` splits into one linear constraint
/// `L_m = Σ_{k⊕l=m} χ_kl ω_lk = 0` per Pauli string `m ≠ 0`, each over a
/// disjoint set of `4ⁿ` entries with unimodular `ω`; subtracting
/// `L_m conj(ω_lk)/4ⁿ` from each entry zeroes it and keeps χ Hermitian.
pub fn project_tp(pm: &ProcessMatrix) -> ProcessMatrix {
    let n = pm.n_qubits;
    let dim = pm.dim();
    let lm = pm.tp_coefficients();
    let mut chi = pm.chi.clone();
    for k in 0..dim {
        for l in 0..dim {
            if k == l {
                continue;
            }
            let (w, m) = pauli_product(n, l, k);
            chi[(k, l)] -= lm[m] * w.conj() / dim as f64;
        }
    }
    ProcessMatrix { n_qubits: n, chi }
}

/// A random CPTP channel from a Haar-like random isometry with `n_kraus`
/// Kraus operators (Gram–Schmidt on a complex Gaussian matrix).
pub fn random_cptp(n_qubits: usize, n_kraus: usize, rng: &mut RngStream) -> Result<ProcessMatrix> {
    let d = 1usize << n_qubits;
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::UnsupportedDimension(n_qubits));
    }
    let rows = d * n_kraus.max(1);
    // columns of a (rows x d) isometry
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut v: Vec<C64> = (0..rows).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect();
        for u in &cols {
            let p: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(u).for_each(|(x, a)| *x -= p * a);
        }
        let norm = sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    let kraus: Vec<ComplexMatrix> = (0..n_kraus.max(1))
        .map(|i| {
            let mut k = ComplexMatrix::zeros(d, d);
            for (c, col) in cols.iter().enumerate() {
                for r in 0..d {
                    k[(r, c)] = col[i * d + r];
                }
            }
            k
        })
        .collect();
    ProcessMatrix::from_kraus(n_qubits, &kraus)
}

/// Haar-random unitary of size `d` (Gram–Schmidt of a complex Gaussian matrix).
pub fn random_unitary(d: usize, rng: &mut RngStream) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut v: Vec<C64> = (0..d).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect();
        for u in &cols {
            let p: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(u).for_each(|(x, a)| *x -= p * a);
        }
        let norm = sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for (c, col) in cols.iter().enumerate() {
        for (r, &z) in col.iter().enumerate() {
            u[(r, c)] = z;
        }
    }
    u
}

/// Uniform point of the simplex `{x ≥ 0, Σx = total}` from normalized exponentials.
fn simplex<const N: usize>(rng: &mut RngStream, total: f64) -> [f64; N] {
    let mut e = [0.0; N];
    e.iter_mut().for_each(|x| *x = rng.exponential());
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|x| *x *= total / s);
    e
}

/// Standard normal variate (Box–Muller, cosine branch).
fn gaussian(rng: &mut RngStream) -> f64 {
    let u = rng.uniform_open0();
    let v = rng.uniform();
    sqrt(-2.0 * log(u)) * libm::cos(2.0 * core::f64::consts::PI * v)
}
