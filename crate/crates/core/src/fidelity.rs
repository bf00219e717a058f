//! Closed-form augmented fidelities and variances, and a quadrature oracle.
//!
//! All single-qubit formulas assume the distribution is centered on `+ẑ`.
//! Other centers are handled by rotating the channel with
//! [`ProcessMatrix::conjugate_rotation`] (see [`rotate_center_to_z`]).

use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, exp, expm1, fabs, sin, tanh};

use crate::channels::ProcessMatrix;
use crate::distributions::{BlochDistribution, BlochVector, DistKind, Rotation};
use crate::linalg::{kron, pauli_basis, C64};
use crate::quadrature::{gauss_legendre, integrate};
use crate::{Error, Result};

/// Slack allowed before a mean or variance outside its range is an error.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Quadrature,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Quadrature => "quadrature",
            Provenance::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityStats {
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `mean`; zero for deterministic methods.
    pub std_error: f64,
    pub provenance: Provenance,
}

impl FidelityStats {
    /// Clamps `mean` to `[0, 1]` and `variance` to `[0, ∞)` when they overshoot
    /// by at most [`CLAMP_TOL`]; larger violations are errors.
    pub fn new(mean: f64, variance: f64, std_error: f64, provenance: Provenance) -> Result<Self> {
        if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&mean) {
            return Err(Error::InternalConsistency { what: "mean fidelity", value: mean });
        }
        if !(variance >= -CLAMP_TOL) || !variance.is_finite() {
            return Err(Error::InternalConsistency { what: "fidelity variance", value: variance });
        }
        Ok(Self { mean: mean.clamp(0.0, 1.0), variance: variance.max(0.0), std_error, provenance })
    }
}

fn require_qubits(chi: &ProcessMatrix, n: usize) -> Result<()> {
    if chi.n_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: chi.n_qubits() });
    }
    Ok(())
}

/// `F = Tr(ρ E(ρ))` for the pure state with Bloch vector `v`.
pub fn single_state_fidelity(chi: &ProcessMatrix, v: &BlochVector) -> Result<f64> {
    require_qubits(chi, 1)?;
    let rho = v.checked_unit()?.density_matrix();
    let out = chi.apply(&rho)?;
    Ok((&rho * &out).trace().re)
}

/// Fidelity of product states as a quadratic form in their Pauli coefficients.
///
/// With `c = (1, v₁) ⊗ … ⊗ (1, vₙ)` and `R` the Pauli transfer matrix,
/// `F = cᵀ R c / 2ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityForm {
    n_qubits: usize,
    dim: usize,
    r: Vec<f64>,
}

impl FidelityForm {
    pub fn new(chi: &ProcessMatrix) -> Self {
        Self { n_qubits: chi.n_qubits(), dim: chi.dim(), r: chi.transfer_matrix() }
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Pauli transfer matrix, row-major.
    pub fn transfer_matrix(&self) -> &[f64] {
        &self.r
    }

    /// Fidelity of the product state with one Bloch vector per qubit.
    pub fn eval(&self, states: &[BlochVector]) -> f64 {
        debug_assert_eq!(states.len(), self.n_qubits);
        let mut c = [0.0f64; 16];
        c[0] = 1.0;
        let mut len = 1;
        for v in states {
            let f = [1.0, v.x, v.y, v.z];
            for i in (0..len).rev() {
                let ci = c[i];
                for (j, fj) in f.iter().enumerate() {
                    c[4 * i + j] = ci * fj;
                }
            }
            len *= 4;
        }
        let d = self.dim;
        let mut s = 0.0;
        for j in 0..d {
            if c[j] == 0.0 {
                continue;
            }
            let row = &self.r[j * d..(j + 1) * d];
            s += c[j] * row.iter().zip(&c[..d]).map(|(a, b)| a * b).sum::<f64>();
        }
        s / (1usize << self.n_qubits) as f64
    }

    /// Single-qubit decomposition `F(v) = c0 + q·v + vᵀQv` with symmetric `Q`.
    pub fn quadratic_parts(&self) -> Option<(f64, [f64; 3], [[f64; 3]; 3])> {
        if self.n_qubits != 1 {
            return None;
        }
        let r = |i: usize, j: usize| self.r[4 * i + j];
        let c0 = 0.5 * r(0, 0);
        let q = [1, 2, 3].map(|j| 0.5 * (r(0, j) + r(j, 0)));
        let qm = core::array::from_fn(|i| core::array::from_fn(|j| 0.25 * (r(i + 1, j + 1) + r(j + 1, i + 1))));
        Some((c0, q, qm))
    }
}

/// `(2ⁿ χ00 + 1)/(2ⁿ + 1)`.
pub fn uniform_avg(chi: &ProcessMatrix) -> f64 {
    let d = (1usize << chi.n_qubits()) as f64;
    (d * chi.chi00() + 1.0) / (d + 1.0)
}

/// Uniform average from the basis sum
/// `(Σ_k Tr(U V_k† U† E_U(V_k)) + 4ⁿ) / (4ⁿ (2ⁿ + 1))`.
pub fn uniform_avg_trace_form(u: &crate::linalg::ComplexMatrix, chi_noisy: &ProcessMatrix) -> Result<f64> {
    let basis = pauli_basis(chi_noisy.n_qubits())?;
    let d = basis.hilbert_dim();
    if u.rows() != d || u.cols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: u.rows().max(u.cols()) });
    }
    let defect = u.unitarity_defect();
    if !(defect <= crate::channels::PARAM_TOL) {
        return Err(Error::NotUnitary { defect });
    }
    let ud = u.adjoint();
    let mut sum = C64::new(0.0, 0.0);
    for v in basis.elements() {
        let ideal = &(u * &v.adjoint()) * &ud;
        sum += (&ideal * &chi_noisy.apply_linear(v)).trace();
    }
    let d2 = (d * d) as f64;
    Ok((sum.re + d2) / (d2 * (d as f64 + 1.0)))
}

/// χ whose `+ẑ`-centered averages equal those of `chi` about `center`.
pub fn rotate_center_to_z(chi: &ProcessMatrix, center: &BlochVector) -> Result<ProcessMatrix> {
    require_qubits(chi, 1)?;
    let r = Rotation::z_to(&center.checked_unit()?);
    if r.is_identity() {
        return Ok(chi.clone());
    }
    chi.conjugate_rotation(&r.su2())
}

/// `[4(χ00-χ33), 2(χ00-χ11-χ22+χ33), 8 Re χ03]`.
fn reduced_entries(chi: &ProcessMatrix) -> [f64; 3] {
    let e = |k: usize| chi.entry(k, k).re;
    [4.0 * (e(0) - e(3)), 2.0 * (e(0) - e(1) - e(2) + e(3)), 8.0 * chi.entry(0, 3).re]
}

/// Polar-cap weights `(A, B, C)` of the reduced entries.
pub fn polar_cap_coefficients(theta_max: f64) -> (f64, f64, f64) {
    let c = cos(theta_max);
    let h = sin(0.5 * theta_max);
    ((2.0 + c) * h * h / 12.0, (1.0 + c + c * c) / 12.0, (1.0 + c) / 8.0)
}

/// `κ coth κ - 1`, series below `1e-3` and `coth = 1` above 700.
fn kappa_coth_minus_one(k: f64) -> f64 {
    if k < 1e-3 {
        let k2 = k * k;
        k2 / 3.0 - k2 * k2 / 45.0 + 2.0 * k2 * k2 * k2 / 945.0
    } else if k > 700.0 {
        k - 1.0
    } else {
        k / tanh(k) - 1.0
    }
}

/// von Mises–Fisher weights `(a, b, c)` of the reduced entries.
pub fn vmf_coefficients(kappa: f64) -> (f64, f64, f64) {
    let a = if kappa < 1e-3 {
        let k2 = kappa * kappa;
        1.0 / 12.0 - k2 / 180.0 + k2 * k2 / 1890.0
    } else {
        kappa_coth_minus_one(kappa) / (4.0 * kappa * kappa)
    };
    // (2 - 2κ coth κ + κ²)/(4κ²) = 1/4 - 2a
    let b = 0.25 - 2.0 * a;
    let c = if kappa < 1e-3 { kappa * a } else { kappa_coth_minus_one(kappa) / (4.0 * kappa) };
    (a, b, c)
}

fn check_theta(theta_max: f64) -> Result<()> {
    if !(theta_max > 0.0 && theta_max <= core::f64::consts::PI) {
        return Err(Error::OutOfRange { what: "polar cap angle", value: theta_max });
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::OutOfRange { what: "concentration kappa", value: kappa });
    }
    Ok(())
}

/// Average fidelity over the polar cap of opening angle `theta_max` about `center`.
pub fn polar_cap_avg(chi: &ProcessMatrix, theta_max: f64, center: &BlochVector) -> Result<f64> {
    check_theta(theta_max)?;
    let z = rotate_center_to_z(chi, center)?;
    let [d0, d1, d2] = reduced_entries(&z);
    let (a, b, c) = polar_cap_coefficients(theta_max);
    Ok(0.5 + a * d0 + b * d1 + c * d2)
}

/// Average fidelity over the von Mises–Fisher distribution about `center`.
pub fn vmf_avg(chi: &ProcessMatrix, kappa: f64, center: &BlochVector) -> Result<f64> {
    check_kappa(kappa)?;
    let z = rotate_center_to_z(chi, center)?;
    let [d0, d1, d2] = reduced_entries(&z);
    let (a, b, c) = vmf_coefficients(kappa);
    Ok(0.5 + a * d0 + b * d1 + c * d2)
}

/// Closed-form mean over any single-qubit distribution.
pub fn analytic_mean(chi: &ProcessMatrix, dist: &BlochDistribution) -> Result<f64> {
    require_qubits(chi, 1)?;
    match dist.kind() {
        DistKind::Uniform => Ok(uniform_avg(chi)),
        DistKind::PolarCap { theta_max } => polar_cap_avg(chi, theta_max, &dist.center()),
        DistKind::VonMisesFisher { kappa } => vmf_avg(chi, kappa, &dist.center()),
        DistKind::Point => single_state_fidelity(chi, &dist.center()),
    }
}

/// Real parts of the χ entries used by the variance expressions.
struct Entries {
    c00: f64,
    c11: f64,
    c22: f64,
    c33: f64,
    c01: f64,
    c02: f64,
    c03: f64,
    c12: f64,
    c13: f64,
    c23: f64,
}

impl Entries {
    fn of(chi: &ProcessMatrix) -> Self {
        let e = |k: usize, l: usize| chi.entry(k, l).re;
        Self {
            c00: e(0, 0),
            c11: e(1, 1),
            c22: e(2, 2),
            c33: e(3, 3),
            c01: e(0, 1),
            c02: e(0, 2),
            c03: e(0, 3),
            c12: e(1, 2),
            c13: e(1, 3),
            c23: e(2, 3),
        }
    }
}

/// Closed-form variance of the fidelity under the `+ẑ`-centered von
/// Mises–Fisher distribution. Valid for any single-qubit CPTP χ.
///
/// The expanded expression cancels terms of order `κ⁰` against a result of
/// order `κ⁴·Var`, so below `κ = 1` the same quantity is assembled from the
/// axial moments `E[cosᵏθ]` instead.
pub fn variance_vmf(chi: &ProcessMatrix, kappa: f64) -> Result<f64> {
    require_qubits(chi, 1)?;
    check_kappa(kappa)?;
    if kappa < 1.0 {
        return Ok(vmf_variance_from_moments(chi, kappa));
    }
    let Entries { c00, c11, c22, c33, c01, c02, c03, c12, c13, c23 } = Entries::of(chi);
    let k = kappa;
    let (k2, k3) = (k * k, k * k * k);
    let k4 = k2 * k2;
    let coth = if k > 700.0 { 1.0 } else { 1.0 / tanh(k) };
    // csch² κ = 4e^{-2κ}/(1 - e^{-2κ})²
    let em = expm1(-2.0 * k);
    let csch2 = 4.0 * exp(-2.0 * k) / (em * em);
    let kc1 = kappa_coth_minus_one(k);
    let sq = |x: f64| x * x;

    let s = 3.0 * sq(c00) * k4 - sq(c11) * k4 - sq(c22) * k4 + 3.0 * sq(c33) * k4 + 2.0 * c11 * k4
        - 2.0 * c11 * c22 * k4
        + 2.0 * c22 * k4
        + 2.0 * c11 * c33 * k4
        + 2.0 * c22 * c33 * k4
        - 2.0 * c33 * k4
        - k4
        + 8.0 * c03 * k3
        - 8.0 * c03 * c11 * k3
        - 8.0 * c03 * c22 * k3
        + 32.0 * c02 * c23 * k3
        - 8.0 * c03 * c33 * k3
        + 16.0 * kc1 * sq(c01) * k2
        - 16.0 * sq(c02) * k2
        + 16.0 * sq(c03) * k2
        + 4.0 * sq(c11) * k2
        + 16.0 * sq(c12) * k2
        - 80.0 * sq(c13) * k2
        + 4.0 * sq(c22) * k2
        - 80.0 * sq(c23) * k2
        - 4.0 * csch2 * sq(2.0 * k * c03 + c11 + c22 - 2.0 * c33) * k2
        + 24.0 * sq(c33) * k2
        + 4.0 * c11 * k2
        - 8.0 * c11 * c22 * k2
        + 4.0 * c22 * k2
        - 12.0 * c11 * c33 * k2
        - 12.0 * c22 * c33 * k2
        - 8.0 * c33 * k2
        + 2.0
            * c00
            * (-k2 + (4.0 * kc1 * c03 + (k + 2.0 * coth) * (c11 + c22) + (3.0 * k - 4.0 * coth) * c33) * k
                - 2.0 * c11
                - 2.0 * c22
                + 4.0 * c33)
            * k2
        + 32.0 * c03 * c11 * k
        + 32.0 * (k2 - 3.0 * coth * k + 3.0) * c01 * c13 * k
        + 32.0 * c03 * c22 * k
        + 96.0 * c02 * c23 * k
        - 64.0 * c03 * c33 * k
        + 4.0
            * coth
            * (4.0 * sq(c02) * k2 + sq(c11) * k2 + 4.0 * sq(c13) * k2 + sq(c22) * k2 + 4.0 * sq(c23) * k2
                - c11 * k2
                + 2.0 * c11 * c22 * k2
                - c22 * k2
                - 24.0 * c02 * c23 * k
                + 2.0 * c03 * (-k2 + (k2 - 2.0) * c11 + (k2 - 2.0) * c22 + (k2 + 4.0) * c33) * k
                - 7.0 * sq(c11)
                - 7.0 * sq(c22)
                - 2.0 * (k2 + 8.0) * sq(c33)
                - 2.0 * c11 * c22
                - 12.0 * (sq(c12) - 4.0 * (sq(c13) + sq(c23)))
                + (2.0 * k2 - (k2 - 16.0) * c11 - (k2 - 16.0) * c22) * c33)
            * k
        + 32.0 * sq(c11)
        + 48.0 * sq(c12)
        - 192.0 * sq(c13)
        + 32.0 * sq(c22)
        - 192.0 * sq(c23)
        + 80.0 * sq(c33)
        + 16.0 * c11 * c22
        - 80.0 * c11 * c33
        - 80.0 * c22 * c33;
    Ok(s / (4.0 * k4))
}

/// `E[tᵏ]` for `k = 1..=4` under the density `∝ e^{κt}` on `[-1, 1]`, summed
/// as a ratio of positive series (accurate for `κ` up to a few).
fn vmf_axial_moments_series(kappa: f64) -> [f64; 4] {
    // uniform moments of t are 1/(n+1) for even n
    let mu = |n: usize| if n.is_multiple_of(2) { 1.0 / (n + 1) as f64 } else { 0.0 };
    let mut num = [0.0; 4];
    let mut den = 0.0;
    let mut w = 1.0;
    for j in 0..40 {
        den += w * mu(j);
        for (k, m) in num.iter_mut().enumerate() {
            *m += w * mu(j + k + 1);
        }
        w *= kappa / (j + 1) as f64;
    }
    num.map(|m| m / den)
}

fn vmf_variance_from_moments(chi: &ProcessMatrix, kappa: f64) -> f64 {
    let (_, q, qm) = FidelityForm::new(chi).quadratic_parts().expect("single qubit");
    // |v| = 1, so only the traceless part of Q varies
    let tr = (qm[0][0] + qm[1][1] + qm[2][2]) / 3.0;
    let g = qm[2][2] - tr;
    let [m1, m2, m3, m4] = vmf_axial_moments_series(kappa);
    let sq = |x: f64| x * x;
    let axial = sq(q[2]) * (m2 - sq(m1)) + 3.0 * q[2] * g * (m3 - m1 * m2) + 2.25 * sq(g) * (m4 - sq(m2));
    let ring = |a: f64, b: f64| sq(a) * (1.0 - m2) + 4.0 * a * b * (m1 - m3) + 4.0 * sq(b) * (m2 - m4);
    let first = 0.5 * (ring(q[0], qm[0][2]) + ring(q[1], qm[1][2]));
    let second = 0.5 * (sq(0.5 * (qm[0][0] - qm[1][1])) + sq(qm[0][1])) * (1.0 - 2.0 * m2 + m4);
    axial + first + second
}

/// Reference closed-form polar-cap variance, evaluated term by term.
///
/// It does not vanish for the identity channel (it gives `-2`), so it is only
/// reported next to the oracle value and never used as a result.
pub fn printed_polar_cap_variance(chi: &ProcessMatrix, theta_max: f64) -> Result<f64> {
    require_qubits(chi, 1)?;
    check_theta(theta_max)?;
    let Entries { c00, c11, c22, c33, c01, c02, c03, c12, c13, c23 } = Entries::of(chi);
    let t = theta_max;
    let c = cos;
    let sq = |x: f64| x * x;
    let p4 = |x: f64| sq(sq(x));
    let sym = 3.0 * sq(c11) + 2.0 * c22 * c11 + 3.0 * sq(c22);

    let t1 = -40.0
        * sq(-12.0 * c03 * (c(t) + 1.0) + (c11 + c22 - 2.0 * c33) * (2.0 * c(t) + c(2.0 * t)) - 6.0 * c00
            + 3.0 * (c11 + c22 - 2.0));
    let inner = -1920.0 * c01 * c13 * p4(sin(t)) + 1920.0 * sq(c00) * (c(t) - 1.0)
        - 120.0 * (2.0 * c02 * c23 + c03 * (c11 + c22 - 2.0 * c33)) * c(4.0 * t)
        + 3.0 * (sym + 8.0 * sq(c33) + 4.0 * (sq(c12) - 4.0 * (sq(c13) + sq(c23))) - 8.0 * (c11 + c22) * c33)
            * c(5.0 * t)
        + 30.0
            * (96.0 * sq(c02) + 64.0 * sq(c03) + 20.0 * sq(c12) + 8.0 * sq(c33) + 5.0 * sym
                + 16.0 * (sq(c13) + sq(c23))
                + 8.0 * (c11 + c22) * c33)
            * c(t)
        + 5.0
            * (-64.0 * sq(c02) + 128.0 * sq(c03) - 20.0 * sq(c12) + 24.0 * sq(c33) - 5.0 * sym
                + 16.0 * (sq(c13) + sq(c23))
                + 8.0 * (c11 + c22) * c33)
            * c(3.0 * t)
        + 480.0 * (2.0 * c02 * c23 + c03 * (c11 + c22 + 2.0 * c33)) * c(2.0 * t)
        - 5120.0 * sq(c01) * p4(sin(0.5 * t)) * (c(t) + 2.0)
        + 160.0
            * c00
            * (-24.0 * c03 * sq(sin(t)) + (c11 + c22) * (9.0 * c(t) - c(3.0 * t) - 8.0)
                + 2.0 * c33 * (3.0 * c(t) + c(3.0 * t) - 4.0))
        - 384.0 * sq(c33)
        - 8.0
            * (320.0 * sq(c02) + 90.0 * c23 * c02 + 320.0 * sq(c03) + 45.0 * c03 * (c11 + c22)
                + 16.0 * (sym + 4.0 * (sq(c12) + sq(c13) + sq(c23))))
        - 16.0 * (75.0 * c03 + 16.0 * (c11 + c22)) * c33;
    Ok((t1 - 3.0 / (c(t) - 1.0) * inner) / 5760.0)
}

/// Polar-cap variance: the oracle value, with the printed closed form and its
/// deviation kept for auditing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCapVariance {
    pub value: f64,
    pub closed_form: f64,
    /// `closed_form - value`.
    pub residual: f64,
}

/// Variance under the `+ẑ`-centered polar cap. Angles below `1e-3` are
/// treated as the point limit (variance 0).
pub fn variance_polar_cap(chi: &ProcessMatrix, theta_max: f64) -> Result<PolarCapVariance> {
    let closed_form = printed_polar_cap_variance(chi, theta_max)?;
    let value = if theta_max < 1e-3 {
        0.0
    } else {
        variance_quadrature_oracle(chi, &BlochDistribution::polar_cap(theta_max)?)?.variance
    };
    Ok(PolarCapVariance { value, closed_form, residual: closed_form - value })
}

/// Fourier coefficients in `φ` of the fidelity on the circle `1 - cos θ = w`,
/// returned as `(⟨F⟩_φ, ⟨(F - ⟨F⟩_φ)²⟩_φ)`.
#[derive(Debug, Clone, Copy)]
struct RingForm {
    c0: f64,
    q: [f64; 3],
    qm: [[f64; 3]; 3],
}

impl RingForm {
    fn at(&self, w: f64) -> (f64, f64) {
        let t = 1.0 - w;
        let s2 = (w * (2.0 - w)).max(0.0);
        let s = libm::sqrt(s2);
        let q = &self.q;
        let m = &self.qm;
        let f0 = self.c0 + q[2] * t + m[2][2] * t * t + 0.5 * (m[0][0] + m[1][1]) * s2;
        let f1c = q[0] * s + 2.0 * m[0][2] * s * t;
        let f1s = q[1] * s + 2.0 * m[1][2] * s * t;
        let f2c = 0.5 * (m[0][0] - m[1][1]) * s2;
        let f2s = m[0][1] * s2;
        (f0, 0.5 * (f1c * f1c + f1s * f1s + f2c * f2c + f2s * f2s))
    }
}

/// Mean and variance of the fidelity by deterministic quadrature.
///
/// The channel is rotated so the center is `+ẑ`; the azimuthal average is
/// done exactly and the remaining integral over `w = 1 - cos θ` adaptively.
pub fn variance_quadrature_oracle(chi: &ProcessMatrix, dist: &BlochDistribution) -> Result<FidelityStats> {
    if let DistKind::Point = dist.kind() {
        return Err(Error::PointHasNoDensity);
    }
    let z = rotate_center_to_z(chi, &dist.center())?;
    let (c0, q, qm) = FidelityForm::new(&z).quadratic_parts().ok_or(Error::UnsupportedDimension(z.n_qubits()))?;
    let ring = RingForm { c0, q, qm };

    let w_max = dist.offset_support();
    let mut cuts = vec![0.0];
    if let DistKind::VonMisesFisher { kappa } = dist.kind() {
        let knee = 40.0 / kappa;
        if knee < w_max {
            cuts.push(knee);
        }
    }
    cuts.push(w_max);

    let density = |w: f64| dist.offset_density(w).unwrap_or(0.0);
    let mut mean = 0.0;
    for seg in cuts.windows(2) {
        mean += integrate(|w| ring.at(w).0 * density(w), seg[0], seg[1], 1e-15, 1e-14).value;
    }
    let mut var = 0.0;
    for seg in cuts.windows(2) {
        var += integrate(
            |w| {
                let (f0, osc) = ring.at(w);
                ((f0 - mean) * (f0 - mean) + osc) * density(w)
            },
            seg[0],
            seg[1],
            1e-18,
            1e-12,
        )
        .value;
    }
    FidelityStats::new(mean, var, 0.0, Provenance::Quadrature)
}

/// Two-qubit average over independently uniform local states:
/// `(1 + 8χ00,00 + 2 Σ χ_kk)/9` with `k` over the strings of weight one.
pub fn two_qubit_uniform_local(chi2: &ProcessMatrix) -> Result<f64> {
    require_qubits(chi2, 2)?;
    let weight_one: f64 = [1usize, 2, 3, 4, 8, 12].iter().map(|&k| chi2.entry(k, k).re).sum();
    Ok((1.0 + 8.0 * chi2.chi00() + 2.0 * weight_one) / 9.0)
}

/// Product quadrature for two-qubit averages over local distributions.
///
/// Each qubit gets composite Gauss–Legendre nodes in `w = 1 - cos θ` times
/// six equally spaced azimuths, which integrate the fidelity and its square
/// exactly in `φ`. Second and fourth moments of `(1, v)` are tabulated per
/// qubit so both the mean and `E[F²]` reduce to tensor contractions.
#[derive(Debug, Clone)]
pub struct TensorQuadrature {
    panels: usize,
    order: usize,
}

impl Default for TensorQuadrature {
    fn default() -> Self {
        Self { panels: 8, order: 12 }
    }
}

/// Moments of `c = (1, v)` under one local distribution: `M_jk = E[c_j c_k]`,
/// `T_jklm = E[c_j c_k c_l c_m]`.
struct LocalMoments {
    m2: [f64; 16],
    m4: [f64; 256],
}

impl TensorQuadrature {
    pub fn new(panels: usize, order: usize) -> Self {
        Self { panels: panels.max(1), order: order.max(2) }
    }

    fn nodes(&self, dist: &BlochDistribution) -> Vec<(f64, [f64; 4])> {
        if let DistKind::Point = dist.kind() {
            return vec![(1.0, [1.0, 0.0, 0.0, 1.0])];
        }
        let w_max = match dist.kind() {
            DistKind::VonMisesFisher { kappa } => dist.offset_support().min(50.0 / kappa),
            _ => dist.offset_support(),
        };
        let (x, wt) = gauss_legendre(self.order);
        let h = w_max / self.panels as f64;
        let mut out = Vec::with_capacity(self.panels * self.order * 6);
        // total weight of the truncated density, so the node weights sum to 1
        let mut norm = 0.0;
        for p in 0..self.panels {
            let a = p as f64 * h;
            for (xi, wi) in x.iter().zip(&wt) {
                let w = a + 0.5 * h * (xi + 1.0);
                let weight = 0.5 * h * wi * dist.offset_density(w).unwrap_or(0.0);
                norm += weight;
                let t = 1.0 - w;
                let s = libm::sqrt((w * (2.0 - w)).max(0.0));
                for j in 0..6 {
                    let phi = core::f64::consts::PI * j as f64 / 3.0;
                    out.push((weight / 6.0, [1.0, s * cos(phi), s * sin(phi), t]));
                }
            }
        }
        out.iter_mut().for_each(|(w, _)| *w /= norm);
        out
    }

    fn moments(&self, dist: &BlochDistribution) -> LocalMoments {
        let mut m2 = [0.0; 16];
        let mut m4 = [0.0; 256];
        for (w, c) in self.nodes(dist) {
            for j in 0..4 {
                for k in 0..4 {
                    let jk = w * c[j] * c[k];
                    m2[4 * j + k] += jk;
                    for l in 0..4 {
                        let jkl = jk * c[l];
                        for m in 0..4 {
                            m4[64 * j + 16 * k + 4 * l + m] += jkl * c[m];
                        }
                    }
                }
            }
        }
        LocalMoments { m2, m4 }
    }

    /// Mean and variance of the two-qubit fidelity for product states drawn
    /// from `dists[0]` and `dists[1]`.
    pub fn two_qubit_stats(&self, chi2: &ProcessMatrix, dists: [&BlochDistribution; 2]) -> Result<FidelityStats> {
        require_qubits(chi2, 2)?;
        let u = kron(&dists[0].frame().su2(), &dists[1].frame().su2());
        let z = chi2.conjugate_rotation(&u)?;
        let r = z.transfer_matrix();
        let a = self.moments(dists[0]);
        let b = self.moments(dists[1]);
        // pair index J = 4 j1 + j2
        let split = |j: usize| (j >> 2, j & 3);
        let mut mean = 0.0;
        for jj in 0..16 {
            let (j1, j2) = split(jj);
            for kk in 0..16 {
                let (k1, k2) = split(kk);
                mean += r[16 * jj + kk] * a.m2[4 * j1 + k1] * b.m2[4 * j2 + k2];
            }
        }
        mean *= 0.25;
        let mut second = 0.0;
        for jj in 0..16 {
            let (j1, j2) = split(jj);
            for kk in 0..16 {
                let rjk = r[16 * jj + kk];
                if rjk == 0.0 {
                    continue;
                }
                let (k1, k2) = split(kk);
                for ll in 0..16 {
                    let (l1, l2) = split(ll);
                    for mm in 0..16 {
                        let rlm = r[16 * ll + mm];
                        if rlm == 0.0 {
                            continue;
                        }
                        let (m1, m2) = split(mm);
                        second += rjk
                            * rlm
                            * a.m4[64 * j1 + 16 * k1 + 4 * l1 + m1]
                            * b.m4[64 * j2 + 16 * k2 + 4 * l2 + m2];
                    }
                }
            }
        }
        second /= 16.0;
        let var = second - mean * mean;
        FidelityStats::new(mean, if fabs(var) < 1e-15 { 0.0 } else { var }, 0.0, Provenance::Quadrature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{extremal_restricted, PauliChannel, RestrictedChi, Sense};
    use core::f64::consts::PI;

    fn ext(s: Sense) -> ProcessMatrix {
        extremal_restricted(0.985, s).unwrap().embed()
    }

    #[test]
    fn single_state_examples() {
        let id = ProcessMatrix::identity(1).unwrap();
        let v = BlochVector::from_angles(0.7, 2.0);
        assert!((single_state_fidelity(&id, &v).unwrap() - 1.0).abs() < 1e-15);
        let dep = ProcessMatrix::depolarizing(1, 0.985).unwrap();
        assert!((single_state_fidelity(&dep, &v).unwrap() - 0.99).abs() < 1e-15);
        assert!((single_state_fidelity(&ext(Sense::Max), &BlochVector::PLUS_Z).unwrap() - 1.0).abs() < 1e-15);
        let min = (2.0 * 0.985f64.sqrt() - 1.0).powi(2);
        assert!((single_state_fidelity(&ext(Sense::Min), &BlochVector::PLUS_Z).unwrap() - min).abs() < 1e-15);
    }

    #[test]
    fn form_matches_matrix_path() {
        let chi = RestrictedChi::new(0.9, 0.04, 0.03, 0.03, 0.02).unwrap().embed();
        let form = FidelityForm::new(&chi);
        for (th, ph) in [(0.3, 0.1), (1.7, 4.0), (3.0, 2.2)] {
            let v = BlochVector::from_angles(th, ph);
            assert!((form.eval(&[v]) - single_state_fidelity(&chi, &v).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_values() {
        assert!((uniform_avg(&ProcessMatrix::depolarizing(1, 0.985).unwrap()) - 0.99).abs() < 1e-15);
        assert!((uniform_avg(&ProcessMatrix::depolarizing(2, 0.985).unwrap()) - 0.988).abs() < 1e-15);
        let dep = ProcessMatrix::depolarizing(1, 0.985).unwrap();
        let tf = uniform_avg_trace_form(&crate::linalg::ComplexMatrix::identity(2), &dep).unwrap();
        assert!((tf - 0.99).abs() < 1e-15);
        let x = ProcessMatrix::from_diagonal(1, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((uniform_avg_trace_form(&crate::linalg::sigma(1), &x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_at_reference_points() {
        let (mn, mx) = (ext(Sense::Min), ext(Sense::Max));
        let z = BlochVector::PLUS_Z;
        assert!((polar_cap_avg(&mn, PI / 2.0, &z).unwrap() - 0.982528).abs() < 5e-7);
        assert!((polar_cap_avg(&mx, PI / 2.0, &z).unwrap() - 0.997472).abs() < 5e-7);
        assert!((vmf_avg(&mn, 10.0, &z).unwrap() - 0.972_942_381_616).abs() < 1e-11);
        assert!((vmf_avg(&mx, 10.0, &z).unwrap() - 0.999_840_365_169).abs() < 1e-11);
        assert!((polar_cap_avg(&mn, PI, &z).unwrap() - 0.99).abs() < 1e-15);
        assert!(polar_cap_avg(&mn, 0.0, &z).is_err());
        assert!(vmf_avg(&mn, -1.0, &z).is_err());
    }

    #[test]
    fn vmf_coefficient_branches_meet() {
        for k in [0.999e-3, 1.001e-3] {
            let (a, b, c) = vmf_coefficients(k);
            let direct = (k / k.tanh() - 1.0) / (4.0 * k * k);
            assert!((a - direct).abs() < 1e-9);
            assert!((b - (0.25 - 2.0 * direct)).abs() < 1e-9);
            assert!((c - k * direct).abs() < 1e-12);
        }
        let (a, _, c) = vmf_coefficients(800.0);
        assert!(a > 0.0 && c < 0.25 && c > 0.2496);
    }

    #[test]
    fn vmf_variance_vanishes_for_flat_channels() {
        for k in [0.1, 3.0, 40.0] {
            assert!(variance_vmf(&ProcessMatrix::identity(1).unwrap(), k).unwrap().abs() < 1e-12);
            assert!(variance_vmf(&ProcessMatrix::depolarizing(1, 0.985).unwrap(), k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn vmf_variance_branches_meet() {
        let mut rng = crate::rng::RngStream::new(14, 0);
        for _ in 0..20 {
            let chi = crate::channels::random_cptp(1, 2, &mut rng).unwrap();
            let moments = vmf_variance_from_moments(&chi, 1.0);
            let expanded = variance_vmf(&chi, 1.0).unwrap();
            assert!((moments - expanded).abs() < 1e-13 * expanded.max(1e-3), "{moments} {expanded}");
            let small = BlochDistribution::von_mises_fisher(0.01).unwrap();
            let oracle = variance_quadrature_oracle(&chi, &small).unwrap().variance;
            assert!(((variance_vmf(&chi, 0.01).unwrap() - oracle) / oracle).abs() < 1e-10);
        }
        let flat = ProcessMatrix::depolarizing(1, 0.985).unwrap();
        assert!(variance_vmf(&flat, 0.012).unwrap().abs() < 1e-15);
    }

    #[test]
    fn printed_cap_variance_defect() {
        let v = printed_polar_cap_variance(&ProcessMatrix::identity(1).unwrap(), 1.0).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
        let pv = variance_polar_cap(&ProcessMatrix::identity(1).unwrap(), 1.0).unwrap();
        assert!(pv.value.abs() < 1e-14);
        assert!((pv.residual + 2.0).abs() < 1e-12);
        assert_eq!(variance_polar_cap(&ext(Sense::Min), 1e-4).unwrap().value, 0.0);
    }

    #[test]
    fn oracle_reference_values() {
        let mn = ext(Sense::Min);
        let s = variance_quadrature_oracle(&mn, &BlochDistribution::von_mises_fisher(10.0).unwrap()).unwrap();
        assert!((s.mean - 0.9729423816).abs() < 1e-9);
        let v = variance_vmf(&mn, 10.0).unwrap();
        assert!(((v - s.variance) / s.variance).abs() < 1e-8, "{v} {}", s.variance);
        let s = variance_quadrature_oracle(&mn, &BlochDistribution::polar_cap(PI / 2.0).unwrap()).unwrap();
        assert!((s.mean - 0.98252834).abs() < 1e-8);
        assert!((s.variance - 4.1963e-5).abs() < 1e-9);
        let u = variance_quadrature_oracle(&mn, &BlochDistribution::uniform()).unwrap();
        assert!((u.mean - 0.99).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_local_uniform_examples() {
        let id = ProcessMatrix::identity(2).unwrap();
        assert!((two_qubit_uniform_local(&id).unwrap() - 1.0).abs() < 1e-15);
        let mut d = [0.0; 16];
        d[0] = 0.985;
        d[3] = 0.015;
        let a = ProcessMatrix::from_diagonal(2, &d).unwrap();
        assert!((two_qubit_uniform_local(&a).unwrap() - 0.99).abs() < 1e-15);
        d[3] = 0.0;
        d[5] = 0.015;
        let b = ProcessMatrix::from_diagonal(2, &d).unwrap();
        assert!((two_qubit_uniform_local(&b).unwrap() - 8.88 / 9.0).abs() < 1e-15);
        assert!(two_qubit_uniform_local(&ProcessMatrix::identity(1).unwrap()).is_err());
    }

    #[test]
    fn tensor_quadrature_reproduces_local_uniform() {
        let mut d = [0.001; 16];
        d[0] = 0.985;
        let s: f64 = d[1..].iter().sum();
        d[1..].iter_mut().for_each(|x| *x *= 0.015 / s);
        let chi = ProcessMatrix::from_diagonal(2, &d).unwrap();
        let u = BlochDistribution::uniform();
        let st = TensorQuadrature::default().two_qubit_stats(&chi, [&u, &u]).unwrap();
        assert!((st.mean - two_qubit_uniform_local(&chi).unwrap()).abs() < 1e-13);
        let id = ProcessMatrix::identity(2).unwrap();
        let st = TensorQuadrature::default().two_qubit_stats(&id, [&u, &u]).unwrap();
        assert!((st.mean - 1.0).abs() < 1e-13 && st.variance < 1e-14);
    }

    #[test]
    fn pauli_centers_follow_permutation() {
        let p = PauliChannel::new([0.985, 0.012, 0.002, 0.001]).unwrap().to_process();
        // +x center: indices 1 and 3 exchange roles
        let px = ProcessMatrix::from_diagonal(1, &[0.985, 0.001, 0.002, 0.012]).unwrap();
        for th in [0.3, 1.0, 2.5] {
            let a = polar_cap_avg(&p, th, &BlochVector::PLUS_X).unwrap();
            let b = polar_cap_avg(&px, th, &BlochVector::PLUS_Z).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stats_clamping() {
        assert_eq!(FidelityStats::new(1.0 + 1e-13, -1e-13, 0.0, Provenance::Analytic).unwrap().mean, 1.0);
        assert!(FidelityStats::new(1.1, 0.0, 0.0, Provenance::Analytic).is_err());
        assert!(FidelityStats::new(0.5, -1e-6, 0.0, Provenance::Analytic).is_err());
    }
}
