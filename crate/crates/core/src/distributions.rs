//! Distributions of pure single-qubit states on the Bloch sphere.
//!
//! Every distribution is rotationally symmetric about its center `μ`, so it is
//! described by the law of `t = μ·x` (equivalently the polar angle `θ` about
//! `μ`) together with a uniform azimuth. Sampling works in the frame where the
//! center is `+ẑ` and then rotates `+ẑ` onto `μ`.

use core::f64::consts::PI;

use libm::{atan2, cos, exp, expm1, fabs, log, log1p, sin, sqrt, tanh};

use crate::linalg::{ComplexMatrix, C64};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Tolerance on `|v|² - 1` accepted for caller-supplied unit vectors.
pub const UNIT_TOL: f64 = 1e-10;

/// Real 3-vector of Pauli expectation values; unit norm for pure states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const PLUS_X: Self = Self::new(1.0, 0.0, 0.0);
    pub const MINUS_X: Self = Self::new(-1.0, 0.0, 0.0);
    pub const PLUS_Y: Self = Self::new(0.0, 1.0, 0.0);
    pub const MINUS_Y: Self = Self::new(0.0, -1.0, 0.0);
    pub const PLUS_Z: Self = Self::new(0.0, 0.0, 1.0);
    pub const MINUS_Z: Self = Self::new(0.0, 0.0, -1.0);

    /// The six eigenstates of the Pauli operators.
    pub const AXES: [Self; 6] = [Self::PLUS_X, Self::MINUS_X, Self::PLUS_Y, Self::MINUS_Y, Self::PLUS_Z, Self::MINUS_Z];

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit vector with polar angle `theta` from `+ẑ` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let s = sin(theta);
        Self::new(s * cos(phi), s * sin(phi), cos(theta))
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = sqrt(x * x + y * y + z * z);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotUnitVector { norm: n });
        }
        Ok(Self::new(x / n, y / n, z / n))
    }

    /// Accepts `v` if it is unit within [`UNIT_TOL`] and removes the residual.
    pub fn checked_unit(self) -> Result<Self> {
        let n2 = self.norm_squared();
        if !(fabs(n2 - 1.0) <= UNIT_TOL) {
            return Err(Error::NotUnitVector { norm: sqrt(n2) });
        }
        Self::normalized(self.x, self.y, self.z)
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Density matrix `(I + v·σ)/2`.
    pub fn density_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5 * (1.0 + self.z), 0.0);
        m[(1, 1)] = C64::new(0.5 * (1.0 - self.z), 0.0);
        m[(0, 1)] = C64::new(0.5 * self.x, -0.5 * self.y);
        m[(1, 0)] = C64::new(0.5 * self.x, 0.5 * self.y);
        m
    }
}

/// Proper rotation of the Bloch sphere, kept both as an SO(3) matrix and as
/// an axis-angle pair for the corresponding SU(2) unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    axis: [f64; 3],
    angle: f64,
    matrix: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Self::about_axis([0.0, 0.0, 1.0], 0.0)
    }

    /// Right-handed rotation by `angle` about the unit `axis`.
    pub fn about_axis(axis: [f64; 3], angle: f64) -> Self {
        let [x, y, z] = axis;
        let (s, c) = (sin(angle), cos(angle));
        let t = 1.0 - c;
        let matrix = [
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ];
        Self { axis, angle, matrix }
    }

    /// The rotation about `ẑ × μ` that takes `+ẑ` to `μ`. For `μ = -ẑ` the
    /// axis is `x̂` (angle π).
    pub fn z_to(mu: &BlochVector) -> Self {
        let rho = sqrt(mu.x * mu.x + mu.y * mu.y);
        if rho == 0.0 {
            return if mu.z >= 0.0 { Self::identity() } else { Self::about_axis([1.0, 0.0, 0.0], PI) };
        }
        Self::about_axis([-mu.y / rho, mu.x / rho, 0.0], atan2(rho, mu.z))
    }

    pub fn is_identity(&self) -> bool {
        self.angle == 0.0
    }

    pub fn inverse(&self) -> Self {
        Self::about_axis(self.axis, -self.angle)
    }

    pub fn apply(&self, v: &BlochVector) -> BlochVector {
        let m = &self.matrix;
        BlochVector::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// `U = cos(α/2) I - i sin(α/2) n·σ`, which satisfies `U (v·σ) U† = (Rv)·σ`.
    pub fn su2(&self) -> ComplexMatrix {
        let (s, c) = (sin(0.5 * self.angle), cos(0.5 * self.angle));
        let [x, y, z] = self.axis;
        let mut u = ComplexMatrix::zeros(2, 2);
        u[(0, 0)] = C64::new(c, -s * z);
        u[(0, 1)] = C64::new(-s * y, -s * x);
        u[(1, 0)] = C64::new(s * y, -s * x);
        u[(1, 1)] = C64::new(c, s * z);
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    Uniform,
    /// Uniform over the cap of polar angle `θ ≤ theta_max` about the center.
    PolarCap { theta_max: f64 },
    /// Density `κ/(4π sinh κ) · exp(κ μ·x)`.
    VonMisesFisher { kappa: f64 },
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochDistribution {
    kind: DistKind,
    center: BlochVector,
}

impl BlochDistribution {
    pub fn uniform() -> Self {
        Self { kind: DistKind::Uniform, center: BlochVector::PLUS_Z }
    }

    pub fn polar_cap(theta_max: f64) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max <= PI) {
            return Err(Error::OutOfRange { what: "polar cap angle", value: theta_max });
        }
        Ok(Self { kind: DistKind::PolarCap { theta_max }, center: BlochVector::PLUS_Z })
    }

    pub fn von_mises_fisher(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::OutOfRange { what: "concentration kappa", value: kappa });
        }
        Ok(Self { kind: DistKind::VonMisesFisher { kappa }, center: BlochVector::PLUS_Z })
    }

    pub fn point(center: BlochVector) -> Result<Self> {
        Self { kind: DistKind::Point, center: BlochVector::PLUS_Z }.recenter(center)
    }

    #[inline]
    pub fn kind(&self) -> DistKind {
        self.kind
    }

    #[inline]
    pub fn center(&self) -> BlochVector {
        self.center
    }

    /// Same shape about a new center.
    pub fn recenter(&self, mu: BlochVector) -> Result<Self> {
        Ok(Self { kind: self.kind, center: mu.checked_unit()? })
    }

    /// Rotation taking `+ẑ` to this distribution's center.
    pub fn frame(&self) -> Rotation {
        Rotation::z_to(&self.center)
    }

    /// Draws `(1 - cos θ, φ)` in the frame centered on `+ẑ`.
    fn sample_offset(&self, rng: &mut RngStream) -> (f64, f64) {
        let w = match self.kind {
            DistKind::Uniform => 2.0 * rng.uniform(),
            DistKind::PolarCap { theta_max } => {
                let h = sin(0.5 * theta_max);
                2.0 * h * h * rng.uniform()
            }
            DistKind::VonMisesFisher { kappa } => {
                // inverse CDF of t: t = 1 + ln(1 - u (1 - e^{-2κ})) / κ
                let u = rng.uniform();
                (-log1p(u * expm1(-2.0 * kappa)) / kappa).min(2.0)
            }
            DistKind::Point => return (0.0, 0.0),
        };
        (w, 2.0 * PI * rng.uniform())
    }

    /// One state drawn from the distribution.
    pub fn sample(&self, rng: &mut RngStream) -> BlochVector {
        if let DistKind::Point = self.kind {
            return self.center;
        }
        let (w, phi) = self.sample_offset(rng);
        let s = sqrt((w * (2.0 - w)).max(0.0));
        let v = BlochVector::new(s * cos(phi), s * sin(phi), 1.0 - w);
        let r = self.frame();
        if r.is_identity() {
            v
        } else {
            r.apply(&v)
        }
    }

    /// Log of the surface density with respect to solid angle.
    pub fn log_pdf(&self, v: &BlochVector) -> Result<f64> {
        let v = v.checked_unit()?;
        let w = 1.0 - self.center.dot(&v);
        match self.kind {
            DistKind::Uniform => Ok(-log(4.0 * PI)),
            DistKind::PolarCap { theta_max } => {
                let h = sin(0.5 * theta_max);
                let w_max = 2.0 * h * h;
                if w <= w_max + 1e-12 {
                    Ok(-log(2.0 * PI * w_max))
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            DistKind::VonMisesFisher { kappa } => {
                Ok(-kappa * w + log(kappa) - log(2.0 * PI * -expm1(-2.0 * kappa)))
            }
            DistKind::Point => Err(Error::PointHasNoDensity),
        }
    }

    /// Density of `1 - t` (`t = μ·x`) on `[0, 2]`; zero outside the support.
    pub fn offset_density(&self, w: f64) -> Result<f64> {
        if !(0.0..=2.0).contains(&w) {
            return Ok(0.0);
        }
        match self.kind {
            DistKind::Uniform => Ok(0.5),
            DistKind::PolarCap { theta_max } => {
                let h = sin(0.5 * theta_max);
                let w_max = 2.0 * h * h;
                Ok(if w <= w_max { 1.0 / w_max } else { 0.0 })
            }
            DistKind::VonMisesFisher { kappa } => Ok(kappa * exp(-kappa * w) / -expm1(-2.0 * kappa)),
            DistKind::Point => Err(Error::PointHasNoDensity),
        }
    }

    /// Upper end of the support of `1 - t`.
    pub fn offset_support(&self) -> f64 {
        match self.kind {
            DistKind::PolarCap { theta_max } => {
                let h = sin(0.5 * theta_max);
                2.0 * h * h
            }
            DistKind::Point => 0.0,
            _ => 2.0,
        }
    }

    /// CDF of `t = μ·x`.
    pub fn axis_cdf(&self, t: f64) -> f64 {
        let w = 1.0 - t;
        let p = match self.kind {
            DistKind::Uniform => 0.5 * (t + 1.0),
            DistKind::PolarCap { .. } => 1.0 - w / self.offset_support(),
            DistKind::VonMisesFisher { kappa } => {
                (exp(-kappa * w) - exp(-2.0 * kappa)) / -expm1(-2.0 * kappa)
            }
            DistKind::Point => {
                if t >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        p.clamp(0.0, 1.0)
    }

    /// `E[t]` (order 1) or `E[t²]` (order 2) for `t = μ·x`.
    pub fn mean_axis_moment(&self, order: u32) -> Result<f64> {
        let m = match (self.kind, order) {
            (DistKind::Uniform, 1) => 0.0,
            (DistKind::Uniform, 2) => 1.0 / 3.0,
            (DistKind::PolarCap { theta_max }, 1) => 0.5 * (1.0 + cos(theta_max)),
            (DistKind::PolarCap { theta_max }, 2) => {
                let c = cos(theta_max);
                (1.0 + c + c * c) / 3.0
            }
            (DistKind::VonMisesFisher { kappa }, 1) => langevin(kappa),
            (DistKind::VonMisesFisher { kappa }, 2) => 1.0 - 2.0 * langevin_over_kappa(kappa),
            (DistKind::Point, 1 | 2) => 1.0,
            _ => return Err(Error::OutOfRange { what: "moment order", value: order as f64 }),
        };
        Ok(m)
    }
}

/// Langevin function `coth κ - 1/κ`, the mean resultant length of vMF on S².
pub fn langevin(kappa: f64) -> f64 {
    if kappa < 1e-3 {
        kappa * (1.0 / 3.0 - kappa * kappa / 45.0)
    } else if kappa > 700.0 {
        1.0 - 1.0 / kappa
    } else {
        1.0 / tanh(kappa) - 1.0 / kappa
    }
}

/// `(coth κ - 1/κ)/κ`, finite as `κ → 0`.
pub fn langevin_over_kappa(kappa: f64) -> f64 {
    if kappa < 1e-3 {
        let k2 = kappa * kappa;
        1.0 / 3.0 - k2 / 45.0 + 2.0 * k2 * k2 / 945.0
    } else {
        langevin(kappa) / kappa
    }
}

/// Parametrised distribution families swept by curves and heatmaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    PolarCap,
    Vmf,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::PolarCap => "polar-cap",
            Family::Vmf => "vmf",
        }
    }

    /// Member with parameter `param` (Θ in radians or κ) about `center`.
    pub fn distribution(&self, param: f64, center: BlochVector) -> Result<BlochDistribution> {
        let d = match self {
            Family::PolarCap => BlochDistribution::polar_cap(param)?,
            Family::Vmf => BlochDistribution::von_mises_fisher(param)?,
        };
        d.recenter(center)
    }

    /// `n` points: Θ linear on `(0, π]` ending at π, or κ log-spaced on `[1e-2, 1e2]`.
    pub fn default_grid(&self, n: usize) -> alloc::vec::Vec<f64> {
        match self {
            Family::PolarCap => (1..=n).map(|i| PI * i as f64 / n as f64).collect(),
            Family::Vmf => {
                if n == 1 {
                    return alloc::vec![1.0];
                }
                (0..n).map(|i| libm::pow(10.0, -2.0 + 4.0 * i as f64 / (n as f64 - 1.0))).collect()
            }
        }
    }
}
