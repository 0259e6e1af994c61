//! Real quaternions, their 2×2 complex matrix image, inner automorphisms and
//! the complex slices `ℂ_ω = {u + vω}`.
//!
//! Components are stored as `q0 e₀ + q1 e₁ + q2 e₂ + q3 e₃` with
//! `eᵢeⱼ = −δᵢⱼ e₀ + εᵢⱼₖ eₖ`.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this size of the imaginary part `qexp` switches to the series for
/// `sin‖v‖/‖v‖`.
const QEXP_SERIES_CUTOFF: f64 = 1e-6;

/// Tolerance on `‖ω‖ − 1` accepted by [`auto`].
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const E0: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const E1: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const E2: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const E3: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self { q0, q1, q2, q3 }
    }

    /// `r e₀`.
    pub const fn real(r: f64) -> Self {
        Self::new(r, 0.0, 0.0, 0.0)
    }

    /// `v · e = v₁e₁ + v₂e₂ + v₃e₃`.
    pub const fn pure(v: [f64; 3]) -> Self {
        Self::new(0.0, v[0], v[1], v[2])
    }

    /// Basis element `e_μ`, μ ∈ 0..4.
    pub fn basis(mu: usize) -> Self {
        let mut c = [0.0; 4];
        c[mu] = 1.0;
        Self::from_array(c)
    }

    pub const fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.q0, self.q1, self.q2, self.q3]
    }

    /// Imaginary (vector) part as a 3-array.
    pub const fn vector(self) -> [f64; 3] {
        [self.q1, self.q2, self.q3]
    }

    pub fn conj(self) -> Self {
        Self::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    pub fn norm_sqr(self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inverse(self) -> Self {
        self.conj() / self.norm_sqr()
    }

    /// Largest absolute component; the metric used by most deviation checks.
    pub fn max_abs(self) -> f64 {
        self.q0.abs().max(self.q1.abs()).max(self.q2.abs()).max(self.q3.abs())
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Quaternion exponential, `e^r (cos‖v‖ + v̂ sin‖v‖)` for `q = r + v`.
    pub fn exp(self) -> Self {
        qexp(self)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.q0 * s, self.q1 * s, self.q2 * s, self.q3 * s)
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(self.q0 + r.q0, self.q1 + r.q1, self.q2 + r.q2, self.q3 + r.q3)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, r: Self) {
        *self = *self + r;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        Self::new(self.q0 - r.q0, self.q1 - r.q1, self.q2 - r.q2, self.q3 - r.q3)
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, r: Self) {
        *self = *self - r;
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.q0, -self.q1, -self.q2, -self.q3)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, r: Self) -> Self {
        mul(self, r)
    }
}

impl MulAssign for Quaternion {
    fn mul_assign(&mut self, r: Self) {
        *self = *self * r;
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl Div<f64> for Quaternion {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        self.scale(1.0 / s)
    }
}

/// Hamilton product.
pub fn mul(p: Quaternion, q: Quaternion) -> Quaternion {
    let (a, b, c, d) = (p.q0, p.q1, p.q2, p.q3);
    let (e, f, g, h) = (q.q0, q.q1, q.q2, q.q3);
    Quaternion::new(
        a * e - b * f - c * g - d * h,
        a * f + b * e + c * h - d * g,
        a * g - b * h + c * e + d * f,
        a * h + b * g - c * f + d * e,
    )
}

pub fn conj(q: Quaternion) -> Quaternion {
    q.conj()
}

pub fn norm(q: Quaternion) -> f64 {
    q.norm()
}

pub fn qexp(q: Quaternion) -> Quaternion {
    let v = q.vector();
    let theta = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let sinc = if theta < QEXP_SERIES_CUTOFF {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    };
    let er = q.q0.exp();
    Quaternion::new(
        er * theta.cos(),
        er * sinc * v[0],
        er * sinc * v[1],
        er * sinc * v[2],
    )
}

/// Inner automorphism `q ↦ ω* q ω` for a unit quaternion ω.
pub fn auto(omega: Quaternion, q: Quaternion) -> Result<Quaternion> {
    let n = omega.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { norm: n });
    }
    Ok(omega.conj() * q * omega)
}

/// A unit quaternion with vanishing real part, so that `ω* = −ω` and `ω² = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ImaginaryUnit(Quaternion);

impl ImaginaryUnit {
    pub const E1: Self = Self(Quaternion::E1);
    pub const E2: Self = Self(Quaternion::E2);
    pub const E3: Self = Self(Quaternion::E3);

    /// Normalizes `v · e`; directions shorter than 1e-12 are rejected.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n >= 1e-12) {
            return Err(Error::DegenerateDirection { norm: n });
        }
        Ok(Self(Quaternion::pure([v[0] / n, v[1] / n, v[2] / n])))
    }

    pub fn quaternion(self) -> Quaternion {
        self.0
    }

    pub fn direction(self) -> [f64; 3] {
        self.0.vector()
    }

    /// `u + vω ∈ ℂ_ω`.
    pub fn complex(self, u: f64, v: f64) -> Quaternion {
        Quaternion::real(u) + self.0 * v
    }

    /// `exp(θω) = cos θ + ω sin θ`.
    pub fn phase(self, theta: f64) -> Quaternion {
        self.complex(theta.cos(), theta.sin())
    }

    /// Splits `q` into its `ℂ_ω` part and the remainder orthogonal to it.
    pub fn slice_parts(self, q: Quaternion) -> (Quaternion, Quaternion) {
        let w = self.0.vector();
        let v = q.vector();
        let along = v[0] * w[0] + v[1] * w[1] + v[2] * w[2];
        let inside = self.complex(q.q0, along);
        (inside, q - inside)
    }

    /// True when `q ∈ ℂ_ω` up to `tol` in every component.
    pub fn contains(self, q: Quaternion, tol: f64) -> bool {
        self.slice_parts(q).1.max_abs() <= tol
    }
}

impl From<ImaginaryUnit> for Quaternion {
    fn from(w: ImaginaryUnit) -> Self {
        w.0
    }
}

impl From<ImaginaryUnit> for [f64; 3] {
    fn from(w: ImaginaryUnit) -> Self {
        w.direction()
    }
}

impl TryFrom<[f64; 3]> for ImaginaryUnit {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v)
    }
}

/// 2×2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2C(pub [[Complex64; 2]; 2]);

impl Mat2C {
    pub fn identity() -> Self {
        let o = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Self([[o, z], [z, o]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_dev(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        d
    }
}

impl Mul for Mat2C {
    type Output = Self;
    fn mul(self, r: Self) -> Self {
        let a = &self.0;
        let b = &r.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }
}

/// Real-linear embedding with `e₀ ↦ I` and `e_k ↦ −iσ_k`.
pub fn su2(q: Quaternion) -> Mat2C {
    let c = Complex64::new;
    Mat2C([
        [c(q.q0, -q.q3), c(-q.q2, -q.q1)],
        [c(q.q2, -q.q1), c(q.q0, q.q3)],
    ])
}
