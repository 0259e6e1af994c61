//! Pointwise monopole geometry.
//!
//! The monopole sits at the origin with field `B(x) = x / (2‖x‖³)`, so the total
//! flux through any closed surface around it is `2π`. Everything here is a
//! pure function of points in `ℝ³ ∖ {0}`.

use std::f64::consts::PI;
use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::{qexp, ImaginaryUnit, Quaternion};

/// Transport is refused when the segment `x → x+a` passes closer than this
/// fraction of `max(‖x‖, ‖x+a‖)` to the origin.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-9;

/// Relative size of `v₁·(v₂×v₃)` below which a triangle is treated as coplanar
/// with the origin.
const COPLANAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Self = Self([0.0; 3]);

    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self([x1, x2, x3])
    }

    /// Unit vector along axis `i ∈ 0..3`.
    pub fn axis(i: usize) -> Self {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// `v · e` as a pure quaternion.
    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::pure(self.0)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// Oriented flat triangle; its normal follows the right-hand rule on the
/// vertex order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle(pub [Vec3; 3]);

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Self([a, b, c])
    }

    pub fn reversed(self) -> Self {
        Self([self.0[0], self.0[2], self.0[1]])
    }
}

/// Curvature components at a point: `omega[r][i][j] = Ω^r_{ij}` and
/// `kappa[i][j] = κ_{ij}`, both antisymmetric in `i, j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub point: Vec3,
    pub omega: [[[f64; 3]; 3]; 3],
    pub kappa: [[f64; 3]; 3],
}

fn nonzero(x: Vec3, what: &'static str) -> Result<f64> {
    let r = x.norm();
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Domain { what, at: x })
    }
}

pub(crate) fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (2, 1, 0) | (1, 0, 2) | (0, 2, 1) => -1.0,
        _ => 0.0,
    }
}

/// `j(x) = e·x / ‖x‖`.
pub fn dirq(x: Vec3) -> Result<ImaginaryUnit> {
    let r = nonzero(x, "direction quaternion at the monopole")?;
    Ok(ImaginaryUnit::new([x[0] / r, x[1] / r, x[2] / r]).expect("nonzero direction"))
}

/// Monopole field `x / (2‖x‖³)`.
pub fn bfield(x: Vec3) -> Result<Vec3> {
    let r = nonzero(x, "magnetic field at the monopole")?;
    Ok(x * (0.5 / (r * r * r)))
}

/// Connection term of the covariant derivative, `½ e·(u×x) / ‖x‖²`.
pub fn connection(u: Vec3, x: Vec3) -> Result<Quaternion> {
    let r = nonzero(x, "connection at the monopole")?;
    Ok(u.cross(x).to_quaternion() * (0.5 / (r * r)))
}

/// Distance from the origin to the closed segment `x → x+a`.
pub fn segment_clearance(a: Vec3, x: Vec3) -> f64 {
    let aa = a.norm_sqr();
    if aa == 0.0 {
        return x.norm();
    }
    let t = (-x.dot(a) / aa).clamp(0.0, 1.0);
    (x + a * t).norm()
}

/// Checks that the straight path from `x` to `x+a` stays clear of the monopole.
pub fn check_admissible(a: Vec3, x: Vec3) -> Result<()> {
    let scale = x.norm().max((x + a).norm());
    let clearance = segment_clearance(a, x);
    if !(clearance > ADMISSIBILITY_MARGIN * scale) || !(scale > 0.0) {
        return Err(Error::Domain { what: "transport segment through the monopole", at: x });
    }
    Ok(())
}

/// Transport cocycle `w(a; x)`: the unit quaternion rotating the direction of
/// `x` onto the direction of `x + a` about the axis `x × a`.
///
/// Equal to `√((1+c)/2) + j(x×a) √((1−c)/2)` with
/// `c = (‖x‖² + a·x)/(‖x‖‖x+a‖)`, evaluated through the half-angle form
/// `(1 + x̂·ŷ, x̂×ŷ)/‖·‖` so that small angles keep full relative precision.
pub fn transport(a: Vec3, x: Vec3) -> Result<Quaternion> {
    check_admissible(a, x)?;
    if x.cross(a) == Vec3::ZERO {
        // collinear and admissible, hence pointing away from the origin
        return Ok(Quaternion::E0);
    }
    let y = x + a;
    let xh = x * (1.0 / x.norm());
    let yh = y * (1.0 / y.norm());
    let q = Quaternion::new(1.0 + xh.dot(yh), 0.0, 0.0, 0.0) + xh.cross(yh).to_quaternion();
    Ok(q / q.norm())
}

/// Which radicand to use in the closed cosine form of the cocycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportForm {
    /// `√((1+c)/2) + j(x×a)√((1−c)/2)`: unit norm.
    Corrected,
    /// Second radicand built from `‖x‖² − a·x`. Kept as a negative control:
    /// it is not unit norm whenever `a·x ≠ 0`.
    Uncorrected,
}

/// Cocycle evaluated directly from the cosine formula in the chosen form.
pub fn transport_cosine_form(form: TransportForm, a: Vec3, x: Vec3) -> Result<Quaternion> {
    check_admissible(a, x)?;
    let y = x + a;
    let denom = x.norm() * y.norm();
    let c = (x.norm_sqr() + a.dot(x)) / denom;
    let c2 = match form {
        TransportForm::Corrected => c,
        TransportForm::Uncorrected => (x.norm_sqr() - a.dot(x)) / denom,
    };
    let first = ((1.0 + c) / 2.0).max(0.0).sqrt();
    let second = ((1.0 - c2) / 2.0).max(0.0).sqrt();
    let axis = x.cross(a);
    if axis.norm() == 0.0 {
        return Ok(Quaternion::real(first));
    }
    let j = ImaginaryUnit::new(axis.0).expect("nonzero axis").quaternion();
    Ok(Quaternion::real(first) + j * second)
}

/// Dispatches between the production cocycle and the cosine forms.
pub fn transport_with(form: TransportForm, a: Vec3, x: Vec3) -> Result<Quaternion> {
    match form {
        TransportForm::Corrected => transport(a, x),
        TransportForm::Uncorrected => transport_cosine_form(form, a, x),
    }
}

/// Signed solid angle subtended at the origin by the oriented triangle
/// (Van Oosterom–Strackee).
pub fn solid_angle(t: &Triangle) -> Result<f64> {
    let [v1, v2, v3] = t.0;
    let (n1, n2, n3) = (v1.norm(), v2.norm(), v3.norm());
    for (v, n) in [(v1, n1), (v2, n2), (v3, n3)] {
        if !(n > 0.0) {
            return Err(Error::Domain { what: "triangle vertex at the monopole", at: v });
        }
    }
    let det = v1.dot(v2.cross(v3));
    let den = n1 * n2 * n3 + v1.dot(v2) * n3 + v1.dot(v3) * n2 + v2.dot(v3) * n1;
    let scale = n1 * n2 * n3;
    if det.abs() <= COPLANAR_TOL * scale && den <= COPLANAR_TOL * scale {
        return Err(Error::Domain { what: "monopole on the triangle surface", at: v1 });
    }
    Ok(2.0 * det.atan2(den))
}

/// Flux of the monopole field through the oriented flat triangle: half its
/// solid angle.
pub fn triflux(t: &Triangle) -> Result<f64> {
    Ok(0.5 * solid_angle(t)?)
}

/// Vertices `(x, x+a, x+a+b, x+a+b+c)` of the edge-path tetrahedron.
pub fn tetra_vertices(x: Vec3, a: Vec3, b: Vec3, c: Vec3) -> [Vec3; 4] {
    let p1 = x + a;
    let p2 = p1 + b;
    [x, p1, p2, p2 + c]
}

/// Total outward flux through the tetrahedron with vertices
/// `(x, x+a, x+a+b, x+a+b+c)`: `2π` with the monopole inside, `0` outside.
pub fn tetraflux(x: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Result<f64> {
    let [p0, p1, p2, p3] = tetra_vertices(x, a, b, c);
    let vol = (p1 - p0).dot((p2 - p0).cross(p3 - p0));
    let mut faces = [
        Triangle::new(p1, p2, p3),
        Triangle::new(p0, p3, p2),
        Triangle::new(p0, p1, p3),
        Triangle::new(p0, p2, p1),
    ];
    if vol < 0.0 {
        for f in faces.iter_mut() {
            *f = f.reversed();
        }
    }
    let mut total = 0.0;
    for f in &faces {
        total += triflux(f)?;
    }
    Ok(total)
}

/// The triangle whose flux gives `m(a,b;x)`: the path `x → x+b → x+a+b`
/// traced by `U(a)U(b)`, closed back to `x`.
pub fn multiplier_triangle(a: Vec3, b: Vec3, x: Vec3) -> Triangle {
    Triangle::new(x, x + b, x + a + b)
}

/// `m(a,b;x) = w(a+b;x)* w(a;x+b) w(b;x)`.
pub fn multiplier(a: Vec3, b: Vec3, x: Vec3) -> Result<Quaternion> {
    multiplier_with(TransportForm::Corrected, a, b, x)
}

pub fn multiplier_with(form: TransportForm, a: Vec3, b: Vec3, x: Vec3) -> Result<Quaternion> {
    let back = transport_with(form, a + b, x)?.conj();
    Ok(back * transport_with(form, a, x + b)? * transport_with(form, b, x)?)
}

/// `exp(j(x) Φ)` with `Φ` the flux through [`multiplier_triangle`].
pub fn multiplier_from_flux(a: Vec3, b: Vec3, x: Vec3) -> Result<Quaternion> {
    let phi = triflux(&multiplier_triangle(a, b, x))?;
    Ok(qexp(dirq(x)?.quaternion() * phi))
}

pub fn curvature(x: Vec3) -> Result<CurvatureSample> {
    let r = nonzero(x, "curvature at the monopole")?;
    let r3 = r * r * r;
    let mut kappa = [[0.0; 3]; 3];
    let mut omega = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut k_ij = 0.0;
            for k in 0..3 {
                k_ij += -0.5 * levi_civita(i, j, k) * x[k] / r3;
            }
            kappa[i][j] = k_ij;
            for (rr, om) in omega.iter_mut().enumerate() {
                om[i][j] = k_ij * x[rr] / r;
            }
        }
    }
    Ok(CurvatureSample { point: x, omega, kappa })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Outward,
    Inward,
}

/// Chern integral over the unit sphere with the outward orientation.
pub fn chern(n_theta: usize, n_phi: usize) -> Result<f64> {
    chern_on_sphere(1.0, Orientation::Outward, n_theta, n_phi)
}

/// Integral of `iF` over a sphere of the given radius, where the curvature of
/// the reduced connection is `F = κ J` and `J` acts as `i` on the slice; so
/// the integrand is the pullback of `−κ`. The result is `2π` for the outward
/// orientation.
///
/// Quadrature: composite Simpson in the polar angle (`n_theta` intervals, must
/// be even) and the midpoint rule in the periodic azimuth.
pub fn chern_on_sphere(radius: f64, orientation: Orientation, n_theta: usize, n_phi: usize) -> Result<f64> {
    if n_theta < 8 || n_phi < 8 {
        return Err(Error::Usage(format!("chern grid must be at least 8×8, got {n_theta}×{n_phi}")));
    }
    if n_theta % 2 != 0 {
        return Err(Error::Usage(format!("Simpson rule needs an even polar count, got {n_theta}")));
    }
    if !(radius > 0.0) {
        return Err(Error::Usage(format!("sphere radius must be positive, got {radius}")));
    }
    let dt = PI / n_theta as f64;
    let dp = 2.0 * PI / n_phi as f64;
    let mut total = 0.0;
    for it in 0..=n_theta {
        let theta = it as f64 * dt;
        let w = if it == 0 || it == n_theta {
            1.0
        } else if it % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let (st, ct) = theta.sin_cos();
        let mut ring = 0.0;
        for ip in 0..n_phi {
            let phi = (ip as f64 + 0.5) * dp;
            let (sp, cp) = phi.sin_cos();
            let x = Vec3::new(radius * st * cp, radius * st * sp, radius * ct);
            let d_theta = [radius * ct * cp, radius * ct * sp, -radius * st];
            let d_phi = [-radius * st * sp, radius * st * cp, 0.0];
            let k = curvature(x)?.kappa;
            let mut pull = 0.0;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    pull += k[i][j] * (d_theta[i] * d_phi[j] - d_theta[j] * d_phi[i]);
                }
            }
            ring += -pull;
        }
        total += w * ring;
    }
    let value = total * dt / 3.0 * dp;
    Ok(match orientation {
        Orientation::Outward => value,
        Orientation::Inward => -value,
    })
}
