//! Operators on quaternionic wavefunctions.
//!
//! A [`QOperator`] is an immutable expression tree over four primitive kinds
//! (pointwise left multiplier, grid-commensurate shift, central difference,
//! rigid rotation) closed under sums, real scaling and products. Products
//! apply right to left. Every node has an adjoint rule, so `A*` is built
//! structurally.
//!
//! Conventions fixed here:
//! * `V(a)ψ(x) = ψ(x − a)`, hence `V(a) E(Δ) V(a)* = E(Δ + a)`.
//! * `U(a) = V(a) W(a)` and `U(s u) = exp(−s ∇_u)`.
//! * `exp(t M_i)ψ(x) = exp(−t eᵢ/2) ψ(R_i(t) x)` with `R_i(t)` the
//!   right-handed rotation by `t` about axis `i`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, levi_civita, Vec3};
use crate::hilbert::{project, AnalyticField, BorelBox, Lattice, LatticeField, QField};
use crate::quat::{qexp, Quaternion};
use crate::report::{Check, Report};

pub type Symbol = Arc<dyn Fn(Vec3) -> Result<Quaternion> + Send + Sync>;

#[derive(Clone)]
pub enum OpKind {
    /// `ψ(x) ↦ f(x) ψ(x)`.
    Multiplier(Symbol),
    /// `ψ(x) ↦ ψ(x − a)`; zero fill on a finite lattice.
    Shift(Vec3),
    /// Central difference along an axis; step = lattice spacing, or the
    /// finite-difference step for analytic fields. Zero ghost values beyond
    /// the lattice.
    Partial(usize),
    /// `exp(angle · M_axis)`; analytic fields only.
    Rotation { axis: usize, angle: f64 },
    Sum(Vec<QOperator>),
    Scale(f64, Box<QOperator>),
    /// Applied right to left.
    Product(Vec<QOperator>),
}

#[derive(Clone)]
pub struct QOperator {
    name: String,
    kind: OpKind,
}

impl fmt::Debug for QOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QOperator({})", self.name)
    }
}

fn check_axis(i: usize) {
    assert!(i < 3, "axis index {i} out of range 0..3");
}

impl QOperator {
    pub fn new(name: impl Into<String>, kind: OpKind) -> Self {
        Self { name: name.into(), kind }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn multiplier<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(Vec3) -> Result<Quaternion> + Send + Sync + 'static,
    {
        Self::new(name, OpKind::Multiplier(Arc::new(f)))
    }

    pub fn identity() -> Self {
        Self::multiplier("I", |_| Ok(Quaternion::E0))
    }

    pub fn scale(self, s: f64) -> Self {
        let name = format!("{s}·{}", self.name);
        Self::new(name, OpKind::Scale(s, Box::new(self)))
    }

    pub fn then(self, first: QOperator) -> Self {
        product(vec![self, first])
    }

    pub fn plus(self, other: QOperator) -> Self {
        sum(vec![self, other])
    }

    pub fn minus(self, other: QOperator) -> Self {
        sum(vec![self, other.scale(-1.0)])
    }

    /// True for pointwise multipliers (possibly scaled, summed or multiplied
    /// together), i.e. members of the commutant of the spectral family.
    pub fn is_multiplier(&self) -> bool {
        match &self.kind {
            OpKind::Multiplier(_) => true,
            OpKind::Scale(_, a) => a.is_multiplier(),
            OpKind::Sum(v) | OpKind::Product(v) => v.iter().all(|a| a.is_multiplier()),
            _ => false,
        }
    }

    pub fn adjoint(&self) -> Self {
        let name = format!("({})*", self.name);
        let kind = match &self.kind {
            OpKind::Multiplier(f) => {
                let f = f.clone();
                OpKind::Multiplier(Arc::new(move |x| Ok(f(x)?.conj())))
            }
            OpKind::Shift(a) => OpKind::Shift(-*a),
            OpKind::Partial(i) => OpKind::Scale(-1.0, Box::new(partial(*i))),
            OpKind::Rotation { axis, angle } => OpKind::Rotation { axis: *axis, angle: -angle },
            OpKind::Sum(v) => OpKind::Sum(v.iter().map(|a| a.adjoint()).collect()),
            OpKind::Scale(s, a) => OpKind::Scale(*s, Box::new(a.adjoint())),
            OpKind::Product(v) => OpKind::Product(v.iter().rev().map(|a| a.adjoint()).collect()),
        };
        Self { name, kind }
    }

    /// Applies to a lattice field.
    pub fn apply(&self, psi: &LatticeField) -> Result<LatticeField> {
        match &self.kind {
            OpKind::Multiplier(f) => psi.try_map(|x, q| {
                let m = f(x)?;
                Ok(m * q)
            }),
            OpKind::Shift(a) => {
                let lat = *psi.lattice();
                let d = lat.steps_of(*a)?;
                let back = [-d[0], -d[1], -d[2]];
                let src = psi.values();
                let data = (0..lat.len())
                    .into_par_iter()
                    .map(|s| lat.offset(s, back).map_or(Quaternion::ZERO, |t| src[t]))
                    .collect();
                LatticeField::from_vec(lat, data)
            }
            OpKind::Partial(i) => Ok(central_difference(psi, *i)),
            OpKind::Rotation { .. } => Err(Error::Usage(format!(
                "{} acts on analytic fields only (rotations do not map the grid to itself)",
                self.name
            ))),
            OpKind::Sum(v) => {
                let mut acc = LatticeField::zeros(*psi.lattice());
                for a in v {
                    acc = acc.add(&a.apply(psi)?)?;
                }
                Ok(acc)
            }
            OpKind::Scale(s, a) => Ok(a.apply(psi)?.scale(*s)),
            OpKind::Product(v) => {
                let mut cur = psi.clone();
                for a in v.iter().rev() {
                    cur = a.apply(&cur)?;
                }
                Ok(cur)
            }
        }
    }

    /// Applies to an analytic field; derivatives become central differences
    /// with step `fd_step`. Multiplier symbols that fail evaluate to NaN.
    pub fn apply_analytic(&self, psi: &AnalyticField, fd_step: f64) -> AnalyticField {
        match &self.kind {
            OpKind::Multiplier(f) => {
                let (f, psi) = (f.clone(), psi.clone());
                AnalyticField::new(move |x| match f(x) {
                    Ok(m) => m * psi.eval(x),
                    Err(_) => Quaternion::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN),
                })
            }
            OpKind::Shift(a) => psi.translate(*a),
            OpKind::Partial(i) => {
                let (i, psi) = (*i, psi.clone());
                let e = Vec3::axis(i) * fd_step;
                AnalyticField::new(move |x| (psi.eval(x + e) - psi.eval(x - e)) * (0.5 / fd_step))
            }
            OpKind::Rotation { axis, angle } => {
                let (axis, angle, psi) = (*axis, *angle, psi.clone());
                let spin = qexp(Quaternion::basis(axis + 1) * (-0.5 * angle));
                AnalyticField::new(move |x| spin * psi.eval(rotate_point(axis, angle, x)))
            }
            OpKind::Sum(v) => {
                let parts: Vec<AnalyticField> = v.iter().map(|a| a.apply_analytic(psi, fd_step)).collect();
                AnalyticField::new(move |x| parts.iter().fold(Quaternion::ZERO, |acc, p| acc + p.eval(x)))
            }
            OpKind::Scale(s, a) => {
                let (s, inner) = (*s, a.apply_analytic(psi, fd_step));
                AnalyticField::new(move |x| inner.eval(x) * s)
            }
            OpKind::Product(v) => {
                let mut cur = psi.clone();
                for a in v.iter().rev() {
                    cur = a.apply_analytic(&cur, fd_step);
                }
                cur
            }
        }
    }

    /// Applies to either representation.
    pub fn apply_field(&self, psi: &QField, fd_step: f64) -> Result<QField> {
        Ok(match psi {
            QField::Lattice(l) => QField::Lattice(self.apply(l)?),
            QField::Analytic(a) => QField::Analytic(self.apply_analytic(a, fd_step)),
        })
    }

    /// Pointwise symbol of a multiplier-kind operator at `x`.
    pub fn symbol(&self, x: Vec3) -> Result<Quaternion> {
        match &self.kind {
            OpKind::Multiplier(f) => f(x),
            OpKind::Scale(s, a) => Ok(a.symbol(x)? * *s),
            OpKind::Sum(v) => v.iter().try_fold(Quaternion::ZERO, |acc, a| Ok(acc + a.symbol(x)?)),
            OpKind::Product(v) => v.iter().try_fold(Quaternion::E0, |acc, a| Ok(acc * a.symbol(x)?)),
            _ => Err(Error::Usage(format!("{} is not a pointwise multiplier", self.name))),
        }
    }
}

fn central_difference(psi: &LatticeField, axis: usize) -> LatticeField {
    let lat = *psi.lattice();
    let inv = 0.5 / lat.step();
    let mut fwd = [0isize; 3];
    fwd[axis] = 1;
    let bwd = [-fwd[0], -fwd[1], -fwd[2]];
    let src = psi.values();
    let data = (0..lat.len())
        .into_par_iter()
        .map(|s| {
            let p = lat.offset(s, fwd).map_or(Quaternion::ZERO, |t| src[t]);
            let m = lat.offset(s, bwd).map_or(Quaternion::ZERO, |t| src[t]);
            (p - m) * inv
        })
        .collect();
    LatticeField::from_vec(lat, data).expect("same lattice")
}

/// Right-handed rotation of `x` by `angle` about coordinate axis `axis`.
pub fn rotate_point(axis: usize, angle: f64, x: Vec3) -> Vec3 {
    let (s, c) = angle.sin_cos();
    let (j, k) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut out = x;
    out.0[j] = c * x[j] - s * x[k];
    out.0[k] = s * x[j] + c * x[k];
    out
}

pub fn sum(ops: Vec<QOperator>) -> QOperator {
    let name = ops.iter().map(|o| o.name.as_str()).collect::<Vec<_>>().join(" + ");
    QOperator::new(format!("({name})"), OpKind::Sum(ops))
}

pub fn product(ops: Vec<QOperator>) -> QOperator {
    let name = ops.iter().map(|o| o.name.as_str()).collect::<Vec<_>>().join("∘");
    QOperator::new(name, OpKind::Product(ops))
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &QOperator, b: &QOperator) -> QOperator {
    let name = format!("[{}, {}]", a.name, b.name);
    product(vec![a.clone(), b.clone()])
        .minus(product(vec![b.clone(), a.clone()]))
        .renamed(name)
}

/// `X_i`.
pub fn position(i: usize) -> QOperator {
    check_axis(i);
    QOperator::multiplier(format!("X{}", i + 1), move |x| Ok(Quaternion::real(x[i])))
}

/// `ê_i`: left multiplication by the imaginary unit `e_{i+1}`.
pub fn eop(i: usize) -> QOperator {
    check_axis(i);
    let e = Quaternion::basis(i + 1);
    QOperator::multiplier(format!("ê{}", i + 1), move |_| Ok(e))
}

/// `J`: left multiplication by `j(x)`.
pub fn jop() -> QOperator {
    QOperator::multiplier("J", |x| Ok(geometry::dirq(x)?.quaternion()))
}

/// `B_i`: multiplication by `x_i / (2‖x‖³)`.
pub fn bop(i: usize) -> QOperator {
    check_axis(i);
    QOperator::multiplier(format!("B{}", i + 1), move |x| Ok(Quaternion::real(geometry::bfield(x)?[i])))
}

pub fn partial(i: usize) -> QOperator {
    check_axis(i);
    QOperator::new(format!("∂{}", i + 1), OpKind::Partial(i))
}

/// `V(a)`.
pub fn vshift(a: Vec3) -> QOperator {
    QOperator::new(format!("V({:?})", a.0), OpKind::Shift(a))
}

/// `W(a)`: multiplication by the transport cocycle `w(a; x)`.
pub fn wop(a: Vec3) -> QOperator {
    QOperator::multiplier(format!("W({:?})", a.0), move |x| geometry::transport(a, x))
}

/// `U(a) = V(a) W(a)`.
pub fn uop(a: Vec3) -> QOperator {
    product(vec![vshift(a), wop(a)]).renamed(format!("U({:?})", a.0))
}

/// `M(a,b) = U(a+b)* U(a) U(b)`. On a finite lattice it acts as
/// `m(a,b;x)` on sites whose transported images stay on the grid and as zero
/// elsewhere.
pub fn compose_defect(a: Vec3, b: Vec3) -> QOperator {
    product(vec![uop(a + b).adjoint(), uop(a), uop(b)]).renamed(format!("M({:?}, {:?})", a.0, b.0))
}

/// `∇_u = u·∂ + ½ e·(u×x)/‖x‖²` with central differences.
pub fn covderiv(u: Vec3) -> QOperator {
    let mut terms: Vec<QOperator> = (0..3).filter(|&i| u[i] != 0.0).map(|i| partial(i).scale(u[i])).collect();
    terms.push(QOperator::multiplier("A_u", move |x| geometry::connection(u, x)));
    sum(terms).renamed(format!("∇{:?}", u.0))
}

/// `∇_i`.
pub fn nabla(i: usize) -> QOperator {
    check_axis(i);
    covderiv(Vec3::axis(i)).renamed(format!("∇{}", i + 1))
}

/// Covariant central difference built from twisted translations:
/// `(U(−h eᵢ) − U(h eᵢ)) / 2h`. Commutes with `J` exactly.
pub fn transport_nabla(i: usize, h: f64) -> QOperator {
    check_axis(i);
    let e = Vec3::axis(i) * h;
    uop(-e).minus(uop(e)).scale(0.5 / h).renamed(format!("∇{}ʰ", i + 1))
}

/// `Σᵢ (U(h eᵢ) + U(−h eᵢ) − 2) / h²`.
pub fn transport_laplacian(h: f64) -> QOperator {
    let mut terms = Vec::new();
    for i in 0..3 {
        let e = Vec3::axis(i) * h;
        terms.push(uop(e));
        terms.push(uop(-e));
    }
    terms.push(QOperator::identity().scale(-6.0));
    sum(terms).scale(1.0 / (h * h)).renamed("Δʰ")
}

/// `M_i = ε_ijk x_j ∂_k − ½ êᵢ`.
pub fn rotgen(i: usize) -> QOperator {
    check_axis(i);
    let mut terms = Vec::new();
    for j in 0..3 {
        for k in 0..3 {
            let eps = levi_civita(i, j, k);
            if eps != 0.0 {
                terms.push(product(vec![position(j), partial(k)]).scale(eps));
            }
        }
    }
    terms.push(eop(i).scale(-0.5));
    sum(terms).renamed(format!("M{}", i + 1))
}

/// `exp(angle · M_i)`, realized as an orbital rotation of the argument times
/// the left factor `exp(−angle eᵢ / 2)`.
pub fn rotation(i: usize, angle: f64) -> QOperator {
    check_axis(i);
    QOperator::new(format!("exp({angle}·M{})", i + 1), OpKind::Rotation { axis: i, angle })
}

/// `H = −(1/2m) Σᵢ ∇ᵢ²`.
pub fn hamiltonian(mass: f64) -> Result<QOperator> {
    if !(mass > 0.0) {
        return Err(Error::Usage(format!("mass must be positive, got {mass}")));
    }
    let terms = (0..3).map(|i| product(vec![nabla(i), nabla(i)])).collect();
    Ok(sum(terms).scale(-0.5 / mass).renamed("H"))
}

/// Deviation statistics of an operator identity at probe points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub lhs: String,
    pub rhs: String,
    pub field: String,
    pub n_points: usize,
    pub max_dev: f64,
    pub mean_dev: f64,
    pub h: f64,
}

/// Compares `lhs ψ` and `rhs ψ` at `probes`, with derivatives taken as
/// central differences of step `h`.
pub fn identity_check(
    lhs: &QOperator,
    rhs: &QOperator,
    psi: &AnalyticField,
    field: &str,
    h: f64,
    probes: &[Vec3],
) -> CommutatorReport {
    let l = lhs.apply_analytic(psi, h);
    let r = rhs.apply_analytic(psi, h);
    let devs: Vec<f64> = probes.par_iter().map(|&x| l.eval(x).dist(r.eval(x))).collect();
    let max_dev = devs.iter().copied().fold(0.0, f64::max);
    let mean_dev = if devs.is_empty() { 0.0 } else { devs.iter().sum::<f64>() / devs.len() as f64 };
    CommutatorReport {
        lhs: lhs.name.clone(),
        rhs: rhs.name.clone(),
        field: field.to_string(),
        n_points: probes.len(),
        max_dev,
        mean_dev,
        h,
    }
}

/// Right side of `[∇ᵢ, ∇ⱼ] = −½ ε_ijk x^k/‖x‖³ J`.
pub fn curvature_target(i: usize, j: usize) -> QOperator {
    check_axis(i);
    check_axis(j);
    QOperator::multiplier(format!("F{}{}", i + 1, j + 1), move |x| {
        let c = geometry::curvature(x)?;
        Ok(geometry::dirq(x)?.quaternion() * c.kappa[i][j])
    })
}

/// `[∇ᵢ, ∇ⱼ]ψ` by nested central differences against the curvature term.
pub fn commutator_check(i: usize, j: usize, psi: &AnalyticField, field: &str, h: f64, probes: &[Vec3]) -> CommutatorReport {
    identity_check(&commutator(&nabla(i), &nabla(j)), &curvature_target(i, j), psi, field, h, probes)
}

/// Points of a cubic grid inside the ball `‖x − c‖ < r`.
pub fn ball_probes(center: Vec3, radius: f64, per_axis: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
    let step = 2.0 * radius / per_axis as f64;
    for i in 0..per_axis {
        for j in 0..per_axis {
            for k in 0..per_axis {
                let p = center
                    + Vec3::new(
                        -radius + (i as f64 + 0.5) * step,
                        -radius + (j as f64 + 0.5) * step,
                        -radius + (k as f64 + 0.5) * step,
                    );
                if (p - center).norm() < radius {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Settings for [`gis_verify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GisConfig {
    pub lattice: Lattice,
    pub seed: u64,
    /// Random `(a, Δ)` pairs for covariance, and `(a, b)` pairs for the defect.
    pub samples: usize,
    /// Random tetrahedra for the flux quantization check.
    pub tetra_samples: usize,
    /// Largest shift, in grid steps per axis.
    pub max_steps: isize,
    pub tol: f64,
}

impl Default for GisConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::new(16, 4.0).expect("valid lattice"),
            seed: 42,
            samples: 1000,
            tetra_samples: 10_000,
            max_steps: 3,
            tol: 1e-12,
        }
    }
}

fn random_steps(rng: &mut ChaCha8Rng, max: isize) -> [isize; 3] {
    [rng.gen_range(-max..=max), rng.gen_range(-max..=max), rng.gen_range(-max..=max)]
}

fn random_box(rng: &mut ChaCha8Rng, lat: &Lattice) -> BorelBox {
    let l = lat.half_width();
    let mut corner = || {
        let a: f64 = rng.gen_range(-l..l);
        let b: f64 = rng.gen_range(-l..l);
        (a.min(b), a.max(b))
    };
    let (x0, x1) = corner();
    let (y0, y1) = corner();
    let (z0, z1) = corner();
    let first = BorelBox::cuboid(Vec3::new(x0, y0, z0), Vec3::new(x1, y1, z1));
    let (x0, x1) = corner();
    let (y0, y1) = corner();
    let (z0, z1) = corner();
    first.union(&BorelBox::cuboid(Vec3::new(x0, y0, z0), Vec3::new(x1, y1, z1)))
}

pub(crate) fn random_lattice_field(lat: Lattice, rng: &mut ChaCha8Rng) -> LatticeField {
    let data = (0..lat.len())
        .map(|_| {
            Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    LatticeField::from_vec(lat, data).expect("sized to lattice")
}

/// Bitwise field equality, counted as a deviation of 0 or 1.
fn bit_dev(a: &LatticeField, b: &LatticeField) -> f64 {
    if a == b {
        0.0
    } else {
        a.max_dev(b).unwrap_or(f64::INFINITY).max(f64::MIN_POSITIVE)
    }
}

fn admissible_everywhere(lat: &Lattice, a: Vec3) -> bool {
    (0..lat.len()).all(|s| geometry::check_admissible(a, lat.point(s)).is_ok())
}

/// Draws a commensurate shift whose cocycle is admissible at every site.
fn admissible_shift(rng: &mut ChaCha8Rng, lat: &Lattice, max: isize) -> Vec3 {
    loop {
        let a = lat.displacement(random_steps(rng, max));
        if admissible_everywhere(lat, a) {
            return a;
        }
    }
}

/// Draws `(a, b)` with `a`, `b` and `a + b` all admissible.
fn admissible_pair(rng: &mut ChaCha8Rng, lat: &Lattice, max: isize) -> (Vec3, Vec3) {
    loop {
        let a = admissible_shift(rng, lat, max);
        let b = admissible_shift(rng, lat, max);
        if admissible_everywhere(lat, a + b) {
            return (a, b);
        }
    }
}

/// Checks the translation-group instance of the generalized imprimitivity
/// axioms:
/// * covariance `U(a) E(Δ) U(a)* = E(Δ + a)` on the sites where both sides are
///   defined, bit for bit;
/// * the defect `U(a+b)* U(a) U(b)` is a pointwise multiplier that commutes
///   with `E(Δ)` and whose symbol is `w(a+b;x)* w(a;x+b) w(b;x)`, of unit norm;
/// * associativity of the multipliers, `exp(J · tetraflux) = 1`.
pub fn gis_verify(cfg: &GisConfig) -> Result<Report> {
    let lat = cfg.lattice;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("gis", cfg.seed, cfg.samples);
    let psi = random_lattice_field(lat, &mut rng);

    let mut canon_dev = Vec::with_capacity(cfg.samples);
    let mut cov_dev = Vec::with_capacity(cfg.samples);
    let mut uu_dev = Vec::with_capacity(cfg.samples);
    let mut mult_kind = Vec::with_capacity(cfg.samples);
    let mut commute_dev = Vec::with_capacity(cfg.samples);
    let mut symbol_dev = Vec::with_capacity(cfg.samples);
    let mut unit_dev = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let (a, b) = admissible_pair(&mut rng, &lat, cfg.max_steps);
        let delta = random_box(&mut rng, &lat);

        // canonical system: V(a) E(Δ) V(a)* = E(Δ + a) on sites whose preimage
        // x − a is on the grid
        let d = lat.steps_of(a)?;
        let back = [-d[0], -d[1], -d[2]];
        let reach: Vec<bool> = (0..lat.len()).map(|s| lat.offset(s, back).is_some()).collect();
        let v = vshift(a);
        let lhs = v.apply(&project(&delta, &v.adjoint().apply(&psi)?))?;
        let mut rhs = project(&delta.translate(a), &psi);
        for (q, r) in rhs.values_mut().iter_mut().zip(&reach) {
            if !r {
                *q = Quaternion::ZERO;
            }
        }
        canon_dev.push(bit_dev(&lhs, &rhs));

        // twisted: U(a) E(Δ) U(a)* = E(Δ + a) U(a) U(a)*, bit for bit, and
        // U(a) U(a)* = 1 on the reachable sites
        let u = uop(a);
        let uu = u.apply(&u.adjoint().apply(&psi)?)?;
        let lhs = u.apply(&project(&delta, &u.adjoint().apply(&psi)?))?;
        cov_dev.push(bit_dev(&lhs, &project(&delta.translate(a), &uu)));
        let unit = (0..lat.len())
            .filter(|&s| reach[s])
            .map(|s| uu.at(s).dist(psi.at(s)))
            .fold(0.0, f64::max);
        uu_dev.push(unit);

        let m = compose_defect(a, b);
        let ones = LatticeField::from_fn(lat, |_| Quaternion::E0);
        let sym = m.apply(&ones)?;
        let applied = m.apply(&psi)?;
        let pointwise = psi.zip_with(&sym, |p, s| s * p)?;
        mult_kind.push(applied.max_dev(&pointwise)?);
        let pm = project(&delta, &applied);
        let mp = m.apply(&project(&delta, &psi))?;
        commute_dev.push(bit_dev(&pm, &mp));

        let (mut worst_sym, mut worst_unit) = (0.0_f64, 0.0_f64);
        let fwd = [
            ((b[0] + a[0]) / lat.step()).round() as isize,
            ((b[1] + a[1]) / lat.step()).round() as isize,
            ((b[2] + a[2]) / lat.step()).round() as isize,
        ];
        let db = lat.steps_of(b)?;
        for s in 0..lat.len() {
            if lat.offset(s, fwd).is_none() || lat.offset(s, db).is_none() {
                continue;
            }
            let x = lat.point(s);
            let want = geometry::multiplier(a, b, x)?;
            worst_sym = worst_sym.max(sym.at(s).dist(want));
            worst_unit = worst_unit.max((sym.at(s).norm() - 1.0).abs());
        }
        symbol_dev.push(worst_sym);
        unit_dev.push(worst_unit);
    }
    report.push(Check::from_deviations(
        "canonical_covariance",
        "V(a) E(Δ) V(a)* = E(Δ + a)",
        &canon_dev,
        0.0,
    ));
    report.push(Check::from_deviations(
        "covariance",
        "U(a) E(Δ) U(a)* = E(Δ + a) U(a) U(a)*",
        &cov_dev,
        0.0,
    ));
    report.push(Check::from_deviations("unitarity", "U(a) U(a)* = 1", &uu_dev, cfg.tol));
    report.push(Check::from_deviations(
        "defect_is_multiplier",
        "U(a+b)* U(a) U(b) ψ = m(a,b;·) ψ",
        &mult_kind,
        cfg.tol,
    ));
    report.push(Check::from_deviations(
        "defect_commutes_with_projections",
        "M(a,b) E(Δ) = E(Δ) M(a,b)",
        &commute_dev,
        0.0,
    ));
    report.push(Check::from_deviations(
        "defect_symbol",
        "m(a,b;x) = w(a+b;x)* w(a;x+b) w(b;x)",
        &symbol_dev,
        cfg.tol,
    ));
    report.push(Check::from_deviations("defect_unit_norm", "|m(a,b;x)| = 1", &unit_dev, cfg.tol));

    // associativity of the multiplier: exp(J Φ_tetra) = 1
    let tets: Vec<[Vec3; 4]> = (0..cfg.tetra_samples)
        .map(|_| {
            let mut v = || Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            [v(), v(), v(), v()]
        })
        .collect();
    let assoc: Vec<f64> = tets
        .par_iter()
        .filter_map(|t| {
            let flux = geometry::tetraflux(t[0], t[1], t[2], t[3]).ok()?;
            let j = geometry::dirq(t[0]).ok()?.quaternion();
            Some(qexp(j * flux).dist(Quaternion::E0))
        })
        .collect();
    report.push(Check::from_deviations(
        "tetraflux_quantization",
        "exp(J Φ_tetra) = 1, Φ_tetra ∈ {0, 2π}",
        &assoc,
        1e-9,
    ));
    Ok(report)
}

/// `2π` as seen by the associativity check.
pub const FULL_FLUX: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::multop;

    fn lattice() -> Lattice {
        Lattice::new(8, 2.0).unwrap()
    }

    fn rand_field(seed: u64) -> LatticeField {
        random_lattice_field(lattice(), &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn smooth() -> AnalyticField {
        AnalyticField::bump(Vec3::new(2.0, 0.5, -0.3), 1.2, Quaternion::new(1.0, 0.3, -0.2, 0.5))
    }

    #[test]
    fn position_and_j() {
        let psi = rand_field(1);
        let lat = lattice();
        let x1 = position(0).apply(&psi).unwrap();
        for s in [0, 17, 300] {
            assert_eq!(x1.at(s), psi.at(s) * lat.point(s)[0]);
        }
        let j = jop();
        let phi = rand_field(2);
        let a = phi.inner(&j.apply(&psi).unwrap()).unwrap();
        let b = j.apply(&phi).unwrap().inner(&psi).unwrap();
        assert!(a.dist(-b) < 1e-12);
        let jj = j.apply(&j.apply(&psi).unwrap()).unwrap();
        assert!(jj.max_dev(&psi.scale(-1.0)).unwrap() < 1e-14);
        let jstar = j.adjoint().apply(&psi).unwrap();
        assert!(jstar.max_dev(&j.apply(&psi).unwrap().scale(-1.0)).unwrap() < 1e-15);
        assert!(j.is_multiplier() && !partial(0).is_multiplier());
    }

    #[test]
    fn shifts() {
        let lat = lattice();
        let psi = rand_field(3);
        let h = lat.step();
        assert_eq!(vshift(Vec3::ZERO).apply(&psi).unwrap(), psi);
        let (a, b) = (Vec3::new(h, -2.0 * h, 0.0), Vec3::new(0.0, h, 3.0 * h));
        // zero fill loses the sites pushed off the grid; compare on a field
        // supported away from the boundary
        let inner = project(&BorelBox::cuboid(Vec3::new(-0.5, -0.5, -1.2), Vec3::new(0.5, 0.5, 0.2)), &psi);
        let ab = vshift(a).apply(&vshift(b).apply(&inner).unwrap()).unwrap();
        assert_eq!(ab, vshift(a + b).apply(&inner).unwrap());
        assert!(matches!(vshift(Vec3::new(0.3 * h, 0.0, 0.0)).apply(&psi), Err(Error::Usage(_))));
        // imprimitivity
        let delta = BorelBox::cuboid(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(0.3, 1.0, 0.6));
        let lhs = vshift(a).apply(&project(&delta, &vshift(-a).apply(&inner).unwrap())).unwrap();
        assert_eq!(lhs, project(&delta.translate(a), &inner));
    }

    #[test]
    fn twisted_translations() {
        let lat = lattice();
        let h = lat.step();
        let support = BorelBox::cuboid(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
        let psi = project(&support, &rand_field(4));
        let a = Vec3::new(h, 0.0, -h);
        let u = uop(a);
        let upsi = u.apply(&psi).unwrap();
        assert!((upsi.norm() - psi.norm()).abs() < 1e-12);
        // one-parameter group along a grid line
        let e = Vec3::new(0.0, h, 0.0);
        let two = u_line(&psi, e, 2);
        let direct = uop(e * 2.0).apply(&psi).unwrap();
        assert!(two.max_dev(&direct).unwrap() < 1e-14);
        // commutes with J exactly up to rounding
        let ju = jop().apply(&upsi).unwrap();
        let uj = u.apply(&jop().apply(&psi).unwrap()).unwrap();
        assert!(ju.max_dev(&uj).unwrap() < 1e-14);
        // generic composition is not a translation
        let b = Vec3::new(0.0, 2.0 * h, 0.0);
        let comp = uop(a).apply(&uop(b).apply(&psi).unwrap()).unwrap();
        let direct = uop(a + b).apply(&psi).unwrap();
        assert!(comp.max_dev(&direct).unwrap() > 1e-3);
    }

    fn u_line(psi: &LatticeField, e: Vec3, k: usize) -> LatticeField {
        let mut cur = psi.clone();
        for _ in 0..k {
            cur = uop(e).apply(&cur).unwrap();
        }
        cur
    }

    #[test]
    fn wop_rejects_diagonal_through_origin() {
        let lat = lattice();
        let h = lat.step();
        let psi = rand_field(5);
        let err = wop(Vec3::new(h, h, h)).apply(&psi).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn defect_operator() {
        let lat = lattice();
        let h = lat.step();
        let psi = rand_field(6);
        let a = Vec3::new(h, 0.0, 0.0);
        let m0 = compose_defect(a, Vec3::ZERO);
        let support = BorelBox::cuboid(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
        let inner = project(&support, &psi);
        assert!(m0.apply(&inner).unwrap().max_dev(&inner).unwrap() < 1e-15);
        let b = Vec3::new(0.0, 2.0 * h, h);
        let m = compose_defect(a, b);
        let sym = m.apply(&LatticeField::from_fn(lat, |_| Quaternion::E0)).unwrap();
        let s = lat.index([3, 2, 4]);
        let want = geometry::multiplier(a, b, lat.point(s)).unwrap();
        assert!(sym.at(s).dist(want) < 1e-12);
        assert!(sym.at(s).dist(Quaternion::E0) > 1e-3);
    }

    #[test]
    fn connection_term_example() {
        let u = Vec3::new(1.0, 0.0, 0.0);
        let c = geometry::connection(u, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(c, Quaternion::E2 * -0.5);
    }

    #[test]
    fn nabla_x_commutator() {
        let psi = smooth();
        let probes = ball_probes(Vec3::new(2.0, 0.5, -0.3), 1.1, 6);
        for i in 0..3 {
            for j in 0..3 {
                let lhs = commutator(&nabla(i), &position(j));
                let rhs = if i == j { QOperator::identity() } else { QOperator::identity().scale(0.0) };
                let r1 = identity_check(&lhs, &rhs, &psi, "bump", 1e-2, &probes);
                let r2 = identity_check(&lhs, &rhs, &psi, "bump", 5e-3, &probes);
                if i == j {
                    let ratio = r1.max_dev / r2.max_dev;
                    assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
                } else {
                    assert!(r1.max_dev < 1e-12);
                }
            }
        }
    }

    #[test]
    fn curvature_commutator() {
        let psi = smooth();
        let probes = ball_probes(Vec3::new(2.0, 0.5, -0.3), 1.1, 6);
        let same = commutator_check(1, 1, &psi, "bump", 1e-2, &probes);
        assert!(same.max_dev <= 1e-12);
        let r1 = commutator_check(0, 1, &psi, "bump", 1e-2, &probes);
        let r2 = commutator_check(0, 1, &psi, "bump", 5e-3, &probes);
        let ratio = r1.max_dev / r2.max_dev;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}, {} {}", r1.max_dev, r2.max_dev);
        let t = curvature_target(0, 1).symbol(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(t, Quaternion::E3 * -0.5);
    }

    #[test]
    fn generator_of_twisted_translations() {
        let psi = smooth();
        let u = Vec3::new(0.6, -0.0, 0.8);
        let x = Vec3::new(1.7, 0.9, -0.1);
        let target = covderiv(u).scale(-1.0).apply_analytic(&psi, 1e-5).eval(x);
        let mut prev = f64::INFINITY;
        for s in [1e-2, 5e-3, 2.5e-3] {
            let fwd = uop(u * s).apply_analytic(&psi, 0.0).eval(x);
            let bwd = uop(u * -s).apply_analytic(&psi, 0.0).eval(x);
            let d = ((fwd - bwd) * (0.5 / s)).dist(target);
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn rotation_structure() {
        let psi = smooth();
        let probes = ball_probes(Vec3::new(2.0, 0.5, -0.3), 1.1, 5);
        // [M_i, J] = 0 and [M_i, ∇_j] = −ε_ijk ∇_k, second order
        for i in 0..3 {
            let c1 = identity_check(&commutator(&rotgen(i), &jop()), &QOperator::identity().scale(0.0), &psi, "bump", 1e-2, &probes);
            let c2 = identity_check(&commutator(&rotgen(i), &jop()), &QOperator::identity().scale(0.0), &psi, "bump", 5e-3, &probes);
            assert!(c1.max_dev < 1e-2 && (c1.max_dev / c2.max_dev - 4.0).abs() < 0.5);
            for j in 0..3 {
                let mut rhs: Vec<QOperator> = Vec::new();
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e != 0.0 {
                        rhs.push(nabla(k).scale(-e));
                    }
                }
                let rhs = if rhs.is_empty() { QOperator::identity().scale(0.0) } else { sum(rhs) };
                let lhs = commutator(&rotgen(i), &nabla(j));
                let r = identity_check(&lhs, &rhs, &psi, "bump", 1e-2, &probes);
                assert!(r.max_dev < 1e-2, "[M{i}, ∇{j}] {}", r.max_dev);
            }
        }
        // [M_3, X_1] = −X_2 (vector transformation of the position)
        let lhs = commutator(&rotgen(2), &position(0));
        let r = identity_check(&lhs, &position(1).scale(-1.0), &psi, "bump", 1e-3, &probes);
        assert!(r.max_dev < 1e-4, "{}", r.max_dev);
    }

    #[test]
    fn spin_half_double_valuedness() {
        let psi = smooth();
        let lat = Lattice::new(16, 4.0).unwrap();
        let full = rotation(2, 2.0 * PI).apply_analytic(&psi, 0.0).sample(lat);
        assert!(full.max_dev(&psi.sample(lat).scale(-1.0)).unwrap() < 1e-12);
        let twice = rotation(2, 4.0 * PI).apply_analytic(&psi, 0.0).sample(lat);
        assert!(twice.max_dev(&psi.sample(lat)).unwrap() < 1e-12);
        // generator of the rotation family is M_3
        let x = Vec3::new(1.5, 0.8, 0.1);
        let t = 1e-4;
        let d = (rotation(2, t).apply_analytic(&psi, 0.0).eval(x) - rotation(2, -t).apply_analytic(&psi, 0.0).eval(x)) * (0.5 / t);
        let m3 = rotgen(2).apply_analytic(&psi, 1e-5).eval(x);
        assert!(d.dist(m3) < 1e-6, "{}", d.dist(m3));
        assert!(rotation(2, 1.0).apply(&psi.sample(lat)).is_err());
    }

    #[test]
    fn hamiltonian_properties() {
        assert!(hamiltonian(0.0).is_err());
        let h = hamiltonian(1.0).unwrap();
        let psi = smooth();
        let probes = ball_probes(Vec3::new(2.0, 0.5, -0.3), 1.1, 5);
        let r1 = identity_check(&commutator(&h, &jop()), &QOperator::identity().scale(0.0), &psi, "bump", 1e-2, &probes);
        let r2 = identity_check(&commutator(&h, &jop()), &QOperator::identity().scale(0.0), &psi, "bump", 5e-3, &probes);
        assert!((r1.max_dev / r2.max_dev - 4.0).abs() < 0.5, "{} {}", r1.max_dev, r2.max_dev);
        // [H, X_i] = −∇_i / m
        let lhs = commutator(&h, &position(0));
        let r = identity_check(&lhs, &nabla(0).scale(-1.0), &psi, "bump", 1e-3, &probes);
        assert!(r.max_dev < 1e-4, "{}", r.max_dev);
        let b3 = bop(2).symbol(Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!(b3, Quaternion::real(0.125));
    }

    #[test]
    fn adjoint_consistency() {
        let lat = Lattice::new(12, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let support = BorelBox::cuboid(Vec3::new(-2.0, -2.0, -2.0), Vec3::new(2.0, 2.0, 2.0));
        let phi = project(&support, &random_lattice_field(lat, &mut rng));
        let psi = project(&support, &random_lattice_field(lat, &mut rng));
        let h = lat.step();
        let ops = vec![
            jop(),
            position(1),
            partial(2),
            nabla(0),
            rotgen(1),
            uop(Vec3::new(h, 0.0, 0.0)),
            hamiltonian(2.0).unwrap(),
            transport_nabla(1, h),
        ];
        for a in ops {
            let lhs = phi.inner(&a.apply(&psi).unwrap()).unwrap();
            let rhs = a.adjoint().apply(&phi).unwrap().inner(&psi).unwrap();
            assert!(lhs.dist(rhs) < 1e-10, "{}: {}", a.name(), lhs.dist(rhs));
        }
        // anti-hermitian pieces
        for a in [nabla(2), rotgen(0), transport_nabla(2, h)] {
            let lhs = phi.inner(&a.apply(&psi).unwrap()).unwrap();
            let rhs = a.apply(&phi).unwrap().inner(&psi).unwrap();
            assert!(lhs.dist(-rhs) < 1e-10, "{}", a.name());
        }
    }

    #[test]
    fn transport_derivative_commutes_with_j() {
        let lat = Lattice::new(12, 3.0).unwrap();
        let psi = random_lattice_field(lat, &mut ChaCha8Rng::seed_from_u64(10));
        let h = lat.step();
        for i in 0..3 {
            let d = transport_nabla(i, h);
            let a = jop().apply(&d.apply(&psi).unwrap()).unwrap();
            let b = d.apply(&jop().apply(&psi).unwrap()).unwrap();
            assert!(a.max_dev(&b).unwrap() < 1e-13);
        }
        let lap = transport_laplacian(h);
        let a = jop().apply(&lap.apply(&psi).unwrap()).unwrap();
        let b = lap.apply(&jop().apply(&psi).unwrap()).unwrap();
        assert!(a.max_dev(&b).unwrap() < 1e-12);
    }

    #[test]
    fn multiplier_commutes_with_projection() {
        let psi = rand_field(11);
        let d = BorelBox::cuboid(Vec3::new(-1.0, 0.0, -2.0), Vec3::new(1.0, 2.0, 0.5));
        for op in [jop(), position(2), bop(0), wop(Vec3::new(0.5, 0.0, 0.0))] {
            let a = op.apply(&project(&d, &psi)).unwrap();
            let b = project(&d, &op.apply(&psi).unwrap());
            assert_eq!(a, b);
        }
        let j = |x: Vec3| geometry::dirq(x).unwrap().quaternion();
        assert_eq!(jop().apply(&psi).unwrap(), multop(j, &psi));
    }

    #[test]
    fn gis_suite_small() {
        let cfg = GisConfig { samples: 20, tetra_samples: 500, lattice: Lattice::new(8, 2.0).unwrap(), ..GisConfig::default() };
        let r = gis_verify(&cfg).unwrap();
        assert!(r.passed(), "{}", r.summary());
    }
}
