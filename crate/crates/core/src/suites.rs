//! Randomized verification suites behind `qmonopole verify`.
//!
//! Every suite draws its samples from a `ChaCha8Rng` seeded by the
//! configuration, so a fixed seed reproduces the report bit for bit.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, levi_civita, Orientation, TransportForm, Triangle, Vec3};
use crate::hilbert::{AnalyticField, BorelBox, Lattice, LatticeField};
use crate::operators::{
    self, ball_probes, commutator, covderiv, curvature_target, identity_check, jop, nabla, position, rotation, rotgen, sum,
    transport_laplacian, uop, GisConfig, QOperator,
};
use crate::quat::{qexp, su2, ImaginaryUnit, Quaternion};
use crate::report::{Check, Report};
use crate::splitting::{self, SliceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Geometry,
    Operators,
    Splitting,
    Gis,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Algebra, Suite::Geometry, Suite::Operators, Suite::Splitting, Suite::Gis];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Geometry => "geometry",
            Suite::Operators => "operators",
            Suite::Splitting => "splitting",
            Suite::Gis => "gis",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown suite {s:?} (algebra, geometry, operators, splitting, gis)")))
    }
}

/// Deliberately broken inputs that a suite must reject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Controls {
    /// Multiply in the opposite order, which flips the sign of every
    /// `eᵢeⱼ` with `i ≠ j`.
    pub flipped_table: bool,
    /// Use the transport cosine formula with the radicand `1 − (‖x‖² − a·x)/…`.
    pub uncorrected_transport: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random samples for the pointwise identities.
    pub samples: usize,
    /// Tolerance for identities exact up to rounding.
    pub tol: f64,
    /// Grid for the lattice checks.
    pub lattice: Lattice,
    pub controls: Controls,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: 10_000,
            tol: 1e-12,
            lattice: Lattice::new(32, 6.0).expect("valid lattice"),
            controls: Controls::default(),
        }
    }
}

pub fn run(suite: Suite, cfg: &SuiteConfig) -> Result<Report> {
    if cfg.samples == 0 {
        return Err(Error::Usage("at least one sample is required".into()));
    }
    let mut report = match suite {
        Suite::Algebra => algebra(cfg),
        Suite::Geometry => geometry_suite(cfg)?,
        Suite::Operators => operators_suite(cfg)?,
        Suite::Splitting => splitting_suite(cfg)?,
        Suite::Gis => gis(cfg)?,
    };
    report.suite = suite.name().to_string();
    report.seed = cfg.seed;
    report.n_samples = cfg.samples;
    Ok(report)
}

fn rng(cfg: &SuiteConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    Quaternion::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn random_unit(rng: &mut ChaCha8Rng) -> ImaginaryUnit {
    loop {
        let v = random_vec(rng, 1.0);
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return ImaginaryUnit::new(v.0).expect("nonzero direction");
        }
    }
}

// ---------------------------------------------------------------- algebra

fn multiply(controls: &Controls) -> impl Fn(Quaternion, Quaternion) -> Quaternion {
    let flipped = controls.flipped_table;
    move |p, q| if flipped { q * p } else { p * q }
}

fn algebra(cfg: &SuiteConfig) -> Report {
    let mul = multiply(&cfg.controls);
    let mut report = Report::new("algebra", cfg.seed, cfg.samples);

    let mut table = Vec::new();
    for mu in 0..4 {
        for nu in 0..4 {
            let want = match (mu, nu) {
                (0, n) => Quaternion::basis(n),
                (m, 0) => Quaternion::basis(m),
                (i, j) if i == j => -Quaternion::E0,
                (i, j) => {
                    let k = 6 - i - j;
                    Quaternion::basis(k) * levi_civita(i - 1, j - 1, k - 1)
                }
            };
            table.push(mul(Quaternion::basis(mu), Quaternion::basis(nu)).dist(want));
        }
    }
    report.push(Check::from_deviations("multiplication_table", "eᵢeⱼ = −δᵢⱼ + εᵢⱼₖeₖ", &table, 0.0));

    let mut r = rng(cfg, 1);
    let n = cfg.samples;
    let mut assoc = Vec::with_capacity(n);
    let mut anti = Vec::with_capacity(n);
    let mut normmul = Vec::with_capacity(n);
    let mut hom = Vec::with_capacity(n);
    let mut unitary = Vec::with_capacity(n);
    let mut inner_auto = Vec::with_capacity(n);
    for _ in 0..n {
        let (p, q, s) = (random_quaternion(&mut r), random_quaternion(&mut r), random_quaternion(&mut r));
        let scale3 = p.norm() * q.norm() * s.norm();
        let scale2 = p.norm() * q.norm();
        assoc.push(mul(mul(p, q), s).dist(mul(p, mul(q, s))) / scale3);
        anti.push(mul(p, q).conj().dist(mul(q.conj(), p.conj())) / scale2);
        normmul.push((mul(p, q).norm() - scale2).abs() / scale2);
        hom.push(su2(mul(p, q)).max_dev(&(su2(p) * su2(q))) / scale2);
        let u = p * (1.0 / p.norm());
        let m = su2(u);
        let det = m.det();
        unitary.push((m.adjoint() * m).max_dev(&crate::quat::Mat2C::identity()).max((det.re - 1.0).abs() + det.im.abs()));
        let w = s * (1.0 / s.norm());
        let a = |x: Quaternion| mul(mul(w.conj(), x), w);
        inner_auto.push(a(mul(p, q)).dist(mul(a(p), a(q))) / scale2);
    }
    report.push(Check::from_deviations("associativity", "(pq)r = p(qr)", &assoc, cfg.tol));
    report.push(Check::from_deviations("anti_automorphism", "(pq)* = q*p*", &anti, cfg.tol));
    report.push(Check::from_deviations("norm_multiplicativity", "‖pq‖ = ‖p‖‖q‖", &normmul, cfg.tol));
    report.push(Check::from_deviations("su2_homomorphism", "su2(pq) = su2(p)su2(q)", &hom, cfg.tol));
    report.push(Check::from_deviations("su2_unitary", "su2(u)†su2(u) = 1, det = 1", &unitary, cfg.tol));
    report.push(Check::from_deviations("inner_automorphism", "ω*(pq)ω = (ω*pω)(ω*qω)", &inner_auto, cfg.tol));

    let mut square = Vec::with_capacity(n);
    let mut group = Vec::with_capacity(n);
    for _ in 0..n {
        let w = random_unit(&mut r);
        let wq = w.quaternion();
        square.push(mul(wq, wq).dist(-Quaternion::E0));
        let (a, b) = (r.gen_range(-PI..PI), r.gen_range(-PI..PI));
        group.push(mul(qexp(wq * a), qexp(wq * b)).dist(qexp(wq * (a + b))));
    }
    report.push(Check::from_deviations("imaginary_unit_square", "ω² = −1", &square, cfg.tol));
    report.push(Check::from_deviations("slice_exponential", "exp(θω)exp(φω) = exp((θ+φ)ω)", &group, cfg.tol));
    report
}

// --------------------------------------------------------------- geometry

fn transport_form(c: &Controls) -> TransportForm {
    if c.uncorrected_transport {
        TransportForm::Uncorrected
    } else {
        TransportForm::Corrected
    }
}

/// Point-in-tetrahedron test for the origin by barycentric signs.
fn origin_inside(v: &[Vec3; 4]) -> Option<bool> {
    let det = |a: Vec3, b: Vec3, c: Vec3| a.dot(b.cross(c));
    let [p0, p1, p2, p3] = *v;
    let vol = det(p1 - p0, p2 - p0, p3 - p0);
    let o = Vec3::ZERO;
    let l = [
        det(p1 - o, p2 - o, p3 - o),
        det(p0 - o, p3 - o, p2 - o),
        det(p0 - o, p1 - o, p3 - o),
        det(p0 - o, p2 - o, p1 - o),
    ];
    let tiny = 1e-9 * vol.abs();
    if l.iter().any(|x| x.abs() <= tiny) {
        return None;
    }
    Some(l.iter().all(|x| x.signum() == vol.signum()))
}

fn geometry_suite(cfg: &SuiteConfig) -> Result<Report> {
    let form = transport_form(&cfg.controls);
    let mut report = Report::new("geometry", cfg.seed, cfg.samples);
    let mut r = rng(cfg, 2);
    let n = cfg.samples;

    let mut unit = Vec::with_capacity(n);
    let mut endpoint = Vec::with_capacity(n);
    let mut cocycle = Vec::with_capacity(n);
    while cocycle.len() < n {
        let x = random_vec(&mut r, 3.0);
        let a = random_vec(&mut r, 3.0);
        let (s, t) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let (Ok(w_s), Ok(w_t), Ok(w_st), Ok(w)) = (
            geometry::transport_with(form, a * s, x),
            geometry::transport_with(form, a * t, x + a * s),
            geometry::transport_with(form, a * (s + t), x),
            geometry::transport_with(form, a, x),
        ) else {
            continue;
        };
        unit.push((w * w.conj()).dist(Quaternion::E0));
        let moved = w * x.to_quaternion() * w.conj() * (1.0 / x.norm());
        endpoint.push(moved.dist((x + a).to_quaternion() * (1.0 / (x + a).norm())));
        cocycle.push((w_t * w_s).dist(w_st));
    }
    report.push(Check::from_deviations("transport_unitarity", "w(a;x)w(a;x)* = 1", &unit, cfg.tol));
    report.push(Check::from_deviations("transport_endpoint", "w x̂ w* = (x+a)^", &endpoint, cfg.tol));
    report.push(Check::from_deviations("cocycle", "w(ta;x+sa)w(sa;x) = w((s+t)a;x)", &cocycle, cfg.tol));

    let mut mult = Vec::with_capacity(n);
    while mult.len() < n {
        let (x, a, b) = (random_vec(&mut r, 3.0), random_vec(&mut r, 2.0), random_vec(&mut r, 2.0));
        let (Ok(m), Ok(f)) = (geometry::multiplier_with(form, a, b, x), geometry::multiplier_from_flux(a, b, x)) else {
            continue;
        };
        mult.push(m.dist(f));
    }
    report.push(Check::from_deviations("multiplier_flux", "w(a+b;x)*w(a;x+b)w(b;x) = exp(JΦ)", &mult, 1e-9));

    let mut period = Vec::with_capacity(n);
    for _ in 0..n {
        let x = random_vec(&mut r, 3.0);
        if let Ok(j) = geometry::dirq(x) {
            period.push(qexp(j.quaternion() * (2.0 * PI)).dist(Quaternion::E0));
        }
    }
    report.push(Check::from_deviations("slice_period", "exp(2πJ) = 1", &period, cfg.tol));

    let mut quant = Vec::with_capacity(n);
    let mut inside = 0usize;
    while quant.len() < n {
        let x = random_vec(&mut r, 2.0);
        let (a, b, c) = (random_vec(&mut r, 3.0), random_vec(&mut r, 3.0), random_vec(&mut r, 3.0));
        let verts = geometry::tetra_vertices(x, a, b, c);
        let Some(expect_inside) = origin_inside(&verts) else { continue };
        let Ok(flux) = geometry::tetraflux(x, a, b, c) else { continue };
        let target = if expect_inside { 2.0 * PI } else { 0.0 };
        inside += expect_inside as usize;
        quant.push((flux - target).abs());
    }
    report.push(Check::from_deviations("tetraflux_quantization", "Φ(∂T) = 2π·[0 ∈ T]", &quant, 1e-9));
    report.push(Check::with_verdict(
        "tetraflux_inside_cases",
        "samples with 0 ∈ T (max) out of n (tol)",
        quant.len(),
        inside as f64,
        inside as f64 / quant.len() as f64,
        quant.len() as f64,
        inside > 0 && inside < quant.len(),
    ));

    let mut additive = Vec::with_capacity(n);
    while additive.len() < n {
        let (p, q, s) = (random_vec(&mut r, 3.0), random_vec(&mut r, 3.0), random_vec(&mut r, 3.0));
        let c = q + (s - q) * r.gen_range(0.05..0.95);
        let pieces = (geometry::triflux(&Triangle::new(p, q, c)), geometry::triflux(&Triangle::new(p, c, s)));
        let (Ok(whole), (Ok(f1), Ok(f2))) = (geometry::triflux(&Triangle::new(p, q, s)), pieces) else { continue };
        additive.push((f1 + f2 - whole).abs());
    }
    report.push(Check::from_deviations("triflux_additivity", "Φ(pqs) = Φ(pqc) + Φ(pcs)", &additive, 1e-10));

    let value = geometry::chern(256, 256)?;
    report.push(Check::from_deviations("chern_value", "∫ iF = 2π", &[(value - 2.0 * PI).abs()], 1e-6));
    let order = chern_order()?;
    report.push(Check::from_deviations("chern_order", "Simpson order 4", &[(order - 4.0).abs()], 0.5));
    let far = geometry::chern_on_sphere(7.0, Orientation::Outward, 256, 256)?;
    report.push(Check::from_deviations("chern_radius", "∫ iF(r=7) = ∫ iF(r=1)", &[(far - value).abs()], 1e-10));
    Ok(report)
}

/// Observed order of the Chern quadrature from grids 16, 32, 64.
pub fn chern_order() -> Result<f64> {
    let err = |n| geometry::chern(n, n).map(|v| (v - 2.0 * PI).abs());
    let (e1, e2) = (err(16)?, err(32)?);
    Ok((e1 / e2).log2())
}

// -------------------------------------------------------------- operators

/// Random compactly supported bumps away from the origin.
pub fn smooth_fields(rng: &mut ChaCha8Rng, count: usize) -> Vec<(Vec3, f64, AnalyticField)> {
    (0..count)
        .map(|_| {
            let center = loop {
                let c = random_vec(rng, 3.0);
                if (1.8..3.0).contains(&c.norm()) {
                    break c;
                }
            };
            let radius = rng.gen_range(0.8..1.2);
            let amp = random_quaternion(rng);
            (center, radius, AnalyticField::bump(center, radius, amp))
        })
        .collect()
}

const H1: f64 = 1e-2;
const H2: f64 = 5e-3;

fn zero() -> QOperator {
    QOperator::identity().scale(0.0)
}

/// `|ratio − 4|` between errors at `H1` and `H2`, or 0 when both are at
/// rounding level (an identity that holds exactly for the stencil).
fn richardson(lhs: &QOperator, rhs: &QOperator, psi: &AnalyticField, probes: &[Vec3]) -> (f64, f64) {
    let e1 = identity_check(lhs, rhs, psi, "bump", H1, probes).max_dev;
    let e2 = identity_check(lhs, rhs, psi, "bump", H2, probes).max_dev;
    if e1 < 1e-9 && e2 < 1e-9 {
        return (0.0, e1);
    }
    ((e1 / e2 - 4.0).abs(), e1)
}

fn levi_rhs(i: usize, j: usize) -> QOperator {
    let terms: Vec<QOperator> = (0..3)
        .filter(|&k| levi_civita(i, j, k) != 0.0)
        .map(|k| nabla(k).scale(-levi_civita(i, j, k)))
        .collect();
    if terms.is_empty() {
        zero()
    } else {
        sum(terms)
    }
}

fn operators_suite(cfg: &SuiteConfig) -> Result<Report> {
    let mut report = Report::new("operators", cfg.seed, cfg.samples);
    let mut r = rng(cfg, 3);
    let fields = smooth_fields(&mut r, 20);
    let mut canonical = Vec::new();
    let mut canonical_err = Vec::new();
    let mut curv = Vec::new();
    let mut curv_diag = Vec::new();
    let mut rot_nabla = Vec::new();
    let mut rot_j = Vec::new();
    for (center, radius, psi) in &fields {
        let probes = ball_probes(*center, 0.9 * radius, 4);
        for i in 0..3 {
            for j in 0..3 {
                let lhs = commutator(&nabla(i), &position(j));
                let rhs = if i == j { QOperator::identity() } else { zero() };
                let (dev, e1) = richardson(&lhs, &rhs, psi, &probes);
                canonical.push(dev);
                canonical_err.push(e1);
                if i == j {
                    curv_diag.push(identity_check(&commutator(&nabla(i), &nabla(i)), &zero(), psi, "bump", H1, &probes).max_dev);
                } else {
                    curv.push(richardson(&commutator(&nabla(i), &nabla(j)), &curvature_target(i, j), psi, &probes).0);
                }
            }
        }
        let probes = ball_probes(*center, 0.9 * radius, 3);
        for i in 0..3 {
            rot_j.push(richardson(&commutator(&rotgen(i), &jop()), &zero(), psi, &probes).0);
            for j in 0..3 {
                rot_nabla.push(richardson(&commutator(&rotgen(i), &nabla(j)), &levi_rhs(i, j), psi, &probes).0);
            }
        }
    }
    report.push(Check::from_deviations("canonical_commutator_order", "[∇ᵢ,Xⱼ] = δᵢⱼ, ratio 4", &canonical, 0.5));
    report.push(Check::from_deviations("canonical_commutator", "[∇ᵢ,Xⱼ] = δᵢⱼ at h=1e-2", &canonical_err, 1e-3));
    report.push(Check::from_deviations("curvature_order", "[∇ᵢ,∇ⱼ] = −½εᵢⱼₖxᵏ/‖x‖³ J, ratio 4", &curv, 0.5));
    report.push(Check::from_deviations("curvature_diagonal", "[∇ᵢ,∇ᵢ] = 0", &curv_diag, cfg.tol));
    report.push(Check::from_deviations("rotation_nabla_order", "[Mᵢ,∇ⱼ] = −εᵢⱼₖ∇ₖ, ratio 4", &rot_nabla, 0.5));
    report.push(Check::from_deviations("rotation_j_order", "[Mᵢ,J] = 0, ratio 4", &rot_j, 0.5));

    let lat = Lattice::new(16, 4.0)?;
    let mut spin = Vec::new();
    for (_, _, psi) in fields.iter().take(5) {
        let full = rotation(2, 2.0 * PI).apply_analytic(psi, 0.0).sample(lat);
        spin.push(full.max_dev(&psi.sample(lat).scale(-1.0))?);
    }
    report.push(Check::from_deviations("spin_half", "exp(2πM₃) = −1", &spin, cfg.tol));

    // lattice identities on random interior-supported fields
    let lat = cfg.lattice;
    let h = lat.step();
    let interior = BorelBox::cuboid(Vec3::new(-0.6, -0.6, -0.6) * lat.half_width(), Vec3::new(0.6, 0.6, 0.6) * lat.half_width());
    let n_lat = 8;
    let mut unit = Vec::new();
    let mut adjoint = Vec::new();
    let mut wpr = Vec::new();
    let mut line = Vec::new();
    let mut xj = Vec::new();
    for _ in 0..n_lat {
        let phi = crate::hilbert::project(&interior, &operators::random_lattice_field(lat, &mut r));
        let psi = crate::hilbert::project(&interior, &operators::random_lattice_field(lat, &mut r));
        let steps = |r: &mut ChaCha8Rng| Vec3::new(r.gen_range(-2..=2) as f64, r.gen_range(-2..=2) as f64, r.gen_range(-2..=2) as f64) * h;
        let (a, b) = loop {
            let (a, b) = (steps(&mut r), steps(&mut r));
            if a.cross(b).norm() > 0.5 * h * h && admissible_on(&lat, a) && admissible_on(&lat, b) && admissible_on(&lat, a + b) {
                break (a, b);
            }
        };
        let ua = uop(a).apply(&psi)?;
        unit.push((ua.norm() - psi.norm()).abs() / psi.norm());
        for op in [jop(), position(0), nabla(1), uop(a), transport_laplacian(h), rotgen(2)] {
            let lhs = phi.inner(&op.apply(&psi)?)?;
            let rhs = op.adjoint().apply(&phi)?.inner(&psi)?;
            adjoint.push(lhs.dist(rhs) / (phi.norm() * psi.norm()));
        }
        let composed = uop(a).apply(&uop(b).apply(&psi)?)?;
        wpr.push(composed.max_dev(&uop(a + b).apply(&psi)?)?);
        let twice = uop(a).apply(&ua)?;
        line.push(twice.max_dev(&uop(a * 2.0).apply(&psi)?)?);
        for i in 0..3 {
            let x = position(i);
            let l = x.apply(&jop().apply(&psi)?)?;
            let rr = jop().apply(&x.apply(&psi)?)?;
            xj.push(l.max_dev(&rr)? / rr.max_abs().max(f64::MIN_POSITIVE));
        }
    }
    report.push(Check::from_deviations("translation_unitarity", "‖U(a)ψ‖ = ‖ψ‖", &unit, cfg.tol));
    report.push(Check::from_deviations("adjoint_consistency", "(φ,Aψ) = (A*φ,ψ)", &adjoint, 1e-10));
    let min_defect = wpr.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Check::with_verdict(
        "weak_projective",
        "U(a)U(b) ≠ U(a+b) for a ∦ b",
        wpr.len(),
        min_defect,
        wpr.iter().sum::<f64>() / wpr.len() as f64,
        1e-6,
        min_defect > 1e-6,
    ));
    report.push(Check::from_deviations("one_parameter_subgroup", "U(a)U(a) = U(2a)", &line, cfg.tol));
    report.push(Check::from_deviations("position_j_commute", "[Xᵢ,J] = 0", &xj, cfg.tol));
    Ok(report)
}

/// Grid shifts whose straight segments from every site avoid the origin.
fn admissible_on(lat: &Lattice, a: Vec3) -> bool {
    (0..lat.len()).all(|s| {
        let x = lat.point(s) - a;
        geometry::check_admissible(a, x).is_ok()
    })
}

// -------------------------------------------------------------- splitting

fn splitting_suite(cfg: &SuiteConfig) -> Result<Report> {
    let mut report = Report::new("splitting", cfg.seed, cfg.samples);
    let mut r = rng(cfg, 4);
    let lat = cfg.lattice;
    let count = 8;
    let mut recon = Vec::new();
    let mut additivity = Vec::new();
    let mut members = Vec::new();
    let mut slice_inner = Vec::new();
    let mut orth = Vec::new();
    let mut cross = Vec::new();
    let mut linear = Vec::new();
    let mut specs = Vec::new();
    for _ in 0..count {
        let spec = loop {
            let w = random_unit(&mut r);
            let t = random_unit(&mut r);
            let tq = t.quaternion();
            let wq = w.quaternion();
            // Gram–Schmidt ω̃ against ω
            let v = tq - wq * (-(wq * tq).q0);
            if v.norm() > 0.2 {
                let t = ImaginaryUnit::new(v.vector())?;
                break SliceSpec::new(w, t)?;
            }
        };
        specs.push(spec);
        let psi = operators::random_lattice_field(lat, &mut r);
        let phi = operators::random_lattice_field(lat, &mut r);
        let pair = splitting::split(&psi, &spec);
        let back = splitting::reconstruct(&pair, &spec)?;
        recon.push(back.max_dev(&psi)? / psi.max_abs());
        let nn = psi.norm_sqr();
        additivity.push((nn - pair.psi1.norm_sqr() - pair.psi2.norm_sqr()).abs() / nn);
        members.push(splitting::in_slice(&pair.psi1, &spec, 0.0).residual / psi.max_abs());
        members.push(splitting::in_slice(&pair.psi2, &spec, 0.0).residual / psi.max_abs());
        let other = splitting::split(&phi, &spec).psi1;
        let ip_scale = other.norm() * pair.psi1.norm();
        slice_inner.push(splitting::off_slice_part(&other, &pair.psi1, &spec)?.norm() / ip_scale);
        let tilde = pair.psi2.rscale(spec.omega_tilde().quaternion());
        let ip = pair.psi1.inner(&tilde)?;
        let (inside, outside) = spec.omega().slice_parts(ip);
        orth.push(inside.norm() / (pair.psi1.norm() * tilde.norm()));
        cross.push(outside.norm() / (pair.psi1.norm() * tilde.norm()));
        let z = spec.omega().complex(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let combo = pair.psi1.rscale(z).add(&other)?;
        linear.push(splitting::in_slice(&combo, &spec, 0.0).residual / combo.max_abs());
    }
    report.push(Check::from_deviations("reconstruction", "ψ₁ + ψ₂ω̃ = ψ", &recon, 1e-14));
    report.push(Check::from_deviations("norm_additivity", "‖ψ‖² = ‖ψ₁‖² + ‖ψ₂‖²", &additivity, cfg.tol));
    report.push(Check::from_deviations("components_in_slice", "Jψₖ = ψₖω", &members, cfg.tol));
    report.push(Check::from_deviations("slice_linear", "H_ω closed under + and ℂ_ω scalars", &linear, cfg.tol));
    report.push(Check::from_deviations("slice_inner_values", "(φ,ψ) ∈ ℂ_ω on H_ω", &slice_inner, cfg.tol));
    report.push(Check::from_deviations("orthogonality", "ℂ_ω part of (ψ₁,ψ₂ω̃) = 0", &orth, cfg.tol));
    let min_cross = cross.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Check::with_verdict(
        "cross_part_nonzero",
        "ω̃ part of (ψ₁,ψ₂ω̃) ≠ 0",
        cross.len(),
        min_cross,
        cross.iter().sum::<f64>() / cross.len() as f64,
        1e-6,
        min_cross > 1e-6,
    ));

    // operators preserving the slice
    let h = lat.step();
    let samples: Vec<LatticeField> = smooth_fields(&mut r, 4).into_iter().map(|(_, _, f)| f.sample(lat)).collect();
    let spec = specs[0];
    let u_step = Vec3::new(h, 2.0 * h, 0.0);
    for op in [uop(u_step).renamed("uop"), position(1).renamed("X2"), transport_laplacian(h).scale(-0.5).renamed("H")] {
        let rep = splitting::reduce_check(&op, &spec, &samples, cfg.tol)?;
        let c = rep.checks[1].clone();
        report.push(c);
    }

    // differential splitting relations, second order in the stencil step
    let fields = smooth_fields(&mut r, 6);
    let mut dj = Vec::new();
    let mut hj = Vec::new();
    let ham = operators::hamiltonian(1.0)?;
    for (center, radius, psi) in &fields {
        let probes = ball_probes(*center, 0.9 * radius, 3);
        let u = random_vec(&mut r, 1.0);
        dj.push(richardson(&commutator(&covderiv(u), &jop()), &zero(), psi, &probes).0);
        hj.push(richardson(&commutator(&ham, &jop()), &zero(), psi, &probes).0);
    }
    report.push(Check::from_deviations("covderiv_j_order", "[∇ᵤ,J] = 0, ratio 4", &dj, 0.5));
    report.push(Check::from_deviations("hamiltonian_j_order", "[H,J] = 0, ratio 4", &hj, 0.5));
    Ok(report)
}

// -------------------------------------------------------------------- gis

fn gis(cfg: &SuiteConfig) -> Result<Report> {
    let gcfg = GisConfig {
        lattice: cfg.lattice,
        seed: cfg.seed,
        samples: (cfg.samples / 10).max(1),
        tetra_samples: cfg.samples,
        tol: cfg.tol,
        ..GisConfig::default()
    };
    operators::gis_verify(&gcfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteConfig {
        SuiteConfig { samples: 300, lattice: Lattice::new(12, 3.0).unwrap(), ..SuiteConfig::default() }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!(matches!("nope".parse::<Suite>(), Err(Error::Usage(_))));
    }

    #[test]
    fn algebra_passes_and_flipped_table_fails() {
        let cfg = quick();
        let r = run(Suite::Algebra, &cfg).unwrap();
        assert!(r.passed(), "{}", r.summary());
        let bad = SuiteConfig { controls: Controls { flipped_table: true, ..Controls::default() }, ..cfg };
        let r = run(Suite::Algebra, &bad).unwrap();
        assert!(!r.check("multiplication_table").unwrap().pass);
        assert!(!r.check("su2_homomorphism").unwrap().pass);
        assert!(r.check("associativity").unwrap().pass);
    }

    #[test]
    fn geometry_passes_and_uncorrected_fails() {
        let cfg = quick();
        let r = run(Suite::Geometry, &cfg).unwrap();
        assert!(r.passed(), "{}", r.summary());
        let bad = SuiteConfig { controls: Controls { uncorrected_transport: true, ..Controls::default() }, ..cfg };
        let r = run(Suite::Geometry, &bad).unwrap();
        assert!(r.check("transport_unitarity").unwrap().max_dev >= 1e-2);
    }

    #[test]
    fn origin_oracle() {
        let t = [Vec3::new(1.0, 1.0, 1.0), Vec3::new(-3.0, 1.0, 1.0), Vec3::new(1.0, -3.0, 1.0), Vec3::new(1.0, 1.0, -3.0)];
        assert_eq!(origin_inside(&t), Some(true));
        let shifted = t.map(|v| v + Vec3::new(5.0, 0.0, 0.0));
        assert_eq!(origin_inside(&shifted), Some(false));
        let on_face = [Vec3::new(1.0, 1.0, 1.0), Vec3::new(-2.0, 1.0, 1.0), Vec3::new(1.0, -2.0, 1.0), Vec3::new(1.0, 1.0, -2.0)];
        assert_eq!(origin_inside(&on_face), None);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = quick();
        let a = run(Suite::Algebra, &cfg).unwrap().to_json().unwrap();
        let b = run(Suite::Algebra, &cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = run(Suite::Algebra, &SuiteConfig { seed: 7, ..cfg }).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn splitting_suite_passes() {
        let r = run(Suite::Splitting, &quick()).unwrap();
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn operators_suite_passes() {
        let r = run(Suite::Operators, &quick()).unwrap();
        assert!(r.passed(), "{}", r.summary());
    }
}
