//! Complex-slice reduction `H_ω = {ψ | Jψ = ψω}` and the dimension-doubling
//! isometry `ψ ↦ (ψ₁, ψ₂)` with `ψ = ψ₁ + ψ₂ ω̃`.
//!
//! What the algebra gives for the two components: `ψ₁` and `ψ₂ω̃` are
//! orthogonal in the real (and `ℂ_ω`) part of the inner product, so norms
//! add; the part of `(ψ₁, ψ₂ω̃)` along `ω̃` and `ωω̃` does not vanish in
//! general. Both `ψ₁, ψ₂ ∈ H_ω`, and their mutual product `(ψ₁, ψ₂)` is an
//! arbitrary element of `ℂ_ω`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};
use crate::hilbert::{AnalyticField, LatticeField};
use crate::operators::QOperator;
use crate::quat::{ImaginaryUnit, Quaternion};
use crate::report::{Check, Report};

/// An anticommuting pair of imaginary units `(ω, ω̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    omega: ImaginaryUnit,
    omega_tilde: ImaginaryUnit,
}

impl Default for SliceSpec {
    fn default() -> Self {
        Self { omega: ImaginaryUnit::E3, omega_tilde: ImaginaryUnit::E1 }
    }
}

impl SliceSpec {
    pub fn new(omega: ImaginaryUnit, omega_tilde: ImaginaryUnit) -> Result<Self> {
        let (w, t) = (omega.quaternion(), omega_tilde.quaternion());
        let anti = (t * w + w * t).max_abs();
        if anti > 1e-12 {
            return Err(Error::Usage(format!("ω̃ω + ωω̃ = {anti:e} ≠ 0: units must anticommute")));
        }
        Ok(Self { omega, omega_tilde })
    }

    pub fn omega(&self) -> ImaginaryUnit {
        self.omega
    }

    pub fn omega_tilde(&self) -> ImaginaryUnit {
        self.omega_tilde
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub psi1: LatticeField,
    pub psi2: LatticeField,
}

fn j_at(x: Vec3) -> Quaternion {
    geometry::dirq(x).expect("lattice sites avoid the origin").quaternion()
}

/// Pointwise `(ψ₁(x), ψ₂(x))` from `ψ(x)` and `j(x)`.
fn split_value(j: Quaternion, q: Quaternion, s: &SliceSpec) -> (Quaternion, Quaternion) {
    let w = s.omega.quaternion();
    let t = s.omega_tilde.quaternion();
    let jqw = j * q * w;
    ((q - jqw) * 0.5, -((q + jqw) * 0.5) * t)
}

/// `ψ₁ = ½(ψ − Jψω)`, `ψ₂ = −½(ψ + Jψω)ω̃`.
pub fn split(psi: &LatticeField, s: &SliceSpec) -> SplitPair {
    let psi1 = psi.map(|x, q| split_value(j_at(x), q, s).0);
    let psi2 = psi.map(|x, q| split_value(j_at(x), q, s).1);
    SplitPair { psi1, psi2 }
}

/// `ψ₁ + ψ₂ω̃`.
pub fn reconstruct(pair: &SplitPair, s: &SliceSpec) -> Result<LatticeField> {
    let t = s.omega_tilde.quaternion();
    pair.psi1.zip_with(&pair.psi2, |a, b| a + b * t)
}

/// The `H_ω` component `½(ψ − Jψω)` of an analytic field.
pub fn slice_component(psi: &AnalyticField, s: &SliceSpec) -> AnalyticField {
    let (psi, s) = (psi.clone(), *s);
    AnalyticField::new(move |x| match geometry::dirq(x) {
        Ok(j) => split_value(j.quaternion(), psi.eval(x), &s).0,
        Err(_) => Quaternion::ZERO,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceResidual {
    /// `max_x |j(x)ψ(x) − ψ(x)ω|`.
    pub residual: f64,
    pub tol: f64,
    pub member: bool,
}

pub fn in_slice(psi: &LatticeField, s: &SliceSpec, tol: f64) -> SliceResidual {
    let w = s.omega.quaternion();
    let residual = psi
        .values()
        .iter()
        .enumerate()
        .map(|(site, &q)| (j_at(psi.lattice().point(site)) * q - q * w).norm())
        .fold(0.0, f64::max);
    SliceResidual { residual, tol, member: residual <= tol }
}

/// Component of `(φ, ψ)` outside `ℂ_ω`.
pub fn off_slice_part(phi: &LatticeField, psi: &LatticeField, s: &SliceSpec) -> Result<Quaternion> {
    Ok(s.omega.slice_parts(phi.inner(psi)?).1)
}

/// Applies `op` to the slice component of every sample and reports the slice
/// residual of the image relative to its largest site value. Operators that
/// commute with `J` keep the residual at round-off (or discretization) level.
pub fn reduce_check(op: &QOperator, s: &SliceSpec, samples: &[LatticeField], tol: f64) -> Result<Report> {
    let mut before = Vec::with_capacity(samples.len());
    let mut after = Vec::with_capacity(samples.len());
    for psi in samples {
        let member = split(psi, s).psi1;
        let scale = member.max_abs().max(f64::MIN_POSITIVE);
        before.push(in_slice(&member, s, tol).residual / scale);
        let image = op.apply(&member)?;
        let scale = image.max_abs().max(f64::MIN_POSITIVE);
        after.push(in_slice(&image, s, tol).residual / scale);
    }
    let mut report = Report::new("reduce", 0, samples.len());
    report.push(Check::from_deviations("input_in_slice", "Jφ = φω", &before, tol));
    report.push(Check::from_deviations(
        &format!("{}_preserves_slice", op.name()),
        "J(Aφ) = (Aφ)ω",
        &after,
        tol,
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Lattice;
    use crate::operators::{eop, hamiltonian, position, uop};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice() -> Lattice {
        Lattice::new(8, 2.0).unwrap()
    }

    fn random_field(seed: u64) -> LatticeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = lattice();
        let data = (0..lat.len())
            .map(|_| Quaternion::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        LatticeField::from_vec(lat, data).unwrap()
    }

    #[test]
    fn slice_spec_requires_anticommuting_units() {
        assert!(SliceSpec::new(ImaginaryUnit::E3, ImaginaryUnit::E3).is_err());
        let w = ImaginaryUnit::new([1.0, 1.0, 0.0]).unwrap();
        let t = ImaginaryUnit::new([1.0, -1.0, 0.5]).unwrap();
        assert!(SliceSpec::new(w, t).is_ok());
    }

    #[test]
    fn split_and_reconstruct() {
        let s = SliceSpec::default();
        let psi = random_field(1);
        let pair = split(&psi, &s);
        assert!(reconstruct(&pair, &s).unwrap().max_dev(&psi).unwrap() <= 1e-14);
        assert!(in_slice(&pair.psi1, &s, 1e-14).member);
        assert!(in_slice(&pair.psi2, &s, 1e-14).member);
        let n = psi.norm_sqr();
        assert!((n - pair.psi1.norm_sqr() - pair.psi2.norm_sqr()).abs() <= 1e-12 * n.max(1.0));
    }

    #[test]
    fn members_split_trivially() {
        let s = SliceSpec::default();
        let member = split(&random_field(2), &s).psi1;
        let pair = split(&member, &s);
        assert!(pair.psi1.max_dev(&member).unwrap() < 1e-15);
        assert!(pair.psi2.max_abs() < 1e-15);
    }

    #[test]
    fn constant_field_residual() {
        let s = SliceSpec::default();
        let lat = lattice();
        let one = LatticeField::from_fn(lat, |_| Quaternion::E0);
        let r = in_slice(&one, &s, 1e-12);
        let want = (0..lat.len())
            .map(|site| (j_at(lat.point(site)) - Quaternion::E3).norm())
            .fold(0.0, f64::max);
        assert_eq!(r.residual, want);
        assert!(!r.member);
    }

    #[test]
    fn slice_is_complex_linear() {
        let s = SliceSpec::default();
        let a = split(&random_field(3), &s).psi1;
        let b = split(&random_field(4), &s).psi1;
        let z = s.omega().complex(0.4, -1.3);
        assert!(in_slice(&a.rscale(z), &s, 1e-14).member);
        assert!(in_slice(&a.add(&b).unwrap(), &s, 1e-14).member);
        // inner products of members lie in ℂ_ω
        assert!(off_slice_part(&a, &b, &s).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn orthogonality_structure() {
        let s = SliceSpec::default();
        let psi = random_field(5);
        let pair = split(&psi, &s);
        let t = s.omega_tilde().quaternion();
        let ip = pair.psi1.inner(&pair.psi2.rscale(t)).unwrap();
        let (inside, outside) = s.omega().slice_parts(ip);
        assert!(inside.max_abs() < 1e-12);
        assert!(outside.max_abs() > 1e-3);
        // (ψ₁, ψ₂) is a generic element of ℂ_ω
        let ip12 = pair.psi1.inner(&pair.psi2).unwrap();
        assert!(s.omega().contains(ip12, 1e-12) && ip12.norm() > 1e-3);
    }

    #[test]
    fn reduction_of_operators() {
        let s = SliceSpec::default();
        let lat = Lattice::new(12, 3.0).unwrap();
        let samples: Vec<LatticeField> = (0..3)
            .map(|k| crate::hilbert::AnalyticField::bump(Vec3::new(1.2, -0.3 + 0.2 * k as f64, 0.4), 1.0, Quaternion::new(1.0, 0.2, -0.4, 0.3)).sample(lat))
            .collect();
        let h = lat.step();
        let r = reduce_check(&uop(Vec3::new(h, 0.0, 2.0 * h)), &s, &samples, 1e-12).unwrap();
        assert!(r.passed(), "{}", r.summary());
        let r = reduce_check(&position(0), &s, &samples, 1e-12).unwrap();
        assert!(r.passed());
        let r = reduce_check(&eop(0), &s, &samples, 1e-12).unwrap();
        assert!(!r.passed());
        assert!(r.checks[1].max_dev > 0.5);
        let r = reduce_check(&hamiltonian(1.0).unwrap(), &s, &samples, 0.5).unwrap();
        assert!(r.checks[1].max_dev > 1e-12 && r.checks[1].max_dev < 0.5, "{}", r.summary());
    }
}
