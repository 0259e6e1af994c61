//! Covariance of spectral projections under translations, and the composition defect.

use qmonopole::geometry::multiplier;
use qmonopole::hilbert::{project, AnalyticField, BorelBox};
use qmonopole::operators::{compose_defect, gis_verify, uop, vshift, GisConfig};
use qmonopole::{Quaternion, Vec3};

fn main() -> qmonopole::Result<()> {
    let cfg = GisConfig::default();
    let lat = cfg.lattice;
    let h = lat.step();
    let psi = AnalyticField::gaussian(Vec3::new(0.5, 1.0, -0.5), 0.5, Quaternion::new(0.3, -0.6, 0.2, 0.7)).sample(lat);

    let delta = BorelBox::cuboid(Vec3::new(-1.0, -2.0, -1.0), Vec3::new(2.0, 1.0, 1.5));
    let a = Vec3::new(2.0 * h, -h, 0.0);
    let v = vshift(a);
    let lhs = v.apply(&project(&delta, &v.adjoint().apply(&psi)?))?;
    let rhs = project(&delta.translate(a), &psi);
    println!("V(a) E(Δ) V(a)* ψ vs E(Δ+a) ψ: identical = {}", lhs == rhs);

    let b = Vec3::new(0.0, h, 2.0 * h);
    let defect = compose_defect(a, b).apply(&psi)?;
    let interior = BorelBox::cuboid(Vec3::new(-3.0, -3.0, -3.0), Vec3::new(3.0, 3.0, 3.0));
    let mut worst: f64 = 0.0;
    for s in (0..lat.len()).filter(|&s| interior.contains(lat.point(s))) {
        let x = lat.point(s);
        worst = worst.max(defect.at(s).dist(multiplier(a, b, x)? * psi.at(s)));
    }
    println!("U(a+b)* U(a) U(b) ψ vs m(a,b;x) ψ(x) on interior sites: {worst:.1e}");
    let ua = uop(a).apply(&psi)?;
    println!("‖U(a)ψ‖ - ‖ψ‖ = {:.1e}", ua.norm() - psi.norm());

    println!("\n{}", gis_verify(&GisConfig { samples: 200, tetra_samples: 2000, ..cfg })?.summary());
    Ok(())
}
