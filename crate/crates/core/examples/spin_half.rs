//! A full rotation about the third axis returns −ψ.

use std::f64::consts::PI;

use qmonopole::hilbert::{AnalyticField, Lattice};
use qmonopole::operators::rotation;
use qmonopole::{Quaternion, Vec3};

fn main() -> qmonopole::Result<()> {
    let lat = Lattice::new(16, 4.0)?;
    let psi = AnalyticField::gaussian(Vec3::new(1.0, 0.5, -0.5), 0.8, Quaternion::new(0.2, 0.9, -0.3, 0.4));
    let reference = psi.sample(lat);
    for turns in [0.25, 0.5, 1.0, 2.0] {
        let rotated = rotation(2, 2.0 * PI * turns).apply_analytic(&psi, 0.0).sample(lat);
        let plus = rotated.max_dev(&reference)?;
        let minus = rotated.max_dev(&reference.scale(-1.0))?;
        println!("angle {:>4}·2π: |Rψ − ψ| = {plus:.2e}, |Rψ + ψ| = {minus:.2e}", turns);
    }
    Ok(())
}
