//! Splitting a quaternionic field into two slice-valued components.

use qmonopole::hilbert::{AnalyticField, Lattice};
use qmonopole::operators::uop;
use qmonopole::splitting::{in_slice, reconstruct, reduce_check, slice_component, split, SliceSpec};
use qmonopole::{Quaternion, Vec3};

fn main() -> qmonopole::Result<()> {
    let lat = Lattice::new(16, 4.0)?;
    let spec = SliceSpec::default();
    let psi = AnalyticField::gaussian(Vec3::new(1.5, -1.0, 0.5), 0.9, Quaternion::new(0.3, -0.7, 0.2, 0.6)).sample(lat);

    let pair = split(&psi, &spec);
    println!("‖ψ‖² = {:.15}", psi.norm_sqr());
    println!("‖ψ₁‖² + ‖ψ₂‖² = {:.15}", pair.psi1.norm_sqr() + pair.psi2.norm_sqr());
    println!("reconstruction error {:.1e}", reconstruct(&pair, &spec)?.max_dev(&psi)?);
    println!("slice residuals: ψ {:.2e}, ψ₁ {:.1e}, ψ₂ {:.1e}",
        in_slice(&psi, &spec, 1e-12).residual,
        in_slice(&pair.psi1, &spec, 1e-12).residual,
        in_slice(&pair.psi2, &spec, 1e-12).residual);

    let member = slice_component(&AnalyticField::gaussian(Vec3::new(-1.0, 1.0, 1.0), 0.8, Quaternion::E0), &spec).sample(lat);
    let a = Vec3::new(lat.step(), 0.0, -lat.step());
    println!("\n{}", reduce_check(&uop(a).renamed("uop"), &spec, &[member], 1e-12)?.summary());
    Ok(())
}
