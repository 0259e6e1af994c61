//! Monopole flux through triangles and closed tetrahedra: 0 or 2π.

use std::f64::consts::PI;

use qmonopole::geometry::{multiplier, multiplier_from_flux, multiplier_triangle, tetraflux, triflux, Vec3};

fn main() -> qmonopole::Result<()> {
    let x = Vec3::new(1.0, 1.0, 1.0);
    // edge path (1,1,1) → (−3,1,1) → (1,−3,1) → (1,1,−3)
    let (a, b, c) = (Vec3::new(-4.0, 0.0, 0.0), Vec3::new(4.0, -4.0, 0.0), Vec3::new(0.0, 4.0, -4.0));
    println!("tetrahedron around the origin: Φ = {:.15} (2π = {:.15})", tetraflux(x, a, b, c)?, 2.0 * PI);
    let far = Vec3::new(5.0, 5.0, 5.0);
    println!("tetrahedron away from it:     Φ = {:.1e}", tetraflux(far, a, b, c)?);

    let (a, b) = (Vec3::new(0.7, 0.2, 0.0), Vec3::new(-0.1, 0.9, 0.4));
    let x = Vec3::new(1.5, -0.5, 0.2);
    let t = multiplier_triangle(a, b, x);
    println!("\nflux through (x, x+b, x+a+b): {:.12}", triflux(&t)?);
    println!("m(a,b;x) from transports:   {:?}", multiplier(a, b, x)?);
    println!("exp(J Φ) from the flux:     {:?}", multiplier_from_flux(a, b, x)?);
    Ok(())
}
