//! Parallel transport along straight segments: unit norm, endpoint rotation and the cocycle law.

use qmonopole::geometry::{transport, transport_cosine_form, TransportForm, Vec3};

fn main() -> qmonopole::Result<()> {
    let x = Vec3::new(1.0, 0.5, -0.3);
    let a = Vec3::new(-0.4, 1.2, 0.8);
    let w = transport(a, x)?;
    println!("w(a;x) = {w:?}  (|w| = {:.16})", w.norm());

    let xh = x.to_quaternion() * (1.0 / x.norm());
    let yh = (x + a).to_quaternion() * (1.0 / (x + a).norm());
    println!("w x̂ w* - (x+a)^ = {:.1e}", (w * xh * w.conj()).dist(yh));

    for (s, t) in [(0.3, 0.5), (-0.7, 1.0), (0.25, -0.25)] {
        let lhs = transport(a * t, x + a * s)? * transport(a * s, x)?;
        let rhs = transport(a * (s + t), x)?;
        println!("cocycle s = {s:5}, t = {t:5}: deviation {:.1e}", lhs.dist(rhs));
    }

    let corrected = transport_cosine_form(TransportForm::Corrected, a, x)?;
    println!("\ncosine form, corrected radicand: |w| - 1 = {:.1e}", corrected.norm() - 1.0);
    match transport_cosine_form(TransportForm::Uncorrected, a, x) {
        Ok(q) => println!("cosine form, uncorrected radicand: |w| - 1 = {:.3}", q.norm() - 1.0),
        Err(e) => println!("cosine form, uncorrected radicand: {e}"),
    }

    match transport(Vec3::new(-2.0, -1.0, 0.6), x) {
        Err(e) => println!("segment through the origin: {e}"),
        Ok(q) => println!("unexpected: {q:?}"),
    }
    Ok(())
}
