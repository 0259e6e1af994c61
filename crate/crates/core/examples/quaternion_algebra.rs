//! Hamilton product, conjugation, the slice exponential and the SU(2) embedding.

use qmonopole::quat::{qexp, su2, ImaginaryUnit, Mat2C, Quaternion};

fn main() {
    let names = ["1", "e1", "e2", "e3"];
    println!("multiplication table (row · column):");
    for mu in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|nu| {
                let p = Quaternion::basis(mu) * Quaternion::basis(nu);
                let k = (0..4).find(|&k| p.to_array()[k] != 0.0).unwrap();
                let sign = if p.to_array()[k] < 0.0 { "-" } else { " " };
                format!("{sign}{:<3}", names[k])
            })
            .collect();
        println!("  {:<3} | {}", names[mu], row.join(" "));
    }

    let p = Quaternion::new(1.0, -2.0, 0.5, 3.0);
    let q = Quaternion::new(0.3, 0.7, -1.1, 0.2);
    println!("\np = {p:?}\nq = {q:?}");
    println!("pq       = {:?}", p * q);
    println!("qp       = {:?}", q * p);
    println!("(pq)* - q*p* = {:.1e}", (p * q).conj().dist(q.conj() * p.conj()));
    println!("|pq| - |p||q| = {:.1e}", (p * q).norm() - p.norm() * q.norm());

    let omega = ImaginaryUnit::new([1.0, 1.0, 0.0]).unwrap();
    let w = omega.quaternion();
    println!("\nω = {w:?}, ω² = {:?}", w * w);
    println!("exp(π/2 ω) = {:?}", qexp(w * (std::f64::consts::PI / 2.0)));
    println!("exp(2π ω)  = {:?}", qexp(w * (2.0 * std::f64::consts::PI)));

    let u = p * (1.0 / p.norm());
    let m = su2(u);
    println!("\nsu2(p/|p|) det = {}, unitarity defect = {:.1e}", m.det(), (m.adjoint() * m).max_dev(&Mat2C::identity()));
    println!("homomorphism defect = {:.1e}", su2(p * q).max_dev(&(su2(p) * su2(q))));
}
