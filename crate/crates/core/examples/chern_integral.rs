//! Integrated curvature over spheres of several radii, with the convergence table.

use qmonopole::cli::chern_table;
use qmonopole::geometry::{chern_on_sphere, Orientation};

fn main() -> qmonopole::Result<()> {
    println!("{:>5} {:>22} {:>11} {:>7}", "n", "value", "error", "ratio");
    for r in chern_table(1.0, 256)? {
        println!("{:>5} {:>22.16} {:>11.3e} {:>7}", r.n, r.value, r.error, r.ratio.map_or("-".into(), |x| format!("{x:.2}")));
    }
    for radius in [0.1, 1.0, 7.0, 100.0] {
        let v = chern_on_sphere(radius, Orientation::Outward, 256, 256)?;
        println!("radius {radius:>6}: {v:.15}");
    }
    println!("inward orientation: {:.15}", chern_on_sphere(1.0, Orientation::Inward, 256, 256)?);
    Ok(())
}
