//! Canonical and curvature commutators by finite differences, with Richardson ratios.

use qmonopole::hilbert::AnalyticField;
use qmonopole::operators::{ball_probes, commutator, commutator_check, identity_check, nabla, position, QOperator};
use qmonopole::{Quaternion, Vec3};

fn main() {
    let center = Vec3::new(1.5, -1.0, 1.2);
    let psi = AnalyticField::bump(center, 1.0, Quaternion::new(0.4, -0.3, 0.8, 0.2));
    let probes = ball_probes(center, 0.8, 4);

    println!("[∇1, X1] = 1:");
    let lhs = commutator(&nabla(0), &position(0));
    for h in [2e-2, 1e-2, 5e-3] {
        let r = identity_check(&lhs, &QOperator::identity(), &psi, "bump", h, &probes);
        println!("  h = {h:.0e}: max deviation {:.3e}", r.max_dev);
    }

    println!("[∇i, ∇j] = −½ εijk xᵏ/‖x‖³ J:");
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let e1 = commutator_check(i, j, &psi, "bump", 1e-2, &probes).max_dev;
        let e2 = commutator_check(i, j, &psi, "bump", 5e-3, &probes).max_dev;
        println!("  ({}, {}): {e1:.3e} -> {e2:.3e}, ratio {:.3}", i + 1, j + 1, e1 / e2);
    }
}
