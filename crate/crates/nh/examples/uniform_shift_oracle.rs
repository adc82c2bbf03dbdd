//! Closed-form check of the boundary correction: squeezing the unit square
//! to height 1 - c shifts the (0,1) eigenvalue to pi^2 / (1-c)^2, so the
//! first-order correction is exactly 2 c pi^2 and the remainder 3 c^2 pi^2
//! plus higher orders.

use std::f64::consts::PI;

use nh::fem::{assemble, build_mesh, eigen_lowest};
use nh::geometry::{cluster_at, reference_spectrum, BcX, PerturbationProfile, RectangleSpec};
use nh::hadamard::{boundary_correction, correction_spectrum};

fn main() -> nh::Result<()> {
    let spec = RectangleSpec::new(1.0, 1.0, BcX::Neumann)?;
    let cluster = cluster_at(&reference_spectrum(&spec, 12), 2, 1e-9)?;
    let n = 64;

    println!("uniform squeeze of the pi^2 doublet, n = {n}");
    println!(
        "{:>8} {:>16} {:>16} {:>16} {:>16}",
        "c", "kappa", "2 c pi^2", "remainder", "3 c^2 pi^2"
    );
    for c in [0.02, 0.01, 0.005] {
        let profile = PerturbationProfile::uniform_shift(spec.width, c)?;
        let kappa = correction_spectrum(&boundary_correction(&cluster, &profile)?)?;

        let mesh = build_mesh(&spec, Some(&profile), n, n)?;
        let eig = eigen_lowest(&assemble(&mesh)?, cluster.offset + cluster.multiplicity() + 1, 1e-9)?;
        let flat = build_mesh(&spec, None, n, n)?;
        let flat_eig = eigen_lowest(&assemble(&flat)?, cluster.offset + cluster.multiplicity() + 1, 1e-9)?;

        // The squeezed member of the doublet is the larger correction; pair
        // ascending corrections with ascending measured shifts.
        let idx = cluster.offset + 1;
        let shift = eig.values[idx] - flat_eig.values[idx];
        let remainder = (shift - kappa[1]).abs();
        println!(
            "{:>8} {:>16.12} {:>16.12} {:>16.3e} {:>16.3e}",
            c,
            kappa[1],
            2.0 * c * PI * PI,
            remainder,
            3.0 * c * c * PI * PI
        );
    }
    Ok(())
}
