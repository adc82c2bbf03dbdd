//! Lowest Neumann eigenvalues of the unit square against the separable
//! reference values pi^2 (p^2 + q^2).

use nh::fem::{assemble, build_mesh, eigen_lowest};
use nh::geometry::{reference_spectrum, BcX, RectangleSpec};

fn main() -> nh::Result<()> {
    let spec = RectangleSpec::new(1.0, 1.0, BcX::Neumann)?;
    let modes = 6;
    let reference = reference_spectrum(&spec, modes);

    println!("unit square, Neumann, lowest {modes} eigenvalues");
    println!("{:>4} {:>18} {:>18} {:>12}", "n", "lambda_fem", "lambda_ref", "rel_err");
    for n in [16, 32, 64] {
        let mesh = build_mesh(&spec, None, n, n)?;
        let pair = assemble(&mesh)?;
        let eig = eigen_lowest(&pair, modes, 1e-9)?;
        for (k, reference) in reference.iter().enumerate().skip(1) {
            let rel = (eig.values[k] - reference.lambda).abs() / reference.lambda;
            println!(
                "{:>4} {:>18.12} {:>18.12} {:>12.3e}",
                n, eig.values[k], reference.lambda, rel
            );
        }
        println!();
    }
    Ok(())
}
