//! Eigensolves and Neumann source solves on assembled pairs.

use crate::error::Result;
use crate::fem::assemble::{bottom_flux_load, AssembledPair};
use crate::fem::mesh::TriMesh;
use crate::linalg::{generalized_lowest_modes, EigenPairs, SpdSolver};

/// Lowest `n_modes` Neumann-Laplacian eigenvalues `Lambda` on the meshed
/// domain, via the shifted pencil `(K + M) v = (Lambda + 1) M v`. Values
/// ascend and start at the constant mode `Lambda = 0`; eigenvectors are
/// M-orthonormal.
pub fn eigen_lowest(pair: &AssembledPair, n_modes: usize, tol: f64) -> Result<EigenPairs> {
    let mut eig = generalized_lowest_modes(&pair.a, &pair.m, n_modes, tol)?;
    for v in &mut eig.values {
        *v -= 1.0;
    }
    Ok(eig)
}

/// Solves `(1 - Laplacian) u = 0` with Neumann flux data `g` on the bottom
/// chain and zero flux elsewhere; `g` receives `(x, y, n_x, n_y)` with the
/// outward unit normal.
pub fn solve_neumann_source<F>(pair: &AssembledPair, mesh: &TriMesh, g: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, f64, f64, f64) -> f64,
{
    let load = bottom_flux_load(mesh, g);
    SpdSolver::new(&pair.a)?.solve(&load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble::assemble;
    use crate::fem::mesh::build_mesh;
    use crate::geometry::{BcX, PerturbationProfile, RectangleSpec};
    use crate::linalg::{dense_generalized_eigen, dot, spd_solve};
    use std::f64::consts::PI;

    fn flat_pair(bc_x: BcX, n: usize) -> (TriMesh, AssembledPair) {
        let spec = RectangleSpec::new(1.0, 1.0, bc_x).unwrap();
        let mesh = build_mesh(&spec, None, n, n).unwrap();
        let pair = assemble(&mesh).unwrap();
        (mesh, pair)
    }

    #[test]
    fn matches_dense_pencil_oracle() {
        let (_, pair) = flat_pair(BcX::Neumann, 6);
        let eig = eigen_lowest(&pair, 5, 1e-11).unwrap();
        let dense = dense_generalized_eigen(&pair.a.to_dense(), &pair.m.to_dense()).unwrap();
        for k in 0..5 {
            assert!((eig.values[k] - (dense.values[k] - 1.0)).abs() <= 1e-8);
        }
    }

    #[test]
    fn unit_square_low_spectrum() {
        let (_, pair) = flat_pair(BcX::Neumann, 32);
        let eig = eigen_lowest(&pair, 4, 1e-9).unwrap();
        let pi2 = PI * PI;
        assert!(eig.values[0].abs() <= 1e-8);
        assert!((eig.values[1] - pi2).abs() <= 0.005 * pi2);
        assert!((eig.values[2] - pi2).abs() <= 0.005 * pi2);
        assert!((eig.values[3] - 2.0 * pi2).abs() <= 0.01 * 2.0 * pi2);
    }

    #[test]
    fn periodic_spectrum_has_triple_cluster() {
        let (_, pair) = flat_pair(BcX::Periodic, 48);
        let eig = eigen_lowest(&pair, 5, 1e-9).unwrap();
        let pi2 = PI * PI;
        assert!(eig.values[0].abs() <= 1e-8);
        assert!((eig.values[1] - pi2).abs() <= 0.01 * pi2);
        for k in 2..5 {
            assert!((eig.values[k] - 4.0 * pi2).abs() <= 0.01 * 4.0 * pi2);
        }
    }

    #[test]
    fn eigenvalue_error_decays_at_second_order() {
        let pi2 = PI * PI;
        let err: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&n| {
                let (_, pair) = flat_pair(BcX::Neumann, n);
                let eig = eigen_lowest(&pair, 2, 1e-10).unwrap();
                (eig.values[1] - pi2).abs()
            })
            .collect();
        for w in err.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(
                (order - 2.0).abs() <= 0.3,
                "observed order {order} outside 2.0 +- 0.3"
            );
        }
    }

    #[test]
    fn source_solve_matches_cosh_oracle() {
        let (mesh, pair) = flat_pair(BcX::Neumann, 48);
        let u = solve_neumann_source(&pair, &mesh, |_, _, _, _| 1.0).unwrap();
        let sinh1 = 1.0_f64.sinh();
        let mut max_err = 0.0_f64;
        for (vid, v) in mesh.vertices.iter().enumerate() {
            let want = (1.0 - v[1]).cosh() / sinh1;
            max_err = max_err.max((u[mesh.dof_of_vertex[vid]] - want).abs());
        }
        assert!(max_err <= 2e-3, "max nodal error {max_err:.3e}");
    }

    #[test]
    fn source_solves_are_reciprocal() {
        let spec = RectangleSpec::new(1.0, 1.0, BcX::Neumann).unwrap();
        let profile = PerturbationProfile::smooth_cosine(1.0, 0.1).unwrap();
        let mesh = build_mesh(&spec, Some(&profile), 32, 32).unwrap();
        let pair = assemble(&mesh).unwrap();
        let g1 = |x: f64| (PI * x).cos();
        let g2 = |x: f64| x * (1.0 - x);
        let l1 = bottom_flux_load(&mesh, |x, _, _, _| g1(x));
        let l2 = bottom_flux_load(&mesh, |x, _, _, _| g2(x));
        let solver = SpdSolver::new(&pair.a).unwrap();
        let u1 = solver.solve(&l1).unwrap();
        let u2 = solver.solve(&l2).unwrap();
        let lhs = dot(&l2, &u1);
        let rhs = dot(&l1, &u2);
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn galerkin_energy_identity_holds() {
        let (mesh, pair) = flat_pair(BcX::Neumann, 24);
        let load = bottom_flux_load(&mesh, |x, _, _, _| (2.0 * PI * x).cos());
        let u = spd_solve(&pair.a, &load).unwrap();
        let energy = pair.a.bilinear(&u, &u);
        let work = dot(&load, &u);
        assert!((energy - work).abs() <= 1e-9 * work.abs());
    }

    #[test]
    fn zero_flux_gives_zero_solution() {
        let (mesh, pair) = flat_pair(BcX::Neumann, 8);
        let u = solve_neumann_source(&pair, &mesh, |_, _, _, _| 0.0).unwrap();
        assert!(u.iter().all(|v| v.abs() <= 1e-14));
    }
}
