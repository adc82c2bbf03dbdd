//! Eigenvalue-correction matrices on cluster eigenspaces: boundary-trace,
//! volume-corrector, and homogenized forms, plus predictions against FEM
//! ground truth.

use crate::error::{invalid, Error, Result};
use crate::fem::{bottom_flux_load, AssembledPair, CellSolution, TriMesh};
use crate::geometry::{ModeCluster, PerturbationProfile, RectangleSpec};
use crate::linalg::{dense_generalized_eigen, dot, DenseSymMatrix, EigenPairs, Mat, SpdSolver};

const GAUSS4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_86,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_86,
];
/// Panels for trace integrals of pure trigonometric products.
const TRACE_PANELS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionKind {
    Boundary,
    Volume,
    Homogenized,
}

/// Symmetric correction form on a cluster eigenspace, expressed directly as
/// a Lambda-shift matrix: its eigenvalues predict the eigenvalue shifts of
/// the perturbed domain relative to the cluster value.
pub struct CorrectionMatrix {
    pub kind: CorrectionKind,
    pub entries: DenseSymMatrix,
    /// Max-abs asymmetry of the assembled form before symmetrization; zero
    /// for the closed-form constructions, a discretization diagnostic for
    /// the volume form.
    pub asymmetry_defect: f64,
    /// Gram matrix of the cluster basis in the metric the form was built
    /// with: identity for closed-form traces, the FEM mass Gram of the
    /// interpolated modes for the volume form.
    pub gram: DenseSymMatrix,
}

/// Predicted versus measured cluster eigenvalues for one perturbation size.
pub struct CorrectionReport {
    pub lambda_m: f64,
    pub kappa_values: Vec<f64>,
    pub predicted_lambda: Vec<f64>,
    pub fem_lambda: Vec<f64>,
    pub remainders: Vec<f64>,
    pub d_hat: f64,
}

fn identity_gram(n: usize) -> DenseSymMatrix {
    DenseSymMatrix::diag(&vec![1.0; n])
}

/// Composite 4-point Gauss quadrature of `f` over `[0, width]` with `panels`
/// uniform panels.
fn quad_bottom<F: FnMut(f64) -> f64>(width: f64, panels: usize, mut f: F) -> f64 {
    let dx = width / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * dx;
        let mut panel = 0.0;
        for q in 0..4 {
            let x = mid + 0.5 * dx * GAUSS4_NODES[q];
            panel += GAUSS4_WEIGHTS[q] * f(x);
        }
        total += 0.5 * dx * panel;
    }
    total
}

/// First-order boundary form on the cluster eigenspace:
/// `K_ab = integral h (phi_a' phi_b' - Lambda_m phi_a phi_b) dx` along the
/// bottom edge, by composite Gauss aligned to the profile's sample grid so
/// profile corners never straddle a panel.
pub fn boundary_correction(
    cluster: &ModeCluster,
    profile: &PerturbationProfile,
) -> Result<CorrectionMatrix> {
    let j_m = cluster.multiplicity();
    let mut entries = DenseSymMatrix::zeros(j_m);
    for a in 0..j_m {
        for b in a..j_m {
            let (ma, mb) = (&cluster.modes[a], &cluster.modes[b]);
            let val = quad_bottom(profile.width(), profile.intervals(), |x| {
                let h = match profile.eval(x) {
                    Ok((h, _)) => h,
                    Err(_) => f64::NAN,
                };
                h * (ma.trace_dx(x) * mb.trace_dx(x)
                    - cluster.lambda * ma.trace(x) * mb.trace(x))
            });
            entries.set_sym(a, b, val);
        }
    }
    if !entries.is_finite() {
        return Err(invalid("boundary quadrature left the profile domain"));
    }
    Ok(CorrectionMatrix {
        kind: CorrectionKind::Boundary,
        entries,
        asymmetry_defect: 0.0,
        gram: identity_gram(j_m),
    })
}

/// Volume form via FEM correctors on the perturbed mesh: for each cluster
/// mode solve `(1 - Laplacian) v = 0` with flux `-(n . grad phi) / lambda_m`
/// on the carved bottom, recenter `v` to zero mass-weighted mean (exact for
/// zero-mean flux data; for net-flux data it removes the constant resolvent
/// mode, which sits outside the cluster window), assemble the pairing
/// `T_ab = (v_a, M phi_b)` against the interpolated modes, symmetrize, and
/// convert the resolvent shift to a Lambda-shift with
/// `kappa = -lambda_m^2 tau`. The mass Gram of the interpolants is kept so
/// `predict` solves the pencil `(entries, gram)`.
pub fn volume_correction(
    cluster: &ModeCluster,
    mesh: &TriMesh,
    pair: &AssembledPair,
) -> Result<CorrectionMatrix> {
    let j_m = cluster.multiplicity();
    let lambda = 1.0 + cluster.lambda;
    let solver = SpdSolver::new(&pair.a)?;
    let m_ones = pair.m.matvec(&vec![1.0; mesh.n_dofs]);
    let total_mass: f64 = m_ones.iter().sum();
    let mut correctors = Vec::with_capacity(j_m);
    let mut interpolants = Vec::with_capacity(j_m);
    for mode in &cluster.modes {
        let load = bottom_flux_load(mesh, |x, y, nx, ny| {
            let g = mode.grad(x, y);
            -(nx * g[0] + ny * g[1]) / lambda
        });
        let mut v = solver.solve(&load)?;
        let mean = dot(&m_ones, &v) / total_mass;
        for vi in v.iter_mut() {
            *vi -= mean;
        }
        correctors.push(v);
        let mut p = vec![0.0; mesh.n_dofs];
        for (vid, vert) in mesh.vertices.iter().enumerate() {
            p[mesh.dof_of_vertex[vid]] = mode.eval(vert[0], vert[1]);
        }
        interpolants.push(p);
    }
    let mass_p: Vec<Vec<f64>> = interpolants.iter().map(|p| pair.m.matvec(p)).collect();
    let mut raw = Mat::zeros(j_m, j_m);
    for a in 0..j_m {
        for b in 0..j_m {
            raw.set(a, b, dot(&correctors[a], &mass_p[b]));
        }
    }
    let (tau, asymmetry_defect) = DenseSymMatrix::symmetrized_from(&raw);
    let entries = tau.scaled(-lambda * lambda);
    let mut gram = DenseSymMatrix::zeros(j_m);
    for a in 0..j_m {
        for b in a..j_m {
            gram.set_sym(a, b, dot(&interpolants[a], &mass_p[b]));
        }
    }
    Ok(CorrectionMatrix {
        kind: CorrectionKind::Volume,
        entries,
        asymmetry_defect,
        gram,
    })
}

/// Homogenized form for an oscillation of period `delta`: closed-form trace
/// integrals weighted by the cell constants,
/// `kappa_ab = -delta (eta0 + eta1) integral phi_a' phi_b'
///  + delta Lambda_m eta0 integral phi_a phi_b` on the bottom trace.
pub fn homogenized_correction(
    spec: &RectangleSpec,
    cluster: &ModeCluster,
    cell: &CellSolution,
    delta: f64,
) -> Result<CorrectionMatrix> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("oscillation period must be positive"));
    }
    let j_m = cluster.multiplicity();
    let mut entries = DenseSymMatrix::zeros(j_m);
    for a in 0..j_m {
        for b in a..j_m {
            let (ma, mb) = (&cluster.modes[a], &cluster.modes[b]);
            let d_ab = quad_bottom(spec.width, TRACE_PANELS, |x| {
                ma.trace_dx(x) * mb.trace_dx(x)
            });
            let g_ab = quad_bottom(spec.width, TRACE_PANELS, |x| ma.trace(x) * mb.trace(x));
            let val = -delta * (cell.eta0 + cell.eta1) * d_ab
                + delta * cluster.lambda * cell.eta0 * g_ab;
            entries.set_sym(a, b, val);
        }
    }
    Ok(CorrectionMatrix {
        kind: CorrectionKind::Homogenized,
        entries,
        asymmetry_defect: 0.0,
        gram: identity_gram(j_m),
    })
}

/// Eigenvalues of the correction pencil `(entries, gram)`, ascending. For
/// boundary and homogenized corrections the Gram is the identity and this is
/// a plain symmetric eigensolve.
pub fn correction_spectrum(corr: &CorrectionMatrix) -> Result<Vec<f64>> {
    Ok(dense_generalized_eigen(&corr.entries, &corr.gram)?.values)
}

/// Pairs the correction's predicted shifts with the FEM eigenvalues falling
/// in the cluster's isolation window (midpoints to the neighbor clusters;
/// mirrored below for the lowest cluster).
pub fn predict(
    cluster: &ModeCluster,
    corr: &CorrectionMatrix,
    fem_truth: &EigenPairs,
    d_hat: f64,
) -> Result<CorrectionReport> {
    let j_m = cluster.multiplicity();
    if corr.entries.order() != j_m {
        return Err(invalid(format!(
            "correction of order {} does not act on a {j_m}-fold cluster",
            corr.entries.order()
        )));
    }
    if fem_truth.values.len() < cluster.offset + j_m {
        return Err(invalid(format!(
            "need at least {} FEM modes to resolve the cluster, got {}",
            cluster.offset + j_m,
            fem_truth.values.len()
        )));
    }
    let kappa_values = correction_spectrum(corr)?;
    let lambda_m = cluster.lambda;
    let lo = match cluster.below {
        Some(b) => 0.5 * (lambda_m + b),
        None => lambda_m - 0.5 * (cluster.above - lambda_m),
    };
    let hi = 0.5 * (lambda_m + cluster.above);
    let fem_lambda: Vec<f64> = fem_truth
        .values
        .iter()
        .copied()
        .filter(|v| *v > lo && *v < hi)
        .collect();
    if fem_lambda.len() != j_m {
        return Err(Error::ClusterResolution(format!(
            "{} FEM eigenvalues in the isolation window ({lo:.6}, {hi:.6}), expected {j_m}",
            fem_lambda.len()
        )));
    }
    let predicted_lambda: Vec<f64> = kappa_values.iter().map(|k| lambda_m + k).collect();
    let remainders = predicted_lambda
        .iter()
        .zip(&fem_lambda)
        .map(|(p, f)| (f - p).abs())
        .collect();
    Ok(CorrectionReport {
        lambda_m,
        kappa_values,
        predicted_lambda,
        fem_lambda,
        remainders,
        d_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, build_mesh, eigen_lowest, solve_cell_problem};
    use crate::geometry::{cluster_at, reference_spectrum, BcX, EtaProfile, Parity};
    use std::f64::consts::PI;

    const GAP_TOL: f64 = 1e-9;

    fn neumann_square() -> RectangleSpec {
        RectangleSpec::new(1.0, 1.0, BcX::Neumann).unwrap()
    }

    fn periodic_square() -> RectangleSpec {
        RectangleSpec::new(1.0, 1.0, BcX::Periodic).unwrap()
    }

    fn pi2_cluster(spec: &RectangleSpec) -> ModeCluster {
        let modes = reference_spectrum(spec, 8);
        cluster_at(&modes, 2, GAP_TOL).unwrap()
    }

    fn periodic_4pi2_cluster() -> ModeCluster {
        let modes = reference_spectrum(&periodic_square(), 10);
        cluster_at(&modes, 3, GAP_TOL).unwrap()
    }

    #[test]
    fn flat_profile_gives_zero_corrections() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        let profile = PerturbationProfile::uniform_shift(1.0, 0.0).unwrap();
        let boundary = boundary_correction(&cluster, &profile).unwrap();
        assert!(boundary.entries.max_abs() <= 1e-15);
        let mesh = build_mesh(&spec, Some(&profile), 16, 16).unwrap();
        let pair = assemble(&mesh).unwrap();
        let volume = volume_correction(&cluster, &mesh, &pair).unwrap();
        assert!(volume.entries.max_abs() <= 1e-12);
        assert!(volume.asymmetry_defect <= 1e-12);
    }

    #[test]
    fn uniform_shift_boundary_matches_closed_form() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        assert_eq!(cluster.multiplicity(), 2);
        assert_eq!(cluster.modes[0].k, 0);
        assert_eq!(cluster.modes[1].k, 1);
        for c in [0.005, 0.02] {
            let profile = PerturbationProfile::uniform_shift(1.0, c).unwrap();
            let corr = boundary_correction(&cluster, &profile).unwrap();
            let pi2 = PI * PI;
            assert!((corr.entries.get(1, 1) - 2.0 * c * pi2).abs() <= 1e-12);
            assert!(corr.entries.get(0, 0).abs() <= 1e-12);
            assert!(corr.entries.get(0, 1).abs() <= 1e-12);
        }
    }

    #[test]
    fn volume_agrees_with_boundary_for_uniform_shift() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        let c = 0.01;
        let profile = PerturbationProfile::uniform_shift(1.0, c).unwrap();
        let mesh = build_mesh(&spec, Some(&profile), 128, 128).unwrap();
        let pair = assemble(&mesh).unwrap();
        let corr = volume_correction(&cluster, &mesh, &pair).unwrap();
        let kappa = correction_spectrum(&corr).unwrap();
        let want = 2.0 * c * PI * PI;
        assert!(
            (kappa[1] - want).abs() <= 0.02 * want,
            "volume kappa {} vs oracle {want}",
            kappa[1]
        );
        assert!(kappa[0].abs() <= 0.02 * want);
        let scale = corr.entries.max_abs();
        assert!(corr.entries.get(0, 1).abs() <= 1e-3 * scale);
        assert!(corr.asymmetry_defect <= 1e-6 * scale.max(1e-300));
    }

    #[test]
    fn correction_spectra_ignore_mode_order() {
        let spec = neumann_square();
        let mut cluster = pi2_cluster(&spec);
        let profile = PerturbationProfile::smooth_cosine(1.0, 0.02).unwrap();
        let mesh = build_mesh(&spec, Some(&profile), 32, 32).unwrap();
        let pair = assemble(&mesh).unwrap();
        let pencil = |corr: &CorrectionMatrix| correction_spectrum(corr).unwrap();
        let kb = pencil(&boundary_correction(&cluster, &profile).unwrap());
        let kv = pencil(&volume_correction(&cluster, &mesh, &pair).unwrap());
        cluster.modes.swap(0, 1);
        let kb_swapped = pencil(&boundary_correction(&cluster, &profile).unwrap());
        let kv_swapped = pencil(&volume_correction(&cluster, &mesh, &pair).unwrap());
        for i in 0..2 {
            assert!((kb[i] - kb_swapped[i]).abs() <= 1e-10);
            assert!((kv[i] - kv_swapped[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn boundary_volume_gap_shrinks_quadratically() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        let sweep = [(0.02, 128), (0.01, 128), (0.005, 256), (0.0025, 256)];
        let mut points = Vec::new();
        for &(c, n) in &sweep {
            let profile = PerturbationProfile::uniform_shift(1.0, c).unwrap();
            let mesh = build_mesh(&spec, Some(&profile), n, n).unwrap();
            let pair = assemble(&mesh).unwrap();
            let kb = boundary_correction(&cluster, &profile).unwrap();
            let kv = volume_correction(&cluster, &mesh, &pair).unwrap();
            let kb_top = correction_spectrum(&kb).unwrap()[1];
            let kv_top = correction_spectrum(&kv).unwrap()[1];
            points.push((c.ln(), (kb_top - kv_top).abs().ln()));
        }
        let slope = ols_slope(&points);
        assert!(slope >= 1.8, "gap slope {slope}");
    }

    #[test]
    fn homogenized_constant_eta_reduces_to_boundary() {
        let spec = periodic_square();
        let cluster = periodic_4pi2_cluster();
        assert_eq!(cluster.multiplicity(), 3);
        let eta = EtaProfile::constant(0.4).unwrap();
        let cell = solve_cell_problem(&eta, 2.0, 16, 32).unwrap();
        let delta = 0.05;
        let hom = homogenized_correction(&spec, &cluster, &cell, delta).unwrap();
        let shift = PerturbationProfile::uniform_shift(1.0, delta * 0.4).unwrap();
        let bnd = boundary_correction(&cluster, &shift).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!(
                    (hom.entries.get(a, b) - bnd.entries.get(a, b)).abs() <= 1e-12,
                    "entry ({a},{b}): hom {} vs boundary {}",
                    hom.entries.get(a, b),
                    bnd.entries.get(a, b)
                );
            }
        }
    }

    #[test]
    fn sharpness_defect_is_the_layer_energy_term() {
        let spec = periodic_square();
        let cluster = periodic_4pi2_cluster();
        assert_eq!(cluster.modes[0].parity, Parity::Cos);
        assert_eq!(cluster.modes[1].parity, Parity::Sin);
        assert_eq!(cluster.modes[2].k, 2);
        let eta = EtaProfile::sawtooth();
        let cell = solve_cell_problem(&eta, 4.5, 64, 288).unwrap();
        let delta = 1.0 / 16.0;
        let profile = PerturbationProfile::oscillation(1.0, &eta, delta).unwrap();
        let hom = homogenized_correction(&spec, &cluster, &cell, delta).unwrap();
        let bnd = boundary_correction(&cluster, &profile).unwrap();
        let pi2 = PI * PI;
        for i in 0..2 {
            let defect = hom.entries.get(i, i) - bnd.entries.get(i, i);
            let want = -delta * cell.eta1 * 4.0 * pi2;
            assert!(
                (defect - want).abs() <= 0.02 * want.abs(),
                "defect {defect} vs layer term {want}"
            );
        }
        let y_defect = hom.entries.get(2, 2) - bnd.entries.get(2, 2);
        assert!(y_defect.abs() <= 1e-10);
        for a in 0..3 {
            for b in (a + 1)..3 {
                assert!(hom.entries.get(a, b).abs() <= 1e-10);
                assert!(bnd.entries.get(a, b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn predict_zero_correction_reports_discretization_error() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        let mesh = build_mesh(&spec, None, 32, 32).unwrap();
        let pair = assemble(&mesh).unwrap();
        let fem = eigen_lowest(&pair, 4, 1e-9).unwrap();
        let zero = CorrectionMatrix {
            kind: CorrectionKind::Boundary,
            entries: DenseSymMatrix::zeros(2),
            asymmetry_defect: 0.0,
            gram: DenseSymMatrix::diag(&[1.0, 1.0]),
        };
        let report = predict(&cluster, &zero, &fem, 0.0).unwrap();
        let pi2 = PI * PI;
        for k in 0..2 {
            assert_eq!(report.predicted_lambda[k], report.lambda_m);
            assert!((report.remainders[k] - (report.fem_lambda[k] - pi2).abs()).abs() <= 1e-12);
            assert!(report.remainders[k] <= 0.005 * pi2);
        }
    }

    #[test]
    fn predict_matches_shift_expansion() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        let c = 0.01;
        let profile = PerturbationProfile::uniform_shift(1.0, c).unwrap();
        let mesh = build_mesh(&spec, Some(&profile), 128, 128).unwrap();
        let pair = assemble(&mesh).unwrap();
        let fem = eigen_lowest(&pair, 4, 1e-9).unwrap();
        let corr = boundary_correction(&cluster, &profile).unwrap();
        let report = predict(&cluster, &corr, &fem, c).unwrap();
        for k in 0..2 {
            assert!(
                (report.predicted_lambda[k] - report.lambda_m - report.kappa_values[k]).abs()
                    <= 1e-12
            );
        }
        assert!(report.remainders[1] <= 8e-3, "remainder {}", report.remainders[1]);
    }

    #[test]
    fn predict_rejects_a_smeared_cluster() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        let profile = PerturbationProfile::uniform_shift(1.0, 0.3).unwrap();
        let mesh = build_mesh(&spec, Some(&profile), 32, 32).unwrap();
        let pair = assemble(&mesh).unwrap();
        let fem = eigen_lowest(&pair, 4, 1e-9).unwrap();
        let corr = boundary_correction(&cluster, &profile).unwrap();
        assert!(matches!(
            predict(&cluster, &corr, &fem, 0.3),
            Err(Error::ClusterResolution(_))
        ));
    }

    #[test]
    fn predict_needs_enough_fem_modes() {
        let spec = neumann_square();
        let cluster = pi2_cluster(&spec);
        let mesh = build_mesh(&spec, None, 16, 16).unwrap();
        let pair = assemble(&mesh).unwrap();
        let fem = eigen_lowest(&pair, 2, 1e-9).unwrap();
        let profile = PerturbationProfile::uniform_shift(1.0, 0.01).unwrap();
        let corr = boundary_correction(&cluster, &profile).unwrap();
        assert!(predict(&cluster, &corr, &fem, 0.01).is_err());
    }

    fn ols_slope(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
