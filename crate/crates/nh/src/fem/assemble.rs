//! P1 stiffness/mass assembly and boundary flux loads.

use crate::error::{Error, Result};
use crate::fem::mesh::{signed_area, TriMesh};
use crate::linalg::{SparseBuilder, SparseSymMatrix};

/// Assembled matrices for the bilinear forms of `1 - Laplacian` on a mesh:
/// `a = k + m` with `k` the stiffness and `m` the consistent mass matrix.
pub struct AssembledPair {
    pub a: SparseSymMatrix,
    pub k: SparseSymMatrix,
    pub m: SparseSymMatrix,
}

/// Element stiffness for the P1 triangle with vertex coordinates `p`.
pub fn local_stiffness(p: &[[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let area = positive_area(p)?;
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    Ok(k)
}

/// Element consistent mass for the P1 triangle with vertex coordinates `p`.
pub fn local_mass(p: &[[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let scale = positive_area(p)? / 12.0;
    let mut m = [[scale; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] *= 2.0;
    }
    Ok(m)
}

fn positive_area(p: &[[f64; 2]; 3]) -> Result<f64> {
    let area = signed_area(p);
    if area <= 0.0 {
        return Err(Error::DegenerateDomain(format!(
            "triangle with non-positive area {area:.3e}"
        )));
    }
    Ok(area)
}

/// Assembles stiffness `k`, mass `m`, and their sum `a` over the mesh.
pub fn assemble(mesh: &TriMesh) -> Result<AssembledPair> {
    let n = mesh.n_dofs;
    let mut a_b = SparseBuilder::new(n);
    let mut k_b = SparseBuilder::new(n);
    let mut m_b = SparseBuilder::new(n);
    for tri in &mesh.triangles {
        let p = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let ks = local_stiffness(&p)?;
        let ms = local_mass(&p)?;
        for r in 0..3 {
            let dr = mesh.dof_of_vertex[tri[r]];
            for s in 0..3 {
                let ds = mesh.dof_of_vertex[tri[s]];
                if ds > dr {
                    continue;
                }
                k_b.add(dr, ds, ks[r][s]);
                m_b.add(dr, ds, ms[r][s]);
                a_b.add(dr, ds, ks[r][s] + ms[r][s]);
            }
        }
    }
    Ok(AssembledPair {
        a: a_b.build(),
        k: k_b.build(),
        m: m_b.build(),
    })
}

/// Load vector of the boundary form `l_i = integral g psi_i ds` over the
/// bottom chain. The data closure receives the quadrature point and the
/// outward unit normal: `g(x, y, n_x, n_y)`. Two-point Gauss per edge.
pub fn bottom_flux_load<F>(mesh: &TriMesh, mut g: F) -> Vec<f64>
where
    F: FnMut(f64, f64, f64, f64) -> f64,
{
    let mut load = vec![0.0; mesh.n_dofs];
    let offset = 0.5 / 3.0_f64.sqrt();
    for e in &mesh.bottom_edges {
        let pa = mesh.vertices[e[0]];
        let pb = mesh.vertices[e[1]];
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = dx.hypot(dy);
        let (nx, ny) = (dy / len, -dx / len);
        let (da, db) = (mesh.dof_of_vertex[e[0]], mesh.dof_of_vertex[e[1]]);
        for t in [0.5 - offset, 0.5 + offset] {
            let x = pa[0] + t * dx;
            let y = pa[1] + t * dy;
            let w = 0.5 * len * g(x, y, nx, ny);
            load[da] += w * (1.0 - t);
            load[db] += w * t;
        }
    }
    load
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::build_mesh;
    use crate::geometry::{BcX, EtaProfile, PerturbationProfile, RectangleSpec};

    fn sawtooth_mesh() -> TriMesh {
        let spec = RectangleSpec::new(1.0, 1.0, BcX::Periodic).unwrap();
        let eta = EtaProfile::sawtooth();
        let profile = PerturbationProfile::oscillation(1.0, &eta, 0.25).unwrap();
        build_mesh(&spec, Some(&profile), 64, 16).unwrap()
    }

    #[test]
    fn reference_triangle_stiffness() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let k = local_stiffness(&p).unwrap();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn reference_triangle_mass() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = local_mass(&p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!((m[i][j] - want).abs() <= 1e-16);
            }
        }
    }

    #[test]
    fn clockwise_triangle_is_degenerate() {
        let p = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert!(matches!(
            local_stiffness(&p),
            Err(Error::DegenerateDomain(_))
        ));
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let mesh = sawtooth_mesh();
        let pair = assemble(&mesh).unwrap();
        let ones = vec![1.0; mesh.n_dofs];
        let r = pair.k.matvec(&ones);
        assert!(r.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn mass_row_sums_give_the_area() {
        let mesh = sawtooth_mesh();
        let pair = assemble(&mesh).unwrap();
        let ones = vec![1.0; mesh.n_dofs];
        let total: f64 = pair.m.matvec(&ones).iter().sum();
        assert!((total - mesh.total_area()).abs() <= 1e-10);
    }

    #[test]
    fn sum_matrix_matches_stiffness_plus_mass() {
        let mesh = sawtooth_mesh();
        let pair = assemble(&mesh).unwrap();
        for i in 0..mesh.n_dofs {
            let mut row: std::collections::BTreeMap<usize, f64> = pair.a.row(i).collect();
            for (j, v) in pair.k.row(i) {
                *row.entry(j).or_insert(0.0) -= v;
            }
            for (j, v) in pair.m.row(i) {
                *row.entry(j).or_insert(0.0) -= v;
            }
            for v in row.values() {
                assert!(v.abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn unit_flux_load_sums_to_the_bottom_length() {
        let spec = RectangleSpec::new(1.0, 1.0, BcX::Neumann).unwrap();
        let mesh = build_mesh(&spec, None, 8, 4).unwrap();
        let load = bottom_flux_load(&mesh, |_, _, _, _| 1.0);
        let total: f64 = load.iter().sum();
        assert!((total - 1.0).abs() <= 1e-14);
        let top_dofs: Vec<usize> = (0..=8)
            .map(|i| mesh.dof_of_vertex[mesh.vertex_id(i, 4)])
            .collect();
        assert!(top_dofs.iter().all(|&d| load[d] == 0.0));
    }

    #[test]
    fn flux_normal_is_outward_unit() {
        let spec = RectangleSpec::new(1.0, 1.0, BcX::Neumann).unwrap();
        let profile = PerturbationProfile::smooth_cosine(1.0, 0.2).unwrap();
        let mesh = build_mesh(&spec, Some(&profile), 32, 4).unwrap();
        let mut seen = Vec::new();
        bottom_flux_load(&mesh, |x, y, nx, ny| {
            seen.push((x, y, nx, ny));
            0.0
        });
        assert_eq!(seen.len(), 64);
        for (x, y, nx, ny) in seen {
            assert!((nx * nx + ny * ny - 1.0).abs() <= 1e-13);
            let i = (x * 32.0).floor() as usize;
            let ba = mesh.vertices[mesh.bottom_edges[i][0]][1];
            let bb = mesh.vertices[mesh.bottom_edges[i][1]][1];
            let slope = (bb - ba) * 32.0;
            let norm = (1.0 + slope * slope).sqrt();
            assert!((nx - slope / norm).abs() <= 1e-12);
            assert!((ny + 1.0 / norm).abs() <= 1e-12);
            assert!((y - (ba + (x - i as f64 / 32.0) * slope)).abs() <= 1e-13);
        }
    }

    #[test]
    fn linear_flux_integrates_exactly() {
        let spec = RectangleSpec::new(1.0, 1.0, BcX::Neumann).unwrap();
        let mesh = build_mesh(&spec, None, 8, 4).unwrap();
        let load = bottom_flux_load(&mesh, |x, _, _, _| x);
        let total: f64 = load.iter().sum();
        assert!((total - 0.5).abs() <= 1e-14);
        let hat: f64 = (0..=8)
            .map(|i| load[mesh.dof_of_vertex[mesh.vertex_id(i, 0)]])
            .sum();
        assert!((hat - 0.5).abs() <= 1e-14);
    }
}
