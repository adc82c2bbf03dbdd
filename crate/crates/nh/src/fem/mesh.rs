//! Structured triangulations of perturbed rectangles and periodic strips.

use crate::error::{invalid, Error, Result};
use crate::geometry::{BcX, PerturbationProfile, ProfileKind, RectangleSpec};
use std::io::Write;
use std::path::Path;

/// Minimum x-elements per oscillation period; coarser meshes alias the teeth.
const MIN_ELEMENTS_PER_PERIOD: usize = 16;

/// Triangulation of `{ b(x) < y < R }` built on a structured `n_x x n_y` grid:
/// columns `x_i = i T / n_x`, rows mapped vertically between the bottom graph
/// `b = -h >= 0` and the lid `y = R`. Every quad is split along the same
/// diagonal into two counterclockwise triangles.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub bc_x: BcX,
    pub width: f64,
    pub height: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// Coordinates indexed by vertex id; the `x = T` column is stored even
    /// when periodic identification glues it to `x = 0`.
    pub vertices: Vec<[f64; 2]>,
    /// Vertex-id triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Bottom-boundary vertex pairs, ordered left to right along `y = b(x)`.
    pub bottom_edges: Vec<[usize; 2]>,
    /// Unknown index per vertex; periodic twin columns share an index.
    pub dof_of_vertex: Vec<usize>,
    pub n_dofs: usize,
}

impl TriMesh {
    /// Grid vertex id for column `i` in `0..=n_x`, row `j` in `0..=n_y`.
    pub fn vertex_id(&self, i: usize, j: usize) -> usize {
        i * (self.n_y + 1) + j
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Signed area of triangle `t` (positive for counterclockwise vertices).
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(&[self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Writes plain-text vertex and triangle lists.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        writeln!(out, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

pub(crate) fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Unknown index for grid vertex `(i, j)`. The fast direction is chosen so
/// the matrix bandwidth tracks the smaller grid dimension; under periodic
/// identification the wrap column either stays inside the band (x-fastest)
/// or is deferred to a trailing block that the direct solver treats as a
/// dense border.
fn dof_index(bc_x: BcX, n_x: usize, n_y: usize, i: usize, j: usize) -> usize {
    match bc_x {
        BcX::Neumann => {
            if n_y <= n_x {
                i * (n_y + 1) + j
            } else {
                j * (n_x + 1) + i
            }
        }
        BcX::Periodic => {
            let ic = if i == n_x { 0 } else { i };
            if n_x <= n_y + 1 {
                j * n_x + ic
            } else if ic == 0 {
                (n_x - 1) * (n_y + 1) + j
            } else {
                (ic - 1) * (n_y + 1) + j
            }
        }
    }
}

/// Builds the mesh for `spec` carved from below by `profile` (`None` keeps
/// the flat reference rectangle).
pub fn build_mesh(
    spec: &RectangleSpec,
    profile: Option<&PerturbationProfile>,
    n_x: usize,
    n_y: usize,
) -> Result<TriMesh> {
    if let Some(p) = profile {
        if (p.width() - spec.width).abs() > 1e-12 * spec.width {
            return Err(invalid(format!(
                "profile width {} does not match rectangle width {}",
                p.width(),
                spec.width
            )));
        }
        if let ProfileKind::Oscillation { delta } = p.kind {
            let periods = (spec.width / delta).round() as usize;
            if n_x % periods != 0 {
                return Err(invalid(format!(
                    "n_x = {n_x} must be a multiple of the {periods} oscillation periods"
                )));
            }
            if n_x / periods < MIN_ELEMENTS_PER_PERIOD {
                return Err(invalid(format!(
                    "n_x = {n_x} gives {} elements per period; need at least {}",
                    n_x / periods,
                    MIN_ELEMENTS_PER_PERIOD
                )));
            }
            if p.intervals() % n_x != 0 {
                return Err(invalid(format!(
                    "profile resolution {} is not a multiple of n_x = {n_x}",
                    p.intervals()
                )));
            }
        }
    }
    let mut bottom = Vec::with_capacity(n_x + 1);
    for i in 0..=n_x {
        let x = if i == n_x {
            spec.width
        } else {
            i as f64 * spec.width / n_x as f64
        };
        let h = match profile {
            Some(p) => p.eval(x)?.0,
            None => 0.0,
        };
        bottom.push(-h);
    }
    mesh_from_bottom(spec, &bottom, n_x, n_y)
}

/// Shared builder over explicit bottom-node heights `b >= 0` (one per grid
/// column). The cell problem reuses this with `b = eta`.
pub(crate) fn mesh_from_bottom(
    spec: &RectangleSpec,
    bottom: &[f64],
    n_x: usize,
    n_y: usize,
) -> Result<TriMesh> {
    if n_x < 2 || n_y < 2 {
        return Err(invalid("mesh needs n_x >= 2 and n_y >= 2"));
    }
    if bottom.len() != n_x + 1 {
        return Err(invalid("bottom graph needs one node per grid column"));
    }
    if bottom.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(invalid("bottom heights must be finite and non-negative"));
    }
    let depth = bottom.iter().fold(0.0_f64, |m, b| m.max(*b));
    if spec.height - depth <= 1e-12 * spec.height {
        return Err(Error::DegenerateDomain(format!(
            "perturbation depth {depth:.6e} swallows the rectangle of height {}",
            spec.height
        )));
    }
    let mut bottom = bottom.to_vec();
    if spec.bc_x == BcX::Periodic {
        if (bottom[0] - bottom[n_x]).abs() > 1e-12 * (1.0 + depth) {
            return Err(invalid(
                "periodic mesh needs matching bottom heights at x = 0 and x = T",
            ));
        }
        bottom[n_x] = bottom[0];
    }

    let mut vertices = Vec::with_capacity((n_x + 1) * (n_y + 1));
    for (i, &b) in bottom.iter().enumerate() {
        let x = if i == n_x {
            spec.width
        } else {
            i as f64 * spec.width / n_x as f64
        };
        for j in 0..=n_y {
            let y = if j == n_y {
                spec.height
            } else {
                b + (spec.height - b) * j as f64 / n_y as f64
            };
            vertices.push([x, y]);
        }
    }

    let vid = |i: usize, j: usize| i * (n_y + 1) + j;
    let mut triangles = Vec::with_capacity(2 * n_x * n_y);
    for i in 0..n_x {
        for j in 0..n_y {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v01 = vid(i, j + 1);
            let v11 = vid(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let bottom_edges = (0..n_x).map(|i| [vid(i, 0), vid(i + 1, 0)]).collect();

    let dof_of_vertex: Vec<usize> = (0..=n_x)
        .flat_map(|i| (0..=n_y).map(move |j| (i, j)))
        .map(|(i, j)| dof_index(spec.bc_x, n_x, n_y, i, j))
        .collect();
    let n_dofs = match spec.bc_x {
        BcX::Neumann => (n_x + 1) * (n_y + 1),
        BcX::Periodic => n_x * (n_y + 1),
    };

    let mesh = TriMesh {
        bc_x: spec.bc_x,
        width: spec.width,
        height: spec.height,
        n_x,
        n_y,
        vertices,
        triangles,
        bottom_edges,
        dof_of_vertex,
        n_dofs,
    };

    let mut tri_area = 0.0;
    for t in 0..mesh.triangles.len() {
        let a = mesh.triangle_area(t);
        if a <= 0.0 {
            return Err(Error::DegenerateDomain(format!(
                "triangle {t} has non-positive area {a:.3e}"
            )));
        }
        tri_area += a;
    }
    let dx = spec.width / n_x as f64;
    let trapezoid: f64 = (0..n_x)
        .map(|i| dx * (2.0 * spec.height - bottom[i] - bottom[i + 1]) * 0.5)
        .sum();
    if (tri_area - trapezoid).abs() > 1e-10 * trapezoid {
        return Err(invalid(format!(
            "triangulated area {tri_area:.15e} disagrees with trapezoid area {trapezoid:.15e}"
        )));
    }

    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EtaProfile;

    fn unit_square(bc_x: BcX) -> RectangleSpec {
        RectangleSpec::new(1.0, 1.0, bc_x).unwrap()
    }

    #[test]
    fn flat_two_by_two_counts() {
        let mesh = build_mesh(&unit_square(BcX::Neumann), None, 2, 2).unwrap();
        assert_eq!(mesh.n_vertices(), 9);
        assert_eq!(mesh.triangles.len(), 8);
        assert_eq!(mesh.n_dofs, 9);
        assert!((mesh.total_area() - 1.0).abs() <= 1e-14);
        assert_eq!(mesh.bottom_edges.len(), 2);
    }

    #[test]
    fn uniform_shift_area_matches_shrunk_rectangle() {
        let profile = PerturbationProfile::uniform_shift(1.0, 0.1).unwrap();
        let mesh = build_mesh(&unit_square(BcX::Neumann), Some(&profile), 8, 8).unwrap();
        assert!((mesh.total_area() - 0.9).abs() <= 1e-12);
        for e in &mesh.bottom_edges {
            assert!((mesh.vertices[e[0]][1] - 0.1).abs() <= 1e-15);
        }
    }

    #[test]
    fn sawtooth_area_is_exact() {
        let eta = EtaProfile::sawtooth();
        let profile = PerturbationProfile::oscillation(1.0, &eta, 0.25).unwrap();
        let mesh = build_mesh(&unit_square(BcX::Periodic), Some(&profile), 64, 8).unwrap();
        assert!((mesh.total_area() - (1.0 - 0.25 * 0.5)).abs() <= 1e-12);
    }

    #[test]
    fn swallowing_perturbation_is_degenerate() {
        let profile = PerturbationProfile::uniform_shift(1.0, 1.0).unwrap();
        let err = build_mesh(&unit_square(BcX::Neumann), Some(&profile), 4, 4).unwrap_err();
        assert!(matches!(err, Error::DegenerateDomain(_)));
    }

    #[test]
    fn misaligned_oscillation_mesh_is_rejected() {
        let eta = EtaProfile::sawtooth();
        let profile = PerturbationProfile::oscillation(1.0, &eta, 0.25).unwrap();
        assert!(build_mesh(&unit_square(BcX::Periodic), Some(&profile), 50, 8).is_err());
        assert!(build_mesh(&unit_square(BcX::Periodic), Some(&profile), 32, 8).is_err());
    }

    #[test]
    fn periodic_identification_glues_wrap_column() {
        let mesh = build_mesh(&unit_square(BcX::Periodic), None, 4, 3).unwrap();
        assert_eq!(mesh.n_dofs, 16);
        for j in 0..=3 {
            assert_eq!(
                mesh.dof_of_vertex[mesh.vertex_id(4, j)],
                mesh.dof_of_vertex[mesh.vertex_id(0, j)]
            );
        }
        let mut seen = vec![false; mesh.n_dofs];
        for &d in &mesh.dof_of_vertex {
            seen[d] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn bandwidth_tracks_smaller_dimension() {
        let max_spread = |mesh: &TriMesh| {
            mesh.triangles
                .iter()
                .flat_map(|t| {
                    [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])]
                        .map(|(a, b)| {
                            let (da, db) = (mesh.dof_of_vertex[a], mesh.dof_of_vertex[b]);
                            da.abs_diff(db)
                        })
                        .into_iter()
                })
                .max()
                .unwrap()
        };
        let wide = build_mesh(&unit_square(BcX::Neumann), None, 16, 4).unwrap();
        assert!(max_spread(&wide) <= 6);
        let tall = build_mesh(&unit_square(BcX::Neumann), None, 4, 16).unwrap();
        assert!(max_spread(&tall) <= 6);
        let strip = build_mesh(&unit_square(BcX::Periodic), None, 6, 40).unwrap();
        assert!(max_spread(&strip) <= 7);
    }

    #[test]
    fn periodic_wide_mesh_uses_trailing_border_block() {
        let mesh = build_mesh(&unit_square(BcX::Periodic), None, 40, 6).unwrap();
        let border_start = 39 * 7;
        for j in 0..=6 {
            assert_eq!(mesh.dof_of_vertex[mesh.vertex_id(0, j)], border_start + j);
        }
        for i in 1..40 {
            for j in 0..=6 {
                assert_eq!(mesh.dof_of_vertex[mesh.vertex_id(i, j)], (i - 1) * 7 + j);
            }
        }
    }

    #[test]
    fn bottom_chain_traverses_the_graph() {
        let profile = PerturbationProfile::smooth_cosine(1.0, 0.2).unwrap();
        let mesh = build_mesh(&unit_square(BcX::Neumann), Some(&profile), 16, 4).unwrap();
        for (i, e) in mesh.bottom_edges.iter().enumerate() {
            assert_eq!(e[0], mesh.vertex_id(i, 0));
            assert_eq!(e[1], mesh.vertex_id(i + 1, 0));
            let h = profile.eval(mesh.vertices[e[0]][0]).unwrap().0;
            assert!((mesh.vertices[e[0]][1] + h).abs() <= 1e-13);
        }
        let last = mesh.bottom_edges.last().unwrap();
        assert_eq!(mesh.vertices[last[1]][0], 1.0);
    }

    #[test]
    fn top_row_sits_exactly_on_the_lid() {
        let profile = PerturbationProfile::smooth_cosine(1.0, 0.3).unwrap();
        let mesh = build_mesh(&unit_square(BcX::Neumann), Some(&profile), 8, 5).unwrap();
        for i in 0..=8 {
            assert_eq!(mesh.vertices[mesh.vertex_id(i, 5)][1], 1.0);
        }
    }

    #[test]
    fn dump_writes_parseable_lists() {
        let mesh = build_mesh(&unit_square(BcX::Neumann), None, 2, 2).unwrap();
        let dir = std::env::temp_dir().join("nh_mesh_dump_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mesh.txt");
        mesh.dump(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "vertices 9");
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(first, vec![0.0, 0.0]);
        assert!(text.lines().any(|l| l == "triangles 8"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn mismatched_profile_width_is_rejected() {
        let profile = PerturbationProfile::uniform_shift(2.0, 0.1).unwrap();
        assert!(build_mesh(&unit_square(BcX::Neumann), Some(&profile), 4, 4).is_err());
    }
}
