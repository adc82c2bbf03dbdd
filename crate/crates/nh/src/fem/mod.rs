//! P1 finite elements on vertically mapped rectangle meshes.

pub mod assemble;
pub mod cell;
pub mod mesh;
pub mod solve;

pub use assemble::{assemble, bottom_flux_load, local_mass, local_stiffness, AssembledPair};
pub use cell::{gradient_energy, solve_cell_problem, CellSolution};
pub use mesh::{build_mesh, TriMesh};
pub use solve::{eigen_lowest, solve_neumann_source};
