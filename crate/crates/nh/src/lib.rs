//! Eigenvalue corrections for the Neumann operator `1 - Laplace` under
//! domain perturbation.
//!
//! The crate has three layers:
//!
//! * an abstract spectral-proximity framework for pairs of operators acting
//!   on nearby subspaces of a common ambient space ([`proximity`]),
//! * P1 finite elements on perturbed rectangles, including the periodic
//!   half-strip cell problem behind homogenized boundary corrections
//!   ([`geometry`], [`fem`]),
//! * first-order eigenvalue-correction formulas (boundary, volume,
//!   homogenized) with prediction-versus-FEM reports ([`hadamard`]), and the
//!   sweep studies with CSV/SVG output behind the `nh` binary
//!   ([`experiments`]).
//!
//! Everything is deterministic: repeated runs produce bit-identical numbers
//! and byte-identical study output.

pub mod error;
pub mod experiments;
pub mod fem;
pub mod geometry;
pub mod hadamard;
pub mod linalg;
pub mod proximity;

pub use error::{Error, Result};
