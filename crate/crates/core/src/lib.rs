//! Weak Galerkin finite elements of Morley type for the biharmonic problem
//! `Δ²u = g` with clamped boundary data on polytopal meshes of the unit
//! square and cube.
//!
//! The pipeline is mesh ([`geometry`]) → degrees of freedom ([`space`]) →
//! local weak derivatives ([`weakops`]) → assembly and solve ([`system`]) →
//! error measures and convergence tables ([`analysis`]).

pub mod analysis;
mod dense;
pub mod error;
pub mod geometry;
pub mod poly;
pub mod space;
pub mod system;
pub mod weakops;

pub use analysis::{convergence_study, ErrorMeasures, ErrorReport, LevelRecord};
pub use error::{Error, Result};
pub use geometry::{MeshFamily, PolytopalMesh, QuadRule};
pub use poly::{manufactured_case, ManufacturedCase, MultiPoly, PolyField, SmoothField};
pub use space::{DofLayout, Projector, WeakFunction};
pub use system::{solve_case, PenaltyConvention, Solution, Solver, SpdSystem, Stabilization};
pub use weakops::{weak_second_partial, weak_tangential_derivative, LocalOperator};
