//! Global assembly of `a_s(., .)` and `(g, v_0)`, boundary elimination and
//! the two solution paths: the full system and the skeleton system obtained
//! by eliminating each cell's interior unknowns.

mod assemble;
mod dump;
mod solve;

pub use assemble::{
    assemble, assemble_with, local_stabilizer, Assembly, CellMatrices, PenaltyConvention,
    PenaltyScale, Stabilization, StabilizerTerms,
};
pub use dump::{read_system, write_system};
pub use solve::{
    apply_bc, boundary_values, solve_full, solve_schur, solve_spd, CscMatrix, LinearSolve,
    SpdSystem,
};

use crate::error::Result;
use crate::geometry::PolytopalMesh;
use crate::poly::ManufacturedCase;
use crate::space::{DofLayout, WeakFunction};

/// Linear solution strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Solver {
    Full,
    Schur,
}

impl std::str::FromStr for Solver {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "schur" => Ok(Self::Schur),
            _ => Err(format!("unknown solver `{s}` (expected full or schur)")),
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Schur => "schur",
        })
    }
}

/// A solved discrete problem with the data needed for error evaluation.
#[derive(Debug)]
pub struct Solution {
    pub assembly: Assembly,
    pub uh: WeakFunction,
    pub linear: LinearSolve,
}

/// Assembles, applies the boundary data of `case` and solves.
pub fn solve_case(
    mesh: &PolytopalMesh,
    k: usize,
    case: &ManufacturedCase,
    stab: &Stabilization,
    solver: Solver,
    tol: f64,
) -> Result<Solution> {
    let layout = DofLayout::new(mesh, k)?;
    let assembly = assemble(mesh, &layout, &case.g, stab)?;
    let fixed = boundary_values(mesh, &layout, &case.u)?;
    let (uh, linear) = match solver {
        Solver::Full => solve_full(&apply_bc(&assembly, &fixed)?, tol)?,
        Solver::Schur => solve_schur(&assembly, &fixed, tol)?,
    };
    Ok(Solution {
        assembly,
        uh,
        linear,
    })
}
