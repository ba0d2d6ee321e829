//! Shared fixtures for the benchmarks.

use wgmorley::system::{assemble, boundary_values, Assembly};
use wgmorley::{
    manufactured_case, DofLayout, ManufacturedCase, MeshFamily, PenaltyConvention, PolytopalMesh,
};

pub struct Fixture {
    pub mesh: PolytopalMesh,
    pub layout: DofLayout,
    pub case: ManufacturedCase,
    pub penalty: PenaltyConvention,
    pub family: MeshFamily,
    pub level: u32,
}

impl Fixture {
    pub fn new(family: MeshFamily, k: usize, level: u32) -> Self {
        let mesh = family.generate(level);
        let layout = DofLayout::new(&mesh, k).expect("degree at least 3");
        Self {
            mesh,
            layout,
            case: manufactured_case(family.dim()),
            penalty: PenaltyConvention::Lattice,
            family,
            level,
        }
    }

    pub fn assemble(&self) -> Assembly {
        let stab = self.penalty.stabilization(self.family, self.level);
        assemble(&self.mesh, &self.layout, &self.case.g, &stab).expect("assembly")
    }

    pub fn boundary(&self) -> Vec<f64> {
        boundary_values(&self.mesh, &self.layout, &self.case.u).expect("boundary data")
    }
}
