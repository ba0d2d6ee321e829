//! Degrees of freedom of the weak finite element space and the L2 projections
//! onto its components.
//!
//! A weak function carries four components: an interior polynomial
//! `v_0 in P_k(T)` per cell, a trace `v_{b,f} in P_{k-3}(F)` and a normal
//! derivative `v_n in P_{k-2}(F)` per face, and an edge trace
//! `v_{b,e} in P_{k-2}(e)` per edge (a single value per vertex in 2D).
//! Skeleton unknowns are stored once globally, so they are single-valued
//! across the cells that share them.
//!
//! Global numbering: all interior blocks cell by cell, then per face
//! `[v_{b,f}, v_n]`, then per edge `v_{b,e}`. The stored `v_n` is the normal
//! derivative along the face's fixed normal `N_F`; a cell sees `sigma(T,F) * v_n`
//! as its derivative along its outward normal.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::{Point, PolytopalMesh, QuadRule};
use crate::poly::{dot, poly_dim, MultiPoly, SmoothField};

/// A scalar function that can be projected.
pub trait ScalarFn: Sync {
    fn eval(&self, x: &Point) -> f64;
    fn degree(&self) -> Option<usize> {
        None
    }
}

impl ScalarFn for MultiPoly {
    fn eval(&self, x: &Point) -> f64 {
        MultiPoly::eval(self, x)
    }
    fn degree(&self) -> Option<usize> {
        Some(MultiPoly::degree(self))
    }
}

/// Adapts a closure, optionally tagged with its polynomial degree.
pub struct FnField<F>(pub F, pub Option<usize>);

impl<F: Fn(&Point) -> f64 + Sync> ScalarFn for FnField<F> {
    fn eval(&self, x: &Point) -> f64 {
        (self.0)(x)
    }
    fn degree(&self) -> Option<usize> {
        self.1
    }
}

#[derive(Clone, Debug)]
pub struct DofLayout {
    pub k: usize,
    pub dim: usize,
    /// `dim P_k(T)`.
    pub n_interior: usize,
    /// `dim P_{k-3}(F)`.
    pub n_face_trace: usize,
    /// `dim P_{k-2}(F)`.
    pub n_face_normal: usize,
    /// `dim P_{k-2}(e)`; 1 in 2D.
    pub n_edge: usize,
    n_cells: usize,
    n_faces: usize,
    n_edges: usize,
    constrained: Vec<bool>,
}

/// Local-to-global map of one cell.
///
/// Local order: interior block, then for each face of the cell (in the
/// cell's face order) its trace and normal blocks, then each cell edge.
#[derive(Clone, Debug)]
pub struct CellDofs {
    pub global: Vec<usize>,
    pub n_interior: usize,
    /// Local offset of each face's trace block.
    pub face_trace: Vec<usize>,
    /// Local offset of each face's normal block.
    pub face_normal: Vec<usize>,
    /// Local offset of each cell edge block.
    pub edge: Vec<usize>,
    /// For each local face, positions of its boundary edges in `Cell::edges`.
    pub face_edges: Vec<Vec<usize>>,
}

impl CellDofs {
    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }
}

impl DofLayout {
    pub fn new(mesh: &PolytopalMesh, k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::DegreeTooLow(k));
        }
        let d = mesh.dim;
        let mut layout = Self {
            k,
            dim: d,
            n_interior: poly_dim(d, k),
            n_face_trace: poly_dim(d - 1, k - 3),
            n_face_normal: poly_dim(d - 1, k - 2),
            n_edge: if d == 2 { 1 } else { poly_dim(1, k - 2) },
            n_cells: mesh.cells.len(),
            n_faces: mesh.faces.len(),
            n_edges: mesh.edges.len(),
            constrained: Vec::new(),
        };
        let mut mask = vec![false; layout.total()];
        for (fi, f) in mesh.faces.iter().enumerate() {
            if f.boundary {
                for i in layout.face_trace(fi).chain(layout.face_normal(fi)) {
                    mask[i] = true;
                }
            }
        }
        for (ei, e) in mesh.edges.iter().enumerate() {
            if e.boundary {
                for i in layout.edge(ei) {
                    mask[i] = true;
                }
            }
        }
        layout.constrained = mask;
        Ok(layout)
    }

    pub fn total(&self) -> usize {
        self.skeleton_start()
            + self.n_faces * (self.n_face_trace + self.n_face_normal)
            + self.n_edges * self.n_edge
    }

    /// First skeleton index; everything below is an interior unknown.
    pub fn skeleton_start(&self) -> usize {
        self.n_cells * self.n_interior
    }

    pub fn num_skeleton(&self) -> usize {
        self.total() - self.skeleton_start()
    }

    pub fn interior(&self, cell: usize) -> Range<usize> {
        let s = cell * self.n_interior;
        s..s + self.n_interior
    }

    pub fn face_trace(&self, face: usize) -> Range<usize> {
        let s = self.skeleton_start() + face * (self.n_face_trace + self.n_face_normal);
        s..s + self.n_face_trace
    }

    pub fn face_normal(&self, face: usize) -> Range<usize> {
        let s = self.face_trace(face).end;
        s..s + self.n_face_normal
    }

    pub fn edge(&self, edge: usize) -> Range<usize> {
        let s = self.skeleton_start()
            + self.n_faces * (self.n_face_trace + self.n_face_normal)
            + edge * self.n_edge;
        s..s + self.n_edge
    }

    /// Mask of unknowns lying on the domain boundary (fixed by the boundary data).
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn num_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    pub fn cell_dofs(&self, mesh: &PolytopalMesh, cell: usize) -> CellDofs {
        let c = &mesh.cells[cell];
        let mut global: Vec<usize> = self.interior(cell).collect();
        let mut face_trace = Vec::with_capacity(c.faces.len());
        let mut face_normal = Vec::with_capacity(c.faces.len());
        for &f in &c.faces {
            face_trace.push(global.len());
            global.extend(self.face_trace(f));
            face_normal.push(global.len());
            global.extend(self.face_normal(f));
        }
        let mut edge = Vec::with_capacity(c.edges.len());
        for &e in &c.edges {
            edge.push(global.len());
            global.extend(self.edge(e));
        }
        let face_edges = c
            .faces
            .iter()
            .map(|&f| {
                mesh.faces[f]
                    .edges
                    .iter()
                    .map(|e| {
                        c.edges
                            .iter()
                            .position(|x| x == e)
                            .expect("face edge belongs to cell")
                    })
                    .collect()
            })
            .collect();
        CellDofs {
            global,
            n_interior: self.n_interior,
            face_trace,
            face_normal,
            edge,
            face_edges,
        }
    }
}

/// Coefficient vector of a global weak function.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakFunction {
    pub coeffs: Vec<f64>,
}

impl WeakFunction {
    pub fn zeros(layout: &DofLayout) -> Self {
        Self {
            coeffs: vec![0.0; layout.total()],
        }
    }

    pub fn from_coeffs(layout: &DofLayout, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != layout.total() {
            return Err(Error::DimensionMismatch(format!(
                "weak function has {} coefficients, layout has {}",
                coeffs.len(),
                layout.total()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn gather(&self, dofs: &CellDofs) -> Vec<f64> {
        dofs.global.iter().map(|&g| self.coeffs[g]).collect()
    }

    /// Normal derivative along the outward normal of `cell` on its local face
    /// `local_face`, in the face's `P_{k-2}` basis.
    pub fn outward_normal_derivative(
        &self,
        mesh: &PolytopalMesh,
        layout: &DofLayout,
        cell: usize,
        local_face: usize,
    ) -> Vec<f64> {
        let c = &mesh.cells[cell];
        let s = c.signs[local_face];
        self.coeffs[layout.face_normal(c.faces[local_face])]
            .iter()
            .map(|v| s * v)
            .collect()
    }

    pub fn sub(&self, other: &WeakFunction) -> WeakFunction {
        WeakFunction {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// L2 projections onto the local polynomial spaces of a layout.
pub struct Projector<'a> {
    pub mesh: &'a PolytopalMesh,
    pub layout: &'a DofLayout,
}

impl<'a> Projector<'a> {
    pub fn new(mesh: &'a PolytopalMesh, layout: &'a DofLayout) -> Self {
        Self { mesh, layout }
    }

    fn quad_degree(&self, target: usize, f: Option<usize>) -> usize {
        match f {
            Some(d) => (target + d).max(2 * target),
            None => 2 * self.layout.k + 2,
        }
    }

    /// Projection onto `P_degree(T)`.
    pub fn project_cell(&self, cell: usize, degree: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        let basis = self.mesh.cell_basis(cell, degree);
        let rule = QuadRule::cell(self.mesh, cell, self.quad_degree(degree, f.degree()))?;
        crate::dense::project(
            &basis,
            &rule,
            |x| f.eval(x),
            &format!("cell {cell} Gram matrix"),
        )
    }

    /// Projection onto `P_degree(F)` in the face's local basis.
    pub fn project_face(&self, face: usize, degree: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        let basis = self.mesh.face_basis(face, degree);
        let rule = QuadRule::face(self.mesh, face, self.quad_degree(degree, f.degree()))?;
        crate::dense::project(
            &basis,
            &rule,
            |x| f.eval(x),
            &format!("face {face} Gram matrix"),
        )
    }

    /// Projection onto `P_degree(e)`; point evaluation on 2D vertices.
    pub fn project_edge(&self, edge: usize, degree: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        if self.mesh.dim == 2 {
            return Ok(vec![f.eval(&self.mesh.edges[edge].center)]);
        }
        let basis = self.mesh.edge_basis(edge, degree);
        let rule = QuadRule::edge(self.mesh, edge, self.quad_degree(degree, f.degree()))?;
        crate::dense::project(
            &basis,
            &rule,
            |x| f.eval(x),
            &format!("edge {edge} Gram matrix"),
        )
    }

    /// `Q_0`: onto `P_k(T)`.
    pub fn q0(&self, cell: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        self.project_cell(cell, self.layout.k, f)
    }

    /// `Q_h` restricted to the weak second derivatives' space `P_{k-2}(T)`.
    pub fn q_low(&self, cell: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        self.project_cell(cell, self.layout.k - 2, f)
    }

    /// `Q_f`: onto `P_{k-3}(F)`.
    pub fn qf(&self, face: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        self.project_face(face, self.layout.k - 3, f)
    }

    /// `Q_n`: onto `P_{k-2}(F)`.
    pub fn qn(&self, face: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        self.project_face(face, self.layout.k - 2, f)
    }

    /// `Q_b`: onto `P_{k-2}(e)`.
    pub fn qb(&self, edge: usize, f: &dyn ScalarFn) -> Result<Vec<f64>> {
        self.project_edge(edge, self.layout.k - 2, f)
    }

    /// `Q_h phi = {Q_0 phi, Q_b phi, Q_f phi, Q_n(grad phi . N_F)}`.
    pub fn interpolate(&self, phi: &dyn SmoothField) -> Result<WeakFunction> {
        let layout = self.layout;
        let mut w = WeakFunction::zeros(layout);
        let value = FnField(|x: &Point| phi.value(x), phi.degree());
        for c in 0..self.mesh.cells.len() {
            let q = self.q0(c, &value)?;
            w.coeffs[layout.interior(c)].copy_from_slice(&q);
        }
        for (fi, face) in self.mesh.faces.iter().enumerate() {
            let n = face.frame.normal;
            let dn = FnField(
                |x: &Point| dot(&phi.gradient(x), &n),
                phi.degree().map(|d| d.saturating_sub(1)),
            );
            let qf = self.qf(fi, &value)?;
            let qn = self.qn(fi, &dn)?;
            w.coeffs[layout.face_trace(fi)].copy_from_slice(&qf);
            w.coeffs[layout.face_normal(fi)].copy_from_slice(&qn);
        }
        for ei in 0..self.mesh.edges.len() {
            let qb = self.qb(ei, &value)?;
            w.coeffs[layout.edge(ei)].copy_from_slice(&qb);
        }
        Ok(w)
    }
}

/// Layout-level shorthand for [`DofLayout::new`].
pub fn build_layout(mesh: &PolytopalMesh, k: usize) -> Result<DofLayout> {
    DofLayout::new(mesh, k)
}
