use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dense::{cross_mass, mass, Spd};
use crate::error::Result;
use crate::geometry::{MeshFamily, PolytopalMesh, QuadRule};
use crate::poly::dot;
use crate::space::{CellDofs, DofLayout, ScalarFn, WeakFunction};
use crate::weakops::{weak_second_partial, LocalOperator};

/// Local matrices of one cell, in the local DOF order of [`CellDofs`].
#[derive(Clone, Debug)]
pub struct CellMatrices {
    pub dofs: CellDofs,
    /// `sum_{i,j} (d2_{ij,w} u, d2_{ij,w} v)_T`.
    pub hessian: DMatrix<f64>,
    /// The cell's share of `s(u, v)`.
    pub stabilizer: DMatrix<f64>,
    /// `(g, v_0)_T` on the interior block, zero elsewhere.
    pub load: DVector<f64>,
}

impl CellMatrices {
    pub fn local_form(&self) -> DMatrix<f64> {
        &self.hessian + &self.stabilizer
    }
}

/// Cellwise pieces of `a_s` and the load functional.
#[derive(Clone, Debug)]
pub struct Assembly {
    pub layout: DofLayout,
    pub stabilization: Stabilization,
    pub cells: Vec<CellMatrices>,
}

/// Length entering the `h_T^{-p}` penalty weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PenaltyScale {
    /// The owning cell's diameter.
    CellDiameter,
    /// One length for every cell, e.g. the spacing of a uniform lattice.
    Uniform(f64),
}

/// Weighting of the stabilizer `s(., .)`.
///
/// The edge term is written as a sum over `∂F` for the faces `F` of `T`, so
/// every edge of `T` is visited by two faces of `T`; `edges_once_per_cell`
/// halves it, which is the same as summing over the edges of `T` once.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stabilization {
    pub scale: PenaltyScale,
    /// Keep the tangential term for every `k`, not only for `k = 3`.
    pub tangential_all_degrees: bool,
    pub edges_once_per_cell: bool,
}

impl Stabilization {
    /// Cell diameters, tangential term for `k = 3` only, edges once per face.
    pub fn cellwise() -> Self {
        Self {
            scale: PenaltyScale::CellDiameter,
            tangential_all_degrees: false,
            edges_once_per_cell: false,
        }
    }

    /// Uniform length `h`, tangential term for all `k`, edges once per cell.
    pub fn lattice(h: f64) -> Self {
        Self {
            scale: PenaltyScale::Uniform(h),
            tangential_all_degrees: true,
            edges_once_per_cell: true,
        }
    }

    pub fn cell_scale(&self, mesh: &PolytopalMesh, cell: usize) -> f64 {
        match self.scale {
            PenaltyScale::CellDiameter => mesh.cells[cell].diameter,
            PenaltyScale::Uniform(h) => h,
        }
    }

    /// Multiplicity of one `(face, edge)` visit in the edge sums.
    pub fn edge_weight(&self) -> f64 {
        if self.edges_once_per_cell {
            0.5
        } else {
            1.0
        }
    }

    pub fn terms(&self, k: usize) -> StabilizerTerms {
        StabilizerTerms {
            edge: true,
            trace: true,
            normal: true,
            tangential: k == 3 || self.tangential_all_degrees,
        }
    }
}

/// Named choices of [`Stabilization`] for the generated grid families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum PenaltyConvention {
    /// [`Stabilization::lattice`] with the family's lattice spacing.
    #[default]
    Lattice,
    /// [`Stabilization::cellwise`].
    Cellwise,
}

impl PenaltyConvention {
    pub fn stabilization(self, family: MeshFamily, level: u32) -> Stabilization {
        match self {
            Self::Lattice => Stabilization::lattice(family.spacing(level)),
            Self::Cellwise => Stabilization::cellwise(),
        }
    }
}

impl std::str::FromStr for PenaltyConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lattice" => Ok(Self::Lattice),
            "cellwise" => Ok(Self::Cellwise),
            _ => Err(format!(
                "unknown penalty convention `{s}` (expected lattice or cellwise)"
            )),
        }
    }
}

impl std::fmt::Display for PenaltyConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lattice => "lattice",
            Self::Cellwise => "cellwise",
        })
    }
}

/// Which stabilizer terms to include.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StabilizerTerms {
    pub edge: bool,
    pub trace: bool,
    pub normal: bool,
    pub tangential: bool,
}

pub fn assemble(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    g: &dyn ScalarFn,
    stab: &Stabilization,
) -> Result<Assembly> {
    assemble_with(mesh, layout, g, stab, stab.terms(layout.k))
}

/// Builds all cell matrices in parallel; the output order is the cell order,
/// independent of the thread count.
pub fn assemble_with(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    g: &dyn ScalarFn,
    stab: &Stabilization,
    terms: StabilizerTerms,
) -> Result<Assembly> {
    let cells = (0..mesh.cells.len())
        .into_par_iter()
        .map(|c| {
            let op = weak_second_partial(mesh, layout, c)?;
            let hessian = op.hessian_energy();
            let stabilizer = local_stabilizer(mesh, layout, &op, stab, terms)?;
            let load = local_load(mesh, layout, c, op.dofs.len(), g)?;
            Ok(CellMatrices {
                dofs: op.dofs,
                hessian,
                stabilizer,
                load,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Assembly {
        layout: layout.clone(),
        stabilization: *stab,
        cells,
    })
}

/// `K += weight * D^T M D`.
fn add_penalty(k: &mut DMatrix<f64>, weight: f64, d: &DMatrix<f64>, m: &DMatrix<f64>) {
    *k += (d.transpose() * (m * d)) * weight;
}

/// Stabilizer `s(., .)` restricted to one cell.
pub fn local_stabilizer(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    op: &LocalOperator,
    stab: &Stabilization,
    terms: StabilizerTerms,
) -> Result<DMatrix<f64>> {
    let k = layout.k;
    let cell = op.cell;
    let c = &mesh.cells[cell];
    let dofs = &op.dofs;
    let n = dofs.len();
    let n0 = dofs.n_interior;
    let h = stab.cell_scale(mesh, cell);
    let full = mesh.cell_basis(cell, k);
    let mut s = DMatrix::zeros(n, n);

    for (lf, &face) in c.faces.iter().enumerate() {
        let f = &mesh.faces[face];
        let frule = QuadRule::face(mesh, face, 2 * k)?;

        if terms.edge {
            for (le, &ce) in dofs.face_edges[lf].iter().enumerate() {
                let e = f.edges[le];
                let eb = mesh.edge_basis(e, k - 2);
                let er = QuadRule::edge(mesh, e, 2 * k)?;
                let me = mass(&eb, &er);
                let proj = Spd::new(me.clone(), &format!("edge {e} mass matrix"))?
                    .solve(&cross_mass(&eb, &full, &er));
                let mut d = DMatrix::zeros(eb.len(), n);
                d.columns_mut(0, n0).copy_from(&proj);
                for p in 0..eb.len() {
                    d[(p, dofs.edge[ce] + p)] = -1.0;
                }
                add_penalty(&mut s, h.powi(-2) * stab.edge_weight(), &d, &me);
            }
        }

        if terms.trace {
            let tb = mesh.face_basis(face, k - 3);
            let mt = mass(&tb, &frule);
            let proj = Spd::new(mt.clone(), &format!("face {face} mass matrix"))?
                .solve(&cross_mass(&tb, &full, &frule));
            let mut d = DMatrix::zeros(tb.len(), n);
            d.columns_mut(0, n0).copy_from(&proj);
            for p in 0..tb.len() {
                d[(p, dofs.face_trace[lf] + p)] = -1.0;
            }
            add_penalty(&mut s, h.powi(-3), &d, &mt);
        }

        if terms.normal || terms.tangential {
            let nb = mesh.face_basis(face, k - 2);
            let mn = mass(&nb, &frule);
            let spd = Spd::new(mn.clone(), &format!("face {face} mass matrix"))?;
            // <chi_q, grad phi_p . dir>_F
            let directional = |dir: &[f64; 3]| {
                let mut x = DMatrix::zeros(nb.len(), n0);
                let mut nv = vec![0.0; nb.len()];
                for (pt, w) in frule.iter() {
                    nb.eval(pt, &mut nv);
                    for (p, gp) in full.gradients(pt).iter().enumerate() {
                        let gd = w * dot(gp, dir);
                        for q in 0..nb.len() {
                            x[(q, p)] += gd * nv[q];
                        }
                    }
                }
                spd.solve(&x)
            };
            if terms.normal {
                let mut d = DMatrix::zeros(nb.len(), n);
                d.columns_mut(0, n0)
                    .copy_from(&directional(&f.frame.normal));
                for p in 0..nb.len() {
                    d[(p, dofs.face_normal[lf] + p)] = -1.0;
                }
                add_penalty(&mut s, h.powi(-1), &d, &mn);
            }
            if terms.tangential {
                for (a, t) in f.frame.tangents.iter().enumerate() {
                    let mut d = -&op.tangential[lf][a];
                    let mut block = d.columns_mut(0, n0);
                    block += directional(t);
                    add_penalty(&mut s, h.powi(-1), &d, &mn);
                }
            }
        }
    }
    Ok((&s + s.transpose()) * 0.5)
}

fn local_load(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    cell: usize,
    n: usize,
    g: &dyn ScalarFn,
) -> Result<DVector<f64>> {
    let k = layout.k;
    let basis = mesh.cell_basis(cell, k);
    let degree = g.degree().map_or(2 * k + 2, |dg| (k + dg).max(2 * k + 2));
    let rule = QuadRule::cell(mesh, cell, degree)?;
    let mut load = DVector::zeros(n);
    let mut v = vec![0.0; basis.len()];
    for (x, w) in rule.iter() {
        basis.eval(x, &mut v);
        let gx = w * g.eval(x);
        for p in 0..basis.len() {
            load[p] += gx * v[p];
        }
    }
    Ok(load)
}

impl Assembly {
    /// `a_s(v, v)` summed over cells.
    pub fn energy(&self, v: &WeakFunction) -> f64 {
        self.bilinear(v, v)
    }

    pub fn bilinear(&self, u: &WeakFunction, v: &WeakFunction) -> f64 {
        self.cells
            .par_iter()
            .map(|c| {
                let lu = DVector::from_vec(u.gather(&c.dofs));
                let lv = DVector::from_vec(v.gather(&c.dofs));
                lv.dot(&(c.local_form() * lu))
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    /// Stabilizer part `s(u, v)` alone.
    pub fn stabilizer_form(&self, u: &WeakFunction, v: &WeakFunction) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                let lu = DVector::from_vec(u.gather(&c.dofs));
                let lv = DVector::from_vec(v.gather(&c.dofs));
                lv.dot(&(&c.stabilizer * lu))
            })
            .sum()
    }

    /// `(g, v_0)` for a weak function `v`.
    pub fn load_form(&self, v: &WeakFunction) -> f64 {
        self.cells
            .iter()
            .map(|c| DVector::from_vec(v.gather(&c.dofs)).dot(&c.load))
            .sum()
    }

    /// Global matrix as a triplet list in cell order, duplicates not merged.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for c in &self.cells {
            let a = c.local_form();
            for (q, &gq) in c.dofs.global.iter().enumerate() {
                for (p, &gp) in c.dofs.global.iter().enumerate() {
                    t.push((gp, gq, a[(p, q)]));
                }
            }
        }
        t
    }

    /// Global load vector.
    pub fn load_vector(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.layout.total()];
        for c in &self.cells {
            for (p, &gp) in c.dofs.global.iter().enumerate() {
                b[gp] += c.load[p];
            }
        }
        b
    }
}
