//! Discrete weak tangential derivative and weak second-order partial
//! derivatives as local matrices acting on raw degrees of freedom.
//!
//! The tangential derivative is tested against in-plane fields: for a face
//! `F` with tangents `t_a` and any `q in P_{k-2}(F)`,
//!
//! ```text
//! <w_a, q>_F = -<v_{b,f}, d_{t_a} q>_F + sum_{e in dF} <v_{b,e}, q (nu_e . t_a)>_e
//! ```
//!
//! where `nu_e` is the outward in-plane conormal of `e`. This is the
//! curl-form definition rewritten with `chi = psi x n_f` (a quarter rotation
//! of `psi`), so `w = sum_a w_a t_a` is independent of the cell used to view
//! the face. In 2D the edge sum is an endpoint difference.

use nalgebra::DMatrix;

use crate::dense::{cross_mass, mass, Spd};
use crate::error::Result;
use crate::geometry::{Point, PolytopalMesh, QuadRule};
use crate::poly::dot;
use crate::space::{CellDofs, DofLayout, WeakFunction};

/// Quadrature degrees used to build the local operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadDegrees {
    pub cell: usize,
    pub face: usize,
    pub edge: usize,
}

impl QuadDegrees {
    /// Exact for every product that appears in the local systems.
    pub fn exact(k: usize) -> Self {
        Self {
            cell: 2 * k + 2,
            face: 2 * k,
            edge: 2 * k,
        }
    }
}

/// Tangential derivative on one face.
///
/// Input order: the face trace block, then the edge blocks in the order of
/// `Face::edges`. `ops[a]` maps that input to the `P_{k-2}(F)` coefficients
/// of the component along `frame.tangents[a]`.
#[derive(Clone, Debug)]
pub struct FaceTangential {
    pub face: usize,
    pub mass: DMatrix<f64>,
    pub ops: Vec<DMatrix<f64>>,
}

impl FaceTangential {
    pub fn apply(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let x = nalgebra::DVector::from_column_slice(input);
        self.ops
            .iter()
            .map(|op| (op * &x).iter().copied().collect())
            .collect()
    }
}

pub fn weak_tangential_derivative(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    face: usize,
) -> Result<FaceTangential> {
    face_tangential(mesh, layout, face, QuadDegrees::exact(layout.k))
}

fn face_tangential(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    face: usize,
    deg: QuadDegrees,
) -> Result<FaceTangential> {
    let k = layout.k;
    let f = &mesh.faces[face];
    let nb = mesh.face_basis(face, k - 2);
    let tb = mesh.face_basis(face, k - 3);
    let rule = QuadRule::face(mesh, face, deg.face)?;
    let m = mass(&nb, &rule);
    let spd = Spd::new(m.clone(), &format!("face {face} mass matrix"))?;
    let n_in = layout.n_face_trace + f.edges.len() * layout.n_edge;
    let mut ops = Vec::with_capacity(f.frame.tangents.len());
    let mut tv = vec![0.0; tb.len()];
    for t in &f.frame.tangents {
        let mut rhs = DMatrix::zeros(nb.len(), n_in);
        for (x, w) in rule.iter() {
            tb.eval(x, &mut tv);
            let grads = nb.gradients(x);
            for (q, g) in grads.iter().enumerate() {
                let dq = w * dot(g, t);
                for p in 0..tb.len() {
                    rhs[(q, p)] -= dq * tv[p];
                }
            }
        }
        for (le, &e) in f.edges.iter().enumerate() {
            let nu_t = dot(&f.edge_conormal(mesh, le), t);
            let eb = mesh.edge_basis(e, k - 2);
            let er = QuadRule::edge(mesh, e, deg.edge)?;
            let block = cross_mass(&nb, &eb, &er);
            let col = layout.n_face_trace + le * layout.n_edge;
            for q in 0..nb.len() {
                for p in 0..eb.len() {
                    rhs[(q, col + p)] += nu_t * block[(q, p)];
                }
            }
        }
        ops.push(spd.solve(&rhs));
    }
    Ok(FaceTangential { face, mass: m, ops })
}

/// Weak gradient `v_g = v_n N_F + sum_a w_a t_a` on a face, evaluated at `x`.
///
/// `v_n` is the normal derivative along the face normal `N_F` and `w` the
/// tangential coefficients from [`FaceTangential::apply`].
pub fn weak_gradient(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    face: usize,
    v_n: &[f64],
    w: &[Vec<f64>],
    x: &Point,
) -> Point {
    let f = &mesh.faces[face];
    let nb = mesh.face_basis(face, layout.k - 2);
    let vals = nb.values(x);
    let comb = |c: &[f64]| c.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>();
    let mut g = [0.0; 3];
    let vn = comb(v_n);
    for i in 0..3 {
        g[i] = vn * f.frame.normal[i];
    }
    for (t, wa) in f.frame.tangents.iter().zip(w) {
        let s = comb(wa);
        for i in 0..3 {
            g[i] += s * t[i];
        }
    }
    g
}

/// Per-cell weak derivative operators.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    pub cell: usize,
    pub dim: usize,
    pub dofs: CellDofs,
    /// Mass matrix of the `P_{k-2}(T)` basis.
    pub mass: DMatrix<f64>,
    /// Right-hand sides `B_ij` (rows: `P_{k-2}(T)` test functions, columns:
    /// local DOFs) at index `i * dim + j`.
    pub rhs: Vec<DMatrix<f64>>,
    /// `M^{-1} B_ij`: coefficients of `d2_{ij,w} v`, same indexing.
    pub d2: Vec<DMatrix<f64>>,
    /// For each local face and tangent, the map from local DOFs to the
    /// tangential derivative coefficients in `P_{k-2}(F)`.
    pub tangential: Vec<Vec<DMatrix<f64>>>,
}

impl LocalOperator {
    pub fn d2_ij(&self, i: usize, j: usize) -> &DMatrix<f64> {
        &self.d2[i * self.dim + j]
    }

    /// Coefficients of `d2_{ij,w} v` restricted to the cell.
    pub fn apply(&self, i: usize, j: usize, v: &WeakFunction) -> Vec<f64> {
        let local = nalgebra::DVector::from_vec(v.gather(&self.dofs));
        (self.d2_ij(i, j) * local).iter().copied().collect()
    }

    /// Local Hessian energy matrix `sum_{i,j} B_ij^T M^{-1} B_ij`.
    pub fn hessian_energy(&self) -> DMatrix<f64> {
        let n = self.dofs.len();
        let mut a = DMatrix::zeros(n, n);
        for (b, g) in self.rhs.iter().zip(&self.d2) {
            a += b.transpose() * g;
        }
        (&a + a.transpose()) * 0.5
    }
}

pub fn weak_second_partial(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    cell: usize,
) -> Result<LocalOperator> {
    weak_second_partial_with(mesh, layout, cell, QuadDegrees::exact(layout.k))
}

/// As [`weak_second_partial`] with explicit quadrature degrees.
pub fn weak_second_partial_with(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    cell: usize,
    deg: QuadDegrees,
) -> Result<LocalOperator> {
    let k = layout.k;
    let d = mesh.dim;
    let c = &mesh.cells[cell];
    let dofs = layout.cell_dofs(mesh, cell);
    let n = dofs.len();
    let low = mesh.cell_basis(cell, k - 2);
    let full = mesh.cell_basis(cell, k);
    let crule = QuadRule::cell(mesh, cell, deg.cell)?;
    let m = mass(&low, &crule);
    let spd = Spd::new(m.clone(), &format!("cell {cell} mass matrix"))?;
    let mut rhs = vec![DMatrix::zeros(low.len(), n); d * d];

    // (v_0, d_j d_i phi)_T
    let mut fv = vec![0.0; full.len()];
    for (x, w) in crule.iter() {
        full.eval(x, &mut fv);
        let hess = low.hessians(x);
        for i in 0..d {
            for j in 0..d {
                let b = &mut rhs[i * d + j];
                for (mi, h) in hess.iter().enumerate() {
                    let hw = w * h[i][j];
                    if hw == 0.0 {
                        continue;
                    }
                    for p in 0..full.len() {
                        b[(mi, p)] += hw * fv[p];
                    }
                }
            }
        }
    }

    let mut tangential = Vec::with_capacity(c.faces.len());
    for (lf, &face) in c.faces.iter().enumerate() {
        let f = &mesh.faces[face];
        let nrm = c.outward_normal(mesh, lf);
        let big_n = f.frame.normal;
        let nb = mesh.face_basis(face, k - 2);
        let tb = mesh.face_basis(face, k - 3);
        let frule = QuadRule::face(mesh, face, deg.face)?;

        // tangential derivative lifted to local DOFs
        let ft = face_tangential(mesh, layout, face, deg)?;
        let mut lifted = Vec::with_capacity(ft.ops.len());
        for op in &ft.ops {
            let mut big = DMatrix::zeros(nb.len(), n);
            for p in 0..layout.n_face_trace {
                big.set_column(dofs.face_trace[lf] + p, &op.column(p));
            }
            for (le, &ce) in dofs.face_edges[lf].iter().enumerate() {
                for p in 0..layout.n_edge {
                    big.set_column(
                        dofs.edge[ce] + p,
                        &op.column(layout.n_face_trace + le * layout.n_edge + p),
                    );
                }
            }
            lifted.push(big);
        }

        // <phi, chi>_F and <d_j phi, psi>_F
        let cm = cross_mass(&low, &nb, &frule);
        let mut dtr = vec![DMatrix::<f64>::zeros(low.len(), tb.len()); d];
        let mut tv = vec![0.0; tb.len()];
        for (x, w) in frule.iter() {
            tb.eval(x, &mut tv);
            let g = low.gradients(x);
            for (mi, gm) in g.iter().enumerate() {
                for j in 0..d {
                    let gw = w * gm[j];
                    for p in 0..tb.len() {
                        dtr[j][(mi, p)] += gw * tv[p];
                    }
                }
            }
        }
        let tang: Vec<DMatrix<f64>> = lifted.iter().map(|l| &cm * l).collect();

        for i in 0..d {
            for j in 0..d {
                let b = &mut rhs[i * d + j];
                // -<v_{b,f} n_i, d_j phi>
                for p in 0..tb.len() {
                    for mi in 0..low.len() {
                        b[(mi, dofs.face_trace[lf] + p)] -= nrm[i] * dtr[j][(mi, p)];
                    }
                }
                // <v_{gi}, phi n_j> with v_g = v_n N_F + sum_a w_a t_a
                for p in 0..nb.len() {
                    for mi in 0..low.len() {
                        b[(mi, dofs.face_normal[lf] + p)] += nrm[j] * big_n[i] * cm[(mi, p)];
                    }
                }
                for (a, t) in f.frame.tangents.iter().enumerate() {
                    let s = nrm[j] * t[i];
                    if s != 0.0 {
                        *b += &tang[a] * s;
                    }
                }
            }
        }
        tangential.push(lifted);
    }

    let d2 = rhs.iter().map(|b| spd.solve(b)).collect();
    Ok(LocalOperator {
        cell,
        dim: d,
        dofs,
        mass: m,
        rhs,
        d2,
        tangential,
    })
}

/// Residual of the integrated-by-parts form of the weak second derivative:
///
/// ```text
/// (d2_{ij,w} v, phi)_T - [(d_ij v_0, phi)_T + <(v_0 - v_{b,f}) n_i, d_j phi>_dT
///                         - <d_i v_0 - v_{gi}, phi n_j>_dT]
/// ```
///
/// for `phi` given by its coefficients in the `P_{k-2}(T)` basis. The
/// bracket is evaluated directly by quadrature of degree `quad_degree`.
#[allow(clippy::too_many_arguments)]
pub fn verify_ibp_identity(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    op: &LocalOperator,
    v: &WeakFunction,
    i: usize,
    j: usize,
    phi: &[f64],
    quad_degree: usize,
) -> Result<f64> {
    let k = layout.k;
    let cell = op.cell;
    let c = &mesh.cells[cell];
    let local = v.gather(&op.dofs);
    let low = mesh.cell_basis(cell, k - 2);
    let full = mesh.cell_basis(cell, k);
    let v0 = &local[..op.dofs.n_interior];

    let dv = op.apply(i, j, v);
    let lhs = QuadRule::cell(mesh, cell, quad_degree)?
        .integrate(|x| low.combine(&dv, x) * low.combine(phi, x));

    let mut rhs = QuadRule::cell(mesh, cell, quad_degree)?.integrate(|x| {
        let h = full.hessians(x);
        let d2v0: f64 = v0.iter().zip(&h).map(|(c, h)| c * h[i][j]).sum();
        d2v0 * low.combine(phi, x)
    });
    for (lf, &face) in c.faces.iter().enumerate() {
        let nrm = c.outward_normal(mesh, lf);
        let tb = mesh.face_basis(face, k - 3);
        let vf = &local[op.dofs.face_trace[lf]..op.dofs.face_trace[lf] + layout.n_face_trace];
        let vn = &local[op.dofs.face_normal[lf]..op.dofs.face_normal[lf] + layout.n_face_normal];
        let w: Vec<Vec<f64>> = op.tangential[lf]
            .iter()
            .map(|t| {
                (t * nalgebra::DVector::from_column_slice(&local))
                    .iter()
                    .copied()
                    .collect()
            })
            .collect();
        rhs += QuadRule::face(mesh, face, quad_degree)?.integrate(|x| {
            let v0x = full.combine(v0, x);
            let gv0: Point = full
                .gradients(x)
                .iter()
                .zip(v0)
                .fold([0.0; 3], |acc, (g, c)| {
                    [acc[0] + c * g[0], acc[1] + c * g[1], acc[2] + c * g[2]]
                });
            let vg = weak_gradient(mesh, layout, face, vn, &w, x);
            let grad_phi: Point = low
                .gradients(x)
                .iter()
                .zip(phi)
                .fold([0.0; 3], |acc, (g, c)| {
                    [acc[0] + c * g[0], acc[1] + c * g[1], acc[2] + c * g[2]]
                });
            (v0x - tb.combine(vf, x)) * nrm[i] * grad_phi[j]
                - (gv0[i] - vg[i]) * low.combine(phi, x) * nrm[j]
        });
    }
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_square_grid, MeshFamily};
    use crate::poly::{MultiPoly, PolyField};
    use crate::space::Projector;

    #[test]
    fn constant_traces_have_zero_tangential_derivative() {
        for fam in [MeshFamily::Square, MeshFamily::Cube] {
            let m = fam.generate(2);
            let l = DofLayout::new(&m, 4).unwrap();
            let f = &m.faces[0];
            let ft = weak_tangential_derivative(&m, &l, 0).unwrap();
            let mut input = vec![0.0; l.n_face_trace + f.edges.len() * l.n_edge];
            // constant 2 in every scaled-monomial basis: only the constant coefficient is set
            input[0] = 2.0;
            for e in 0..f.edges.len() {
                input[l.n_face_trace + e * l.n_edge] = 2.0;
            }
            for w in ft.apply(&input) {
                assert!(w.iter().all(|c| c.abs() < 1e-12), "{fam}: {w:?}");
            }
        }
    }

    #[test]
    fn linear_trace_on_unit_segment_k4() {
        // face (0,0)-(1,0), v_f(s) = s, endpoint values 0 and 1: w = 1
        let m = gen_square_grid(1);
        let l = DofLayout::new(&m, 4).unwrap();
        let fi = m
            .faces
            .iter()
            .position(|f| f.vertices == vec![0, 1])
            .unwrap();
        let f = &m.faces[fi];
        assert_eq!(f.frame.tangents[0], [1.0, 0.0, 0.0]);
        let tb = m.face_basis(fi, 1);
        // s = 1/2 + diameter * xi
        let input = vec![0.5, tb.scale, 0.0, 1.0];
        let w = ft_apply(&m, &l, fi, &input);
        assert!(
            (w[0] - 1.0).abs() < 1e-13 && w[1..].iter().all(|c| c.abs() < 1e-13),
            "{w:?}"
        );
    }

    fn ft_apply(m: &PolytopalMesh, l: &DofLayout, f: usize, input: &[f64]) -> Vec<f64> {
        weak_tangential_derivative(m, l, f)
            .unwrap()
            .apply(input)
            .remove(0)
    }

    #[test]
    fn second_derivative_of_interpolated_square() {
        let m = MeshFamily::Polygon.generate(2);
        let l = DofLayout::new(&m, 3).unwrap();
        let x2 = PolyField::new(MultiPoly::var(2, 0).pow(2));
        let v = Projector::new(&m, &l).interpolate(&x2).unwrap();
        for c in 0..m.cells.len() {
            let op = weak_second_partial(&m, &l, c).unwrap();
            let low = m.cell_basis(c, 1);
            let d11 = op.apply(0, 0, &v);
            for x in m.cells[c].polygon.iter().map(|&p| m.vertices[p]) {
                assert!((low.combine(&d11, &x) - 2.0).abs() < 1e-10);
            }
            for (i, j) in [(0, 1), (1, 0), (1, 1)] {
                assert!(op.apply(i, j, &v).iter().all(|x| x.abs() < 1e-10));
            }
        }
    }

    #[test]
    fn index_symmetry() {
        for fam in [MeshFamily::Triangle, MeshFamily::Polygon, MeshFamily::Cube] {
            let m = fam.generate(2);
            let l = DofLayout::new(&m, 4).unwrap();
            let op = weak_second_partial(&m, &l, 1).unwrap();
            let d = m.dim;
            for i in 0..d {
                for j in 0..d {
                    let diff = (op.d2_ij(i, j) - op.d2_ij(j, i)).abs().max();
                    assert!(
                        diff < 1e-10 * op.d2_ij(i, j).abs().max().max(1.0),
                        "{fam} ({i},{j}): {diff}"
                    );
                }
            }
        }
    }

    #[test]
    fn under_integration_breaks_the_ibp_identity() {
        let m = MeshFamily::Polygon.generate(1);
        let l = DofLayout::new(&m, 4).unwrap();
        let phi = PolyField::new(
            MultiPoly::var(2, 0).pow(4) + MultiPoly::var(2, 1).pow(3) * MultiPoly::var(2, 0),
        );
        let v = Projector::new(&m, &l).interpolate(&phi).unwrap();
        let test = vec![1.0, 0.3, -0.2, 0.5, 0.1, -0.4];
        let good = weak_second_partial(&m, &l, 2).unwrap();
        let exact = verify_ibp_identity(&m, &l, &good, &v, 0, 1, &test, 12).unwrap();
        assert!(exact < 1e-10, "{exact}");
        let low = QuadDegrees {
            cell: l.k - 1,
            ..QuadDegrees::exact(l.k)
        };
        let bad = weak_second_partial_with(&m, &l, 2, low).unwrap();
        let r = verify_ibp_identity(&m, &l, &bad, &v, 0, 1, &test, 12).unwrap();
        assert!(r > 1e-6, "{r}");
    }
}
