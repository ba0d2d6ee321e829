use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::Assembly;
use crate::dense::Spd;
use crate::error::{Error, Result};
use crate::geometry::{Point, PolytopalMesh};
use crate::poly::{dot, SmoothField};
use crate::space::{DofLayout, FnField, Projector, WeakFunction};

/// Values of the constrained (boundary) unknowns: `Q_b zeta`, `Q_f zeta` and
/// `Q_n xi` with `zeta = u` and `xi = grad u . N_F` on the boundary.
pub fn boundary_values(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    data: &dyn SmoothField,
) -> Result<Vec<f64>> {
    let pr = Projector::new(mesh, layout);
    let mut v = vec![0.0; layout.total()];
    let value = FnField(|x: &Point| data.value(x), data.degree());
    for (fi, f) in mesh.faces.iter().enumerate().filter(|(_, f)| f.boundary) {
        let n = f.frame.normal;
        let dn = FnField(
            |x: &Point| dot(&data.gradient(x), &n),
            data.degree().map(|d| d.saturating_sub(1)),
        );
        v[layout.face_trace(fi)].copy_from_slice(&pr.qf(fi, &value)?);
        v[layout.face_normal(fi)].copy_from_slice(&pr.qn(fi, &dn)?);
    }
    for (ei, _) in mesh.edges.iter().enumerate().filter(|(_, e)| e.boundary) {
        v[layout.edge(ei)].copy_from_slice(&pr.qb(ei, &value)?);
    }
    Ok(v)
}

/// Compressed symmetric matrix with both triangles stored.
#[derive(Clone, Debug)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Sums duplicate entries; entry order within a column is by row.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; n + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            for idx in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[idx]] += self.values[idx] * xc;
            }
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for c in 0..self.n {
            for idx in self.col_ptr[c]..self.col_ptr[c + 1] {
                if self.row_idx[idx] == c {
                    d[c] = self.values[idx];
                }
            }
        }
        d
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }
}

/// The global system restricted to the free unknowns.
#[derive(Clone, Debug)]
pub struct SpdSystem {
    pub layout: DofLayout,
    /// Global index of each free unknown.
    pub free: Vec<usize>,
    /// Values of the constrained unknowns (zero at free positions).
    pub fixed: Vec<f64>,
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
}

/// Eliminates the constrained unknowns, moving their columns to the right-hand side.
pub fn apply_bc(assembly: &Assembly, fixed: &[f64]) -> Result<SpdSystem> {
    let layout = &assembly.layout;
    if fixed.len() != layout.total() {
        return Err(Error::DimensionMismatch(
            "boundary vector length differs from the layout".into(),
        ));
    }
    let mask = layout.constrained();
    let mut index = vec![usize::MAX; layout.total()];
    let free: Vec<usize> = (0..layout.total()).filter(|&i| !mask[i]).collect();
    for (k, &g) in free.iter().enumerate() {
        index[g] = k;
    }
    let load = assembly.load_vector();
    let mut rhs: Vec<f64> = free.iter().map(|&g| load[g]).collect();
    let mut t = Vec::new();
    for (r, c, v) in assembly.triplets() {
        let (ir, ic) = (index[r], index[c]);
        if ir == usize::MAX {
            continue;
        }
        if ic == usize::MAX {
            rhs[ir] -= v * fixed[c];
        } else {
            t.push((ir, ic, v));
        }
    }
    let mut fixed_only = fixed.to_vec();
    for &g in &free {
        fixed_only[g] = 0.0;
    }
    Ok(SpdSystem {
        layout: layout.clone(),
        matrix: CscMatrix::from_triplets(free.len(), t),
        free,
        fixed: fixed_only,
        rhs,
    })
}

/// Solution of a sparse SPD system with its achieved residual.
#[derive(Clone, Debug)]
pub struct LinearSolve {
    pub x: Vec<f64>,
    /// Normwise backward error `|b - A x| / (|A| |x| + |b|)` in the max norm.
    pub residual: f64,
    pub refinements: usize,
    pub cg_iterations: usize,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `b - A x` accumulated in double-double arithmetic and rounded once, so
/// that iterative refinement can reach working accuracy in the solution.
fn residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut hi = b.to_vec();
    let mut lo = vec![0.0; a.n];
    for c in 0..a.n {
        let xc = x[c];
        for idx in a.col_ptr[c]..a.col_ptr[c + 1] {
            let r = a.row_idx[idx];
            let p = a.values[idx] * xc;
            let pe = a.values[idx].mul_add(xc, -p);
            let (s, e) = two_sum(hi[r], -p);
            hi[r] = s;
            lo[r] += e - pe;
        }
    }
    hi.iter().zip(&lo).map(|(h, l)| h + l).collect()
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `x += solve(b - A x)` while the correction keeps shrinking; returns the
/// number of corrections applied.
fn refine(a: &CscMatrix, b: &[f64], x: &mut [f64], solve: impl Fn(&[f64]) -> Vec<f64>) -> usize {
    let mut last = f64::INFINITY;
    let mut steps = 0;
    while steps < 10 {
        let dx = solve(&residual(a, x, b));
        let size = max_abs(&dx);
        if size.is_nan() || size >= 0.5 * last {
            break;
        }
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        steps += 1;
        last = size;
        if size <= f64::EPSILON * max_abs(x) {
            break;
        }
    }
    steps
}

impl CscMatrix {
    /// Max-norm of the matrix (largest absolute row sum; symmetric storage).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|c| {
                self.values[self.col_ptr[c]..self.col_ptr[c + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Normwise backward error of `x` as a solution of `A x = b`.
    pub fn backward_error(&self, x: &[f64], b: &[f64]) -> f64 {
        let denom = self.norm_inf() * max_abs(x) + max_abs(b);
        if denom == 0.0 {
            return 0.0;
        }
        max_abs(&residual(self, x, b)) / denom
    }
}

/// Sparse Cholesky factor of `D A D` with `D = diag(A)^{-1/2}`.
struct SparseFactor {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    scaling: Vec<f64>,
}

impl SparseFactor {
    fn new(a: &CscMatrix) -> Result<Self> {
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
            return Err(Error::Indefinite(format!(
                "non-positive diagonal entry at unknown {i}"
            )));
        }
        let s: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut t = Vec::with_capacity(a.nnz());
        for c in 0..a.n {
            for idx in a.col_ptr[c]..a.col_ptr[c + 1] {
                let r = a.row_idx[idx];
                if r >= c {
                    t.push(Triplet::new(r, c, a.values[idx] * s[r] * s[c]));
                }
            }
        }
        let scaled =
            SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &t).map_err(|e| {
                Error::SingularMatrix(format!("sparse matrix construction failed: {e:?}"))
            })?;
        let llt = scaled.as_ref().sp_cholesky(Side::Lower).map_err(|e| {
            Error::Indefinite(format!("sparse Cholesky factorization failed: {e:?}"))
        })?;
        Ok(Self { llt, scaling: s })
    }

    fn solve(&self, r: &[f64]) -> Vec<f64> {
        let s = &self.scaling;
        let rhs = Mat::from_fn(s.len(), 1, |i, _| r[i] * s[i]);
        let y = self.llt.solve(&rhs);
        (0..s.len()).map(|i| y[(i, 0)] * s[i]).collect()
    }
}

/// Sparse Cholesky (fill-reducing ordering, symmetric diagonal scaling) with
/// iterative refinement, then Jacobi-preconditioned conjugate gradients if the
/// normwise backward error is still above `tol`.
///
/// The residual is measured relative to `|A| |x| + |b|`: for these fourth-order
/// systems `|A| |x|` exceeds `|b|` by many orders of magnitude, so no
/// floating-point solver can bring `|b - A x| / |b|` down to `1e-12`.
pub fn solve_spd(a: &CscMatrix, b: &[f64], tol: f64) -> Result<LinearSolve> {
    let n = a.n;
    if n == 0 || max_abs(b) == 0.0 {
        return Ok(LinearSolve {
            x: vec![0.0; n],
            residual: 0.0,
            refinements: 0,
            cg_iterations: 0,
        });
    }
    let factor = SparseFactor::new(a)?;
    let mut x = factor.solve(b);
    let refinements = refine(a, b, &mut x, |r| factor.solve(r));
    finish(a, b, x, tol, refinements)
}

/// Falls back to conjugate gradients if the backward error is above `tol`.
fn finish(
    a: &CscMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    refinements: usize,
) -> Result<LinearSolve> {
    let mut err = a.backward_error(&x, b);
    let mut cg_iterations = 0;
    if err > tol {
        let diag = a.diagonal();
        let (xc, it) = pcg(a, b, x, &diag, tol, 10 * a.n.max(100));
        x = xc;
        cg_iterations = it;
        err = a.backward_error(&x, b);
    }
    if err > tol {
        return Err(Error::NotConverged { achieved: err, tol });
    }
    Ok(LinearSolve {
        x,
        residual: err,
        refinements,
        cg_iterations,
    })
}

/// Jacobi-preconditioned conjugate gradients from `x0`, stopped on the
/// backward error; returns the best iterate and the iteration count.
fn pcg(
    a: &CscMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    diag: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let an = a.norm_inf();
    let bn = max_abs(b);
    let mut r = residual(a, &x, b);
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = a.mul(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 || rz == 0.0 {
            return (x, it);
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if max_abs(&r) <= tol * (an * max_abs(&x) + bn) && a.backward_error(&x, b) <= tol {
            return (x, it);
        }
        for i in 0..z.len() {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, max_iter)
}

/// Solves the full system for all free unknowns at once.
pub fn solve_full(system: &SpdSystem, tol: f64) -> Result<(WeakFunction, LinearSolve)> {
    let sol = solve_spd(&system.matrix, &system.rhs, tol)?;
    let mut coeffs = system.fixed.clone();
    for (k, &g) in system.free.iter().enumerate() {
        coeffs[g] = sol.x[k];
    }
    Ok((WeakFunction { coeffs }, sol))
}

/// Cellwise elimination of the interior unknowns of the eliminated system.
///
/// Interior unknowns are never constrained, so in the free numbering of
/// [`apply_bc`] they come first and keep their global indices; free skeleton
/// unknown `j` sits at `skeleton_start + j`.
struct Condensation {
    start: usize,
    cells: Vec<CondensedCell>,
    skeleton: SparseFactor,
    unknowns: usize,
}

struct CondensedCell {
    interior: std::ops::Range<usize>,
    /// Free skeleton index of each local skeleton unknown.
    skeleton: Vec<Option<usize>>,
    a00: Spd,
    /// `A00^{-1} A0s`
    coupling: DMatrix<f64>,
}

impl Condensation {
    fn new(assembly: &Assembly) -> Result<Self> {
        let layout = &assembly.layout;
        let start = layout.skeleton_start();
        let mask = layout.constrained();
        let mut index = vec![None; layout.total()];
        let mut unknowns = 0;
        for g in start..layout.total() {
            if !mask[g] {
                index[g] = Some(unknowns);
                unknowns += 1;
            }
        }
        let parts = assembly
            .cells
            .par_iter()
            .enumerate()
            .map(|(c, cm)| {
                let a = cm.local_form();
                let n0 = cm.dofs.n_interior;
                let ns = cm.dofs.len() - n0;
                let a0s = a.view((0, n0), (n0, ns)).into_owned();
                let ass = a.view((n0, n0), (ns, ns)).into_owned();
                let a00 = Spd::new(
                    a.view((0, 0), (n0, n0)).into_owned(),
                    &format!("interior block of cell {c}"),
                )?;
                let coupling = a00.solve(&a0s);
                let schur = &ass - a0s.transpose() * &coupling;
                let skeleton: Vec<Option<usize>> =
                    cm.dofs.global[n0..].iter().map(|&g| index[g]).collect();
                Ok((
                    CondensedCell {
                        interior: layout.interior(c),
                        skeleton,
                        a00,
                        coupling,
                    },
                    schur,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = Vec::new();
        for (cell, schur) in &parts {
            for (p, ip) in cell.skeleton.iter().enumerate() {
                let Some(ip) = ip else { continue };
                for (q, iq) in cell.skeleton.iter().enumerate() {
                    if let Some(iq) = iq {
                        t.push((*ip, *iq, schur[(p, q)]));
                    }
                }
            }
        }
        let skeleton = SparseFactor::new(&CscMatrix::from_triplets(unknowns, t))?;
        Ok(Self {
            start,
            cells: parts.into_iter().map(|(c, _)| c).collect(),
            skeleton,
            unknowns,
        })
    }

    /// Solves the eliminated system for a right-hand side in free numbering.
    fn solve(&self, r: &[f64]) -> Vec<f64> {
        let local: Vec<DVector<f64>> = self
            .cells
            .par_iter()
            .map(|cell| {
                cell.a00
                    .solve_vec(&DVector::from_column_slice(&r[cell.interior.clone()]))
            })
            .collect();
        let mut rs = r[self.start..].to_vec();
        for cell in &self.cells {
            let reduced = cell
                .coupling
                .tr_mul(&DVector::from_column_slice(&r[cell.interior.clone()]));
            for (p, ip) in cell.skeleton.iter().enumerate() {
                if let Some(ip) = ip {
                    rs[*ip] -= reduced[p];
                }
            }
        }
        let xs = self.skeleton.solve(&rs);
        let mut x = vec![0.0; self.start + self.unknowns];
        let interiors: Vec<DVector<f64>> = self
            .cells
            .par_iter()
            .zip(&local)
            .map(|(cell, y0)| {
                let us = DVector::from_iterator(
                    cell.skeleton.len(),
                    cell.skeleton.iter().map(|i| i.map_or(0.0, |i| xs[i])),
                );
                y0 - &cell.coupling * us
            })
            .collect();
        for (cell, u0) in self.cells.iter().zip(interiors) {
            x[cell.interior.clone()].copy_from_slice(u0.as_slice());
        }
        x[self.start..].copy_from_slice(&xs);
        x
    }
}

/// Eliminates every cell's interior block, solves the skeleton system, and
/// recovers the interior unknowns cell by cell. The result is refined against
/// the full eliminated system, so it agrees with [`solve_full`] to working
/// accuracy. `LinearSolve::x` holds the skeleton unknowns; the reported
/// residual is the backward error of the full eliminated system.
pub fn solve_schur(
    assembly: &Assembly,
    fixed: &[f64],
    tol: f64,
) -> Result<(WeakFunction, LinearSolve)> {
    let system = apply_bc(assembly, fixed)?;
    let condensed = Condensation::new(assembly)?;
    let (a, b) = (&system.matrix, &system.rhs);
    let mut x = condensed.solve(b);
    let refinements = refine(a, b, &mut x, |r| condensed.solve(r));
    let mut sol = finish(a, b, x, tol, refinements)?;
    let mut coeffs = system.fixed.clone();
    for (k, &g) in system.free.iter().enumerate() {
        coeffs[g] = sol.x[k];
    }
    sol.x.drain(..condensed.start);
    Ok((WeakFunction { coeffs }, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MeshFamily;
    use crate::poly::manufactured_case;
    use crate::system::{assemble, Stabilization};

    #[test]
    fn condensation_inverts_the_eliminated_system() {
        for family in [MeshFamily::Square, MeshFamily::Polygon] {
            let mesh = family.generate(3);
            let layout = DofLayout::new(&mesh, 4).unwrap();
            let asm = assemble(
                &mesh,
                &layout,
                &manufactured_case(2).g,
                &Stabilization::lattice(0.25),
            )
            .unwrap();
            let system = apply_bc(&asm, &vec![0.0; layout.total()]).unwrap();
            let condensed = Condensation::new(&asm).unwrap();
            let v: Vec<f64> = (0..system.free.len())
                .map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5)
                .collect();
            let w = condensed.solve(&system.matrix.mul(&v));
            let err = v
                .iter()
                .zip(&w)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "{family:?}: {err:e}");
        }
    }

    #[test]
    fn compensated_residual_is_exact_for_cancelling_sums() {
        let a = CscMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1e16), (1, 1, 1.0)]);
        let r = residual(&a, &[1.0, 1.0], &[1e16, 1.0]);
        assert_eq!(r, vec![-1.0, 0.0]);
    }
}
