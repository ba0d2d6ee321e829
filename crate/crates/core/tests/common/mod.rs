#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgmorley::poly::graded_exponents;
use wgmorley::{DofLayout, MultiPoly, WeakFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Polynomial of total degree `<= degree` with coefficients uniform in [-1, 1].
pub fn random_poly(rng: &mut impl Rng, dim: usize, degree: usize) -> MultiPoly {
    MultiPoly::from_terms(
        dim,
        graded_exponents(dim, degree)
            .into_iter()
            .map(|e| (e, rng.random_range(-1.0..1.0))),
    )
}

pub fn random_weak(rng: &mut impl Rng, layout: &DofLayout) -> WeakFunction {
    WeakFunction {
        coeffs: (0..layout.total())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    }
}

/// Gauss-Legendre rule on [0, 1] from the Jacobi matrix eigenproblem.
pub fn golub_welsch(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::zeros(n, n);
    for i in 1..n {
        let b = i as f64 / ((4 * i * i - 1) as f64).sqrt();
        j[(i, i - 1)] = b;
        j[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v = eig.eigenvectors[(0, i)];
            (0.5 * (eig.eigenvalues[i] + 1.0), v * v)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// Integral over the segment `a -> b` in the plane.
pub fn segment_integral(a: [f64; 2], b: [f64; 2], n: usize, f: impl Fn([f64; 2]) -> f64) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    golub_welsch(n)
        .iter()
        .map(|&(t, w)| w * len * f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]))
        .sum()
}

/// Integral over a convex polygon by fan triangulation and a collapsed tensor rule.
pub fn polygon_integral(poly: &[[f64; 2]], n: usize, f: impl Fn([f64; 2]) -> f64) -> f64 {
    let gw = golub_welsch(n);
    let p0 = poly[0];
    let mut total = 0.0;
    for w in poly[1..].windows(2) {
        let (p1, p2) = (w[0], w[1]);
        let jac = ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])).abs();
        for &(s, ws) in &gw {
            for &(t, wt) in &gw {
                let (a, b) = (s, t * (1.0 - s));
                let x = [
                    p0[0] + a * (p1[0] - p0[0]) + b * (p2[0] - p0[0]),
                    p0[1] + a * (p1[1] - p0[1]) + b * (p2[1] - p0[1]),
                ];
                total += ws * wt * (1.0 - s) * jac * f(x);
            }
        }
    }
    total
}

pub fn p3(x: [f64; 2]) -> [f64; 3] {
    [x[0], x[1], 0.0]
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

use wgmorley::poly::{LocalBasis, PolyField};
use wgmorley::space::{FnField, ScalarFn};
use wgmorley::QuadRule;
use wgmorley::{
    weak_second_partial, weak_tangential_derivative, MeshFamily, PolytopalMesh, Projector,
};

/// Local DOF vector of `Q_h phi` on one cell, built from the component projections.
pub fn local_interpolant(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    cell: usize,
    phi: &MultiPoly,
) -> Vec<f64> {
    let proj = Projector::new(mesh, layout);
    let dofs = layout.cell_dofs(mesh, cell);
    let c = &mesh.cells[cell];
    let mut local = vec![0.0; dofs.len()];
    local[..dofs.n_interior].copy_from_slice(&proj.q0(cell, phi).unwrap());
    let grad = phi.gradient();
    for (lf, &f) in c.faces.iter().enumerate() {
        let n = mesh.faces[f].frame.normal;
        let dn = directional(&grad, &n);
        let qf = proj.qf(f, phi).unwrap();
        let qn = proj.qn(f, &dn).unwrap();
        local[dofs.face_trace[lf]..dofs.face_trace[lf] + qf.len()].copy_from_slice(&qf);
        local[dofs.face_normal[lf]..dofs.face_normal[lf] + qn.len()].copy_from_slice(&qn);
    }
    for (le, &e) in c.edges.iter().enumerate() {
        let qb = proj.qb(e, phi).unwrap();
        local[dofs.edge[le]..dofs.edge[le] + qb.len()].copy_from_slice(&qb);
    }
    local
}

pub fn directional(grad: &[MultiPoly], dir: &[f64; 3]) -> MultiPoly {
    let dim = grad[0].dim();
    grad.iter()
        .zip(dir)
        .fold(MultiPoly::zero(dim), |acc, (g, d)| &acc + &g.scale(*d))
}

/// Sup-norm distance of two expansions over a point set, relative to the reference.
fn rel(basis: &LocalBasis, points: &QuadRule, got: &[f64], want: &[f64]) -> f64 {
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for (x, _) in points.iter() {
        let w = basis.combine(want, x);
        d = d.max((basis.combine(got, x) - w).abs());
        s = s.max(w.abs());
    }
    d / s.max(1.0)
}

/// Worst relative defect of `d2_w Q_h = QQ_h d2` and of the face tangential
/// derivative commuting with projection, over random polynomials of degree
/// `<= k + 1` on random cells.
pub fn commutativity_defect(family: MeshFamily, k: usize, trials: usize, seed: u64) -> (f64, f64) {
    let mesh = family.generate(2);
    let layout = DofLayout::new(&mesh, k).unwrap();
    let proj = Projector::new(&mesh, &layout);
    let ops: Vec<_> = (0..mesh.num_cells())
        .map(|c| weak_second_partial(&mesh, &layout, c).unwrap())
        .collect();
    let faces: Vec<_> = (0..mesh.faces.len())
        .map(|f| weak_tangential_derivative(&mesh, &layout, f).unwrap())
        .collect();
    let low: Vec<_> = (0..mesh.num_cells())
        .map(|c| mesh.cell_basis(c, k - 2))
        .collect();
    let cell_points: Vec<_> = (0..mesh.num_cells())
        .map(|c| QuadRule::cell(&mesh, c, 2 * k).unwrap())
        .collect();
    let d = mesh.dim;
    let mut r = rng(seed);
    let (mut worst_hess, mut worst_tan) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let deg = r.random_range(0..=k + 1);
        let phi = random_poly(&mut r, d, deg);
        let cell = r.random_range(0..mesh.num_cells());
        let local = nalgebra::DVector::from_vec(local_interpolant(&mesh, &layout, cell, &phi));
        let op = &ops[cell];
        for i in 0..d {
            for j in 0..d {
                let got: Vec<f64> = (op.d2_ij(i, j) * &local).iter().copied().collect();
                let want = proj
                    .q_low(cell, &phi.differentiate(i).differentiate(j))
                    .unwrap();
                worst_hess = worst_hess.max(rel(&low[cell], &cell_points[cell], &got, &want));
            }
        }
        let grad = phi.gradient();
        for &f in &mesh.cells[cell].faces {
            let face = &mesh.faces[f];
            let mut input = proj.qf(f, &phi).unwrap();
            for &e in &face.edges {
                input.extend(proj.qb(e, &phi).unwrap());
            }
            let got = faces[f].apply(&input);
            for (a, t) in face.frame.tangents.iter().enumerate() {
                let want = proj.qn(f, &directional(&grad, t)).unwrap();
                worst_tan = worst_tan.max(rel(
                    &mesh.face_basis(f, k - 2),
                    &QuadRule::face(&mesh, f, 2 * k).unwrap(),
                    &got[a],
                    &want,
                ));
            }
        }
    }
    (worst_hess, worst_tan)
}

pub fn poly_field(p: &MultiPoly) -> PolyField {
    PolyField::new(p.clone())
}

pub fn closure<F: Fn(&wgmorley::geometry::Point) -> f64 + Sync>(
    f: F,
    degree: Option<usize>,
) -> impl ScalarFn {
    FnField(f, degree)
}

use nalgebra::DVector;
use wgmorley::{LocalOperator, Stabilization};

/// L2 projection onto `basis` over `rule` of each column function, sampled
/// back at the rule's points: returns `(points x columns)`.
fn projected_samples(
    basis: &LocalBasis,
    rule: &QuadRule,
    f: impl Fn(&[f64; 3]) -> Vec<f64>,
    cols: usize,
) -> DMatrix<f64> {
    let nb = basis.len();
    let mut gram = DMatrix::<f64>::zeros(nb, nb);
    let mut rhs = DMatrix::<f64>::zeros(nb, cols);
    for (x, w) in rule.iter() {
        let b = basis.values(x);
        let fx = f(x);
        for p in 0..nb {
            for q in 0..nb {
                gram[(p, q)] += w * b[p] * b[q];
            }
            for c in 0..cols {
                rhs[(p, c)] += w * b[p] * fx[c];
            }
        }
    }
    let coef = gram.cholesky().expect("Gram matrix").solve(&rhs);
    let pts: Vec<_> = rule.iter().map(|(x, _)| *x).collect();
    DMatrix::from_fn(pts.len(), cols, |i, c| {
        (0..nb)
            .map(|p| basis.values(&pts[i])[p] * coef[(p, c)])
            .sum()
    })
}

/// Rows `R` with `s_T(u, v) = (R u) . (R v)`: every stabilizer residual
/// sampled at quadrature points and scaled by the square root of its weight.
pub fn stabilizer_rows(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    op: &LocalOperator,
    stab: &Stabilization,
) -> DMatrix<f64> {
    let k = layout.k;
    let cell = op.cell;
    let c = &mesh.cells[cell];
    let dofs = &op.dofs;
    let n = dofs.len();
    let n0 = dofs.n_interior;
    let h = stab.cell_scale(mesh, cell);
    let terms = stab.terms(k);
    let full = mesh.cell_basis(cell, k);
    let q = 2 * k + 2;
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut push = |proj: &DMatrix<f64>,
                    rule: &QuadRule,
                    own: &dyn Fn(usize, &[f64; 3]) -> DVector<f64>,
                    weight: f64| {
        for (i, (x, w)) in rule.iter().enumerate() {
            let mut r = -own(i, x);
            for p in 0..n0 {
                r[p] += proj[(i, p)];
            }
            rows.push(r * (weight * w).sqrt());
        }
    };
    for (lf, &f) in c.faces.iter().enumerate() {
        let face = &mesh.faces[f];
        let frule = QuadRule::face(mesh, f, q).unwrap();
        if terms.edge {
            for (le, &e) in face.edges.iter().enumerate() {
                let ce = dofs.face_edges[lf][le];
                let eb = mesh.edge_basis(e, k - 2);
                let erule = QuadRule::edge(mesh, e, q).unwrap();
                let proj = projected_samples(&eb, &erule, |x| full.values(x), n0);
                let own = |_: usize, x: &[f64; 3]| {
                    let mut v = DVector::zeros(n);
                    for (p, b) in eb.values(x).into_iter().enumerate() {
                        v[dofs.edge[ce] + p] = b;
                    }
                    v
                };
                push(&proj, &erule, &own, stab.edge_weight() / (h * h));
            }
        }
        if terms.trace {
            let tb = mesh.face_basis(f, k - 3);
            let proj = projected_samples(&tb, &frule, |x| full.values(x), n0);
            let own = |_: usize, x: &[f64; 3]| {
                let mut v = DVector::zeros(n);
                for (p, b) in tb.values(x).into_iter().enumerate() {
                    v[dofs.face_trace[lf] + p] = b;
                }
                v
            };
            push(&proj, &frule, &own, h.powi(-3));
        }
        let nb = mesh.face_basis(f, k - 2);
        let full = &full;
        let along = |d: [f64; 3]| {
            move |x: &[f64; 3]| -> Vec<f64> {
                full.gradients(x)
                    .iter()
                    .map(|g| g[0] * d[0] + g[1] * d[1] + g[2] * d[2])
                    .collect()
            }
        };
        if terms.normal {
            let proj = projected_samples(&nb, &frule, along(face.frame.normal), n0);
            let own = |_: usize, x: &[f64; 3]| {
                let mut v = DVector::zeros(n);
                for (p, b) in nb.values(x).into_iter().enumerate() {
                    v[dofs.face_normal[lf] + p] = b;
                }
                v
            };
            push(&proj, &frule, &own, 1.0 / h);
        }
        if terms.tangential {
            for (a, t) in face.frame.tangents.iter().enumerate() {
                let proj = projected_samples(&nb, &frule, along(*t), n0);
                let map = &op.tangential[lf][a];
                let own =
                    |_: usize, x: &[f64; 3]| map.transpose() * DVector::from_vec(nb.values(x));
                push(&proj, &frule, &own, 1.0 / h);
            }
        }
    }
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// `a_s(v, v)` evaluated as a sum of squares.
pub fn energy_sum_of_squares(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    stab: &Stabilization,
    v: &WeakFunction,
) -> f64 {
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let op = weak_second_partial(mesh, layout, c).unwrap();
        let local = DVector::from_vec(v.gather(&op.dofs));
        let rule = QuadRule::cell(mesh, c, 2 * layout.k).unwrap();
        let low = mesh.cell_basis(c, layout.k - 2);
        for d2 in &op.d2 {
            let coef: Vec<f64> = (d2 * &local).iter().copied().collect();
            total += rule.integrate(|x| low.combine(&coef, x).powi(2));
        }
        total += (stabilizer_rows(mesh, layout, &op, stab) * &local).norm_squared();
    }
    total
}
