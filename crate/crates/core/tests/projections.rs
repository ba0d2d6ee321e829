mod common;

use common::*;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use wgmorley::space::FnField;
use wgmorley::{DofLayout, MeshFamily, MultiPoly, Projector, QuadRule};

#[test]
fn cell_projection_reproduces_its_space() {
    let mut r = rng(1);
    for family in [MeshFamily::Square, MeshFamily::Polygon, MeshFamily::Cube] {
        let mesh = family.generate(2);
        for k in 3..=5 {
            let layout = DofLayout::new(&mesh, k).unwrap();
            let proj = Projector::new(&mesh, &layout);
            let p = random_poly(&mut r, mesh.dim, k);
            for c in [0, mesh.num_cells() / 2] {
                let basis = mesh.cell_basis(c, k);
                let q = proj.q0(c, &p).unwrap();
                for (x, _) in QuadRule::cell(&mesh, c, 4).unwrap().iter() {
                    assert!(
                        (basis.combine(&q, x) - p.eval(x)).abs() < 1e-11,
                        "{family:?} k={k}"
                    );
                }
            }
        }
    }
}

#[test]
fn projection_is_idempotent_and_orthogonal() {
    let mut r = rng(2);
    let mesh = MeshFamily::Polygon.generate(2);
    let k = 4;
    let layout = DofLayout::new(&mesh, k).unwrap();
    let proj = Projector::new(&mesh, &layout);
    for c in 0..5 {
        let phi = random_poly(&mut r, 2, k + 2);
        let basis = mesh.cell_basis(c, k);
        let q = proj.q0(c, &phi).unwrap();
        let again = proj
            .q0(c, &FnField(|x: &[f64; 3]| basis.combine(&q, x), Some(k)))
            .unwrap();
        let rule = QuadRule::cell(&mesh, c, 2 * k + 2).unwrap();
        for (x, _) in rule.iter() {
            assert!((basis.combine(&again, x) - basis.combine(&q, x)).abs() < 1e-11);
        }
        for m in 0..basis.len() {
            let inner =
                rule.integrate(|x| (phi.eval(x) - basis.combine(&q, x)) * basis.values(x)[m]);
            assert!(inner.abs() < 1e-12, "cell {c} basis {m}: {inner:e}");
        }
    }
}

#[test]
fn low_projection_of_cubic_on_unit_square() {
    // least squares fit of x^3 by {1, x, y} on [0, 1]^2 with exact moments
    let moment = |a: i32, b: i32| 1.0 / ((a + 1) * (b + 1)) as f64;
    let exps = [(0, 0), (1, 0), (0, 1)];
    let gram = Matrix3::from_fn(|p, q| moment(exps[p].0 + exps[q].0, exps[p].1 + exps[q].1));
    let rhs = Vector3::from_fn(|p, _| moment(exps[p].0 + 3, exps[p].1));
    let c = gram.lu().solve(&rhs).unwrap();

    let mesh = MeshFamily::Square.generate(1);
    let layout = DofLayout::new(&mesh, 3).unwrap();
    let x3 = MultiPoly::var(2, 0).pow(3);
    let q = Projector::new(&mesh, &layout).q_low(0, &x3).unwrap();
    let low = mesh.cell_basis(0, 1);
    for x in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.3, 0.9, 0.0]] {
        let want = c[0] + c[1] * x[0] + c[2] * x[1];
        assert!((low.combine(&q, &x) - want).abs() < 1e-13);
        assert!((want - (0.9 * x[0] - 0.2)).abs() < 1e-13);
    }
}

#[test]
fn trace_projection_of_x_on_bottom_edge() {
    let mesh = MeshFamily::Square.generate(1);
    let layout = DofLayout::new(&mesh, 3).unwrap();
    let f = mesh
        .faces
        .iter()
        .position(|f| f.vertices.iter().all(|&v| mesh.vertices[v][1] == 0.0))
        .unwrap();
    let q = Projector::new(&mesh, &layout)
        .qf(f, &MultiPoly::var(2, 0))
        .unwrap();
    assert_eq!(q.len(), 1);
    assert!((q[0] - 0.5).abs() < 1e-14);
}

#[test]
fn interpolant_of_one() {
    for family in [MeshFamily::Triangle, MeshFamily::Cube] {
        let mesh = family.generate(2);
        let layout = DofLayout::new(&mesh, 4).unwrap();
        let one = poly_field(&MultiPoly::constant(mesh.dim, 1.0));
        let w = Projector::new(&mesh, &layout).interpolate(&one).unwrap();
        for c in 0..mesh.num_cells() {
            let b = mesh.cell_basis(c, 4);
            let v0 = &w.coeffs[layout.interior(c)];
            assert!((b.combine(v0, &mesh.cells[c].centroid) - 1.0).abs() < 1e-13);
        }
        for f in 0..mesh.faces.len() {
            assert!(max_abs(&w.coeffs[layout.face_normal(f)]) < 1e-13);
            let b = mesh.face_basis(f, 1);
            let x = mesh.vertices[mesh.faces[f].vertices[0]];
            assert!((b.combine(&w.coeffs[layout.face_trace(f)], &x) - 1.0).abs() < 1e-13);
        }
        for e in 0..mesh.edges.len() {
            let b = mesh.edge_basis(e, 2);
            assert!(
                (b.combine(&w.coeffs[layout.edge(e)], &mesh.edges[e].center) - 1.0).abs() < 1e-13
            );
        }
    }
}

#[test]
fn face_projection_orthogonality_in_three_dimensions() {
    let mut r = rng(9);
    let mesh = MeshFamily::Cube.generate(2);
    let layout = DofLayout::new(&mesh, 5).unwrap();
    let proj = Projector::new(&mesh, &layout);
    for _ in 0..5 {
        let f = r.random_range(0..mesh.faces.len());
        let phi = random_poly(&mut r, 3, 6);
        let b = mesh.face_basis(f, 3);
        let q = proj.qn(f, &phi).unwrap();
        let rule = QuadRule::face(&mesh, f, 10).unwrap();
        for m in 0..b.len() {
            let inner = rule.integrate(|x| (phi.eval(x) - b.combine(&q, x)) * b.values(x)[m]);
            assert!(inner.abs() < 1e-12, "face {f}: {inner:e}");
        }
    }
}
