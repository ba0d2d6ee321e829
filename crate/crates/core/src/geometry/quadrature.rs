//! Quadrature on segments, polygons and polyhedra.
//!
//! Simplices use collapsed (Duffy) tensor Gauss–Legendre rules; polygons and
//! general polyhedra are fanned into simplices. Axis-aligned boxes get a
//! plain tensor rule.

use super::{cross, norm, Point, PolytopalMesh};
use crate::error::{Error, Result};
use crate::poly::{dot, sub};

#[derive(Clone, Debug, Default)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    fn extend(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }

    /// Single point with unit weight (counting measure).
    pub fn point(x: Point) -> Self {
        Self {
            points: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn segment(a: &Point, b: &Point, degree: usize) -> Self {
        let (nodes, weights) = gauss_legendre_01(points_for(degree));
        let len = norm(&sub(b, a));
        let points = nodes.iter().map(|&t| lerp(a, b, t)).collect();
        Self {
            points,
            weights: weights.iter().map(|w| w * len).collect(),
        }
    }

    /// Collapsed rule on the triangle `abc`; `area` is its (positive) area.
    pub fn triangle(a: &Point, b: &Point, c: &Point, degree: usize) -> Self {
        let area = 0.5 * norm(&cross(&sub(b, a), &sub(c, a)));
        let (na, wa) = gauss_legendre_01(points_for(degree));
        let (nb, wb) = gauss_legendre_01(points_for(degree + 1));
        let mut rule = Self::default();
        for (s, ws) in nb.iter().zip(&wb) {
            for (r, wr) in na.iter().zip(&wa) {
                // (r, s) in the unit square -> (r (1 - s), s) in the reference triangle
                let (u, v) = (r * (1.0 - s), *s);
                let mut p = [0.0; 3];
                for k in 0..3 {
                    p[k] = a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]);
                }
                rule.points.push(p);
                rule.weights.push(2.0 * area * wr * ws * (1.0 - s));
            }
        }
        rule
    }

    pub fn tetrahedron(a: &Point, b: &Point, c: &Point, d: &Point, degree: usize) -> Self {
        let vol = dot(&sub(b, a), &cross(&sub(c, a), &sub(d, a))).abs() / 6.0;
        let (n1, w1) = gauss_legendre_01(points_for(degree));
        let (n2, w2) = gauss_legendre_01(points_for(degree + 1));
        let (n3, w3) = gauss_legendre_01(points_for(degree + 2));
        let mut rule = Self::default();
        for (t, wt) in n3.iter().zip(&w3) {
            for (s, ws) in n2.iter().zip(&w2) {
                for (r, wr) in n1.iter().zip(&w1) {
                    let (u, v, w) = (r * (1.0 - s) * (1.0 - t), s * (1.0 - t), *t);
                    let mut p = [0.0; 3];
                    for k in 0..3 {
                        p[k] = a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]) + w * (d[k] - a[k]);
                    }
                    rule.points.push(p);
                    rule.weights
                        .push(6.0 * vol * wr * ws * wt * (1.0 - s) * (1.0 - t).powi(2));
                }
            }
        }
        rule
    }

    /// Tensor Gauss rule on the box `[lo, hi]`.
    pub fn boxed(lo: &Point, hi: &Point, degree: usize) -> Self {
        let (n, w) = gauss_legendre_01(points_for(degree));
        let ext = sub(hi, lo);
        let vol = ext[0] * ext[1] * ext[2];
        let mut rule = Self::default();
        for (z, wz) in n.iter().zip(&w) {
            for (y, wy) in n.iter().zip(&w) {
                for (x, wx) in n.iter().zip(&w) {
                    rule.points
                        .push([lo[0] + x * ext[0], lo[1] + y * ext[1], lo[2] + z * ext[2]]);
                    rule.weights.push(vol * wx * wy * wz);
                }
            }
        }
        rule
    }

    /// Rule on a mesh cell, exact for polynomials of total degree `degree`.
    pub fn cell(mesh: &PolytopalMesh, cell: usize, degree: usize) -> Result<Self> {
        let c = &mesh.cells[cell];
        if c.measure <= 0.0 {
            return Err(Error::DegenerateEntity(format!(
                "cell {cell} has zero measure"
            )));
        }
        if mesh.dim == 2 {
            let pts: Vec<Point> = c.polygon.iter().map(|&v| mesh.vertices[v]).collect();
            return polygon_rule(&pts, &c.centroid, degree, &format!("cell {cell}"));
        }
        if let Some((lo, hi)) = axis_aligned_box(mesh, cell) {
            return Ok(Self::boxed(&lo, &hi, degree));
        }
        let mut rule = Self::default();
        for lp in &c.face_loops {
            let pts: Vec<Point> = lp.iter().map(|&v| mesh.vertices[v]).collect();
            let fc = average(&pts);
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                let signed = dot(
                    &sub(&fc, &c.centroid),
                    &cross(&sub(&a, &c.centroid), &sub(&b, &c.centroid)),
                );
                if signed <= 0.0 {
                    return Err(Error::DegenerateEntity(format!(
                        "cell {cell} is not star-shaped about its centroid"
                    )));
                }
                rule.extend(Self::tetrahedron(&c.centroid, &fc, &a, &b, degree));
            }
        }
        Ok(rule)
    }

    pub fn face(mesh: &PolytopalMesh, face: usize, degree: usize) -> Result<Self> {
        let f = &mesh.faces[face];
        if f.measure <= 0.0 {
            return Err(Error::DegenerateEntity(format!(
                "face {face} has zero measure"
            )));
        }
        let pts: Vec<Point> = f.vertices.iter().map(|&v| mesh.vertices[v]).collect();
        if mesh.dim == 2 {
            return Ok(Self::segment(&pts[0], &pts[1], degree));
        }
        let mut rule = Self::default();
        let o = f.frame.origin;
        for i in 0..pts.len() {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            if dot(&cross(&sub(&a, &o), &sub(&b, &o)), &f.frame.normal) <= 0.0 {
                return Err(Error::DegenerateEntity(format!(
                    "face {face} is not star-shaped about its centroid"
                )));
            }
            rule.extend(Self::triangle(&o, &a, &b, degree));
        }
        Ok(rule)
    }

    /// Segment rule in 3D; in 2D the edge is a vertex and the rule is the
    /// counting measure there.
    pub fn edge(mesh: &PolytopalMesh, edge: usize, degree: usize) -> Result<Self> {
        let e = &mesh.edges[edge];
        if mesh.dim == 2 {
            return Ok(Self::point(e.center));
        }
        if e.measure <= 0.0 {
            return Err(Error::DegenerateEntity(format!(
                "edge {edge} has zero length"
            )));
        }
        Ok(Self::segment(
            &mesh.vertices[e.vertices[0]],
            &mesh.vertices[e.vertices[1]],
            degree,
        ))
    }
}

fn polygon_rule(pts: &[Point], centroid: &Point, degree: usize, what: &str) -> Result<QuadRule> {
    if pts.len() == 3 {
        return Ok(QuadRule::triangle(&pts[0], &pts[1], &pts[2], degree));
    }
    let mut rule = QuadRule::default();
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        let s = cross(&sub(&a, centroid), &sub(&b, centroid))[2];
        if s <= 0.0 {
            return Err(Error::DegenerateEntity(format!(
                "{what} is not star-shaped about its centroid"
            )));
        }
        rule.extend(QuadRule::triangle(centroid, &a, &b, degree));
    }
    Ok(rule)
}

fn axis_aligned_box(mesh: &PolytopalMesh, cell: usize) -> Option<(Point, Point)> {
    let c = &mesh.cells[cell];
    if c.vertices.len() != 8 || c.faces.len() != 6 {
        return None;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &v in &c.vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(mesh.vertices[v][k]);
            hi[k] = hi[k].max(mesh.vertices[v][k]);
        }
    }
    let vol = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
    ((vol - c.measure).abs() <= 1e-12 * vol).then_some((lo, hi))
}

fn average(pts: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in pts {
        for k in 0..3 {
            c[k] += p[k] / pts.len() as f64;
        }
    }
    c
}

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

fn points_for(degree: usize) -> usize {
    degree / 2 + 1
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on the three-term recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}
