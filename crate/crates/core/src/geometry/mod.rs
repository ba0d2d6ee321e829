//! Polytopal meshes of the unit square and cube.
//!
//! Terminology follows the dimension-independent convention used throughout
//! the crate: a *face* is a codimension-one entity (a segment in 2D, a planar
//! polygon in 3D) and an *edge* is a codimension-two entity (a vertex in 2D, a
//! segment in 3D).

mod generate;
pub mod io;
pub mod quadrature;

use std::collections::HashMap;

pub use generate::{
    gen_cube_grid, gen_polygon_grid, gen_square_grid, gen_triangle_grid, MeshFamily,
};
pub use quadrature::QuadRule;

use crate::error::{Error, Result};
use crate::poly::{dot, sub, LocalBasis};

pub type Point = [f64; 3];

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scaled(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max(distance(a, b));
        }
    }
    d
}

/// Orthonormal frame attached to a face.
///
/// `normal` is the fixed global face normal `N_F`; in 3D `(t1, t2, N_F)` is
/// right-handed, in 2D the single tangent satisfies `N_F = (t_y, -t_x)`.
#[derive(Clone, Debug)]
pub struct FaceFrame {
    pub origin: Point,
    pub normal: Point,
    pub tangents: Vec<Point>,
}

impl FaceFrame {
    /// In-plane coordinates of `x` relative to the frame origin.
    pub fn to_local(&self, x: &Point) -> [f64; 2] {
        let d = sub(x, &self.origin);
        let mut out = [0.0; 2];
        for (a, t) in self.tangents.iter().enumerate() {
            out[a] = dot(&d, t);
        }
        out
    }
}

/// Codimension-two entity.
#[derive(Clone, Debug)]
pub struct Edge {
    /// One vertex in 2D, two (sorted) vertices in 3D.
    pub vertices: Vec<usize>,
    pub boundary: bool,
    pub center: Point,
    /// Unit direction from `vertices[0]` to `vertices[1]`; unused in 2D.
    pub tangent: Point,
    pub measure: f64,
}

/// Codimension-one entity.
#[derive(Clone, Debug)]
pub struct Face {
    /// Vertex loop; counterclockwise about `N_F` in 3D, `[start, end]` in 2D.
    pub vertices: Vec<usize>,
    /// Edges of the face boundary. In 3D `edges[i]` joins `vertices[i]` and
    /// `vertices[i + 1]`; in 2D these are the two endpoint vertices.
    pub edges: Vec<usize>,
    /// Orientation of the boundary tangent `tau` relative to each edge: in 3D
    /// `+1` when the edge direction agrees with the counterclockwise loop; in
    /// 2D `-1` at the start vertex and `+1` at the end vertex.
    pub edge_signs: Vec<f64>,
    pub frame: FaceFrame,
    pub measure: f64,
    pub diameter: f64,
    pub boundary: bool,
    /// Adjacent cells; the second is `None` on the boundary.
    pub cells: [Option<usize>; 2],
}

impl Face {
    /// Outward in-plane unit normal of the face boundary at edge `local`.
    pub fn edge_conormal(&self, mesh: &PolytopalMesh, local: usize) -> Point {
        let t = if mesh.dim == 2 {
            self.frame.tangents[0]
        } else {
            mesh.edges[self.edges[local]].tangent
        };
        let tau = scaled(&t, self.edge_signs[local]);
        if mesh.dim == 2 {
            tau
        } else {
            cross(&tau, &self.frame.normal)
        }
    }

    /// Unit tangent `tau` on boundary edge `local`, right-handed about `N_F` (3D only).
    pub fn edge_tangent(&self, mesh: &PolytopalMesh, local: usize) -> Point {
        scaled(
            &mesh.edges[self.edges[local]].tangent,
            self.edge_signs[local],
        )
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub faces: Vec<usize>,
    /// `sigma(T, F)`: `signs[i] * N_F` is the outward normal of face `faces[i]`.
    pub signs: Vec<f64>,
    /// Distinct edges of the cell, in first-seen order over its faces.
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    /// For 2D cells, the counterclockwise vertex loop; empty in 3D.
    pub polygon: Vec<usize>,
    /// For 3D cells, outward-oriented vertex loops per face; empty in 2D.
    pub face_loops: Vec<Vec<usize>>,
    pub centroid: Point,
    pub measure: f64,
    pub diameter: f64,
}

impl Cell {
    pub fn outward_normal(&self, mesh: &PolytopalMesh, local_face: usize) -> Point {
        scaled(
            &mesh.faces[self.faces[local_face]].frame.normal,
            self.signs[local_face],
        )
    }
}

#[derive(Clone, Debug)]
pub struct PolytopalMesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
}

impl PolytopalMesh {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// `h = max_T h_T`.
    pub fn meshsize(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// Basis of `P_degree(T)`, orthonormal in `L2(T)`.
    pub fn cell_basis(&self, cell: usize, degree: usize) -> LocalBasis {
        let c = &self.cells[cell];
        let axes = (0..self.dim)
            .map(|i| {
                let mut e = [0.0; 3];
                e[i] = 1.0;
                e
            })
            .collect();
        let basis = LocalBasis::new(c.centroid, axes, c.diameter, degree);
        match QuadRule::cell(self, cell, 2 * degree) {
            Ok(rule) => basis.orthonormalize(&rule),
            Err(_) => basis,
        }
    }

    pub fn face_basis(&self, face: usize, degree: usize) -> LocalBasis {
        let f = &self.faces[face];
        LocalBasis::new(f.frame.origin, f.frame.tangents.clone(), f.diameter, degree)
    }

    pub fn edge_basis(&self, edge: usize, degree: usize) -> LocalBasis {
        let e = &self.edges[edge];
        if self.dim == 2 {
            LocalBasis::new(e.center, Vec::new(), 1.0, 0)
        } else {
            LocalBasis::new(e.center, vec![e.tangent], e.measure, degree)
        }
    }

    /// Builds a 2D mesh from polygonal cells given as vertex loops (any orientation).
    pub fn from_polygons(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let mut edges: Vec<Edge> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| Edge {
                vertices: vec![i],
                boundary: false,
                center: *v,
                tangent: [0.0; 3],
                measure: 1.0,
            })
            .collect();
        let mut faces: Vec<Face> = Vec::new();
        let mut face_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out_cells = Vec::with_capacity(cells.len());
        for (ci, mut poly) in cells.into_iter().enumerate() {
            let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
            let mut area = shoelace(&pts);
            if area.abs() < 1e-300 {
                return Err(Error::DegenerateEntity(format!("cell {ci} has zero area")));
            }
            if area < 0.0 {
                poly.reverse();
                area = -area;
            }
            let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
            let centroid = polygon_centroid(&pts, area);
            let n = poly.len();
            let mut cell_faces = Vec::with_capacity(n);
            let mut signs = Vec::with_capacity(n);
            for i in 0..n {
                let (p, q) = (poly[i], poly[(i + 1) % n]);
                let key = (p.min(q), p.max(q));
                let fi = *face_index.entry(key).or_insert_with(|| {
                    let (a, b) = key;
                    let d = sub(&vertices[b], &vertices[a]);
                    let len = norm(&d);
                    let t = scaled(&d, 1.0 / len);
                    faces.push(Face {
                        vertices: vec![a, b],
                        edges: vec![a, b],
                        edge_signs: vec![-1.0, 1.0],
                        frame: FaceFrame {
                            origin: scaled(&add(&vertices[a], &vertices[b]), 0.5),
                            normal: [t[1], -t[0], 0.0],
                            tangents: vec![t],
                        },
                        measure: len,
                        diameter: len,
                        boundary: false,
                        cells: [None, None],
                    });
                    faces.len() - 1
                });
                // outward normal of a counterclockwise loop edge p -> q is (dy, -dx)
                let d = sub(&vertices[q], &vertices[p]);
                let outward = [d[1], -d[0], 0.0];
                let sign = if dot(&outward, &faces[fi].frame.normal) > 0.0 {
                    1.0
                } else {
                    -1.0
                };
                attach_cell(&mut faces[fi], ci)?;
                cell_faces.push(fi);
                signs.push(sign);
            }
            let cell_edges = poly.clone();
            out_cells.push(Cell {
                faces: cell_faces,
                signs,
                edges: cell_edges,
                vertices: poly.clone(),
                polygon: poly,
                face_loops: Vec::new(),
                centroid,
                measure: area,
                diameter: diameter(&pts),
            });
        }
        finish_boundary(&mut faces, &mut edges);
        Ok(Self {
            dim: 2,
            vertices,
            edges,
            faces,
            cells: out_cells,
        })
    }

    /// Builds a 3D mesh from polyhedral cells, each a list of planar face loops
    /// oriented counterclockwise when seen from outside the cell.
    pub fn from_polyhedra(vertices: Vec<Point>, cells: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut face_index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut out_cells = Vec::with_capacity(cells.len());
        for (ci, loops) in cells.into_iter().enumerate() {
            let mut cell_faces = Vec::with_capacity(loops.len());
            let mut signs = Vec::with_capacity(loops.len());
            let mut cell_edges: Vec<usize> = Vec::new();
            let mut cell_vertices: Vec<usize> = Vec::new();
            for lp in &loops {
                let mut key = lp.clone();
                key.sort_unstable();
                let outward = newell_normal(&vertices, lp);
                let fi = match face_index.get(&key) {
                    Some(&fi) => fi,
                    None => {
                        let face = build_face_3d(&vertices, lp, &mut edges, &mut edge_index)?;
                        faces.push(face);
                        face_index.insert(key, faces.len() - 1);
                        faces.len() - 1
                    }
                };
                let sign = if dot(&outward, &faces[fi].frame.normal) > 0.0 {
                    1.0
                } else {
                    -1.0
                };
                attach_cell(&mut faces[fi], ci)?;
                cell_faces.push(fi);
                signs.push(sign);
                for &e in &faces[fi].edges {
                    if !cell_edges.contains(&e) {
                        cell_edges.push(e);
                    }
                }
                for &v in lp {
                    if !cell_vertices.contains(&v) {
                        cell_vertices.push(v);
                    }
                }
            }
            let pts: Vec<Point> = cell_vertices.iter().map(|&v| vertices[v]).collect();
            let (measure, centroid) = polyhedron_volume_centroid(&vertices, &loops);
            if measure <= 0.0 {
                return Err(Error::DegenerateEntity(format!(
                    "cell {ci} has non-positive volume"
                )));
            }
            out_cells.push(Cell {
                faces: cell_faces,
                signs,
                edges: cell_edges,
                vertices: cell_vertices,
                polygon: Vec::new(),
                face_loops: loops,
                centroid,
                measure,
                diameter: diameter(&pts),
            });
        }
        finish_boundary(&mut faces, &mut edges);
        Ok(Self {
            dim: 3,
            vertices,
            edges,
            faces,
            cells: out_cells,
        })
    }
}

fn attach_cell(face: &mut Face, cell: usize) -> Result<()> {
    match face.cells {
        [None, _] => face.cells[0] = Some(cell),
        [Some(_), None] => face.cells[1] = Some(cell),
        _ => {
            return Err(Error::InvalidMesh(
                "face shared by more than two cells".into(),
            ))
        }
    }
    Ok(())
}

fn finish_boundary(faces: &mut [Face], edges: &mut [Edge]) {
    for f in faces.iter_mut() {
        f.boundary = f.cells[1].is_none();
        if f.boundary {
            for &e in &f.edges {
                edges[e].boundary = true;
            }
        }
    }
}

fn shoelace(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn polygon_centroid(pts: &[Point], area: f64) -> Point {
    let n = pts.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let w = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * w;
        cy += (a[1] + b[1]) * w;
    }
    [cx / (6.0 * area), cy / (6.0 * area), 0.0]
}

/// Area-weighted normal of a planar loop; its length is twice the area.
fn newell_normal(vertices: &[Point], lp: &[usize]) -> Point {
    let mut n = [0.0; 3];
    for i in 0..lp.len() {
        let a = vertices[lp[i]];
        let b = vertices[lp[(i + 1) % lp.len()]];
        n[0] += (a[1] - b[1]) * (a[2] + b[2]);
        n[1] += (a[2] - b[2]) * (a[0] + b[0]);
        n[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    n
}

fn build_face_3d(
    vertices: &[Point],
    lp: &[usize],
    edges: &mut Vec<Edge>,
    edge_index: &mut HashMap<(usize, usize), usize>,
) -> Result<Face> {
    let nw = newell_normal(vertices, lp);
    let twice_area = norm(&nw);
    if twice_area < 1e-300 {
        return Err(Error::DegenerateEntity("face with zero area".into()));
    }
    let normal = scaled(&nw, 1.0 / twice_area);
    // area centroid via fan about the first vertex
    let p0 = vertices[lp[0]];
    let mut centroid = [0.0; 3];
    let mut area = 0.0;
    for i in 1..lp.len() - 1 {
        let (a, b) = (vertices[lp[i]], vertices[lp[i + 1]]);
        let ar = 0.5 * dot(&cross(&sub(&a, &p0), &sub(&b, &p0)), &normal);
        for c in 0..3 {
            centroid[c] += ar * (p0[c] + a[c] + b[c]) / 3.0;
        }
        area += ar;
    }
    let centroid = scaled(&centroid, 1.0 / area);
    let t1 = {
        let d = sub(&vertices[lp[1]], &vertices[lp[0]]);
        scaled(&d, 1.0 / norm(&d))
    };
    let t2 = cross(&normal, &t1);
    let mut face_edges = Vec::with_capacity(lp.len());
    let mut edge_signs = Vec::with_capacity(lp.len());
    for i in 0..lp.len() {
        let (p, q) = (lp[i], lp[(i + 1) % lp.len()]);
        let key = (p.min(q), p.max(q));
        let ei = *edge_index.entry(key).or_insert_with(|| {
            let (a, b) = key;
            let d = sub(&vertices[b], &vertices[a]);
            let len = norm(&d);
            edges.push(Edge {
                vertices: vec![a, b],
                boundary: false,
                center: scaled(&add(&vertices[a], &vertices[b]), 0.5),
                tangent: scaled(&d, 1.0 / len),
                measure: len,
            });
            edges.len() - 1
        });
        face_edges.push(ei);
        edge_signs.push(if p < q { 1.0 } else { -1.0 });
    }
    let pts: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
    Ok(Face {
        vertices: lp.to_vec(),
        edges: face_edges,
        edge_signs,
        frame: FaceFrame {
            origin: centroid,
            normal,
            tangents: vec![t1, t2],
        },
        measure: area,
        diameter: diameter(&pts),
        boundary: false,
        cells: [None, None],
    })
}

fn polyhedron_volume_centroid(vertices: &[Point], loops: &[Vec<usize>]) -> (f64, Point) {
    // tetrahedra (origin, fan triangle) with signed volume
    let mut vol = 0.0;
    let mut c = [0.0; 3];
    let o = vertices[loops[0][0]];
    for lp in loops {
        let p0 = vertices[lp[0]];
        for i in 1..lp.len() - 1 {
            let (a, b) = (vertices[lp[i]], vertices[lp[i + 1]]);
            let v = dot(&sub(&p0, &o), &cross(&sub(&a, &o), &sub(&b, &o))) / 6.0;
            vol += v;
            for k in 0..3 {
                c[k] += v * (o[k] + p0[k] + a[k] + b[k]) / 4.0;
            }
        }
    }
    (vol, scaled(&c, 1.0 / vol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_orientation_is_normalized() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ];
        let cw = PolytopalMesh::from_polygons(v.clone(), vec![vec![0, 3, 2, 1]]).unwrap();
        let ccw = PolytopalMesh::from_polygons(v, vec![vec![0, 1, 2, 3]]).unwrap();
        for m in [&cw, &ccw] {
            assert!((m.cells[0].measure - 1.0).abs() < 1e-15);
            for (i, &f) in m.cells[0].faces.iter().enumerate() {
                let n = m.cells[0].outward_normal(m, i);
                let mid = m.faces[f].frame.origin;
                let out = sub(&mid, &m.cells[0].centroid);
                assert!(dot(&n, &out) > 0.0);
            }
        }
    }

    #[test]
    fn degenerate_polygon_is_rejected() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(matches!(
            PolytopalMesh::from_polygons(v, vec![vec![0, 1, 2]]),
            Err(Error::DegenerateEntity(_))
        ));
    }

    #[test]
    fn face_frames_are_right_handed() {
        let m = gen_cube_grid(2);
        for f in &m.faces {
            let n = cross(&f.frame.tangents[0], &f.frame.tangents[1]);
            for c in 0..3 {
                assert!((n[c] - f.frame.normal[c]).abs() < 1e-14);
            }
            assert!(dot(&f.frame.tangents[0], &f.frame.tangents[1]).abs() < 1e-14);
        }
    }
}
