//! Uniform grid families on the unit square and cube.
//!
//! Level `l` always has `2^(l-1)` macro-cells per axis.

use std::fmt;
use std::str::FromStr;

use super::{Point, PolytopalMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeshFamily {
    Square,
    Triangle,
    Polygon,
    Cube,
}

impl MeshFamily {
    pub fn dim(self) -> usize {
        match self {
            MeshFamily::Cube => 3,
            _ => 2,
        }
    }

    pub fn generate(self, level: u32) -> PolytopalMesh {
        match self {
            MeshFamily::Square => gen_square_grid(level),
            MeshFamily::Triangle => gen_triangle_grid(level),
            MeshFamily::Polygon => gen_polygon_grid(level),
            MeshFamily::Cube => gen_cube_grid(level),
        }
    }

    /// Lattice spacing `2^(1-l)` of level `l`.
    pub fn spacing(self, level: u32) -> f64 {
        1.0 / divisions(level) as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Square => "square",
            MeshFamily::Triangle => "triangle",
            MeshFamily::Polygon => "polygon",
            MeshFamily::Cube => "cube",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "square" => Ok(MeshFamily::Square),
            "triangle" => Ok(MeshFamily::Triangle),
            "polygon" => Ok(MeshFamily::Polygon),
            "cube" => Ok(MeshFamily::Cube),
            other => Err(format!("unknown mesh family `{other}`")),
        }
    }
}

fn divisions(level: u32) -> usize {
    assert!(level >= 1, "grid levels start at 1");
    1usize << (level - 1)
}

fn lattice_2d(n: usize) -> Vec<Point> {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push([i as f64 * h, j as f64 * h, 0.0]);
        }
    }
    v
}

pub fn gen_square_grid(level: u32) -> PolytopalMesh {
    let n = divisions(level);
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolytopalMesh::from_polygons(lattice_2d(n), cells).expect("square grid is valid")
}

/// Squares split along the diagonal from their top-left to bottom-right corner.
pub fn gen_triangle_grid(level: u32) -> PolytopalMesh {
    let n = divisions(level);
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i, j + 1)]);
            cells.push(vec![id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolytopalMesh::from_polygons(lattice_2d(n), cells).expect("triangle grid is valid")
}

/// Interior points of one macro-cell, in unit macro-cell coordinates.
const HEXAGON: [[f64; 2]; 6] = [
    [0.3, 0.2],
    [0.7, 0.2],
    [0.8, 0.5],
    [0.7, 0.8],
    [0.3, 0.8],
    [0.2, 0.5],
];

/// Each macro-square holds a central hexagon, pentagons on its left and right,
/// and quadrilaterals on its top and bottom.
pub fn gen_polygon_grid(level: u32) -> PolytopalMesh {
    let n = divisions(level);
    let h = 1.0 / n as f64;
    let mut vertices = lattice_2d(n);
    let corner = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(5 * n * n);
    for j in 0..n {
        for i in 0..n {
            let base = vertices.len();
            for p in HEXAGON {
                vertices.push([(i as f64 + p[0]) * h, (j as f64 + p[1]) * h, 0.0]);
            }
            let hx = |k: usize| base + k;
            let (c00, c10, c11, c01) = (
                corner(i, j),
                corner(i + 1, j),
                corner(i + 1, j + 1),
                corner(i, j + 1),
            );
            cells.push(vec![c00, c10, hx(1), hx(0)]);
            cells.push(vec![c10, c11, hx(3), hx(2), hx(1)]);
            cells.push((0..6).map(hx).collect());
            cells.push(vec![c11, c01, hx(4), hx(3)]);
            cells.push(vec![c01, c00, hx(0), hx(5), hx(4)]);
        }
    }
    PolytopalMesh::from_polygons(vertices, cells).expect("polygon grid is valid")
}

pub fn gen_cube_grid(level: u32) -> PolytopalMesh {
    let n = divisions(level);
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let mut cells = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let v = |a: usize, b: usize, c: usize| id(i + a, j + b, k + c);
                cells.push(vec![
                    vec![v(0, 0, 0), v(0, 0, 1), v(0, 1, 1), v(0, 1, 0)], // x-
                    vec![v(1, 0, 0), v(1, 1, 0), v(1, 1, 1), v(1, 0, 1)], // x+
                    vec![v(0, 0, 0), v(1, 0, 0), v(1, 0, 1), v(0, 0, 1)], // y-
                    vec![v(0, 1, 0), v(0, 1, 1), v(1, 1, 1), v(1, 1, 0)], // y+
                    vec![v(0, 0, 0), v(0, 1, 0), v(1, 1, 0), v(1, 0, 0)], // z-
                    vec![v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)], // z+
                ]);
            }
        }
    }
    PolytopalMesh::from_polyhedra(vertices, cells).expect("cube grid is valid")
}
