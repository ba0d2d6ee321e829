//! Line-oriented text format for meshes.
//!
//! ```text
//! wgmorley-mesh 1
//! dim <d>
//! vertices <n>
//! <x> <y> <z>                          one line per vertex
//! edges <n>
//! <m> <v_1> .. <v_m>                   vertex list (m = 1 in 2D, 2 in 3D)
//! faces <n>
//! <m> <v_1> .. <v_m> <b>               vertex loop, then boundary flag 0/1
//! cells <n>
//! <m> <f_1> <s_1> .. <f_m> <s_m> | <loops>
//! ```
//!
//! Cell lines list each face index with its orientation sign (`+` or `-`),
//! then after `|` the geometry: in 2D one counterclockwise vertex loop
//! `<m> <v_1> .. <v_m>`, in 3D one outward loop per face in the same form.
//! Coordinates use Rust's shortest round-trip float formatting, so
//! export/import/export is byte-identical. Indices are zero-based.

use std::fmt::Write as _;

use super::PolytopalMesh;
use crate::error::{Error, Result};

const MAGIC: &str = "wgmorley-mesh 1";

pub fn write_mesh(mesh: &PolytopalMesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "dim {}", mesh.dim).unwrap();
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{} {} {}", v[0], v[1], v[2]).unwrap();
    }
    writeln!(s, "edges {}", mesh.edges.len()).unwrap();
    for e in &mesh.edges {
        writeln!(s, "{}", list(&e.vertices)).unwrap();
    }
    writeln!(s, "faces {}", mesh.faces.len()).unwrap();
    for f in &mesh.faces {
        writeln!(s, "{} {}", list(&f.vertices), f.boundary as u8).unwrap();
    }
    writeln!(s, "cells {}", mesh.cells.len()).unwrap();
    for c in &mesh.cells {
        write!(s, "{}", c.faces.len()).unwrap();
        for (f, sign) in c.faces.iter().zip(&c.signs) {
            write!(s, " {} {}", f, if *sign > 0.0 { '+' } else { '-' }).unwrap();
        }
        write!(s, " |").unwrap();
        if mesh.dim == 2 {
            write!(s, " {}", list(&c.polygon)).unwrap();
        } else {
            for lp in &c.face_loops {
                write!(s, " {}", list(lp)).unwrap();
            }
        }
        writeln!(s).unwrap();
    }
    s
}

fn list(v: &[usize]) -> String {
    let mut s = v.len().to_string();
    for x in v {
        write!(s, " {x}").unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| Error::Parse("unexpected end of mesh file".into()))
    }

    fn header(&mut self, key: &str) -> Result<usize> {
        let (ln, line) = self.next()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(Error::Parse(format!("line {ln}: expected `{key}`")));
        }
        parse(it.next(), ln)
    }
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, ln: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {ln}: malformed token")))
}

fn read_list<'a>(it: &mut impl Iterator<Item = &'a str>, ln: usize) -> Result<Vec<usize>> {
    let n: usize = parse(it.next(), ln)?;
    (0..n).map(|_| parse(it.next(), ln)).collect()
}

/// Parses the format written by [`write_mesh`] and rebuilds the mesh; the
/// stored topology must agree with the rebuilt one.
pub fn read_mesh(text: &str) -> Result<PolytopalMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, magic) = lines.next()?;
    if magic != MAGIC {
        return Err(Error::Parse("missing mesh header".into()));
    }
    let dim = lines.header("dim")?;
    if dim != 2 && dim != 3 {
        return Err(Error::Parse(format!("unsupported dimension {dim}")));
    }
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = lines.next()?;
        let mut it = line.split_whitespace();
        vertices.push([
            parse(it.next(), ln)?,
            parse(it.next(), ln)?,
            parse(it.next(), ln)?,
        ]);
    }
    let ne = lines.header("edges")?;
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, line) = lines.next()?;
        edges.push(read_list(&mut line.split_whitespace(), ln)?);
    }
    let nf = lines.header("faces")?;
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, line) = lines.next()?;
        let mut it = line.split_whitespace();
        let verts = read_list(&mut it, ln)?;
        let boundary: u8 = parse(it.next(), ln)?;
        faces.push((verts, boundary == 1));
    }
    let nc = lines.header("cells")?;
    let mut cell_faces = Vec::with_capacity(nc);
    let mut polygons = Vec::new();
    let mut polyhedra = Vec::new();
    for _ in 0..nc {
        let (ln, line) = lines.next()?;
        let (topo, geo) = line
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("line {ln}: missing `|`")))?;
        let mut it = topo.split_whitespace();
        let m: usize = parse(it.next(), ln)?;
        let mut fs = Vec::with_capacity(m);
        for _ in 0..m {
            let f: usize = parse(it.next(), ln)?;
            let s = match it.next() {
                Some("+") => 1.0,
                Some("-") => -1.0,
                _ => return Err(Error::Parse(format!("line {ln}: bad orientation sign"))),
            };
            fs.push((f, s));
        }
        cell_faces.push(fs);
        let mut it = geo.split_whitespace();
        if dim == 2 {
            polygons.push(read_list(&mut it, ln)?);
        } else {
            polyhedra.push(
                (0..m)
                    .map(|_| read_list(&mut it, ln))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
    }
    let mesh = if dim == 2 {
        PolytopalMesh::from_polygons(vertices, polygons)?
    } else {
        PolytopalMesh::from_polyhedra(vertices, polyhedra)?
    };
    let consistent = mesh.edges.len() == edges.len()
        && mesh.edges.iter().zip(&edges).all(|(e, v)| &e.vertices == v)
        && mesh.faces.len() == faces.len()
        && mesh
            .faces
            .iter()
            .zip(&faces)
            .all(|(f, (v, b))| &f.vertices == v && f.boundary == *b)
        && mesh.cells.iter().zip(&cell_faces).all(|(c, fs)| {
            c.faces.len() == fs.len()
                && c.faces
                    .iter()
                    .zip(&c.signs)
                    .zip(fs)
                    .all(|((f, s), (g, t))| f == g && s == t)
        });
    if !consistent {
        return Err(Error::Parse(
            "stored topology does not match the cell geometry".into(),
        ));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MeshFamily;

    #[test]
    fn round_trip_is_byte_identical() {
        for fam in [
            MeshFamily::Square,
            MeshFamily::Triangle,
            MeshFamily::Polygon,
            MeshFamily::Cube,
        ] {
            let m = fam.generate(2);
            let text = write_mesh(&m);
            let back = read_mesh(&text).unwrap();
            assert_eq!(write_mesh(&back), text, "{fam}");
        }
    }

    #[test]
    fn rejects_tampered_topology() {
        let text = write_mesh(&MeshFamily::Square.generate(2));
        let bad = text.replacen(" 0 + ", " 0 - ", 1);
        assert!(read_mesh(&bad).is_err());
        assert!(read_mesh("not a mesh").is_err());
    }
}
