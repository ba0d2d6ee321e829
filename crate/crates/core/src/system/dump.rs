//! Text dump of an eliminated system.
//!
//! ```text
//! wgmorley-system 1
//! n <free unknowns>
//! nnz <stored entries>
//! <row> <col> <value>        one line per entry, column-major, both triangles
//! rhs
//! <value>                    one line per free unknown
//! ```
//!
//! Values use shortest round-trip float formatting.

use std::fmt::Write as _;

use super::CscMatrix;
use crate::error::{Error, Result};

const MAGIC: &str = "wgmorley-system 1";

pub fn write_system(matrix: &CscMatrix, rhs: &[f64]) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}\nn {}\nnnz {}", matrix.n, matrix.nnz()).unwrap();
    for c in 0..matrix.n {
        for idx in matrix.col_ptr[c]..matrix.col_ptr[c + 1] {
            writeln!(s, "{} {} {:?}", matrix.row_idx[idx], c, matrix.values[idx]).unwrap();
        }
    }
    writeln!(s, "rhs").unwrap();
    for v in rhs {
        writeln!(s, "{v:?}").unwrap();
    }
    s
}

pub fn read_system(text: &str) -> Result<(CscMatrix, Vec<f64>)> {
    let bad = |what: &str| Error::Parse(format!("system dump: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let mut header = |key: &str| -> Result<usize> {
        lines
            .next()
            .and_then(|l| l.strip_prefix(key))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(&format!("expected `{key}`")))
    };
    let n = header("n ")?;
    let nnz = header("nnz ")?;
    let mut t = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let line = lines.next().ok_or_else(|| bad("truncated entries"))?;
        let mut it = line.split_whitespace();
        let r: usize = it
            .next()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("bad row"))?;
        let c: usize = it
            .next()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("bad column"))?;
        let v: f64 = it
            .next()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("bad value"))?;
        if r >= n || c >= n {
            return Err(bad("index out of range"));
        }
        t.push((r, c, v));
    }
    if lines.next() != Some("rhs") {
        return Err(bad("expected `rhs`"));
    }
    let rhs = (0..n)
        .map(|_| {
            lines
                .next()
                .and_then(|l| l.trim().parse().ok())
                .ok_or_else(|| bad("bad rhs value"))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((CscMatrix::from_triplets(n, t), rhs))
}
