//! Error measures of `e_h = Q_h u - u_h`, convergence studies and report
//! formatting.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dense::{mass, Spd};
use crate::error::{Error, Result};
use crate::geometry::{MeshFamily, Point, PolytopalMesh, QuadRule};
use crate::poly::{ManufacturedCase, MultiPoly, SmoothField};
use crate::space::{DofLayout, Projector, WeakFunction};
use crate::system::{solve_case, Assembly, PenaltyConvention, Solver, Stabilization};
use crate::weakops::weak_second_partial;

/// The five error measures reported per level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorMeasures {
    pub l2: f64,
    pub triple: f64,
    pub ebe: f64,
    pub ebf: f64,
    pub en: f64,
}

/// `||e_0||` with `e_0 = Q_0 u - u_0`, integrated exactly on every cell.
pub fn error_l2(mesh: &PolytopalMesh, layout: &DofLayout, eh: &WeakFunction) -> Result<f64> {
    let mut sum = 0.0;
    for c in 0..mesh.cells.len() {
        let basis = mesh.cell_basis(c, layout.k);
        let m = mass(&basis, &QuadRule::cell(mesh, c, 2 * layout.k + 2)?);
        let e = DVector::from_column_slice(&eh.coeffs[layout.interior(c)]);
        sum += e.dot(&(m * &e));
    }
    Ok(sum.max(0.0).sqrt())
}

/// `|||e_h||| = a_s(e_h, e_h)^{1/2}`.
pub fn error_triple_bar(assembly: &Assembly, eh: &WeakFunction) -> f64 {
    assembly.energy(eh).max(0.0).sqrt()
}

/// The `h_T`-weighted skeleton measures `(||e_{b,e}||, ||e_{b,f}||, ||e_n||)`,
/// each summed cell by cell over the faces of the cell (and the edges of each
/// face) with weights `h_T^2`, `h_T` and `h_T`. `h_T` and the edge
/// multiplicity follow `stab`.
pub fn boundary_measures(
    mesh: &PolytopalMesh,
    layout: &DofLayout,
    stab: &Stabilization,
    eh: &WeakFunction,
) -> Result<(f64, f64, f64)> {
    let k = layout.k;
    let face_norm2 = |face: usize, degree: usize, coeffs: &[f64]| -> Result<f64> {
        let b = mesh.face_basis(face, degree);
        let m = mass(&b, &QuadRule::face(mesh, face, 2 * k)?);
        let e = DVector::from_column_slice(coeffs);
        Ok(e.dot(&(m * &e)))
    };
    let edge_norm2 = |edge: usize, coeffs: &[f64]| -> Result<f64> {
        let b = mesh.edge_basis(edge, k - 2);
        let m = mass(&b, &QuadRule::edge(mesh, edge, 2 * k)?);
        let e = DVector::from_column_slice(coeffs);
        Ok(e.dot(&(m * &e)))
    };
    let (mut be, mut bf, mut bn) = (0.0, 0.0, 0.0);
    for (cell, c) in mesh.cells.iter().enumerate() {
        let h = stab.cell_scale(mesh, cell);
        for &face in &c.faces {
            bf += h * face_norm2(face, k - 3, &eh.coeffs[layout.face_trace(face)])?;
            bn += h * face_norm2(face, k - 2, &eh.coeffs[layout.face_normal(face)])?;
            for &e in &mesh.faces[face].edges {
                be += stab.edge_weight() * h * h * edge_norm2(e, &eh.coeffs[layout.edge(e)])?;
            }
        }
    }
    Ok((be.sqrt(), bf.sqrt(), bn.sqrt()))
}

/// All five measures of `Q_h u - u_h`.
pub fn error_measures(
    mesh: &PolytopalMesh,
    assembly: &Assembly,
    u: &dyn SmoothField,
    uh: &WeakFunction,
) -> Result<ErrorMeasures> {
    let layout = &assembly.layout;
    let eh = Projector::new(mesh, layout).interpolate(u)?.sub(uh);
    let (ebe, ebf, en) = boundary_measures(mesh, layout, &assembly.stabilization, &eh)?;
    Ok(ErrorMeasures {
        l2: error_l2(mesh, layout, &eh)?,
        triple: error_triple_bar(assembly, &eh),
        ebe,
        ebf,
        en,
    })
}

/// Evaluates the right-hand side of the error equation,
///
/// ```text
/// zeta_u(v) = s(Q_h u, v)
///           + sum_T sum_ij <v_0 - v_{b,f}, d_j(QQ_h d_ij u - d_ij u) n_i>_dT
///           + sum_T sum_ij <d_i v_0 - v_{gi}, (d_ij u - QQ_h d_ij u) n_j>_dT,
/// ```
///
/// where `QQ_h` projects onto `P_{k-2}(T)`. With `include_stabilizer = false`
/// the first term is dropped.
pub fn error_equation_rhs(
    mesh: &PolytopalMesh,
    assembly: &Assembly,
    u: &MultiPoly,
    v: &WeakFunction,
    include_stabilizer: bool,
) -> Result<f64> {
    let layout = &assembly.layout;
    let k = layout.k;
    let d = mesh.dim;
    let field = crate::poly::PolyField::new(u.clone());
    let qhu = Projector::new(mesh, layout).interpolate(&field)?;
    let mut total = if include_stabilizer {
        assembly.stabilizer_form(&qhu, v)
    } else {
        0.0
    };
    let hess: Vec<MultiPoly> = (0..d * d)
        .map(|ij| u.differentiate(ij / d).differentiate(ij % d))
        .collect();
    let third: Vec<Vec<MultiPoly>> = hess
        .iter()
        .map(|p| (0..d).map(|j| p.differentiate(j)).collect())
        .collect();
    let qdeg = 2 * k + u.degree();
    for (c, cell) in mesh.cells.iter().enumerate() {
        let op = weak_second_partial(mesh, layout, c)?;
        let local = v.gather(&op.dofs);
        let full = mesh.cell_basis(c, k);
        let low = mesh.cell_basis(c, k - 2);
        let crule = QuadRule::cell(mesh, c, qdeg)?;
        let spd = Spd::new(mass(&low, &crule), "cell mass matrix")?;
        let proj: Vec<DVector<f64>> = hess
            .iter()
            .map(|p| {
                let mut rhs = DVector::zeros(low.len());
                for (x, w) in crule.iter() {
                    let px = w * p.eval(x);
                    for (q, b) in low.values(x).iter().enumerate() {
                        rhs[q] += px * b;
                    }
                }
                spd.solve_vec(&rhs)
            })
            .collect();
        let v0 = &local[..op.dofs.n_interior];
        for (lf, &face) in cell.faces.iter().enumerate() {
            let nrm = cell.outward_normal(mesh, lf);
            let tb = mesh.face_basis(face, k - 3);
            let vf = &local[op.dofs.face_trace[lf]..op.dofs.face_trace[lf] + layout.n_face_trace];
            let vn =
                &local[op.dofs.face_normal[lf]..op.dofs.face_normal[lf] + layout.n_face_normal];
            let w: Vec<Vec<f64>> = op.tangential[lf]
                .iter()
                .map(|t| {
                    (t * DVector::from_column_slice(&local))
                        .iter()
                        .copied()
                        .collect()
                })
                .collect();
            total += QuadRule::face(mesh, face, qdeg)?.integrate(|x| {
                let jump = full.combine(v0, x) - tb.combine(vf, x);
                let gv0 = full
                    .gradients(x)
                    .iter()
                    .zip(v0)
                    .fold([0.0; 3], |a, (g, c)| add3(a, g, *c));
                let vg = crate::weakops::weak_gradient(mesh, layout, face, vn, &w, x);
                let lg = low.gradients(x);
                let lv = low.values(x);
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        let ij = i * d + j;
                        let dq: f64 = proj[ij].iter().zip(&lg).map(|(c, g)| c * g[j]).sum();
                        let q: f64 = proj[ij].iter().zip(&lv).map(|(c, b)| c * b).sum();
                        s += jump * (dq - third[ij][j].eval(x)) * nrm[i];
                        s += (gv0[i] - vg[i]) * (hess[ij].eval(x) - q) * nrm[j];
                    }
                }
                s
            });
        }
    }
    Ok(total)
}

fn add3(a: Point, g: &Point, c: f64) -> Point {
    [a[0] + c * g[0], a[1] + c * g[1], a[2] + c * g[2]]
}

/// `max |a_s(e_h, v) - zeta_u(v)|` over the given test functions.
pub fn residual_consistency(
    mesh: &PolytopalMesh,
    assembly: &Assembly,
    u: &MultiPoly,
    uh: &WeakFunction,
    tests: &[WeakFunction],
) -> Result<f64> {
    let field = crate::poly::PolyField::new(u.clone());
    let eh = Projector::new(mesh, &assembly.layout)
        .interpolate(&field)?
        .sub(uh);
    let mut worst: f64 = 0.0;
    for v in tests {
        let lhs = assembly.bilinear(&eh, v);
        let rhs = error_equation_rhs(mesh, assembly, u, v, true)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    pub h: f64,
    pub dofs: usize,
    pub l2: f64,
    pub l2_rate: Option<f64>,
    pub triple: f64,
    pub triple_rate: Option<f64>,
    pub ebe: f64,
    pub ebf: f64,
    pub en: f64,
}

/// Per-level errors and rates for one mesh family and degree.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub family: MeshFamily,
    pub k: usize,
    pub rows: Vec<LevelRecord>,
}

/// `log2(coarse / fine)` for consecutive levels.
pub fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

impl ErrorReport {
    pub fn from_levels(
        family: MeshFamily,
        k: usize,
        levels: Vec<(u32, f64, usize, ErrorMeasures)>,
    ) -> Self {
        let mut rows: Vec<LevelRecord> = Vec::with_capacity(levels.len());
        for (level, h, dofs, e) in levels {
            let prev = rows.last();
            rows.push(LevelRecord {
                level,
                h,
                dofs,
                l2: e.l2,
                l2_rate: prev.map(|p| rate(p.l2, e.l2)),
                triple: e.triple,
                triple_rate: prev.map(|p| rate(p.triple, e.triple)),
                ebe: e.ebe,
                ebf: e.ebf,
                en: e.en,
            });
        }
        Self { family, k, rows }
    }

    /// Rates of an arbitrary column between consecutive rows.
    pub fn rates(&self, column: impl Fn(&LevelRecord) -> f64) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| rate(column(&w[0]), column(&w[1])))
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn rows_from_csv(text: &str) -> Result<Vec<LevelRecord>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        r.deserialize()
            .map(|row| row.map_err(Error::from))
            .collect()
    }

    /// Aligned markdown table: level, errors in `0.dddE±dd` notation, rates with two decimals.
    pub fn to_markdown(&self) -> String {
        let header = [
            "level",
            "h",
            "dofs",
            "‖Q_hu−u_h‖",
            "rate",
            "|||Q_hu−u_h|||",
            "rate",
            "‖e_be‖",
            "‖e_bf‖",
            "‖e_n‖",
        ];
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.level.to_string(),
                    format!("{:.4e}", r.h),
                    r.dofs.to_string(),
                    sci(r.l2),
                    r.l2_rate.map_or("-".into(), |x| format!("{x:.2}")),
                    sci(r.triple),
                    r.triple_rate.map_or("-".into(), |x| format!("{x:.2}")),
                    sci(r.ebe),
                    sci(r.ebf),
                    sci(r.en),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                body.iter()
                    .map(|r| r[c].chars().count())
                    .chain([header[c].chars().count()])
                    .max()
                    .unwrap()
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for (c, w) in cells.iter().zip(&widths) {
                let pad = w - c.chars().count();
                write!(s, " {}{} |", " ".repeat(pad), c).unwrap();
            }
            s
        };
        let mut out = format!("{} grids, k = {}\n\n", self.family.name(), self.k);
        out += &line(&header.map(String::from));
        out.push('\n');
        out += &line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
        out.push('\n');
        for r in &body {
            out += &line(r);
            out.push('\n');
        }
        out
    }
}

/// `0.1486E-02` style: four significant digits with a leading zero mantissa.
pub fn sci(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.4E}");
    }
    let mut e = x.abs().log10().floor() as i32 + 1;
    let mut m = x / 10f64.powi(e);
    if (m.abs() * 1e4).round() >= 1e4 {
        m /= 10.0;
        e += 1;
    }
    format!("{m:.4}E{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// Wall-clock timing of one level.
#[derive(Clone, Debug)]
pub struct LevelTiming {
    pub level: u32,
    pub dofs: usize,
    pub unknowns: usize,
    pub elapsed: Duration,
}

/// Runs mesh generation, assembly, solve and error evaluation for each level.
pub fn convergence_study(
    family: MeshFamily,
    k: usize,
    levels: RangeInclusive<u32>,
    case: &ManufacturedCase,
    penalty: PenaltyConvention,
    solver: Solver,
    tol: f64,
    mut progress: impl FnMut(&LevelTiming),
) -> Result<ErrorReport> {
    if levels.is_empty() {
        return Err(Error::InvalidMesh(format!(
            "empty level range {}..={}",
            levels.start(),
            levels.end()
        )));
    }
    if family.dim() != case.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} grids need a {}D case",
            family.name(),
            family.dim()
        )));
    }
    let mut out = Vec::new();
    for level in levels {
        let start = Instant::now();
        let mesh = family.generate(level);
        let sol = solve_case(
            &mesh,
            k,
            case,
            &penalty.stabilization(family, level),
            solver,
            tol,
        )?;
        let e = error_measures(&mesh, &sol.assembly, &case.u, &sol.uh)?;
        let layout = &sol.assembly.layout;
        progress(&LevelTiming {
            level,
            dofs: layout.total(),
            unknowns: sol.linear.x.len(),
            elapsed: start.elapsed(),
        });
        out.push((level, mesh.meshsize(), layout.total(), e));
    }
    Ok(ErrorReport::from_levels(family, k, out))
}
