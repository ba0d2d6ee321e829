//! Small dense helpers shared by the local (per-entity) computations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::QuadRule;
use crate::poly::LocalBasis;

/// Gram matrix `(phi_p, phi_q)` of `basis` under `rule`.
pub(crate) fn mass(basis: &LocalBasis, rule: &QuadRule) -> DMatrix<f64> {
    let n = basis.len();
    let mut m = DMatrix::zeros(n, n);
    let mut v = vec![0.0; n];
    for (x, w) in rule.iter() {
        basis.eval(x, &mut v);
        for q in 0..n {
            let wq = w * v[q];
            for p in q..n {
                m[(p, q)] += wq * v[p];
            }
        }
    }
    for q in 0..n {
        for p in q + 1..n {
            m[(q, p)] = m[(p, q)];
        }
    }
    m
}

/// `(phi_p, psi_q)` between two bases.
pub(crate) fn cross_mass(a: &LocalBasis, b: &LocalBasis, rule: &QuadRule) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.len(), b.len());
    let mut va = vec![0.0; a.len()];
    let mut vb = vec![0.0; b.len()];
    for (x, w) in rule.iter() {
        a.eval(x, &mut va);
        b.eval(x, &mut vb);
        for q in 0..b.len() {
            let wq = w * vb[q];
            for p in 0..a.len() {
                m[(p, q)] += wq * va[p];
            }
        }
    }
    m
}

/// Cholesky-factored SPD matrix.
pub(crate) struct Spd(nalgebra::Cholesky<f64, nalgebra::Dyn>);

impl Spd {
    pub(crate) fn new(m: DMatrix<f64>, what: &str) -> Result<Self> {
        m.cholesky()
            .map(Spd)
            .ok_or_else(|| Error::SingularMatrix(what.to_string()))
    }

    pub(crate) fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.solve(b)
    }

    pub(crate) fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.0.solve(b)
    }
}

/// Solves the normal equations `M c = (f, phi)` for the L2 projection onto `basis`.
pub(crate) fn project(
    basis: &LocalBasis,
    rule: &QuadRule,
    f: impl Fn(&crate::geometry::Point) -> f64,
    what: &str,
) -> Result<Vec<f64>> {
    let m = mass(basis, rule);
    let mut rhs = DVector::zeros(basis.len());
    let mut v = vec![0.0; basis.len()];
    for (x, w) in rule.iter() {
        basis.eval(x, &mut v);
        let fx = w * f(x);
        for p in 0..basis.len() {
            rhs[p] += fx * v[p];
        }
    }
    Ok(Spd::new(m, what)?.solve_vec(&rhs).iter().copied().collect())
}
