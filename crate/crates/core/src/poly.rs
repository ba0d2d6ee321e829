//! Multivariate polynomials with `f64` coefficients.
//!
//! [`MultiPoly`] is the symbolic type used for manufactured solutions and
//! test oracles. [`LocalBasis`] is the fast path used during assembly: it
//! evaluates scaled monomials `((x - c) . a_i / h)^alpha` together with their
//! global-coordinate derivatives.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::geometry::{Point, QuadRule};

/// Exponent tuple; entries beyond the polynomial's dimension are zero.
pub type Exponent = [u32; 3];

/// Exponents of all monomials of total degree `<= degree` in `dim` variables,
/// in graded lexicographic order (`1, x, y, x^2, xy, y^2, ...`).
pub fn graded_exponents(dim: usize, degree: usize) -> Vec<Exponent> {
    assert!(dim <= 3, "at most three variables are supported");
    let mut out = Vec::with_capacity(poly_dim(dim, degree));
    for total in 0..=degree as u32 {
        match dim {
            0 => {
                if total == 0 {
                    out.push([0, 0, 0]);
                }
            }
            1 => out.push([total, 0, 0]),
            2 => {
                for a in (0..=total).rev() {
                    out.push([a, total - a, 0]);
                }
            }
            _ => {
                for a in (0..=total).rev() {
                    for b in (0..=total - a).rev() {
                        out.push([a, b, total - a - b]);
                    }
                }
            }
        }
    }
    out
}

/// Dimension of the space of polynomials of degree `<= degree` in `dim` variables.
pub fn poly_dim(dim: usize, degree: usize) -> usize {
    // C(degree + dim, dim)
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 1..=dim {
        num *= degree + i;
        den *= i;
    }
    num / den
}

#[derive(Clone, PartialEq)]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        assert!((1..=3).contains(&dim));
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(dim, [0, 0, 0], c)
    }

    pub fn monomial(dim: usize, exp: Exponent, coeff: f64) -> Self {
        let mut p = Self::zero(dim);
        for (axis, &e) in exp.iter().enumerate() {
            assert!(axis < dim || e == 0, "exponent beyond dimension");
        }
        if coeff != 0.0 {
            p.terms.insert(exp, coeff);
        }
        p
    }

    /// The coordinate function `x_axis`.
    pub fn var(dim: usize, axis: usize) -> Self {
        assert!(axis < dim);
        let mut e = [0; 3];
        e[axis] = 1;
        Self::monomial(dim, e, 1.0)
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Exponent, f64)>) -> Self {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exp: Exponent) -> f64 {
        self.terms.get(&exp).copied().unwrap_or(0.0)
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| (e[0] + e[1] + e[2]) as usize)
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, exp: Exponent, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&exp);
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.dim);
        }
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (*e, c * s)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn differentiate(&self, axis: usize) -> Self {
        assert!(
            axis < self.dim,
            "axis {axis} out of range for dim {}",
            self.dim
        );
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut d = *e;
                d[axis] -= 1;
                out.add_term(d, c * e[axis] as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.dim).map(|i| self.differentiate(i)).collect()
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for i in 0..self.dim {
            out = &out + &self.differentiate(i).differentiate(i);
        }
        out
    }

    /// `sum_i sum_j d_ii d_jj u`.
    pub fn biharmonic_apply(&self) -> Self {
        self.laplacian().laplacian()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for axis in 0..self.dim {
                m *= x[axis].powi(e[axis] as i32);
            }
            sum += m;
        }
        sum
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = ["x", "y", "z"];
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for axis in 0..self.dim {
                match e[axis] {
                    0 => {}
                    1 => write!(f, "*{}", names[axis])?,
                    p => write!(f, "*{}^{p}", names[axis])?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, *c);
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self + &(-rhs)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim);
        let mut out = MultiPoly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Basis of `P_degree` in `domain_dim` scaled local variables, graded-lex ordered.
///
/// The returned polynomials are in the local variables `xi_a` of a
/// [`LocalBasis`]; a zero-dimensional domain has the single basis function `1`
/// (represented in one variable).
pub fn monomial_basis(domain_dim: usize, degree: usize) -> Vec<MultiPoly> {
    let vars = domain_dim.max(1);
    graded_exponents(domain_dim, degree)
        .into_iter()
        .map(|e| MultiPoly::monomial(vars, e, 1.0))
        .collect()
}

/// A smooth scalar field with a gradient, used as projection input.
pub trait SmoothField: Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
    /// Polynomial degree, when known; lets projections pick an exact rule.
    fn degree(&self) -> Option<usize> {
        None
    }
}

/// A polynomial bundled with its precomputed gradient.
#[derive(Clone, Debug)]
pub struct PolyField {
    pub poly: MultiPoly,
    grad: Vec<MultiPoly>,
}

impl PolyField {
    pub fn new(poly: MultiPoly) -> Self {
        let grad = poly.gradient();
        Self { poly, grad }
    }
}

impl SmoothField for PolyField {
    fn value(&self, x: &Point) -> f64 {
        self.poly.eval(x)
    }
    fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 3];
        for (i, p) in self.grad.iter().enumerate() {
            g[i] = p.eval(x);
        }
        g
    }
    fn degree(&self) -> Option<usize> {
        Some(self.poly.degree())
    }
}

/// Exact solution, load and boundary traces of a manufactured problem.
#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub u: PolyField,
    pub g: MultiPoly,
}

impl ManufacturedCase {
    pub fn from_solution(u: MultiPoly) -> Self {
        let g = u.biharmonic_apply();
        Self {
            u: PolyField::new(u),
            g,
        }
    }

    pub fn dim(&self) -> usize {
        self.u.poly.dim()
    }

    /// Dirichlet trace `u|_{boundary}`.
    pub fn dirichlet(&self, x: &Point) -> f64 {
        self.u.value(x)
    }

    /// Neumann trace `grad u . n` for the given outward normal.
    pub fn neumann(&self, x: &Point, normal: &Point) -> f64 {
        let g = self.u.gradient(x);
        g[0] * normal[0] + g[1] * normal[1] + g[2] * normal[2]
    }
}

/// The bubble `2^(4d) prod_i (x_i - x_i^2)^2` on the unit box; `d` is 2 or 3.
pub fn manufactured_case(dim: usize) -> ManufacturedCase {
    assert!(
        dim == 2 || dim == 3,
        "manufactured cases exist for dim 2 and 3"
    );
    let mut u = MultiPoly::constant(dim, 2f64.powi(4 * dim as i32));
    for axis in 0..dim {
        let x = MultiPoly::var(dim, axis);
        let bump = (&x - &(&x * &x)).pow(2);
        u = &u * &bump;
    }
    ManufacturedCase::from_solution(u)
}

/// Scaled monomial basis on an affine local frame.
///
/// Local variables are `xi_a = (x - center) . axes[a] / scale`; `axes` is an
/// orthonormal set whose length is the domain dimension (0 for a point).
/// After [`LocalBasis::orthonormalize`] the functions are the lower-triangular
/// combinations `phi_p = sum_{q <= p} T_pq m_q` of the monomials `m_q` that
/// are orthonormal for the given rule.
#[derive(Clone, Debug)]
pub struct LocalBasis {
    pub center: Point,
    pub axes: Vec<Point>,
    pub scale: f64,
    pub degree: usize,
    exps: Vec<Exponent>,
    transform: Option<Arc<DMatrix<f64>>>,
}

impl LocalBasis {
    pub fn new(center: Point, axes: Vec<Point>, scale: f64, degree: usize) -> Self {
        let exps = graded_exponents(axes.len(), degree);
        Self {
            center,
            axes,
            scale,
            degree,
            exps,
            transform: None,
        }
    }

    /// Re-expresses the basis so that it is orthonormal for `rule`. Two
    /// Cholesky passes keep the result orthonormal to working precision even
    /// when the monomial Gram matrix is badly conditioned.
    pub fn orthonormalize(mut self, rule: &QuadRule) -> Self {
        let n = self.len();
        let mut t = DMatrix::identity(n, n);
        for _ in 0..2 {
            self.transform = Some(Arc::new(t.clone()));
            let mut gram = DMatrix::<f64>::zeros(n, n);
            let mut v = vec![0.0; n];
            for (x, w) in rule.iter() {
                self.eval(x, &mut v);
                for p in 0..n {
                    for q in 0..=p {
                        gram[(p, q)] += w * v[p] * v[q];
                    }
                }
            }
            gram.fill_upper_triangle_with_lower_triangle();
            let Some(chol) = gram.cholesky() else {
                break;
            };
            let l = chol.l();
            let linv = l
                .solve_lower_triangular(&DMatrix::identity(n, n))
                .expect("Cholesky factor is invertible");
            t = linv * t;
        }
        self.transform = Some(Arc::new(t));
        self
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Exponents of the underlying monomials.
    pub fn exponents(&self) -> &[Exponent] {
        &self.exps
    }

    pub fn local_coords(&self, x: &Point) -> [f64; 3] {
        let d = sub(x, &self.center);
        let mut xi = [0.0; 3];
        for (a, axis) in self.axes.iter().enumerate() {
            xi[a] = dot(&d, axis) / self.scale;
        }
        xi
    }

    fn powers(&self, xi: &[f64; 3]) -> [[f64; 16]; 3] {
        let mut pw = [[0.0; 16]; 3];
        for a in 0..3 {
            pw[a][0] = 1.0;
            for p in 1..=self.degree.min(15) {
                pw[a][p] = pw[a][p - 1] * xi[a];
            }
        }
        pw
    }

    /// `out[p] = sum_q T_pq m[q]`, in place.
    fn apply<V: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = V>>(
        &self,
        m: &mut [V],
    ) {
        if let Some(t) = &self.transform {
            for p in (0..m.len()).rev() {
                let mut acc = V::default();
                for q in 0..=p {
                    acc += m[q] * t[(p, q)];
                }
                m[p] = acc;
            }
        }
    }

    pub fn eval(&self, x: &Point, out: &mut [f64]) {
        let pw = self.powers(&self.local_coords(x));
        for (o, e) in out.iter_mut().zip(&self.exps) {
            *o = pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize];
        }
        self.apply(out);
    }

    pub fn values(&self, x: &Point) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        self.eval(x, &mut v);
        v
    }

    /// Global-coordinate gradients of every basis function.
    pub fn gradients(&self, x: &Point) -> Vec<Point> {
        let pw = self.powers(&self.local_coords(x));
        let term = |e: &Exponent, a: usize| -> f64 {
            if e[a] == 0 {
                return 0.0;
            }
            let mut v = e[a] as f64;
            for b in 0..3 {
                let p = if b == a { e[b] - 1 } else { e[b] };
                v *= pw[b][p as usize];
            }
            v / self.scale
        };
        let mut g: Vec<Vec3> = self
            .exps
            .iter()
            .map(|e| {
                let mut g = [0.0; 3];
                for (a, axis) in self.axes.iter().enumerate() {
                    let d = term(e, a);
                    for c in 0..3 {
                        g[c] += d * axis[c];
                    }
                }
                Vec3(g)
            })
            .collect();
        self.apply(&mut g);
        g.into_iter().map(|v| v.0).collect()
    }

    /// Global-coordinate Hessians, row-major `[i][j]`.
    pub fn hessians(&self, x: &Point) -> Vec<[[f64; 3]; 3]> {
        let pw = self.powers(&self.local_coords(x));
        let h2 = self.scale * self.scale;
        let term = |e: &Exponent, a: usize, b: usize| -> f64 {
            let mut ee = [e[0] as i64, e[1] as i64, e[2] as i64];
            let mut coef = ee[a] as f64;
            ee[a] -= 1;
            coef *= ee[b] as f64;
            ee[b] -= 1;
            if coef == 0.0 || ee.iter().any(|&p| p < 0) {
                return 0.0;
            }
            coef * pw[0][ee[0] as usize] * pw[1][ee[1] as usize] * pw[2][ee[2] as usize] / h2
        };
        let mut hs: Vec<Mat3> = self
            .exps
            .iter()
            .map(|e| {
                let mut h = [[0.0; 3]; 3];
                for (a, ax) in self.axes.iter().enumerate() {
                    for (b, bx) in self.axes.iter().enumerate() {
                        let d = term(e, a, b);
                        if d == 0.0 {
                            continue;
                        }
                        for i in 0..3 {
                            for j in 0..3 {
                                h[i][j] += d * ax[i] * bx[j];
                            }
                        }
                    }
                }
                Mat3(h)
            })
            .collect();
        self.apply(&mut hs);
        hs.into_iter().map(|h| h.0).collect()
    }

    /// Evaluates `sum_p coeffs[p] * basis_p(x)`.
    pub fn combine(&self, coeffs: &[f64], x: &Point) -> f64 {
        if self.transform.is_some() {
            return coeffs.iter().zip(self.values(x)).map(|(c, v)| c * v).sum();
        }
        let pw = self.powers(&self.local_coords(x));
        coeffs
            .iter()
            .zip(&self.exps)
            .map(|(c, e)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
            .sum()
    }
}

#[derive(Clone, Copy, Default)]
struct Vec3([f64; 3]);

impl std::ops::AddAssign for Vec3 {
    fn add_assign(&mut self, o: Self) {
        for i in 0..3 {
            self.0[i] += o.0[i];
        }
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self(self.0.map(|v| v * s))
    }
}

#[derive(Clone, Copy, Default)]
struct Mat3([[f64; 3]; 3]);

impl std::ops::AddAssign for Mat3 {
    fn add_assign(&mut self, o: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl std::ops::Mul<f64> for Mat3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self(self.0.map(|r| r.map(|v| v * s)))
    }
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
