//! Quadratic forms on lattices of rank at most four, in the U* coordinate basis.
//!
//! Coordinates are ordered (11, 22, .., gg, 12, 13, .., (g-1)g). The coordinate
//! U*_ii is the coefficient of x_i^2 and U*_ij (i < j) the coefficient of 2 x_i x_j,
//! so the Gram matrix has the U* coordinates themselves as entries.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{self, fmt_q, q, qf, qi, Mat, Q};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormError {
    #[error("dimension {0} is outside 1..=4")]
    BadDim(usize),
    #[error("expected {expected} coordinates, got {got}")]
    CoordCount { expected: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("zero linear form")]
    ZeroForm,
    #[error("form is not positive semidefinite")]
    NotSemidefinite,
    #[error("axis {axis} out of range for dimension {dim}")]
    BadAxis { axis: usize, dim: usize },
    #[error("singular lattice map")]
    Singular,
    #[error("conjugate is not integral: entry ({row},{col}) = {value}")]
    NonIntegral { row: usize, col: usize, value: String },
    #[error("parse error: {0}")]
    Parse(String),
}

pub fn ncoords(g: usize) -> usize {
    g * (g + 1) / 2
}

/// Index pairs (0-based, i <= j) in wire order.
pub fn pairs(g: usize) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = (0..g).map(|i| (i, i)).collect();
    for i in 0..g {
        for j in i + 1..g {
            v.push((i, j));
        }
    }
    v
}

pub fn pair_index(g: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        return i;
    }
    // off-diagonal entries follow the diagonal, row by row
    let mut k = g;
    for a in 0..i {
        k += g - a - 1;
    }
    k + (j - i - 1)
}

fn dim_from_len(n: usize) -> Option<usize> {
    (1..=4).find(|&g| ncoords(g) == n)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    dim: usize,
    coords: Vec<Q>,
    integral: bool,
}

impl QuadForm {
    pub fn new(dim: usize, coords: Vec<Q>) -> Result<Self, FormError> {
        if !(1..=4).contains(&dim) {
            return Err(FormError::BadDim(dim));
        }
        if coords.len() != ncoords(dim) {
            return Err(FormError::CoordCount { expected: ncoords(dim), got: coords.len() });
        }
        let integral = coords.iter().all(|c| c.is_integer());
        Ok(QuadForm { dim, coords, integral })
    }

    pub fn from_ints(dim: usize, coords: &[i64]) -> Result<Self, FormError> {
        Self::new(dim, coords.iter().map(|&c| q(c)).collect())
    }

    /// Builds a form from a raw coordinate vector, inferring the dimension.
    pub fn from_coords(coords: Vec<Q>) -> Result<Self, FormError> {
        let dim = dim_from_len(coords.len())
            .ok_or(FormError::CoordCount { expected: 10, got: coords.len() })?;
        Self::new(dim, coords)
    }

    pub fn zero(dim: usize) -> Self {
        QuadForm { dim, coords: vec![Q::zero(); ncoords(dim)], integral: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[Q] {
        &self.coords
    }

    pub fn is_integral(&self) -> bool {
        self.integral
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Coordinate U*_ij for 0-based indices.
    pub fn coord(&self, i: usize, j: usize) -> &Q {
        &self.coords[pair_index(self.dim, i, j)]
    }

    pub fn gram(&self) -> Mat {
        let g = self.dim;
        let mut m = exact::zeros(g, g);
        for (k, &(i, j)) in pairs(g).iter().enumerate() {
            m[i][j] = self.coords[k].clone();
            m[j][i] = self.coords[k].clone();
        }
        m
    }

    pub fn from_gram(a: &Mat) -> Result<Self, FormError> {
        let g = a.len();
        let coords = pairs(g).iter().map(|&(i, j)| a[i][j].clone()).collect();
        Self::new(g, coords)
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        self.check_dim(other)?;
        Self::new(self.dim, self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        self.check_dim(other)?;
        Self::new(self.dim, self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::new(self.dim, self.coords.iter().map(|a| a * s).collect()).unwrap()
    }

    fn check_dim(&self, other: &Self) -> Result<(), FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    /// Positive rational c with self = c * primitive().
    pub fn content(&self) -> Q {
        let l = self.coords.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let g = self
            .coords
            .iter()
            .fold(BigInt::zero(), |acc, x| acc.gcd(&(x * qi(&l)).to_integer()));
        if g.is_zero() {
            return Q::zero();
        }
        Q::new(g, l)
    }

    /// Primitive integral form on the same ray.
    pub fn primitive(&self) -> Self {
        let c = self.content();
        if c.is_zero() {
            return self.clone();
        }
        self.scale(&c.recip())
    }

    pub fn evaluate(&self, v: &[Q]) -> Result<Q, FormError> {
        if v.len() != self.dim {
            return Err(FormError::DimMismatch(self.dim, v.len()));
        }
        let mut s = Q::zero();
        for (k, &(i, j)) in pairs(self.dim).iter().enumerate() {
            let t = &self.coords[k] * &v[i] * &v[j];
            if i == j {
                s += t;
            } else {
                s += &t + &t;
            }
        }
        Ok(s)
    }

    pub fn evaluate_int(&self, v: &[i64]) -> Result<Q, FormError> {
        let v: Vec<Q> = v.iter().map(|&x| q(x)).collect();
        self.evaluate(&v)
    }

    /// Half the trace of the Gram matrix.
    pub fn half_trace(&self) -> Q {
        (0..self.dim).fold(Q::zero(), |acc, i| acc + &self.coords[i]) / q(2)
    }

    pub fn to_poly_string(&self) -> String {
        let mut terms: Vec<(Q, String)> = Vec::new();
        for (k, &(i, j)) in pairs(self.dim).iter().enumerate() {
            let c = &self.coords[k];
            if c.is_zero() {
                continue;
            }
            if i == j {
                terms.push((c.clone(), format!("x{}^2", i + 1)));
            } else {
                terms.push((c * q(2), format!("x{}*x{}", i + 1, j + 1)));
            }
        }
        if terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (n, (c, m)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if n == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if !a.is_one() {
                s.push_str(&fmt_q(&a));
                s.push('*');
            }
            s.push_str(m);
        }
        s
    }

    pub fn to_wire(&self) -> String {
        let parts: Vec<String> = self.coords.iter().map(fmt_q).collect();
        format!("[{}]", parts.join(","))
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_poly_string())
    }
}

impl Serialize for QuadForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coords.iter().map(fmt_q).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let coords = v
            .iter()
            .map(|s| exact::parse_q(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s}"))))
            .collect::<Result<Vec<_>, _>>()?;
        QuadForm::from_coords(coords).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinearForm {
    coeffs: Vec<i64>,
}

impl LinearForm {
    pub fn new(coeffs: Vec<i64>) -> Self {
        LinearForm { coeffs }
    }

    pub fn coord(dim: usize, i: usize) -> Self {
        let mut c = vec![0; dim];
        c[i] = 1;
        LinearForm { coeffs: c }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_primitive(&self) -> bool {
        self.coeffs.iter().fold(0i64, |a, &b| a.gcd(&b)) == 1
    }

    /// Drops the coefficient of the given 1-based axis.
    pub fn delete(&self, axis: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.remove(axis - 1);
        LinearForm { coeffs: c }
    }
}

/// A linear self-map of Z^g acting on column vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeMap {
    matrix: Vec<Vec<i64>>,
    det: i64,
}

impl LatticeMap {
    pub fn new(matrix: Vec<Vec<i64>>) -> Result<Self, FormError> {
        let g = matrix.len();
        if !(1..=4).contains(&g) {
            return Err(FormError::BadDim(g));
        }
        if matrix.iter().any(|r| r.len() != g) {
            return Err(FormError::DimMismatch(g, matrix[0].len()));
        }
        let d = exact::det(&to_q_mat(&matrix));
        if d.is_zero() {
            return Err(FormError::Singular);
        }
        let det = d.to_integer().try_into().map_err(|_| FormError::Singular)?;
        Ok(LatticeMap { matrix, det })
    }

    pub fn identity(g: usize) -> Self {
        let m = (0..g).map(|i| (0..g).map(|j| i64::from(i == j)).collect()).collect();
        LatticeMap { matrix: m, det: 1 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn is_unimodular(&self) -> bool {
        self.det.abs() == 1
    }

    /// Matrix product self * other.
    pub fn mul(&self, other: &Self) -> Self {
        let g = self.dim();
        let m = (0..g)
            .map(|i| (0..g).map(|j| (0..g).map(|k| self.matrix[i][k] * other.matrix[k][j]).sum()).collect())
            .collect();
        LatticeMap { matrix: m, det: self.det * other.det }
    }

    pub fn transpose(&self) -> Self {
        let g = self.dim();
        let m = (0..g).map(|i| (0..g).map(|j| self.matrix[j][i]).collect()).collect();
        LatticeMap { matrix: m, det: self.det }
    }

    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(v).fold(Q::zero(), |a, (&m, x)| a + q(m) * x))
            .collect()
    }

    pub fn to_q(&self) -> Mat {
        to_q_mat(&self.matrix)
    }
}

pub fn to_q_mat(m: &[Vec<i64>]) -> Mat {
    m.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

/// A vector in the dual basis U_ij, paired with forms by the coordinate dot product.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualVector {
    dim: usize,
    coords: Vec<Q>,
}

impl DualVector {
    pub fn new(dim: usize, coords: Vec<Q>) -> Result<Self, FormError> {
        if coords.len() != ncoords(dim) {
            return Err(FormError::CoordCount { expected: ncoords(dim), got: coords.len() });
        }
        Ok(DualVector { dim, coords })
    }

    pub fn from_ints(dim: usize, coords: &[i64]) -> Result<Self, FormError> {
        Self::new(dim, coords.iter().map(|&c| q(c)).collect())
    }

    /// The basis vector U_ij (1-based indices).
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut c = vec![Q::zero(); ncoords(dim)];
        c[pair_index(dim, i - 1, j - 1)] = Q::one();
        DualVector { dim, coords: c }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[Q] {
        &self.coords
    }

    pub fn pair(&self, f: &QuadForm) -> Q {
        exact::dot(&self.coords, f.coords())
    }

    pub fn is_zero(&self) -> bool {
        exact::is_zero_vec(&self.coords)
    }

    pub fn neg(&self) -> Self {
        DualVector { dim: self.dim, coords: self.coords.iter().map(|x| -x).collect() }
    }

    pub fn combine(terms: &[(i64, &DualVector)]) -> Self {
        let dim = terms[0].1.dim;
        let mut c = vec![Q::zero(); ncoords(dim)];
        for (k, v) in terms {
            for (x, y) in c.iter_mut().zip(&v.coords) {
                *x += q(*k) * y;
            }
        }
        DualVector { dim, coords: c }
    }

    pub fn to_label(&self) -> String {
        let mut s = String::new();
        for (k, &(i, j)) in pairs(self.dim).iter().enumerate() {
            let c = &self.coords[k];
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if s.is_empty() {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { "-" } else { "+" });
            }
            if !c.abs().is_one() {
                s.push_str(&fmt_q(&c.abs()));
            }
            s.push_str(&format!("U{}{}", i + 1, j + 1));
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

pub fn square(l: &LinearForm) -> Result<QuadForm, FormError> {
    if l.is_zero() {
        return Err(FormError::ZeroForm);
    }
    let g = l.dim();
    if !(1..=4).contains(&g) {
        return Err(FormError::BadDim(g));
    }
    let c = l.coeffs();
    let coords = pairs(g).iter().map(|&(i, j)| q(c[i] * c[j])).collect();
    QuadForm::new(g, coords)
}

/// Square of the linear form with the given integer coefficients.
pub fn sq(c: &[i64]) -> QuadForm {
    square(&LinearForm::new(c.to_vec())).expect("nonzero linear form")
}

/// Exact semidefiniteness and rank.
pub fn psd_rank(f: &QuadForm) -> (bool, usize) {
    let a = f.gram();
    let rank = exact::rank(&a);
    (is_psd(&a), rank)
}

fn is_psd(a: &Mat) -> bool {
    // symmetric elimination: a negative pivot or a zero diagonal with a
    // nonzero row refutes semidefiniteness
    let mut m = a.clone();
    let n = m.len();
    let mut active: Vec<usize> = (0..n).collect();
    while let Some(pos) = active.iter().position(|&i| !m[i][i].is_zero()) {
        let k = active.remove(pos);
        let p = m[k][k].clone();
        if p.is_negative() {
            return false;
        }
        for &i in &active {
            if m[i][k].is_zero() {
                continue;
            }
            let f = &m[i][k] / &p;
            for &j in &active {
                let t = &f * &m[k][j];
                m[i][j] -= t;
            }
        }
    }
    active.iter().all(|&i| active.iter().all(|&j| m[i][j].is_zero()))
}

/// Substitution action x -> m(x): the Gram matrix A becomes m^T A m.
///
/// This is a right action: act(m1, act(m2, f)) = act(m2 * m1, f).
pub fn act(m: &LatticeMap, f: &QuadForm) -> Result<QuadForm, FormError> {
    if m.dim() != f.dim() {
        return Err(FormError::DimMismatch(m.dim(), f.dim()));
    }
    let mq = m.to_q();
    let g = exact::matmul(&exact::matmul(&exact::transpose(&mq), &f.gram()), &mq);
    QuadForm::from_gram(&g)
}

/// Restriction to the coordinate hyperplane x_axis = 0 (axis is 1-based).
pub fn project(f: &QuadForm, axis: usize) -> Result<QuadForm, FormError> {
    let g = f.dim();
    if axis == 0 || axis > g {
        return Err(FormError::BadAxis { axis, dim: g });
    }
    if g == 1 {
        return Err(FormError::BadDim(0));
    }
    let keep: Vec<usize> = (0..g).filter(|&i| i != axis - 1).collect();
    let coords = pairs(g - 1).iter().map(|&(i, j)| f.coord(keep[i], keep[j]).clone()).collect();
    QuadForm::new(g - 1, coords)
}

/// The Voronoi transformation as a substitution: (x1+x2, x1-x2, x1-x3, x1-x4).
pub fn psi() -> LatticeMap {
    LatticeMap::new(vec![vec![1, 1, 0, 0], vec![1, -1, 0, 0], vec![1, 0, -1, 0], vec![1, 0, 0, -1]])
        .unwrap()
}

/// Half the trace after the Voronoi transformation.
pub fn half_trace_prime(f: &QuadForm) -> Result<Q, FormError> {
    if f.dim() != 4 {
        return Err(FormError::BadDim(f.dim()));
    }
    Ok(act(&psi(), f)?.half_trace())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KernelLattice {
    pub rank: usize,
    pub basis: Vec<Vec<BigInt>>,
}

/// Integer basis of the common radical of semidefinite forms.
pub fn kernel_lattice(forms: &[QuadForm]) -> Result<KernelLattice, FormError> {
    let Some(first) = forms.first() else {
        return Err(FormError::Parse("empty form list".into()));
    };
    let g = first.dim();
    let mut rows: Mat = Vec::new();
    for f in forms {
        if f.dim() != g {
            return Err(FormError::DimMismatch(g, f.dim()));
        }
        if !psd_rank(f).0 {
            return Err(FormError::NotSemidefinite);
        }
        rows.extend(f.gram());
    }
    let basis = exact::integer_kernel(&rows, g);
    Ok(KernelLattice { rank: basis.len(), basis })
}

/// The coefficient-vector form of the Voronoi transformation, i.e. the
/// transpose of `psi()`; this is the matrix used to pass from y to x coordinates.
pub fn psi_coefficient_matrix() -> Mat {
    exact::transpose(&psi().to_q())
}

/// Conjugates a map given in y coordinates to x coordinates and checks integrality.
pub fn y_to_x(m_y: &Mat) -> Result<LatticeMap, FormError> {
    let p = psi_coefficient_matrix();
    let pinv = exact::inverse(&p).expect("psi is invertible");
    let c = exact::matmul(&exact::matmul(&pinv, m_y), &p);
    let mut out = vec![vec![0i64; 4]; 4];
    for (i, row) in c.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.is_integer() {
                return Err(FormError::NonIntegral { row: i + 1, col: j + 1, value: fmt_q(x) });
            }
            out[i][j] = x.to_integer().try_into().map_err(|_| FormError::Singular)?;
        }
    }
    LatticeMap::new(out)
}

/// The y-coordinate generators k_i, s_ij and w.
pub fn k_y(i: usize) -> Mat {
    let mut m = exact::identity(4);
    m[i - 1][i - 1] = q(-1);
    m
}

pub fn s_y(i: usize, j: usize) -> Mat {
    let mut m = exact::identity(4);
    m[i - 1][i - 1] = Q::zero();
    m[j - 1][j - 1] = Q::zero();
    m[i - 1][j - 1] = Q::one();
    m[j - 1][i - 1] = Q::one();
    m
}

pub fn w_y() -> Mat {
    (0..4)
        .map(|i| (0..4).map(|j| if i == j { qf(-1, 2) } else { qf(1, 2) }).collect())
        .collect()
}

/// The form e: twice the sum of squares plus the cross terms x1x2 - x1x3 - x1x4 - x2x3 - x2x4.
pub fn e_form() -> QuadForm {
    QuadForm::from_ints(4, &[2, 2, 2, 2, 1, -1, -1, -1, -1, 0]).unwrap()
}

/// The image of e under the transposition x2<->x3.
pub fn e_prime_form() -> QuadForm {
    QuadForm::from_ints(4, &[2, 2, 2, 2, -1, 1, -1, -1, 0, -1]).unwrap()
}

/// The image of e under x1<->x3, x2<->x4; it lies across the RT facet sigma_0 from e.
pub fn e_across_form() -> QuadForm {
    QuadForm::from_ints(4, &[2, 2, 2, 2, 0, -1, -1, -1, -1, 1]).unwrap()
}

// ---- text notation ----

#[derive(Clone, Debug)]
struct Poly {
    c: Q,
    lin: Vec<Q>,
    quad: Vec<Vec<Q>>,
}

impl Poly {
    fn zero() -> Self {
        Poly { c: Q::zero(), lin: vec![Q::zero(); 4], quad: exact::zeros(4, 4) }
    }
    fn constant(c: Q) -> Self {
        let mut p = Self::zero();
        p.c = c;
        p
    }
    fn var(i: usize) -> Self {
        let mut p = Self::zero();
        p.lin[i] = Q::one();
        p
    }
    fn degree(&self) -> usize {
        if !self.quad.iter().flatten().all(|x| x.is_zero()) {
            2
        } else if !exact::is_zero_vec(&self.lin) {
            1
        } else {
            0
        }
    }
    fn add(&self, o: &Self, sign: i64) -> Self {
        let s = q(sign);
        Poly {
            c: &self.c + &o.c * &s,
            lin: self.lin.iter().zip(&o.lin).map(|(a, b)| a + b * &s).collect(),
            quad: self
                .quad
                .iter()
                .zip(&o.quad)
                .map(|(r, t)| r.iter().zip(t).map(|(a, b)| a + b * &s).collect())
                .collect(),
        }
    }
    fn mul(&self, o: &Self) -> Result<Self, FormError> {
        if self.degree() + o.degree() > 2 {
            return Err(FormError::Parse("degree above 2".into()));
        }
        let mut p = Self::zero();
        p.c = &self.c * &o.c;
        for i in 0..4 {
            p.lin[i] = &self.c * &o.lin[i] + &o.c * &self.lin[i];
            for j in 0..4 {
                p.quad[i][j] = &self.c * &o.quad[i][j] + &o.c * &self.quad[i][j] + &self.lin[i] * &o.lin[j];
            }
        }
        Ok(p)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    maxvar: usize,
}

impl Parser<'_> {
    fn skip(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }
    fn peek(&mut self) -> Option<u8> {
        self.skip();
        self.s.get(self.pos).copied()
    }
    fn err<T>(&self, msg: &str) -> Result<T, FormError> {
        Err(FormError::Parse(format!("{msg} at offset {}", self.pos)))
    }
    fn expr(&mut self) -> Result<Poly, FormError> {
        let mut sign = 1;
        if self.peek() == Some(b'-') {
            self.pos += 1;
            sign = -1;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        let mut acc = Poly::zero().add(&self.term()?, sign);
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, 1);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, -1);
                }
                _ => return Ok(acc),
            }
        }
    }
    fn term(&mut self) -> Result<Poly, FormError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => self.pos += 1,
                // juxtaposition, as in 2x1^2 or 2(x1-x2)^2
                Some(b'x') | Some(b'(') => {}
                _ => return Ok(acc),
            }
            acc = acc.mul(&self.power()?)?;
        }
    }
    fn power(&mut self) -> Result<Poly, FormError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip();
            if self.s.get(self.pos) != Some(&b'2') {
                return self.err("only ^2 is supported");
            }
            self.pos += 1;
            return base.mul(&base);
        }
        Ok(base)
    }
    fn atom(&mut self) -> Result<Poly, FormError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let p = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected )");
                }
                self.pos += 1;
                Ok(p)
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let idx: usize = std::str::from_utf8(&self.s[start..self.pos])
                    .unwrap()
                    .parse()
                    .or_else(|_| self.err("bad variable"))?;
                if !(1..=4).contains(&idx) {
                    return self.err("variable index outside 1..4");
                }
                self.maxvar = self.maxvar.max(idx);
                Ok(Poly::var(idx - 1))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'/') {
                    self.pos += 1;
                }
                let t = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                let v = exact::parse_q(t).ok_or_else(|| FormError::Parse(format!("bad number {t}")))?;
                Ok(Poly::constant(v))
            }
            _ => self.err("unexpected token"),
        }
    }
}

/// Parses either polynomial notation or a raw coordinate vector `[..]`.
///
/// `dim` fixes the ambient dimension; when `None` it is inferred.
pub fn parse_form(s: &str, dim: Option<usize>) -> Result<QuadForm, FormError> {
    let t = s.trim();
    if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let coords = inner
            .split(',')
            .map(|p| exact::parse_q(p).ok_or_else(|| FormError::Parse(format!("bad rational {p}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let f = QuadForm::from_coords(coords)?;
        if let Some(d) = dim {
            if d != f.dim() {
                return Err(FormError::DimMismatch(d, f.dim()));
            }
        }
        return Ok(f);
    }
    let mut p = Parser { s: t.as_bytes(), pos: 0, maxvar: 1 };
    let poly = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    if !poly.c.is_zero() || !exact::is_zero_vec(&poly.lin) {
        return Err(FormError::Parse("not a quadratic form".into()));
    }
    let g = dim.unwrap_or(p.maxvar);
    if p.maxvar > g {
        return Err(FormError::DimMismatch(g, p.maxvar));
    }
    let coords = pairs(g)
        .iter()
        .map(|&(i, j)| {
            if i == j {
                poly.quad[i][i].clone()
            } else {
                (&poly.quad[i][j] + &poly.quad[j][i]) / q(2)
            }
        })
        .collect();
    QuadForm::new(g, coords)
}
