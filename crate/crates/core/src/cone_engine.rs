//! Exact cone computations: facets, membership, faces, dual descriptions,
//! projections, dicings and piecewise-linear support functions.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cone_atlas::Cone;
use crate::exact::{self, q, qi, Mat, Q};
use crate::lattice_forms::{
    self, e_form, ncoords, psd_rank, square, DualVector, FormError, LinearForm, QuadForm,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("target is not an integral combination of the basis")]
    NonIntegral,
    #[error("dual description has no lattice basis")]
    NoBasis,
    #[error("invalid basis: {0}")]
    BadBasis(String),
    #[error("forms do not span the dual space")]
    NotSpanning,
    #[error("form is outside the fragment of the support function")]
    OutsideFragment,
    #[error("form is not the square of a linear form")]
    NotRank1,
    #[error("face is not admissible: linear forms span dimension {0}")]
    Inadmissible(usize),
    #[error("second projection is ambiguous: {0} candidate rays")]
    Ambiguous(usize),
    #[error("index out of range")]
    BadIndex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    pub normal: DualVector,
    /// Indices of the generators on the facet.
    pub on: Vec<usize>,
}

/// Column subset on which the generator matrix has full rank, preferring a
/// unimodular minor; the first such subset in lexicographic order.
fn pivot_columns(rows: &Mat, r: usize) -> Vec<usize> {
    let n = rows.first().map_or(0, |v| v.len());
    if r == 0 {
        return vec![];
    }
    let mut basis_rows: Mat = Vec::new();
    for v in rows {
        let mut t = basis_rows.clone();
        t.push(v.clone());
        if exact::rank(&t) > basis_rows.len() {
            basis_rows = t;
        }
        if basis_rows.len() == r {
            break;
        }
    }
    let mut fallback = None;
    for cols in (0..n).combinations(r) {
        let minor: Mat = basis_rows.iter().map(|v| cols.iter().map(|&j| v[j].clone()).collect()).collect();
        let d = exact::det(&minor);
        if d.is_zero() {
            continue;
        }
        if d.abs().is_one() {
            return cols;
        }
        fallback.get_or_insert(cols);
    }
    fallback.expect("rank r has a nonzero minor")
}

fn lift(cols: &[usize], y: &[Q], n: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    for (&j, x) in cols.iter().zip(y) {
        v[j] = x.clone();
    }
    v
}

fn int_to_q(v: &[BigInt]) -> Vec<Q> {
    v.iter().map(qi).collect()
}

/// All facets of the cone inside its linear span, by exhaustive enumeration
/// of independent generator subsets of size rank-1.
pub fn facets(cone: &Cone) -> Vec<Facet> {
    let rows = cone.rows();
    let m = rows.len();
    let n = ncoords(cone.dim());
    let r = exact::rank(&rows);
    if r == 0 {
        return vec![];
    }
    let cols = pivot_columns(&rows, r);
    let w: Mat = rows.iter().map(|v| cols.iter().map(|&j| v[j].clone()).collect()).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for sub in (0..m).combinations(r - 1) {
        let a: Mat = sub.iter().map(|&i| w[i].clone()).collect();
        if exact::rank(&a) != r - 1 {
            continue;
        }
        let ns = exact::nullspace(&a, r);
        let mut y = ns[0].clone();
        let vals: Vec<Q> = w.iter().map(|v| exact::dot(v, &y)).collect();
        if vals.iter().all(|x| !x.is_positive()) {
            y = y.iter().map(|x| -x).collect();
        } else if !vals.iter().all(|x| !x.is_negative()) {
            continue;
        }
        let on: Vec<usize> = (0..m).filter(|&i| vals[i].is_zero()).collect();
        if !seen.insert(on.clone()) {
            continue;
        }
        let y = int_to_q(&exact::primitive_int(&y));
        let normal = DualVector::new(cone.dim(), lift(&cols, &y, n)).unwrap();
        out.push(Facet { normal, on });
    }
    out.sort_by(|a, b| a.on.cmp(&b.on));
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Nonnegative coefficients, one per generator.
    Inside(Vec<Q>),
    /// A dual vector nonnegative on the cone and negative on the input.
    Outside(DualVector),
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside(_))
    }
}

pub fn member(cone: &Cone, f: &QuadForm) -> Result<Membership, EngineError> {
    if cone.dim() != f.dim() {
        return Err(EngineError::DimMismatch(cone.dim(), f.dim()));
    }
    let rows = cone.rows();
    let n = ncoords(cone.dim());
    let target = f.coords().to_vec();
    // outside the span: a lineality vector separates
    let lin = exact::integer_kernel(&rows, n);
    for l in &lin {
        let l = int_to_q(l);
        let s = exact::dot(&l, &target);
        if !s.is_zero() {
            let l = if s.is_positive() { l.iter().map(|x| -x).collect() } else { l };
            return Ok(Membership::Outside(DualVector::new(cone.dim(), l)?));
        }
    }
    let fs = facets(cone);
    for fc in &fs {
        if fc.normal.pair(f).is_negative() {
            return Ok(Membership::Outside(fc.normal.clone()));
        }
    }
    Ok(Membership::Inside(certificate(&rows, &target, &fs)))
}

fn certificate(rows: &Mat, target: &[Q], fs: &[Facet]) -> Vec<Q> {
    let m = rows.len();
    // least-norm solution first: c = V w with (V^T V) w = t
    let vt = exact::transpose(rows);
    let vtv = exact::matmul(&vt, rows);
    if let Some(w) = exact::solve(&vtv, target) {
        let c = exact::matvec(rows, &w);
        if c.iter().all(|x| !x.is_negative()) {
            return c;
        }
    }
    // restrict to the smallest face containing the target, then search bases
    let tight: Vec<&Facet> = fs
        .iter()
        .filter(|fc| exact::dot(fc.normal.coords(), target).is_zero())
        .collect();
    let support: Vec<usize> = (0..m).filter(|&i| tight.iter().all(|fc| fc.on.contains(&i))).collect();
    let sub: Mat = support.iter().map(|&i| rows[i].clone()).collect();
    let r = exact::rank(&sub);
    for basis in support.iter().copied().combinations(r) {
        let b: Mat = basis.iter().map(|&i| rows[i].clone()).collect();
        if exact::rank(&b) != r {
            continue;
        }
        let bt = exact::transpose(&b);
        if let Some(c) = exact::solve(&bt, target) {
            if c.iter().all(|x| !x.is_negative()) {
                let mut out = vec![Q::zero(); m];
                for (&i, x) in basis.iter().zip(c) {
                    out[i] = x;
                }
                return out;
            }
        }
    }
    unreachable!("facet inequalities hold, so a Caratheodory basis exists")
}

/// Returns a supporting dual vector if the generator subset is exactly a face.
pub fn is_face(cone: &Cone, subset: &[usize]) -> Option<DualVector> {
    let m = cone.len();
    if subset.iter().any(|&i| i >= m) {
        return None;
    }
    let set: BTreeSet<usize> = subset.iter().copied().collect();
    let fs = facets(cone);
    let containing: Vec<&Facet> = fs.iter().filter(|fc| set.iter().all(|i| fc.on.contains(i))).collect();
    let closure: BTreeSet<usize> =
        (0..m).filter(|i| containing.iter().all(|fc| fc.on.contains(i))).collect();
    if closure != set {
        return None;
    }
    let n = ncoords(cone.dim());
    let mut v = vec![Q::zero(); n];
    for fc in containing {
        for (x, y) in v.iter_mut().zip(fc.normal.coords()) {
            *x += y;
        }
    }
    Some(DualVector::new(cone.dim(), v).unwrap())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualDescription {
    pub dim: usize,
    /// Integer basis of the lineality space (annihilator of the span).
    pub lineality: Vec<DualVector>,
    /// Extreme rays modulo lineality, one per facet.
    pub rays: Vec<DualVector>,
    /// For basic cones: rays dual to the generators followed by lineality
    /// vectors, together a basis of the dual lattice.
    pub basis: Option<Vec<DualVector>>,
}

pub fn dual_description(cone: &Cone) -> DualDescription {
    let dim = cone.dim();
    let n = ncoords(dim);
    let rows = cone.rows();
    let lineality: Vec<DualVector> = exact::integer_kernel(&rows, n)
        .iter()
        .map(|v| DualVector::new(dim, int_to_q(v)).unwrap())
        .collect();
    let fs = facets(cone);
    let r = exact::rank(&rows);
    let basis = if r == cone.len() {
        simplicial_basis(cone, &rows, &lineality)
    } else {
        None
    };
    let rays = match &basis {
        Some(b) => b[..r].to_vec(),
        None => fs.into_iter().map(|fc| fc.normal).collect(),
    };
    DualDescription { dim, lineality, rays, basis }
}

fn simplicial_basis(cone: &Cone, rows: &Mat, lineality: &[DualVector]) -> Option<Vec<DualVector>> {
    let r = rows.len();
    let n = ncoords(cone.dim());
    if r == 0 {
        return Some(lineality.to_vec());
    }
    let cols = pivot_columns(rows, r);
    let w: Mat = rows.iter().map(|v| cols.iter().map(|&j| v[j].clone()).collect()).collect();
    let winv = exact::inverse(&w)?;
    let mut out = Vec::new();
    for k in 0..r {
        // y with w . y = unit vector k
        let y: Vec<Q> = (0..r).map(|j| winv[j][k].clone()).collect();
        out.push(DualVector::new(cone.dim(), lift(&cols, &y, n)).unwrap());
    }
    out.extend(lineality.iter().cloned());
    let m: Mat = out.iter().map(|v| v.coords().to_vec()).collect();
    if m.iter().flatten().all(|x| x.is_integer()) && exact::det(&m).abs().is_one() {
        Some(out)
    } else {
        None
    }
}

impl DualDescription {
    /// Installs a chosen lattice basis, validated against the cone: the first
    /// rank(cone) vectors must be dual to the generators, the rest must vanish on them.
    pub fn with_basis(mut self, cone: &Cone, basis: Vec<DualVector>) -> Result<Self, EngineError> {
        let n = ncoords(self.dim);
        if basis.len() != n {
            return Err(EngineError::BadBasis(format!("need {n} vectors")));
        }
        let r = cone.len();
        for (k, b) in basis.iter().enumerate() {
            for (i, g) in cone.gens().iter().enumerate() {
                let want = if k == i { Q::one() } else { Q::zero() };
                if b.pair(g) != want {
                    return Err(EngineError::BadBasis(format!("vector {} pairs wrongly with generator {}", k + 1, i + 1)));
                }
            }
        }
        let m: Mat = basis.iter().map(|v| v.coords().to_vec()).collect();
        if !exact::det(&m).abs().is_one() {
            return Err(EngineError::BadBasis("not unimodular".into()));
        }
        self.rays = basis[..r].to_vec();
        self.basis = Some(basis);
        Ok(self)
    }
}

/// Integer exponents k with target = sum k_i basis_i.
pub fn monomial_exponents(dd: &DualDescription, target: &DualVector) -> Result<Vec<BigInt>, EngineError> {
    let basis = dd.basis.as_ref().ok_or(EngineError::NoBasis)?;
    let m: Mat = exact::transpose(&basis.iter().map(|v| v.coords().to_vec()).collect());
    let k = exact::solve(&m, target.coords()).ok_or(EngineError::NonIntegral)?;
    if !k.iter().all(|x| x.is_integer()) {
        return Err(EngineError::NonIntegral);
    }
    Ok(k.iter().map(|x| x.to_integer()).collect())
}

/// The dual cone as a cone of dual vectors: rays plus both signs of lineality.
pub fn dual_generators(dd: &DualDescription) -> Vec<DualVector> {
    let mut v = dd.rays.clone();
    for l in &dd.lineality {
        v.push(l.clone());
        v.push(l.neg());
    }
    v
}

/// Whether two finite lists of dual vectors generate the same cone.
pub fn same_dual_cone(_dim: usize, a: &[DualVector], b: &[DualVector]) -> bool {
    let inside = |gens: &[DualVector], vs: &[DualVector]| {
        let cols: Vec<Vec<Q>> = gens.iter().map(|v| v.coords().to_vec()).collect();
        vs.iter().all(|v| exact::nonneg_combination(&cols, v.coords()).is_some())
    };
    inside(a, b) && inside(b, a)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainmentReport {
    pub images: Vec<QuadForm>,
    /// Index of the first target containing every image.
    pub contained_in: Option<usize>,
    /// Whether the image cone equals that target.
    pub equal: bool,
}

pub fn project_and_check(cone: &Cone, axis: usize, targets: &[Cone]) -> Result<ContainmentReport, EngineError> {
    let mut images = Vec::new();
    for g in cone.gens() {
        let p = lattice_forms::project(g, axis)?;
        if p.is_zero() {
            continue;
        }
        let p = p.primitive();
        if !images.contains(&p) {
            images.push(p);
        }
    }
    let image = Cone::new(cone.dim() - 1, images.clone()).map_err(|_| EngineError::BadIndex)?;
    for (k, t) in targets.iter().enumerate() {
        let mut ok = true;
        for p in &images {
            if !member(t, p)?.is_inside() {
                ok = false;
                break;
            }
        }
        if ok {
            let mut equal = true;
            for g in t.gens() {
                if !member(&image, g)?.is_inside() {
                    equal = false;
                    break;
                }
            }
            return Ok(ContainmentReport { images, contained_in: Some(k), equal });
        }
    }
    Ok(ContainmentReport { images, contained_in: None, equal: false })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DicingResult {
    pub dicing: bool,
    /// An independent subset with determinant other than +-1.
    pub witness: Option<(Vec<usize>, i64)>,
}

pub fn is_dicing(forms: &[LinearForm]) -> Result<DicingResult, EngineError> {
    let g = forms.first().map_or(0, |l| l.dim());
    let rows: Mat = forms.iter().map(|l| l.coeffs().iter().map(|&c| q(c)).collect()).collect();
    if g == 0 || exact::rank(&rows) < g {
        return Err(EngineError::NotSpanning);
    }
    for sub in (0..forms.len()).combinations(g) {
        let m: Mat = sub.iter().map(|&i| rows[i].clone()).collect();
        let d = exact::det(&m);
        if !d.is_zero() && !d.abs().is_one() {
            let d: i64 = d.to_integer().try_into().unwrap_or(i64::MAX);
            return Ok(DicingResult { dicing: false, witness: Some((sub, d)) });
        }
    }
    Ok(DicingResult { dicing: true, witness: None })
}

/// Recovers l from a rank-one integral form l^2, up to sign.
pub fn root(f: &QuadForm) -> Option<LinearForm> {
    let g = f.dim();
    let i = (0..g).find(|&i| !f.coord(i, i).is_zero())?;
    let d = f.coord(i, i);
    if !d.is_integer() || d.is_negative() {
        return None;
    }
    let s = d.to_integer().sqrt();
    if &(&s * &s) != d.numer() {
        return None;
    }
    let s = qi(&s);
    let mut c = Vec::with_capacity(g);
    for j in 0..g {
        let x = f.coord(i, j) / &s;
        if !x.is_integer() {
            return None;
        }
        c.push(x.to_integer().try_into().ok()?);
    }
    let l = LinearForm::new(c);
    (square(&l).ok()? == *f).then_some(l)
}

/// Value 1 on the primitive generator of every ray of the Voronoi fan in
/// dimension g <= 3, except 0 on the listed rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportFunction {
    pub dim: usize,
    pub zero_on: Vec<QuadForm>,
}

impl SupportFunction {
    pub fn voronoi(dim: usize) -> Self {
        SupportFunction { dim, zero_on: vec![] }
    }

    pub fn vanishing_on(dim: usize, rays: &[QuadForm]) -> Self {
        SupportFunction { dim, zero_on: rays.iter().map(|r| r.primitive()).collect() }
    }

    pub fn ray_value(&self, ray: &QuadForm) -> Q {
        if self.zero_on.contains(&ray.primitive()) {
            Q::zero()
        } else {
            Q::one()
        }
    }
}

fn bil(a: &Mat, u: &[Q], v: &[Q]) -> Q {
    exact::dot(u, &exact::matvec(a, v))
}

/// Decomposes a positive definite form of dimension <= 3 along the rays of
/// the Voronoi cone containing it, via an obtuse superbase.
///
/// `choose` picks which non-obtuse pair to flip when several are available.
pub fn selling_decomposition_with(
    f: &QuadForm,
    mut choose: impl FnMut(usize) -> usize,
) -> Result<Vec<(Q, QuadForm)>, EngineError> {
    let g = f.dim();
    let (psd, rank) = psd_rank(f);
    if g > 3 || !psd || rank < g {
        return Err(EngineError::OutsideFragment);
    }
    if g == 1 {
        return Ok(vec![(f.coord(0, 0).clone(), lattice_forms::sq(&[1]))]);
    }
    let a = f.gram();
    let mut v: Vec<Vec<Q>> = (0..g).map(|i| (0..g).map(|j| if i == j { q(1) } else { q(0) }).collect()).collect();
    let neg: Vec<Q> = (0..g).map(|j| -v.iter().fold(Q::zero(), |s, r| s + &r[j])).collect();
    v.insert(0, neg);
    loop {
        let bad: Vec<(usize, usize)> = (0..=g)
            .tuple_combinations()
            .filter(|&(i, j)| bil(&a, &v[i], &v[j]).is_positive())
            .collect();
        if bad.is_empty() {
            break;
        }
        let (i, j) = bad[choose(bad.len()) % bad.len()];
        let vi = v[i].clone();
        let others: Vec<usize> = (0..=g).filter(|&k| k != i && k != j).collect();
        let mult = if g == 2 { q(2) } else { q(1) };
        for k in others {
            v[k] = v[k].iter().zip(&vi).map(|(x, y)| x + &mult * y).collect();
        }
        v[i] = vi.iter().map(|x| -x).collect();
    }
    // dual basis to v_1..v_g; u_0 = 0
    let vm: Mat = exact::transpose(&v[1..].to_vec());
    let u = exact::inverse(&vm).expect("superbase is a basis");
    let zero = vec![Q::zero(); g];
    let ui = |k: usize| if k == 0 { zero.clone() } else { u[k - 1].clone() };
    let mut out = Vec::new();
    let mut check = QuadForm::zero(g);
    for (i, j) in (0..=g).tuple_combinations() {
        let p = -bil(&a, &v[i], &v[j]);
        if p.is_zero() {
            continue;
        }
        let l: Vec<i64> = ui(i)
            .iter()
            .zip(ui(j))
            .map(|(x, y)| (x - y).to_integer().try_into().unwrap())
            .collect();
        let r = square(&LinearForm::new(l))?;
        check = check.add(&r.scale(&p))?;
        out.push((p, r));
    }
    assert_eq!(&check, f, "obtuse superbase decomposition must reproduce the form");
    Ok(out)
}

pub fn selling_decomposition(f: &QuadForm) -> Result<Vec<(Q, QuadForm)>, EngineError> {
    selling_decomposition_with(f, |_| 0)
}

pub fn support_eval(psi: &SupportFunction, f: &QuadForm) -> Result<Q, EngineError> {
    if f.dim() != psi.dim {
        return Err(EngineError::DimMismatch(psi.dim, f.dim()));
    }
    let parts = selling_decomposition(f)?;
    Ok(parts.iter().fold(Q::zero(), |s, (c, r)| s + c * psi.ray_value(r)))
}

/// Restriction of a form to the sublattice spanned by the columns of `b`.
fn restrict(f: &QuadForm, b: &Mat) -> QuadForm {
    let g = exact::matmul(&exact::matmul(&exact::transpose(b), &f.gram()), b);
    QuadForm::from_gram(&g).unwrap()
}

/// Basis (as columns) of the kernel of a nonzero linear form; coordinate
/// forms keep the remaining coordinates in order.
fn kernel_columns(l: &[i64]) -> Mat {
    let g = l.len();
    let nz: Vec<usize> = (0..g).filter(|&i| l[i] != 0).collect();
    let cols: Vec<Vec<Q>> = if nz.len() == 1 {
        (0..g)
            .filter(|&j| j != nz[0])
            .map(|j| (0..g).map(|i| if i == j { q(1) } else { q(0) }).collect())
            .collect()
    } else {
        let row = vec![l.iter().map(|&x| q(x)).collect::<Vec<_>>()];
        exact::integer_kernel(&row, g).iter().map(|v| int_to_q(v)).collect()
    };
    exact::transpose(&cols)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaDelta {
    pub k_size: usize,
    #[serde(serialize_with = "ser_q")]
    pub gamma: Q,
    #[serde(serialize_with = "ser_q")]
    pub delta: Q,
}

pub use crate::exact::ser_q;

/// gamma and delta for an ordered pair of generators (0-based) of a face
/// spanned by squares of linear forms on the rank-4 lattice.
pub fn gamma_delta(face: &[QuadForm], xi: (usize, usize)) -> Result<GammaDelta, EngineError> {
    let (a, b) = xi;
    if a >= face.len() || b >= face.len() || a == b {
        return Err(EngineError::BadIndex);
    }
    let roots: Vec<LinearForm> = face.iter().map(|f| root(f).ok_or(EngineError::NotRank1)).collect::<Result<_, _>>()?;
    let span: Mat = roots.iter().map(|l| l.coeffs().iter().map(|&c| q(c)).collect()).collect();
    let sr = exact::rank(&span);
    if sr != 3 {
        return Err(EngineError::Inadmissible(sr));
    }
    let b1 = kernel_columns(roots[a].coeffs());
    let mut k_rays: Vec<QuadForm> = Vec::new();
    for (i, f) in face.iter().enumerate() {
        if i == a {
            continue;
        }
        let p = restrict(f, &b1);
        if !p.is_zero() && !k_rays.contains(&p.primitive()) {
            k_rays.push(p.primitive());
        }
    }
    let ebar = restrict(&e_form(), &b1);
    let gamma = support_eval(&SupportFunction::vanishing_on(3, &k_rays), &ebar)?;
    let l2: Vec<i64> = (0..3)
        .map(|j| {
            roots[b].coeffs().iter().enumerate().fold(Q::zero(), |s, (i, &c)| s + q(c) * &b1[i][j]).to_integer().try_into().unwrap()
        })
        .collect();
    if l2.iter().all(|&x| x == 0) {
        return Err(EngineError::Ambiguous(0));
    }
    let b2 = kernel_columns(&l2);
    let mut m: Vec<QuadForm> = Vec::new();
    for k in &k_rays {
        let p = restrict(k, &b2);
        if !p.is_zero() && !m.contains(&p.primitive()) {
            m.push(p.primitive());
        }
    }
    if m.len() != 1 {
        return Err(EngineError::Ambiguous(m.len()));
    }
    let ebarbar = restrict(&ebar, &b2);
    let delta = support_eval(&SupportFunction::vanishing_on(2, &m), &ebarbar)?;
    Ok(GammaDelta { k_size: k_rays.len(), gamma, delta })
}
