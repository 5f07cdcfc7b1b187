//! Wall relations between adjacent maximal cones and the intersection numbers
//! of invariant divisors with the rational curve of the common facet.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cone_atlas::{atlas, Cone};
use crate::exact::{self, fmt_q, q, qi, Mat, Q};
use crate::lattice_forms::{half_trace_prime, ncoords, pairs, psd_rank, sq, DualVector, QuadForm};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WallError {
    #[error("facet has {got} independent generators, a wall needs {want}")]
    FacetDim { want: usize, got: usize },
    #[error("relation space has dimension {0}, not 1")]
    NotAWall(usize),
    #[error("both rays lie on the same side of the facet")]
    SameSide,
    #[error("maximal cone through {0} is not basic")]
    NotBasic(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WallRelation {
    pub facet: Vec<QuadForm>,
    pub u: QuadForm,
    pub u_prime: QuadForm,
    pub alpha: BigInt,
    pub alpha_prime: BigInt,
    pub a: Vec<BigInt>,
}

impl WallRelation {
    /// alpha u + alpha' u' + sum a_i v_i, which is zero for a valid relation.
    pub fn residual(&self) -> QuadForm {
        let mut acc = self.u.scale(&qi(&self.alpha)).add(&self.u_prime.scale(&qi(&self.alpha_prime))).unwrap();
        for (v, a) in self.facet.iter().zip(&self.a) {
            acc = acc.add(&v.scale(&qi(a))).unwrap();
        }
        acc
    }

    pub fn a_sum(&self) -> BigInt {
        self.a.iter().sum()
    }

    /// Value of a linear functional summed along the relation.
    pub fn pair(&self, m: &DualVector) -> Q {
        let mut s = qi(&self.alpha) * m.pair(&self.u) + qi(&self.alpha_prime) * m.pair(&self.u_prime);
        for (v, a) in self.facet.iter().zip(&self.a) {
            s += qi(a) * m.pair(v);
        }
        s
    }
}

fn basic(gens: &[&QuadForm]) -> bool {
    let m: Mat = gens.iter().map(|g| g.coords().to_vec()).collect();
    exact::det(&m).abs().is_one()
}

pub fn wall_relation(facet: &Cone, u: &QuadForm, u_prime: &QuadForm) -> Result<WallRelation, WallError> {
    let n = ncoords(facet.dim());
    let want = n - 1;
    if facet.len() != want || facet.span_dim() != want {
        return Err(WallError::FacetDim { want, got: facet.span_dim() });
    }
    let mut cols: Vec<&QuadForm> = vec![u, u_prime];
    cols.extend(facet.gens());
    let m: Mat = (0..n).map(|r| cols.iter().map(|c| c.coords()[r].clone()).collect()).collect();
    let ker = exact::nullspace(&m, cols.len());
    if ker.len() != 1 {
        return Err(WallError::NotAWall(ker.len()));
    }
    let mut rel = exact::primitive_int(&ker[0]);
    if rel[0].is_negative() {
        rel.iter_mut().for_each(|x| *x = -x.clone());
    }
    if rel[0].is_zero() || !rel[1].is_positive() {
        return Err(WallError::SameSide);
    }
    let mut side = facet.gens().iter().collect::<Vec<_>>();
    side.push(u);
    if !basic(&side) {
        return Err(WallError::NotBasic(u.to_string()));
    }
    side.pop();
    side.push(u_prime);
    if !basic(&side) {
        return Err(WallError::NotBasic(u_prime.to_string()));
    }
    let w = WallRelation {
        facet: facet.gens().to_vec(),
        u: u.clone(),
        u_prime: u_prime.clone(),
        alpha: rel[0].clone(),
        alpha_prime: rel[1].clone(),
        a: rel[2..].to_vec(),
    };
    debug_assert!(w.residual().is_zero());
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RayKind {
    /// Square of a primitive linear form.
    Boundary,
    /// Translate of e: even, positive definite, determinant 4.
    Central,
    Other,
}

pub fn ray_kind(f: &QuadForm) -> RayKind {
    let (psd, rank) = psd_rank(f);
    if psd && rank == 1 && f.is_integral() {
        return RayKind::Boundary;
    }
    if psd && rank == 4 && f.is_integral() {
        let even = (0..4).all(|i| f.coord(i, i).to_integer() % 2 == BigInt::zero());
        if even && exact::det(&f.gram()) == q(4) {
            return RayKind::Central;
        }
    }
    RayKind::Other
}

/// Multiplicities of a torus-invariant divisor along rays: explicit values
/// first, otherwise a value per ray kind.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisorAssignment {
    pub name: String,
    #[serde(serialize_with = "ser_map")]
    pub explicit: BTreeMap<QuadForm, Q>,
    #[serde(serialize_with = "crate::exact::ser_q")]
    pub boundary: Q,
    #[serde(serialize_with = "crate::exact::ser_q")]
    pub central: Q,
}

fn ser_map<S: serde::Serializer>(m: &BTreeMap<QuadForm, Q>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&k.to_poly_string(), &fmt_q(v))?;
    }
    map.end()
}

impl DivisorAssignment {
    fn by_kind(name: &str, boundary: i64, central: i64) -> Self {
        DivisorAssignment { name: name.into(), explicit: BTreeMap::new(), boundary: q(boundary), central: q(central) }
    }

    /// The pullback of the Igusa boundary: 1 on squares, 4 on translates of e.
    pub fn d4() -> Self {
        Self::by_kind("D4", 1, 4)
    }

    pub fn d_vor() -> Self {
        Self::by_kind("DVor", 1, 0)
    }

    pub fn e() -> Self {
        Self::by_kind("E", 0, 1)
    }

    pub fn explicit(name: &str, values: BTreeMap<QuadForm, Q>) -> Self {
        DivisorAssignment { name: name.into(), explicit: values, boundary: Q::zero(), central: Q::zero() }
    }

    pub fn value(&self, ray: &QuadForm) -> Q {
        let r = ray.primitive();
        if let Some(v) = self.explicit.get(&r) {
            return v.clone();
        }
        match ray_kind(&r) {
            RayKind::Boundary => self.boundary.clone(),
            RayKind::Central => self.central.clone(),
            RayKind::Other => Q::zero(),
        }
    }

    pub fn combine(&self, s: &Q, other: &Self, t: &Q) -> Self {
        let mut explicit = BTreeMap::new();
        for k in self.explicit.keys().chain(other.explicit.keys()) {
            explicit.insert(k.clone(), s * self.value(k) + t * other.value(k));
        }
        DivisorAssignment {
            name: format!("{}*{} + {}*{}", fmt_q(s), self.name, fmt_q(t), other.name),
            explicit,
            boundary: s * &self.boundary + t * &other.boundary,
            central: s * &self.central + t * &other.central,
        }
    }
}

/// D.C for the curve of the wall; both maximal cones are basic, so u and u'
/// meet the curve once and v_i contributes a_i.
pub fn curve_intersections(rel: &WallRelation, d: &DivisorAssignment) -> Q {
    let mut s = qi(&rel.alpha) * d.value(&rel.u) + qi(&rel.alpha_prime) * d.value(&rel.u_prime);
    for (v, a) in rel.facet.iter().zip(&rel.a) {
        s += qi(a) * d.value(v);
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Which {
    Sigma0,
    Sigma1,
}

impl std::str::FromStr for Which {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sigma0" => Ok(Which::Sigma0),
            "sigma1" => Ok(Which::Sigma1),
            _ => Err(format!("unknown wall {s}")),
        }
    }
}

/// The walls through the RT facet sigma_0 (between e and its mirror image)
/// and the BF facet sigma_1 (between e and (x1-x2)^2).
pub fn named_wall(which: Which) -> WallRelation {
    let at = atlas();
    match which {
        Which::Sigma0 => wall_relation(&at.sigma0, &at.e, &at.e_across),
        Which::Sigma1 => wall_relation(&at.sigma1, &at.e, &sq(&[1, -1, 0, 0])),
    }
    .expect("named walls are basic walls")
}

/// (aL - bD4 - cE).C, with L.C = 0 on boundary curves.
pub fn depth4_pairing(_a: &Q, b: &Q, c: &Q, which: Which) -> Q {
    let w = named_wall(which);
    -(b * curve_intersections(&w, &DivisorAssignment::d4())) - c * curve_intersections(&w, &DivisorAssignment::e())
}

/// The functional half_trace_prime as a dual vector.
pub fn half_trace_prime_vector() -> DualVector {
    let coords = pairs(4)
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let mut c = vec![0; 10];
            c[k] = 1;
            half_trace_prime(&QuadForm::from_ints(4, &c).unwrap()).unwrap()
        })
        .collect();
    DualVector::new(4, coords).unwrap()
}

/// The divisor of the character m restricted to the given rays.
pub fn principal_relation(m: &DualVector, rays: &[QuadForm]) -> DivisorAssignment {
    let values = rays.iter().map(|r| (r.primitive(), m.pair(&r.primitive()))).collect();
    DivisorAssignment::explicit("div", values)
}

/// Rays of the two maximal cones at a wall.
pub fn star_rays(rel: &WallRelation) -> Vec<QuadForm> {
    let mut v = rel.facet.clone();
    v.push(rel.u.clone());
    v.push(rel.u_prime.clone());
    v
}
