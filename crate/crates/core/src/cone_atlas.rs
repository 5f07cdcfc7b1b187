//! Named cones and groups, finite group enumeration and orbit classification
//! of faces of the second perfect cone.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone_engine::{facets, member, project_and_check, root};
use crate::exact::{self, Mat};
use crate::lattice_forms::{
    act, e_across_form, e_form, e_prime_form, k_y, psi, s_y, sq, w_y, y_to_x, FormError,
    LatticeMap, QuadForm,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AtlasError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("zero generator")]
    ZeroGenerator,
    #[error("group closure exceeded {0} elements")]
    CapExceeded(usize),
    #[error("generator is not unimodular")]
    NotUnimodular,
    #[error("group element does not permute the generators")]
    NotSymmetry,
    #[error("{0} is not a generator of the cone")]
    NotGenerator(String),
    #[error("face is not of the required type: {0}")]
    WrongFaceType(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cone {
    dim: usize,
    gens: Vec<QuadForm>,
    name: Option<String>,
}

impl Cone {
    /// Generators are scaled to primitive integral forms; duplicates are dropped.
    pub fn new(dim: usize, gens: Vec<QuadForm>) -> Result<Self, AtlasError> {
        let mut out: Vec<QuadForm> = Vec::new();
        for g in gens {
            if g.dim() != dim {
                return Err(FormError::DimMismatch(dim, g.dim()).into());
            }
            if g.is_zero() {
                return Err(AtlasError::ZeroGenerator);
            }
            let p = g.primitive();
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Ok(Cone { dim, gens: out, name: None })
    }

    /// A cone in the same coordinate space built from raw vectors.
    pub fn from_vectors(dim: usize, rows: Mat) -> Self {
        let gens = rows
            .into_iter()
            .filter(|r| !exact::is_zero_vec(r))
            .map(|r| QuadForm::new(dim, r).unwrap())
            .collect();
        Self::new(dim, gens).unwrap()
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gens(&self) -> &[QuadForm] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn rows(&self) -> Mat {
        self.gens.iter().map(|g| g.coords().to_vec()).collect()
    }

    /// Dimension of the linear span.
    pub fn span_dim(&self) -> usize {
        exact::rank(&self.rows())
    }

    pub fn sub(&self, idx: &[usize]) -> Cone {
        Cone { dim: self.dim, gens: idx.iter().map(|&i| self.gens[i].clone()).collect(), name: None }
    }

    pub fn with(&self, g: &QuadForm) -> Cone {
        let mut gens = self.gens.clone();
        gens.push(g.clone());
        Cone::new(self.dim, gens).unwrap()
    }

    pub fn index_of(&self, g: &QuadForm) -> Option<usize> {
        let p = g.primitive();
        self.gens.iter().position(|x| *x == p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Colour {
    Black,
    Red,
}

/// The coordinate attached to a generator of the second perfect cone:
/// black for (y_i + y_j)^2, red for (y_i - y_j)^2. Vertices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub colour: Colour,
}

impl Edge {
    pub fn label(&self) -> String {
        let c = match self.colour {
            Colour::Black => "b",
            Colour::Red => "r",
        };
        format!("{c}{}{}", self.i, self.j)
    }

    pub fn parse(s: &str) -> Option<Edge> {
        let b = s.as_bytes();
        if b.len() != 3 {
            return None;
        }
        let colour = match b[0] {
            b'b' => Colour::Black,
            b'r' => Colour::Red,
            _ => return None,
        };
        let i = (b[1] as char).to_digit(10)? as usize;
        let j = (b[2] as char).to_digit(10)? as usize;
        (1 <= i && i < j && j <= 4).then_some(Edge { i, j, colour })
    }

    fn shared(&self, o: &Edge) -> usize {
        [self.i, self.j].iter().filter(|v| **v == o.i || **v == o.j).count()
    }
}

fn edge_of(g: &QuadForm) -> Edge {
    let t = act(&psi(), g).unwrap();
    let l = root(&t).expect("generator maps to a square");
    let nz: Vec<usize> = (0..4).filter(|&k| l.coeffs()[k] != 0).collect();
    assert_eq!(nz.len(), 2);
    let same = l.coeffs()[nz[0]] == l.coeffs()[nz[1]];
    Edge { i: nz[0] + 1, j: nz[1] + 1, colour: if same { Colour::Black } else { Colour::Red } }
}

#[derive(Clone, Debug)]
pub struct Atlas {
    pub e: QuadForm,
    pub e_prime: QuadForm,
    pub e_across: QuadForm,
    pub pi2_4: Cone,
    /// Edge label of each generator of pi2_4, in generator order.
    pub edges: Vec<Edge>,
    pub sigma0: Cone,
    pub sigma1: Cone,
    pub pi2_1: Cone,
    pub pi2_2: Cone,
    pub pi2_3: Cone,
}

pub fn pi1(g: usize) -> Cone {
    let mut gens = Vec::new();
    for i in 0..g {
        let mut c = vec![0; g];
        c[i] = 1;
        gens.push(sq(&c));
    }
    for i in 0..g {
        for j in i + 1..g {
            let mut c = vec![0; g];
            c[i] = 1;
            c[j] = -1;
            gens.push(sq(&c));
        }
    }
    Cone::new(g, gens).unwrap().named(&format!("Pi1({g})"))
}

fn pi2_4() -> Cone {
    let gens = [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [1, 0, -1, 0],
        [1, 0, 0, -1],
        [0, 1, -1, 0],
        [0, 1, 0, -1],
        [0, 0, 1, -1],
        [1, 1, -1, 0],
        [1, 1, 0, -1],
        [1, 1, -1, -1],
    ];
    Cone::new(4, gens.iter().map(|c| sq(c)).collect()).unwrap().named("Pi2(4)")
}

impl Atlas {
    pub fn pi1(&self, g: usize) -> Cone {
        pi1(g)
    }

    pub fn edge_index(&self, label: &str) -> Option<usize> {
        let e = Edge::parse(label)?;
        self.edges.iter().position(|x| *x == e)
    }

    /// The face of pi2_4 on which the listed coordinates vanish.
    pub fn zero_set(&self, labels: &[&str]) -> Vec<usize> {
        let drop: Vec<usize> = labels.iter().map(|l| self.edge_index(l).expect("valid label")).collect();
        (0..self.pi2_4.len()).filter(|i| !drop.contains(i)).collect()
    }

    pub fn index_of(&self, g: &QuadForm) -> Option<usize> {
        self.pi2_4.index_of(g)
    }

    pub fn face_of(&self, gens: &[QuadForm]) -> Option<Vec<usize>> {
        let mut v: Vec<usize> = gens.iter().map(|g| self.index_of(g)).collect::<Option<_>>()?;
        v.sort_unstable();
        Some(v)
    }
}

pub fn atlas() -> Atlas {
    let p = pi2_4();
    let edges: Vec<Edge> = p.gens().iter().map(edge_of).collect();
    let mut a = Atlas {
        e: e_form(),
        e_prime: e_prime_form(),
        e_across: e_across_form(),
        sigma0: p.clone(),
        sigma1: p.clone(),
        pi2_1: p.clone(),
        pi2_2: p.clone(),
        pi2_3: p.clone(),
        pi2_4: p,
        edges,
    };
    let e = a.e.clone();
    a.sigma0 = a.pi2_4.sub(&a.zero_set(&["b13", "b14", "r34"])).named("sigma0");
    a.sigma1 = a.pi2_4.sub(&a.zero_set(&["b13", "b14", "b34"])).named("sigma1");
    a.pi2_1 = a.pi2_4.sub(&a.zero_set(&["b14", "b34", "r13"])).with(&e).named("Pi2^1(4)");
    a.pi2_2 = a.pi2_4.sub(&a.zero_set(&["b13", "b14", "b34"])).with(&e).named("Pi2^2(4)");
    a.pi2_3 = a.pi2_4.sub(&a.zero_set(&["b14", "b34", "r24"])).with(&e).named("Pi2^3(4)");
    a
}

/// The generators k_i, s_ij and w in y coordinates, labelled.
pub fn y_generators() -> Vec<(String, Mat)> {
    let mut v: Vec<(String, Mat)> = (1..=4).map(|i| (format!("k{i}"), k_y(i))).collect();
    for i in 1..=4 {
        for j in i + 1..=4 {
            v.push((format!("s{i}{j}"), s_y(i, j)));
        }
    }
    v.push(("w".into(), w_y()));
    v
}

/// Generators of the stabiliser of x1^2: k3, k4, k1k2, s12, s34 and s14 s23 w.
pub fn g1_y_generators() -> Vec<(String, Mat)> {
    let mm = exact::matmul;
    vec![
        ("k3".into(), k_y(3)),
        ("k4".into(), k_y(4)),
        ("k1k2".into(), mm(&k_y(1), &k_y(2))),
        ("s12".into(), s_y(1, 2)),
        ("s34".into(), s_y(3, 4)),
        ("w'".into(), mm(&mm(&s_y(1, 4), &s_y(2, 3)), &w_y())),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixGroup {
    gens: Vec<LatticeMap>,
    elements: Vec<LatticeMap>,
}

impl MatrixGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[LatticeMap] {
        &self.elements
    }

    pub fn gens(&self) -> &[LatticeMap] {
        &self.gens
    }

    pub fn contains(&self, g: &LatticeMap) -> bool {
        self.elements.binary_search(g).is_ok()
    }
}

pub const DEFAULT_CAP: usize = 10_000;

pub fn generate_group(gens: &[LatticeMap], cap: usize) -> Result<MatrixGroup, AtlasError> {
    if gens.iter().any(|g| !g.is_unimodular()) {
        return Err(AtlasError::NotUnimodular);
    }
    let dim = gens.first().map_or(4, |g| g.dim());
    let id = LatticeMap::identity(dim);
    let mut seen: BTreeSet<LatticeMap> = BTreeSet::new();
    seen.insert(id.clone());
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = x.mul(g);
            if seen.insert(y.clone()) {
                if seen.len() > cap {
                    return Err(AtlasError::CapExceeded(cap));
                }
                queue.push_back(y);
            }
        }
    }
    Ok(MatrixGroup { gens: gens.to_vec(), elements: seen.into_iter().collect() })
}

/// How a lattice automorphism acting on linear forms moves quadratic forms:
/// l^2 goes to (g l)^2.
pub fn form_action(g: &LatticeMap, f: &QuadForm) -> QuadForm {
    act(&g.transpose(), f).unwrap()
}

fn x_maps(gens: &[(String, Mat)]) -> Vec<LatticeMap> {
    gens.iter().map(|(_, m)| y_to_x(m).expect("integral conjugate")).collect()
}

/// The symmetry group of the second perfect cone.
pub fn group_g() -> MatrixGroup {
    generate_group(&x_maps(&y_generators()), DEFAULT_CAP).unwrap()
}

/// The subgroup generated by the listed elements fixing the ray of x1^2.
pub fn group_g1() -> MatrixGroup {
    generate_group(&x_maps(&g1_y_generators()), DEFAULT_CAP).unwrap()
}

/// Orbit size of a ray and its stabiliser.
pub fn orbit_and_stabilizer(grp: &MatrixGroup, ray: &QuadForm) -> (usize, MatrixGroup) {
    let r = ray.primitive();
    let mut orbit = BTreeSet::new();
    let mut stab = Vec::new();
    for g in grp.elements() {
        let img = form_action(g, &r).primitive();
        if img == r {
            stab.push(g.clone());
        }
        orbit.insert(img);
    }
    (orbit.len(), MatrixGroup { gens: stab.clone(), elements: stab })
}

/// The permutation of cone generators induced by a group element.
pub fn permutation(g: &LatticeMap, cone: &Cone) -> Result<Vec<usize>, AtlasError> {
    cone.gens()
        .iter()
        .map(|x| cone.index_of(&form_action(g, x)).ok_or(AtlasError::NotSymmetry))
        .collect()
}

pub type Mask = u32;

pub fn mask(idx: &[usize]) -> Mask {
    idx.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn unmask(m: Mask) -> Vec<usize> {
    (0..32).filter(|i| m & (1 << i) != 0).collect()
}

fn apply_perm(p: &[usize], m: Mask) -> Mask {
    unmask(m).iter().fold(0, |acc, &i| acc | (1 << p[i]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaceLabel {
    pub parent: String,
    pub indices: Vec<usize>,
    pub orbit: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaceOrbit {
    pub representative: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

/// Partition of faces into orbits; representatives are lexicographically minimal.
pub fn face_orbits(grp: &MatrixGroup, parent: &Cone, faces: &[Vec<usize>]) -> Result<Vec<FaceOrbit>, AtlasError> {
    let perms: Vec<Vec<usize>> = grp.elements().iter().map(|g| permutation(g, parent)).collect::<Result<_, _>>()?;
    let mut remaining: BTreeSet<Vec<usize>> = faces.iter().map(|f| sorted(f)).collect();
    let mut out = Vec::new();
    while let Some(first) = remaining.iter().next().cloned() {
        let m = mask(&first);
        let members: BTreeSet<Vec<usize>> = perms.iter().map(|p| unmask(apply_perm(p, m))).collect();
        for x in &members {
            remaining.remove(x);
        }
        let members: Vec<Vec<usize>> = members.into_iter().collect();
        out.push(FaceOrbit { representative: members[0].clone(), members });
    }
    Ok(out)
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// All faces of the cone, as sorted generator index sets, keyed by span dimension.
pub fn face_lattice(cone: &Cone) -> BTreeMap<usize, Vec<Vec<usize>>> {
    let fs: Vec<Mask> = facets(cone).iter().map(|f| mask(&f.on)).collect();
    let full: Mask = mask(&(0..cone.len()).collect::<Vec<_>>());
    let mut all: BTreeSet<Mask> = BTreeSet::new();
    all.insert(full);
    let mut frontier: Vec<Mask> = vec![full];
    while let Some(m) = frontier.pop() {
        for &f in &fs {
            let x = m & f;
            if all.insert(x) {
                frontier.push(x);
            }
        }
    }
    let mut out: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    for m in all {
        let idx = unmask(m);
        let d = cone.sub(&idx).span_dim();
        out.entry(d).or_default().push(idx);
    }
    for v in out.values_mut() {
        v.sort();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphMode {
    /// Edges mark coordinates that vanish on the face.
    Vanishing,
    /// Edges mark generators of the face.
    Nonvanishing,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BicolouredGraph {
    pub edges: Vec<Edge>,
}

impl BicolouredGraph {
    pub fn labels(&self) -> Vec<String> {
        self.edges.iter().map(|e| e.label()).collect()
    }

    pub fn is_simple(&self) -> bool {
        let pairs: BTreeSet<(usize, usize)> = self.edges.iter().map(|e| (e.i, e.j)).collect();
        pairs.len() == self.edges.len()
    }
}

pub fn face_graph(at: &Atlas, face: &[usize], mode: GraphMode) -> BicolouredGraph {
    let set: BTreeSet<usize> = face.iter().copied().collect();
    let mut edges: Vec<Edge> = (0..at.edges.len())
        .filter(|i| set.contains(i) == (mode == GraphMode::Nonvanishing))
        .map(|i| at.edges[i])
        .collect();
    edges.sort();
    BicolouredGraph { edges }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dim3Type {
    String,
    BFstar,
    RTstar,
    Disconnected,
}

/// Shape of the three generator edges: pairs of edges on the same or on
/// disjoint vertex pairs count as separated, pairs meeting in one vertex as linked.
/// Triangles follow the facet parity rule, so an even number of red sides is BF*.
pub fn classify_dim3(at: &Atlas, face: &[usize]) -> Result<Dim3Type, AtlasError> {
    if face.len() != 3 {
        return Err(AtlasError::WrongFaceType(format!("{} generators", face.len())));
    }
    let e: Vec<Edge> = face.iter().map(|&i| at.edges[i]).collect();
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let separated = pairs.iter().filter(|&&(a, b)| e[a].shared(&e[b]) != 1).count();
    Ok(match separated {
        0 => {
            let common = [e[0].i, e[0].j].into_iter().any(|v| e.iter().all(|x| x.i == v || x.j == v));
            let reds = e.iter().filter(|x| x.colour == Colour::Red).count();
            if common || reds % 2 == 0 {
                Dim3Type::BFstar
            } else {
                Dim3Type::RTstar
            }
        }
        1 => Dim3Type::String,
        _ => Dim3Type::Disconnected,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Adjoining {
    pub facets: Vec<Vec<usize>>,
    pub rt: usize,
    pub bf: usize,
}

/// RT facets: triangles with an odd number of red vanishing coordinates.
pub fn is_rt(at: &Atlas, facet: &[usize]) -> bool {
    let g = face_graph(at, facet, GraphMode::Vanishing);
    let mut deg = [0usize; 5];
    for e in &g.edges {
        deg[e.i] += 1;
        deg[e.j] += 1;
    }
    let triangle = deg.iter().all(|&d| d == 0 || d == 2);
    let reds = g.edges.iter().filter(|e| e.colour == Colour::Red).count();
    triangle && reds % 2 == 1
}

pub fn facets_of(at: &Atlas) -> Vec<Vec<usize>> {
    facets(&at.pi2_4).into_iter().map(|f| f.on).collect()
}

pub fn facets_adjoining(at: &Atlas, ray: &QuadForm) -> Result<Adjoining, AtlasError> {
    let i = at.index_of(ray).ok_or_else(|| AtlasError::NotGenerator(ray.to_string()))?;
    let fs: Vec<Vec<usize>> = facets_of(at).into_iter().filter(|f| f.contains(&i)).collect();
    let rt = fs.iter().filter(|f| is_rt(at, f)).count();
    Ok(Adjoining { rt, bf: fs.len() - rt, facets: fs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum G1Class {
    Pi2_1,
    Pi2_2,
    Pi2_3,
}

/// Class of the cone spanned by a facet adjoining x1^2 and e.
///
/// BF facets split by whether the projection of the cone is itself spanned
/// by squares (so a cone of the Voronoi fan) or has the projection of e as an extra ray.
pub fn g1_class(at: &Atlas, facet: &[usize]) -> Result<G1Class, AtlasError> {
    if !facet.contains(&0) || facet.len() != 9 {
        return Err(AtlasError::WrongFaceType("facet must adjoin x1^2".into()));
    }
    if is_rt(at, facet) {
        return Ok(G1Class::Pi2_1);
    }
    let c = at.pi2_4.sub(facet).with(&at.e);
    let rep = project_and_check(&c, 1, &[]).map_err(|_| AtlasError::WrongFaceType("projection".into()))?;
    let squares: Vec<QuadForm> = rep.images.iter().filter(|p| root(p).is_some()).cloned().collect();
    let ebar = crate::lattice_forms::project(&at.e, 1)?;
    let sq_cone = Cone::new(3, squares)?;
    let inside = member(&sq_cone, &ebar).map(|m| m.is_inside()).unwrap_or(false);
    Ok(if inside { G1Class::Pi2_2 } else { G1Class::Pi2_3 })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OppositeSplit {
    pub opposite: Vec<(usize, usize)>,
    pub non_opposite: Vec<(usize, usize)>,
}

/// The face spanned by the squares of x1, x3, x4 and their differences.
pub fn mu6_reference(at: &Atlas) -> Vec<usize> {
    at.face_of(&[
        sq(&[1, 0, 0, 0]),
        sq(&[0, 0, 1, 0]),
        sq(&[0, 0, 0, 1]),
        sq(&[1, 0, -1, 0]),
        sq(&[1, 0, 0, -1]),
        sq(&[0, 0, 1, -1]),
    ])
    .unwrap()
}

/// Splits generator pairs of a six-generator face of rank-3 type: a pair is
/// non-opposite when a third generator is the square of the sum or difference.
pub fn opposite_pairs(at: &Atlas, grp: &MatrixGroup, face: &[usize]) -> Result<OppositeSplit, AtlasError> {
    let face = sorted(face);
    let orbits = face_orbits(grp, &at.pi2_4, &[mu6_reference(at)])?;
    if !orbits[0].members.contains(&face) {
        return Err(AtlasError::WrongFaceType("not equivalent to the mu=6 face".into()));
    }
    let roots: Vec<Vec<i64>> = face.iter().map(|&i| root(&at.pi2_4.gens()[i]).unwrap().coeffs().to_vec()).collect();
    let squares: BTreeSet<QuadForm> = face.iter().map(|&i| at.pi2_4.gens()[i].clone()).collect();
    let mut split = OppositeSplit { opposite: vec![], non_opposite: vec![] };
    for a in 0..face.len() {
        for b in a + 1..face.len() {
            let sum: Vec<i64> = roots[a].iter().zip(&roots[b]).map(|(x, y)| x + y).collect();
            let diff: Vec<i64> = roots[a].iter().zip(&roots[b]).map(|(x, y)| x - y).collect();
            let linked = [sum, diff].iter().any(|c| c.iter().any(|&x| x != 0) && squares.contains(&sq(c)));
            let pair = (face[a], face[b]);
            if linked {
                split.non_opposite.push(pair);
            } else {
                split.opposite.push(pair);
            }
        }
    }
    Ok(split)
}

/// Rows of the shipped atlas data file, in the coordinate wire format.
pub const ATLAS_DATA: &str = include_str!("../data/atlas.json");

#[derive(Debug, Deserialize)]
pub struct AtlasData {
    pub version: u32,
    pub forms: BTreeMap<String, QuadForm>,
    pub cones: BTreeMap<String, Vec<QuadForm>>,
}

pub fn load_atlas_data() -> AtlasData {
    serde_json::from_str(ATLAS_DATA).expect("atlas data parses")
}
