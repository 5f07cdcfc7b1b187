//! Divisor classes aL - bD - cE on the Igusa and Voronoi compactifications,
//! nef and ample tests, and a ledger of formal divisor identities that are
//! checked by exhaustive substitution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cone_engine::{gamma_delta, support_eval, SupportFunction};
use crate::exact::{fmt_q, q, qf, ser_q, Q};
use crate::lattice_forms::{e_form, project, psd_rank, sq, QuadForm};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NefError {
    #[error("level must be a positive integer")]
    BadLevel,
    #[error("basis {basis} takes {want} coefficients, got {got}")]
    Arity { basis: Basis, want: usize, got: usize },
    #[error("no conversion from {0} to {1}")]
    Conversion(Basis, Basis),
    #[error("{0} is outside the span of L, D and E")]
    NotInSpan(String),
    #[error("ampleness is only decided in the Igusa basis")]
    NotIgusa,
    #[error("inconsistent case data: {0}")]
    CaseData(String),
    #[error("no bound: the coefficient of b is {0}")]
    NoBound(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Basis {
    /// (L, D^Igu)
    Igu,
    /// (L, D4, E)
    VorD4,
    /// (L, D^Vor, E)
    Vor,
}

impl Basis {
    pub fn arity(self) -> usize {
        match self {
            Basis::Igu => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Igu => "igu",
            Basis::VorD4 => "vor-d4",
            Basis::Vor => "vor",
        })
    }
}

impl FromStr for Basis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "igu" | "igusa" => Ok(Basis::Igu),
            "vor-d4" | "d4" => Ok(Basis::VorD4),
            "vor" | "voronoi" => Ok(Basis::Vor),
            _ => Err(format!("unknown basis {s}")),
        }
    }
}

/// aL - bD - cE; in the Igu basis there is no E.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisorClass {
    pub basis: Basis,
    #[serde(serialize_with = "crate::exact::ser_qs")]
    pub coeffs: Vec<Q>,
    pub level: u64,
}

impl DivisorClass {
    pub fn new(basis: Basis, coeffs: Vec<Q>, level: u64) -> Result<Self, NefError> {
        if level == 0 {
            return Err(NefError::BadLevel);
        }
        if coeffs.len() != basis.arity() {
            return Err(NefError::Arity { basis, want: basis.arity(), got: coeffs.len() });
        }
        Ok(DivisorClass { basis, coeffs, level })
    }

    pub fn ints(basis: Basis, c: &[i64], level: u64) -> Result<Self, NefError> {
        Self::new(basis, c.iter().map(|&x| q(x)).collect(), level)
    }

    /// Build from named terms, e.g. [("L", 5), ("D4", -1), ("E", 3)].
    /// Anything other than L, the total boundary and E is refused.
    pub fn from_terms(terms: &[(&str, Q)], level: u64) -> Result<Self, NefError> {
        let mut basis = None;
        let (mut a, mut b, mut c) = (Q::zero(), Q::zero(), Q::zero());
        let set = |want: Basis, basis: &mut Option<Basis>| -> Result<(), NefError> {
            match *basis {
                Some(have) if have != want => Err(NefError::Conversion(have, want)),
                _ => {
                    *basis = Some(want);
                    Ok(())
                }
            }
        };
        let mut has_e = false;
        for (name, x) in terms {
            match *name {
                "L" => a += x,
                "D4" => {
                    set(Basis::VorD4, &mut basis)?;
                    b -= x;
                }
                "DVor" => {
                    set(Basis::Vor, &mut basis)?;
                    b -= x;
                }
                "DIgu" => {
                    set(Basis::Igu, &mut basis)?;
                    b -= x;
                }
                "E" => {
                    has_e = true;
                    c -= x;
                }
                other => return Err(NefError::NotInSpan(other.to_string())),
            }
        }
        match basis.unwrap_or(Basis::VorD4) {
            Basis::Igu if has_e => Err(NefError::NotInSpan("E on the Igusa side".into())),
            Basis::Igu => Self::new(Basis::Igu, vec![a, b], level),
            other => Self::new(other, vec![a, b, c], level),
        }
    }

    pub fn scale(&self, t: &Q) -> Self {
        DivisorClass { coeffs: self.coeffs.iter().map(|x| x * t).collect(), ..self.clone() }
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.basis {
            Basis::Igu => "DIgu",
            Basis::VorD4 => "D4",
            Basis::Vor => "DVor",
        };
        write!(f, "{}L - {}{}", fmt_q(&self.coeffs[0]), fmt_q(&self.coeffs[1]), d)?;
        if let Some(c) = self.coeffs.get(2) {
            write!(f, " - {}E", fmt_q(c))?;
        }
        write!(f, " (level {})", self.level)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub name: String,
    /// Value of the left side of `name >= 0`.
    #[serde(serialize_with = "ser_q")]
    pub slack: Q,
    pub holds: bool,
    pub tight: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NefReport {
    pub class: String,
    pub nef: bool,
    pub constraints: Vec<Constraint>,
    /// Constraints that hold with equality.
    pub active: Vec<String>,
    pub violated: Vec<String>,
    #[serde(serialize_with = "ser_q")]
    pub epsilon: Q,
    /// a >= (12 + epsilon) b / n, the open condition used with Weissauer forms.
    pub slack_with_epsilon: bool,
}

pub fn default_epsilon() -> Q {
    qf(1, 100)
}

fn constraint(name: &str, slack: Q) -> Constraint {
    Constraint { name: name.into(), holds: !slack.is_negative(), tight: slack.is_zero(), slack }
}

fn constraints(d: &DivisorClass) -> Vec<Constraint> {
    let n = q(d.level as i64);
    let (a, b) = (&d.coeffs[0], &d.coeffs[1]);
    let l_vs_d = a - q(12) * b / &n;
    match d.basis {
        Basis::Igu => vec![constraint("b", b.clone()), constraint("a - 12b/n", l_vs_d)],
        Basis::VorD4 => {
            let c = &d.coeffs[2];
            vec![constraint("a - 12b/n", l_vs_d), constraint("b - 2c", b - q(2) * c), constraint("c", c.clone())]
        }
        Basis::Vor => {
            let g = &d.coeffs[2];
            vec![
                constraint("beta", b.clone()),
                constraint("alpha - 12beta/n", l_vs_d),
                constraint("gamma - 4beta", g - q(4) * b),
                constraint("4beta - 8gamma/9", q(4) * b - qf(8, 9) * g),
            ]
        }
    }
}

pub fn nef_report(d: &DivisorClass, epsilon: &Q) -> NefReport {
    let cs = constraints(d);
    let n = q(d.level as i64);
    let pick = |f: fn(&Constraint) -> bool| cs.iter().filter(|c| f(c)).map(|c| c.name.clone()).collect::<Vec<_>>();
    NefReport {
        class: d.to_string(),
        nef: cs.iter().all(|c| c.holds),
        active: pick(|c| c.tight),
        violated: pick(|c| !c.holds),
        epsilon: epsilon.clone(),
        slack_with_epsilon: d.coeffs[0] >= (q(12) + epsilon) * &d.coeffs[1] / n,
        constraints: cs,
    }
}

pub fn is_nef(d: &DivisorClass) -> bool {
    constraints(d).iter().all(|c| c.holds)
}

/// Strict form of the Igusa region: a > 12b/n > 0.
pub fn is_ample_interior(d: &DivisorClass) -> Result<bool, NefError> {
    if d.basis != Basis::Igu {
        return Err(NefError::NotIgusa);
    }
    let n = q(d.level as i64);
    let t = q(12) * &d.coeffs[1] / n;
    Ok(d.coeffs[0] > t && t.is_positive())
}

/// aL - bD4 - cE = aL - bDVor - (4b + c)E. The Igusa class pulls back to c = 0;
/// the way back needs c = 0.
pub fn convert_basis(d: &DivisorClass, target: Basis) -> Result<DivisorClass, NefError> {
    use Basis::*;
    let v = &d.coeffs;
    let coeffs = match (d.basis, target) {
        (x, y) if x == y => v.clone(),
        (VorD4, Vor) => vec![v[0].clone(), v[1].clone(), q(4) * &v[1] + &v[2]],
        (Vor, VorD4) => vec![v[0].clone(), v[1].clone(), &v[2] - q(4) * &v[1]],
        (Igu, VorD4) => vec![v[0].clone(), v[1].clone(), Q::zero()],
        (Igu, Vor) => vec![v[0].clone(), v[1].clone(), q(4) * &v[1]],
        (VorD4, Igu) if v[2].is_zero() => vec![v[0].clone(), v[1].clone()],
        (Vor, Igu) if v[2] == q(4) * &v[1] => vec![v[0].clone(), v[1].clone()],
        (x, y) => return Err(NefError::Conversion(x, y)),
    };
    DivisorClass::new(target, coeffs, d.level)
}

/// 5L - D^Igu, and 5L - DVor - E = 5L - D4 + 3E on the Voronoi side, at every level.
pub fn canonical_class(basis: Basis, n: u64) -> Result<DivisorClass, NefError> {
    let c = match basis {
        Basis::Igu => vec![5, 1],
        Basis::VorD4 => vec![5, 1, -3],
        Basis::Vor => vec![5, 1, 1],
    };
    DivisorClass::ints(basis, &c, n)
}

// ---- coefficients: Laurent polynomials in a, b, c, n ----

/// Exponents of a, b, c, n.
type Mono = [i32; 4];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coef(BTreeMap<Mono, Q>);

impl Coef {
    pub fn zero() -> Self {
        Coef::default()
    }

    fn mono(m: Mono, x: Q) -> Self {
        let mut c = Coef::zero();
        if !x.is_zero() {
            c.0.insert(m, x);
        }
        c
    }

    pub fn constant(x: Q) -> Self {
        Self::mono([0; 4], x)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// The value when the coefficient does not involve a, b, c or n.
    pub fn as_constant(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => self.0.get(&[0; 4]).cloned(),
            _ => None,
        }
    }

    pub fn eval(&self, a: &Q, b: &Q, c: &Q, n: &Q) -> Q {
        let pw = |x: &Q, e: i32| if e >= 0 { x.pow(e) } else { x.recip().pow(-e) };
        self.0.iter().fold(Q::zero(), |s, (m, k)| s + k * pw(a, m[0]) * pw(b, m[1]) * pw(c, m[2]) * pw(n, m[3]))
    }
}

pub fn ca() -> Coef {
    Coef::mono([1, 0, 0, 0], Q::one())
}
pub fn cb() -> Coef {
    Coef::mono([0, 1, 0, 0], Q::one())
}
pub fn cc() -> Coef {
    Coef::mono([0, 0, 1, 0], Q::one())
}
pub fn cn() -> Coef {
    Coef::mono([0, 0, 0, 1], Q::one())
}
/// 1/n
pub fn cninv() -> Coef {
    Coef::mono([0, 0, 0, -1], Q::one())
}
pub fn k(x: i64) -> Coef {
    Coef::constant(q(x))
}
pub fn kq(x: Q) -> Coef {
    Coef::constant(x)
}

impl Add for Coef {
    type Output = Coef;
    fn add(mut self, o: Coef) -> Coef {
        for (m, x) in o.0 {
            let e = self.0.entry(m).or_insert_with(Q::zero);
            *e += x;
            if e.is_zero() {
                self.0.remove(&m);
            }
        }
        self
    }
}

impl Neg for Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        Coef(self.0.into_iter().map(|(m, x)| (m, -x)).collect())
    }
}

impl Sub for Coef {
    type Output = Coef;
    fn sub(self, o: Coef) -> Coef {
        self + (-o)
    }
}

impl Mul for Coef {
    type Output = Coef;
    fn mul(self, o: Coef) -> Coef {
        let mut out = Coef::zero();
        for (m1, x1) in &self.0 {
            for (m2, x2) in &o.0 {
                let m = [m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2], m1[3] + m2[3]];
                out = out + Coef::mono(m, x1 * x2);
            }
        }
        out
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, x) in self.0.iter().rev() {
            let neg = x.is_negative();
            let ax = x.abs();
            let sign = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            let mut num: Vec<String> = Vec::new();
            let mut den: Vec<String> = Vec::new();
            for (name, &e) in ["a", "b", "c", "n"].iter().zip(m) {
                let s = if e.abs() == 1 { name.to_string() } else { format!("{name}^{}", e.abs()) };
                match e.signum() {
                    1 => num.push(s),
                    -1 => den.push(s),
                    _ => {}
                }
            }
            let mut t = if num.is_empty() || !ax.is_one() { fmt_q(&ax) } else { String::new() };
            if !num.is_empty() {
                if !t.is_empty() {
                    t.push('*');
                }
                t.push_str(&num.join("*"));
            }
            for d in den {
                t.push('/');
                t.push_str(&d);
            }
            write!(f, "{sign}{t}")?;
        }
        Ok(())
    }
}

// ---- formal divisors ----

/// A linear combination of named divisor symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormalDivisor(BTreeMap<String, Coef>);

impl FormalDivisor {
    pub fn zero() -> Self {
        FormalDivisor::default()
    }

    pub fn sym(name: &str) -> Self {
        Self::term(name, k(1))
    }

    pub fn term(name: &str, c: Coef) -> Self {
        let mut d = FormalDivisor::zero();
        d.push(name, c);
        d
    }

    pub fn push(&mut self, name: &str, c: Coef) {
        let e = self.0.remove(name).unwrap_or_default() + c;
        if !e.is_zero() {
            self.0.insert(name.to_string(), e);
        }
    }

    pub fn plus(mut self, other: &FormalDivisor) -> Self {
        for (s, c) in &other.0 {
            self.push(s, c.clone());
        }
        self
    }

    pub fn minus(self, other: &FormalDivisor) -> Self {
        self.plus(&other.scaled(&k(-1)))
    }

    pub fn scaled(&self, c: &Coef) -> Self {
        let mut d = FormalDivisor::zero();
        for (s, x) in &self.0 {
            d.push(s, x.clone() * c.clone());
        }
        d
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coef(&self, name: &str) -> Coef {
        self.0.get(name).cloned().unwrap_or_default()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }
}

impl fmt::Display for FormalDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.0.iter().map(|(s, c)| format!("({c}) {s}")).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Builds a formal divisor from (symbol, coefficient) pairs.
pub fn fd<S: AsRef<str>>(terms: impl IntoIterator<Item = (S, Coef)>) -> FormalDivisor {
    let mut d = FormalDivisor::zero();
    for (s, c) in terms {
        d.push(s.as_ref(), c);
    }
    d
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("unknown identity {0}")]
    Unknown(String),
    #[error("substitution cycle through {0}")]
    Cycle(String),
    #[error("{0}")]
    Setup(String),
}

/// left = right, given substitution rules symbol -> formal divisor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub description: String,
    pub left: FormalDivisor,
    pub right: FormalDivisor,
    pub rules: BTreeMap<String, FormalDivisor>,
}

impl Relation {
    fn new(name: &str, description: &str) -> Self {
        Relation {
            name: name.into(),
            description: description.into(),
            left: FormalDivisor::zero(),
            right: FormalDivisor::zero(),
            rules: BTreeMap::new(),
        }
    }

    fn rule(&mut self, sym: &str, rhs: FormalDivisor) {
        self.rules.insert(sym.to_string(), rhs);
    }

    /// Declared vocabulary: every symbol in either side or any rule.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut v: BTreeSet<String> = self.left.symbols().chain(self.right.symbols()).cloned().collect();
        for (s, r) in &self.rules {
            v.insert(s.clone());
            v.extend(r.symbols().cloned());
        }
        v
    }
}

fn expand(
    sym: &str,
    rules: &BTreeMap<String, FormalDivisor>,
    memo: &mut BTreeMap<String, FormalDivisor>,
    stack: &mut BTreeSet<String>,
) -> Result<FormalDivisor, LedgerError> {
    if let Some(m) = memo.get(sym) {
        return Ok(m.clone());
    }
    let Some(rhs) = rules.get(sym) else {
        return Ok(FormalDivisor::sym(sym));
    };
    if !stack.insert(sym.to_string()) {
        return Err(LedgerError::Cycle(sym.to_string()));
    }
    let mut out = FormalDivisor::zero();
    for (s, c) in &rhs.0 {
        out = out.plus(&expand(s, rules, memo, stack)?.scaled(c));
    }
    stack.remove(sym);
    memo.insert(sym.to_string(), out.clone());
    Ok(out)
}

/// Rewrites until no symbol with a rule remains.
pub fn normalize(d: &FormalDivisor, rules: &BTreeMap<String, FormalDivisor>) -> Result<FormalDivisor, LedgerError> {
    let mut memo = BTreeMap::new();
    let mut out = FormalDivisor::zero();
    for (s, c) in &d.0 {
        out = out.plus(&expand(s, rules, &mut memo, &mut BTreeSet::new())?.scaled(c));
    }
    Ok(out)
}

/// Normal form of left - right.
pub fn residual(rel: &Relation) -> Result<FormalDivisor, LedgerError> {
    normalize(&rel.left.clone().minus(&rel.right), &rel.rules)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseResidual {
    pub case: String,
    pub rules: usize,
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub identity: String,
    pub cases: Vec<CaseResidual>,
    /// "0" when every case vanishes, otherwise the first nonzero residual.
    pub residual: String,
}

impl AuditReport {
    pub fn is_zero(&self) -> bool {
        self.residual == "0"
    }
}

pub fn audit_relations(identity: &str, rels: &[Relation]) -> Result<AuditReport, LedgerError> {
    let mut cases = Vec::new();
    let mut first = None;
    for r in rels {
        let res = residual(r)?;
        if first.is_none() && !res.is_zero() {
            first = Some(res.to_string());
        }
        cases.push(CaseResidual { case: r.name.clone(), rules: r.rules.len(), residual: res.to_string() });
    }
    Ok(AuditReport { identity: identity.into(), cases, residual: first.unwrap_or_else(|| "0".into()) })
}

pub const IDENTITIES: [&str; 7] = ["M'", "pullbackD3", "restrDij", "S3", "Smu", "HwithoutSxi", "nonsection"];

fn canonical_name(name: &str) -> Option<&'static str> {
    Some(match name {
        "M'" | "Mprime" | "M′" => "M'",
        "pullbackD3" => "pullbackD3",
        "restrDij" => "restrDij",
        "S3" | "S3symmetrisation" => "S3",
        "Smu" | "Smusymmetrisation" => "Smu",
        "HwithoutSxi" => "HwithoutSxi",
        "nonsection" => "nonsection",
        _ => return None,
    })
}

/// The relation sets behind an identity (one per case).
pub fn identity_relations(name: &str) -> Result<Vec<Relation>, LedgerError> {
    let canon = canonical_name(name).ok_or_else(|| LedgerError::Unknown(name.to_string()))?;
    Ok(match canon {
        "M'" => vec![m_prime(false)],
        "pullbackD3" => vec![pullback_d3(false)?],
        "restrDij" => vec![restr_dij(false)],
        "S3" => vec![s3(false)],
        "Smu" => (3..=6).map(|mu| s_mu(mu, false)).collect(),
        "HwithoutSxi" => h_without_s_cases()?.into_iter().map(|(label, ks)| h_without_s(&label, &ks, false)).collect(),
        "nonsection" => vec![nonsection(false)],
        _ => unreachable!(),
    })
}

pub fn audit_identity(name: &str) -> Result<AuditReport, LedgerError> {
    let canon = canonical_name(name).ok_or_else(|| LedgerError::Unknown(name.to_string()))?;
    audit_relations(canon, &identity_relations(canon)?)
}

/// Deliberately perturbed copies, one per identity; each must leave a residual.
pub fn mutated_controls() -> Result<Vec<Relation>, LedgerError> {
    let (label, ks) = h_without_s_cases()?.remove(0);
    Ok(vec![
        m_prime(true),
        pullback_d3(true)?,
        restr_dij(true),
        s3(true),
        s_mu(5, true),
        h_without_s(&label, &ks, true),
        nonsection(true),
    ])
}

fn m_prime(mutate: bool) -> Relation {
    let mut r = Relation::new("M'", "restriction of aL - bD' to a boundary component of the partial compactification");
    r.rule("D'_i|i", FormalDivisor::sym("N'"));
    // M' = -nN' + L
    r.rule("N'", fd([("L", cninv()), ("M'", -cninv())]));
    r.left = fd([("L", ca()), ("D'_i|i", -cb())]);
    let l = if mutate { ca() - cb() } else { ca() - cb() * cninv() };
    r.right = fd([("L", l), ("M'", cb() * cninv())]);
    r
}

/// Pullback of the boundary of the genus-3 Voronoi compactification to the
/// boundary component of x1^2, from the support function on projected rays.
fn pullback_d3(mutate: bool) -> Result<Relation, LedgerError> {
    let at = crate::cone_atlas::atlas();
    let psi3 = SupportFunction::voronoi(3);
    let val = |f: &QuadForm| -> Result<Q, LedgerError> {
        let p = project(f, 1).map_err(|e| LedgerError::Setup(e.to_string()))?;
        if p.is_zero() {
            return Ok(Q::zero());
        }
        // psi is 1 on every primitive square, inside the principal cone or not
        if psd_rank(&p) == (true, 1) {
            return Ok(p.content());
        }
        support_eval(&psi3, &p).map_err(|e| LedgerError::Setup(e.to_string()))
    };
    let mut r = Relation::new("pullbackD3", "pullback of D3 along the fibration of the x1^2 component");
    let mut rhs = FormalDivisor::zero();
    let mut claimed = FormalDivisor::zero();
    for (g, edge) in at.pi2_4.gens().iter().zip(&at.edges) {
        if *g == sq(&[1, 0, 0, 0]) {
            continue;
        }
        let name = format!("D_{}|1", edge.label());
        rhs.push(&name, kq(val(g)?));
        claimed.push(&name, k(1));
    }
    rhs.push("E|1", kq(val(&e_form())?));
    claimed.push("E|1", k(if mutate { 3 } else { 4 }));
    r.rule("p_1^*D3", rhs);
    r.left = FormalDivisor::sym("p_1^*D3");
    r.right = claimed;
    Ok(r)
}

fn restr_dij(mutate: bool) -> Relation {
    let mut r = Relation::new("restrDij", "restriction of H to the intersection of two boundary components");
    r.rule("D4|ij", fd([("D_i|ij", k(1)), ("D_j|ij", k(1)), ("Dother|ij", k(1)), ("E|ij", k(4))]));
    for (x, y) in [("i", "j"), ("j", "i")] {
        // pullback of D3, restricted: p_x|y^* D3 = D_y + sum over the others + 4E
        r.rule(&format!("D_{y}|ij"), fd([(format!("p_{x}|{y}^*D3"), k(1)), ("Dother|ij".into(), k(-1)), ("E|ij".into(), k(-4))]));
        // D3 = D3k + q_k^* D2
        r.rule(
            &format!("p_{x}|{y}^*D3"),
            fd([(format!("p_{x}|{y}^*D3k"), k(1)), (format!("r_{x}{y}^*D2"), k(1))]),
        );
        // -D3k|k = (1/n) M3k - (1/n) L
        r.rule(&format!("p_{x}|{y}^*D3k"), fd([(format!("p_{x}|{y}^*M3"), -cninv()), ("L".into(), cninv())]));
    }
    r.left = fd([("L", ca()), ("D4|ij", -cb()), ("E|ij", -cc())]);
    let e = if mutate { k(3) * cb() - cc() } else { k(4) * cb() - cc() };
    r.right = fd([
        ("L", ca() - k(2) * cb() * cninv()),
        ("p_i|j^*M3", cb() * cninv()),
        ("p_j|i^*M3", cb() * cninv()),
        ("r_ij^*D2", -cb()),
        ("r_ji^*D2", -cb()),
        ("Dother|ij", cb()),
        ("E|ij", e),
    ]);
    r
}

fn perms(mu: usize) -> Vec<Vec<usize>> {
    (1..=mu).permutations(mu).collect()
}

fn xi_name(xi: &[usize]) -> String {
    xi.iter().map(|d| d.to_string()).collect()
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// D4|I = sum of D_i|I + Dout|I + 4E|I.
fn d4_on_i(mu: usize) -> FormalDivisor {
    let mut d = fd([("Dout|I", k(1)), ("E|I", k(4))]);
    for i in 1..=mu {
        d.push(&format!("D_{i}|I"), k(1));
    }
    d
}

/// The single-component formula restricted to D_I: sum over I minus {xi1, xi2}
/// of D_l, plus Dout and 4E.
fn others(xi: &[usize]) -> FormalDivisor {
    let mut d = fd([("Dout|I", k(1)), ("E|I", k(4))]);
    for &l in &xi[2..] {
        d.push(&format!("D_{l}|I"), k(1));
    }
    d
}

fn s3(mutate: bool) -> Relation {
    let mut r = Relation::new("S3", "symmetrisation of -D4 over the six orderings of three components");
    r.rule("D4|I", d4_on_i(3));
    let mut sum_m = FormalDivisor::zero();
    let mut sum_d = FormalDivisor::zero();
    for xi in perms(3) {
        let x = xi_name(&xi);
        // -D_{xi2} = (1/n) M - (1/n) L - Dxi + others
        let mut rhs = others(&xi).scaled(&-cn());
        rhs.push(&format!("D_{}|I", xi[1]), -cn());
        rhs.push(&format!("Dxi[{x}]"), cn());
        rhs.push("L", k(1));
        r.rule(&format!("M[{x}]"), rhs);
        sum_m.push(&format!("M[{x}]"), k(1));
        sum_d.push(&format!("Dxi[{x}]"), k(1));
    }
    r.left = FormalDivisor::term("D4|I", k(-4));
    r.right = sum_m
        .scaled(&cninv())
        .plus(&fd([("L", k(-6) * cninv()), ("Dout|I", k(2)), ("E|I", k(if mutate { 7 } else { 8 }))]))
        .minus(&sum_d);
    r
}

/// b/((mu-1) mu!) and b/((mu-1)(mu-1)!)
fn betas(mu: usize) -> (Coef, Coef) {
    let m = mu as i64;
    (kq(qf(1, (m - 1) * factorial(mu))) * cb(), kq(qf(1, (m - 1) * factorial(mu - 1))) * cb())
}

/// b/(mu-1) Dout + (4b/(mu-1) - c) E
fn tail(mu: usize) -> FormalDivisor {
    let m = mu as i64 - 1;
    fd([("Dout|I", kq(qf(1, m)) * cb()), ("E|I", kq(qf(4, m)) * cb() - cc())])
}

/// The right side of the general symmetrisation, in the symbols A1, Dxi and S.
fn smu_form(mu: usize, s_weight: Coef) -> FormalDivisor {
    let (b1, _) = betas(mu);
    let mut d = FormalDivisor::sym("A1").plus(&tail(mu));
    for xi in perms(mu) {
        let x = xi_name(&xi);
        d.push(&format!("Dxi[{x}]"), -b1.clone());
        d.push(&format!("S[{x}]"), -s_weight.clone());
    }
    d
}

fn s_mu(mu: usize, mutate: bool) -> Relation {
    let mut r = Relation::new(&format!("Smu (mu = {mu})"), "symmetrisation over all orderings of mu components");
    r.rule("D4|I", d4_on_i(mu));
    let mut a1 = FormalDivisor::term("L", ca());
    for xi in perms(mu) {
        let x = xi_name(&xi);
        // -D_{xi2} = -S - Dxi + others
        let mut rhs = others(&xi);
        rhs.push(&format!("D_{}|I", xi[1]), k(1));
        rhs.push(&format!("Dxi[{x}]"), k(-1));
        r.rule(&format!("S[{x}]"), rhs);
        // A1 is the sum of pullbacks of (a/mu!) L - (b/mu!) D2
        a1.push(&format!("Dxi[{x}]"), kq(qf(-1, factorial(mu))) * cb());
    }
    r.rule("A1", a1);
    r.left = fd([("L", ca()), ("D4|I", -cb()), ("E|I", -cc())]);
    let (_, b2) = betas(mu);
    let w = if mutate { kq(qf(1, (mu as i64 - 1) * factorial(mu))) * cb() } else { b2 };
    r.right = smu_form(mu, w);
    r
}

/// Representative faces for mu = 3..6 with #K for each first index (1-based),
/// computed from the cones.
pub fn h_without_s_cases() -> Result<Vec<(String, Vec<usize>)>, LedgerError> {
    let faces: Vec<(&str, Vec<[i64; 4]>)> = vec![
        ("mu = 3", vec![[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]]),
        ("mu = 4, three dependent", vec![[1, 0, 0, 0], [0, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 0]]),
        ("mu = 4, in general position", vec![[1, 0, 0, 0], [1, -1, 0, 0], [0, 0, 1, 0], [0, 1, -1, 0]]),
        ("mu = 5", vec![[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [1, -1, 0, 0], [1, 0, -1, 0]]),
        (
            "mu = 6",
            vec![[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [1, -1, 0, 0], [1, 0, -1, 0], [0, 1, -1, 0]],
        ),
    ];
    faces
        .into_iter()
        .map(|(label, roots)| {
            let face: Vec<QuadForm> = roots.iter().map(|r| sq(r)).collect();
            let ks = (0..face.len())
                .map(|a| {
                    let b = if a == 0 { 1 } else { 0 };
                    gamma_delta(&face, (a, b)).map(|g| g.k_size).map_err(|e| LedgerError::Setup(e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((label.to_string(), ks))
        })
        .collect()
}

/// Elimination of the S terms. `ks[i]` is #K for first index i + 1.
fn h_without_s(label: &str, ks: &[usize], mutate: bool) -> Relation {
    let mu = ks.len();
    let mut r = Relation::new(&format!("HwithoutSxi ({label})"), "elimination of the S terms through the #K relations");
    let (b1, b2) = betas(mu);
    let mut right = FormalDivisor::sym("A2").plus(&tail(mu));
    let mut a2 = FormalDivisor::sym("A1");
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for xi in perms(mu) {
        let x = xi_name(&xi);
        let kk = ks[xi[0] - 1];
        let s = |p: &str| format!("{p}[{x}]");
        r.rule(&s("S"), FormalDivisor::sym(&s("pD3k")));
        r.rule(&s("Dxi"), fd([(s("Q"), k(1)), (s("Rhat"), k(1))]));
        if kk == 2 {
            r.rule(&s("pD3k"), fd([(s("pD3k'"), k(1)), (s("Qp"), k(1)), (s("Q"), k(-1))]));
            r.rule(&s("pD3k'"), fd([(s("P"), k(-1)), (s("Dxi"), k(1))]));
        } else {
            let h = kq(qf(1, 2));
            r.rule(
                &s("pD3k"),
                fd([(s("pD3k'"), h.clone()), (s("pD3k''"), h.clone()), (s("Qp"), h.clone()), (s("Qpp"), h), (s("Q"), k(-1))]),
            );
            r.rule(&s("pD3k'"), fd([(s("P"), k(-1)), (s("Dxi"), k(1)), (s("pD3k''"), k(-1))]));
        }
        let denom = if mutate { kk as i64 } else { kk as i64 - 1 };
        let b2k = b2.clone() * kq(qf(1, denom));
        right.push(&s("Rhat"), -b1.clone() - b2k.clone());
        right.push(&s("P"), b2k.clone());
        a2.push(&s("Q"), -b1.clone() - b2.clone() * kq(qf(1, kk as i64 - 1)));
        groups.entry(xi[0]).or_default().push(x);
    }
    // summing over orderings with a fixed first index, the Q' - Q terms cancel
    for (a, xs) in groups {
        let kk = ks[a - 1];
        let x0 = &xs[0];
        let mut rhs = FormalDivisor::zero();
        for x in &xs[1..] {
            rhs.push(&format!("Qp[{x}]"), k(-1));
            rhs.push(&format!("Q[{x}]"), k(1));
            if kk == 3 {
                rhs.push(&format!("Qpp[{x}]"), k(-1));
                rhs.push(&format!("Q[{x}]"), k(1));
            }
        }
        if kk == 3 {
            rhs.push(&format!("Qpp[{x0}]"), k(-1));
            rhs.push(&format!("Q[{x0}]"), k(2));
        } else {
            rhs.push(&format!("Q[{x0}]"), k(1));
        }
        r.rule(&format!("Qp[{x0}]"), rhs);
    }
    r.rule("A2", a2);
    r.left = smu_form(mu, b2);
    r.right = right;
    r
}

fn nonsection(mutate: bool) -> Relation {
    let mut r = Relation::new("nonsection", "normal bundle of a boundary component of the genus-2 compactification");
    r.rule("D2m|m", FormalDivisor::term("N2", k(-1)));
    r.rule("N2", fd([("s^*L_X", k(2) * cninv()), ("sum L_ij", k(2) * cninv())]));
    // 12 L = n X_inf on the modular curve of level n
    r.rule("s^*L_X", FormalDivisor::term("s^*X_inf", kq(qf(1, 12)) * cn()));
    r.left = FormalDivisor::term("D2m|m", k(-1));
    let w = if mutate { qf(1, 12) } else { qf(1, 6) };
    r.right = fd([("sum L_ij", k(2) * cninv()), ("s^*X_inf", kq(w))]);
    r
}

/// Coefficient of the cusp fibres in the normal bundle: 1/6, read off the
/// normalised nonsection relation.
pub fn fibre_weight() -> Q {
    let r = nonsection(false);
    let n2 = normalize(&FormalDivisor::sym("N2"), &r.rules).expect("acyclic");
    n2.coef("s^*X_inf").as_constant().expect("level independent")
}

// ---- depth-three bounds ----

/// Data for a set of orderings xi sharing #K, gamma and delta.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XiCase {
    pub k_size: usize,
    #[serde(serialize_with = "ser_q")]
    pub gamma: Q,
    #[serde(serialize_with = "ser_q")]
    pub delta: Q,
    pub count: u64,
    /// The image of the curve cannot be a section, so the cusp fibre adds
    /// delta/6 times the D2m coefficient.
    pub fibre: bool,
}

impl XiCase {
    pub fn new(k_size: usize, gamma: i64, delta: i64, count: u64) -> Self {
        XiCase { k_size, gamma: q(gamma), delta: q(delta), count, fibre: false }
    }

    pub fn with_fibre(mut self) -> Self {
        self.fibre = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepthBound {
    pub mu: usize,
    /// The bound reads coef_b * b - c >= 0.
    #[serde(serialize_with = "ser_q")]
    pub coef_b: Q,
    /// b >= threshold * c suffices.
    #[serde(serialize_with = "ser_q")]
    pub threshold: Q,
    pub form: String,
    /// threshold <= 2, so b >= 2c implies the bound.
    pub dominated: bool,
}

pub fn depth_bound(mu: usize, cases: &[XiCase]) -> Result<DepthBound, NefError> {
    if !(3..=6).contains(&mu) {
        return Err(NefError::CaseData(format!("mu = {mu} is not in 3..6")));
    }
    let total: u64 = cases.iter().map(|c| c.count).sum();
    if total != factorial(mu) as u64 {
        return Err(NefError::CaseData(format!("{total} orderings, expected {}", factorial(mu))));
    }
    let (b1, b2) = (qf(1, (mu as i64 - 1) * factorial(mu)), qf(1, (mu as i64 - 1) * factorial(mu - 1)));
    let w = fibre_weight();
    let mut coef = qf(4, mu as i64 - 1);
    for c in cases {
        if !(2..=3).contains(&c.k_size) || (mu == 3 && c.k_size != 2) || (mu == 6 && c.k_size != 3) {
            return Err(NefError::CaseData(format!("#K = {} with mu = {mu}", c.k_size)));
        }
        if c.gamma < c.delta || c.delta.is_negative() {
            return Err(NefError::CaseData(format!("gamma {} below delta {}", fmt_q(&c.gamma), fmt_q(&c.delta))));
        }
        let b2k = &b2 / q(c.k_size as i64 - 1);
        let mut per = -(&b1 * &c.delta) - &b2k * &c.delta + &b2k * &c.gamma;
        if c.fibre {
            per += (&b1 + &b2k) * &c.delta * &w;
        }
        coef += per * q(c.count as i64);
    }
    if !coef.is_positive() {
        return Err(NefError::NoBound(fmt_q(&coef)));
    }
    let threshold = coef.recip();
    let form = match (coef.is_one(), coef.is_integer()) {
        (true, _) => "b - c".to_string(),
        (false, true) => format!("{}b - c", coef),
        (false, false) => format!("({})b - c", coef),
    };
    Ok(DepthBound { mu, dominated: threshold <= q(2), coef_b: coef, threshold, form })
}

/// Case data read off a face: gamma and delta for every ordered pair of
/// generators, each standing for (mu-2)! orderings. With `delta_only` gamma is
/// replaced by delta, which is what gamma >= delta licenses.
pub fn cases_from_face(face: &[QuadForm], delta_only: bool) -> Result<Vec<XiCase>, NefError> {
    let mu = face.len();
    let count = factorial(mu.saturating_sub(2)) as u64;
    let mut out = Vec::new();
    for a in 0..mu {
        for b in 0..mu {
            if a == b {
                continue;
            }
            let g = gamma_delta(face, (a, b)).map_err(|e| NefError::CaseData(e.to_string()))?;
            let gamma = if delta_only { g.delta.clone() } else { g.gamma };
            out.push(XiCase { k_size: g.k_size, gamma, delta: g.delta, count, fibre: false });
        }
    }
    Ok(out)
}

/// The named depth-three cases and the bound each one yields.
pub fn depth_three_table() -> Result<Vec<(String, DepthBound)>, NefError> {
    let mut v = vec![
        ("mu = 3, string".to_string(), depth_bound(3, &[XiCase::new(2, 3, 2, 4), XiCase::new(2, 2, 2, 2)])?),
        ("mu = 3, BF*".to_string(), depth_bound(3, &[XiCase::new(2, 2, 2, 6)])?),
        ("mu = 3, disconnected".to_string(), depth_bound(3, &[XiCase::new(2, 4, 4, 6).with_fibre()])?),
    ];
    for mu in [4, 5] {
        // gamma >= delta = 2; the #K split does not matter once gamma = delta
        v.push((format!("mu = {mu}"), depth_bound(mu, &[XiCase::new(3, 2, 2, factorial(mu) as u64)])?));
    }
    // 12 of the 15 unordered pairs are non-opposite
    let s = factorial(6) as u64;
    let non_opposite = s * 4 / 5;
    v.push((
        "mu = 6".to_string(),
        depth_bound(6, &[XiCase::new(3, 2, 2, non_opposite).with_fibre(), XiCase::new(3, 2, 2, s - non_opposite)])?,
    ));
    Ok(v)
}
