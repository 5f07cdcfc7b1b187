//! Command-line front end. Every command builds a JSON value; commands that
//! reproduce known values also return the checks that failed.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_traits::Signed;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cone_atlas::{self, atlas, face_lattice, facets_adjoining, facets_of, group_g, group_g1, Cone};
use crate::cone_engine::{self, dual_description, monomial_exponents, project_and_check, support_eval, SupportFunction};
use crate::emin_lab::{self, min_over_shifts, min_shifted, quadrature};
use crate::exact::{fmt_q, parse_q, q, qf, Q};
use crate::lattice_forms::{e_form, parse_form, project, sq, DualVector, LinearForm, QuadForm};
use crate::nef_certify::{self as nef, Basis, DivisorClass};
use crate::wall_calculus::{curve_intersections, half_trace_prime_vector, named_wall, principal_relation, star_rays, DivisorAssignment, Which};

#[derive(Debug, Parser)]
#[command(name = "nefcone", version, about = "Exact cone, lattice and divisor computations for genus four")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for the randomised spot checks of report-all.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub pretty: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    /// Only `integrate` has a CSV form: the histogram of 8N^2 emin.
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group orders and face-orbit census of the second perfect cone.
    Orbits,
    /// Dual cone of a named cone or of a list of forms.
    Dual {
        /// x1-x2, x1-e, sigma0, sigma1, pi2-1, pi2-2, pi2-3
        #[arg(long, conflicts_with = "gens")]
        cone: Option<String>,
        /// Forms separated by ';', e.g. "x1^2; e"
        #[arg(long)]
        gens: Option<String>,
        /// Exponents of the U_ij in the dual basis (basic cones only).
        #[arg(long)]
        exponents: bool,
    },
    /// Projection of a named cone along the first coordinate, checked against Pi1(3).
    ProjectCheck {
        /// pi1-4, pi2-1, pi2-2, pi2-3
        #[arg(long)]
        cone: String,
    },
    /// Dicing check for integral linear forms.
    Dicing {
        /// Rows separated by ';', e.g. "1,0;0,1;1,-1"
        #[arg(long, conflicts_with = "principal")]
        forms: Option<String>,
        /// Use x_i and x_i - x_j in dimension g.
        #[arg(long)]
        principal: Option<usize>,
    },
    /// Wall relation and intersection numbers at sigma0 or sigma1.
    Walls {
        #[arg(long, value_parser = parse_which)]
        which: Which,
        /// D4, E or DVor; prints only the intersection number.
        #[arg(long)]
        divisor: Option<String>,
    },
    /// Midpoint quadrature of emin with an error certificate.
    Integrate {
        #[arg(long, default_value_t = 79)]
        n: usize,
        /// 0 uses all cores, 1 runs serially.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Nef and ampleness verdict for aL - bD - cE.
    Certify {
        #[arg(long, value_parser = parse_rational)]
        a: Q,
        #[arg(long, value_parser = parse_rational)]
        b: Q,
        #[arg(long, value_parser = parse_rational)]
        c: Option<Q>,
        #[arg(long, default_value_t = 1)]
        level: u64,
        #[arg(long, value_parser = parse_basis, default_value = "igu")]
        space: Basis,
        /// Include the full constraint report.
        #[arg(long)]
        details: bool,
    },
    /// Full constraint report for a divisor class.
    Nef {
        #[arg(long, value_parser = parse_basis)]
        basis: Basis,
        #[arg(long, value_parser = parse_rational)]
        a: Q,
        #[arg(long, value_parser = parse_rational)]
        b: Q,
        #[arg(long, value_parser = parse_rational)]
        c: Option<Q>,
        #[arg(long, default_value_t = 1)]
        level: u64,
        #[arg(long, value_parser = parse_rational)]
        epsilon: Option<Q>,
    },
    /// Residuals of the divisor-ledger identities.
    Audit {
        /// One identity; all of them when omitted.
        #[arg(long)]
        identity: Option<String>,
        /// Per-case residuals.
        #[arg(long)]
        details: bool,
        /// Print the relation sets instead of auditing.
        #[arg(long)]
        relations: bool,
        /// Also audit the mutated controls, which must not vanish.
        #[arg(long)]
        controls: bool,
    },
    /// Every check, with the quadrature at a small N by default.
    ReportAll {
        #[arg(long, default_value_t = 9)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

pub fn parse_rational(s: &str) -> Result<Q, String> {
    parse_q(s).ok_or_else(|| format!("not a rational number: {s}"))
}

fn parse_basis(s: &str) -> Result<Basis, String> {
    s.parse().map_err(|_| format!("unknown basis {s}; use igu, vor-d4 or vor"))
}

fn parse_which(s: &str) -> Result<Which, String> {
    s.parse()
}

#[derive(Debug, PartialEq, Eq)]
pub enum CliError {
    /// Bad input; exit code 2.
    Usage(String),
    /// An expected value did not reproduce; exit code 1.
    Failed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Failed(s) => f.write_str(s),
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub got: String,
    pub ok: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn eq<T: std::fmt::Debug + PartialEq>(&mut self, name: &str, expected: T, got: T) {
        self.0.push(Check { name: name.into(), ok: expected == got, expected: format!("{expected:?}"), got: format!("{got:?}") });
    }

    fn eq_q(&mut self, name: &str, expected: Q, got: Q) {
        self.0.push(Check { name: name.into(), ok: expected == got, expected: fmt_q(&expected), got: fmt_q(&got) });
    }

    fn eq_str(&mut self, name: &str, expected: &str, got: &str) {
        self.0.push(Check { name: name.into(), ok: expected == got, expected: expected.into(), got: got.into() });
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.0.push(Check { name: name.into(), expected: "true".into(), got: ok.to_string(), ok });
    }

    fn failures(&self) -> Vec<String> {
        self.0.iter().filter(|c| !c.ok).map(|c| format!("{}: expected {}, got {}", c.name, c.expected, c.got)).collect()
    }

    fn into_value(self) -> Value {
        serde_json::to_value(self.0).expect("checks serialise")
    }
}

/// Result of a command: the JSON document, an optional CSV body and the
/// names of failed checks.
pub struct Outcome {
    pub value: Value,
    pub csv: Option<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn plain(value: Value) -> Self {
        Outcome { value, csv: None, failures: Vec::new() }
    }

    fn checked(mut value: Value, checks: Checks) -> Self {
        let failures = checks.failures();
        value["checks"] = checks.into_value();
        Outcome { value, csv: None, failures }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Integrate { .. }) {
        return Err(CliError::Usage("csv output is only available for integrate".into()));
    }
    match &cli.command {
        Command::Orbits => Ok(orbits()),
        Command::Dual { cone, gens, exponents } => dual(cone.as_deref(), gens.as_deref(), *exponents),
        Command::ProjectCheck { cone } => project_cmd(cone),
        Command::Dicing { forms, principal } => dicing(forms.as_deref(), *principal),
        Command::Walls { which, divisor } => walls(*which, divisor.as_deref()),
        Command::Integrate { n, threads } => integrate(*n, *threads),
        Command::Certify { a, b, c, level, space, details } => certify(*space, a, b, c.as_ref(), *level, *details),
        Command::Nef { basis, a, b, c, level, epsilon } => {
            let d = class(*basis, a, b, c.as_ref(), *level)?;
            let eps = epsilon.clone().unwrap_or_else(nef::default_epsilon);
            Ok(Outcome::plain(serde_json::to_value(nef::nef_report(&d, &eps)).unwrap()))
        }
        Command::Audit { identity, details, relations, controls } => audit(identity.as_deref(), *details, *relations, *controls),
        Command::ReportAll { n, threads } => report_all(*n, *threads, cli.seed),
    }
}

fn orbits() -> Outcome {
    let mut ch = Checks::default();
    let at = atlas();
    let g = group_g();
    let g1 = group_g1();
    let (orbit, stab) = cone_atlas::orbit_and_stabilizer(&g, &sq(&[1, 0, 0, 0]));
    ch.eq("group_order", 1152, g.order());
    ch.eq("g1_order", 96, g1.order());
    ch.eq("orbit of x1^2", 12, orbit);

    let fs = facets_of(&at);
    let mut facet_sizes: Vec<usize> = cone_atlas::face_orbits(&g, &at.pi2_4, &fs).unwrap().iter().map(|o| o.members.len()).collect();
    facet_sizes.sort();
    ch.eq("facets", 64, fs.len());
    ch.eq("facet orbits", vec![16, 48], facet_sizes.clone());
    let adj = facets_adjoining(&at, &sq(&[1, 0, 0, 0])).unwrap();
    ch.eq("facets adjoining x1^2 (all, RT, BF)", (48, 12, 36), (adj.facets.len(), adj.rt, adj.bf));

    let lattice = face_lattice(&at.pi2_4);
    let two = cone_atlas::face_orbits(&g, &at.pi2_4, &lattice[&2]).unwrap();
    ch.eq("dim-2 orbits", 2, two.len());
    let three = cone_atlas::face_orbits(&g, &at.pi2_4, &lattice[&3]).unwrap();
    let mut kinds: Vec<(String, usize)> = three
        .iter()
        .map(|o| (format!("{:?}", cone_atlas::classify_dim3(&at, &o.representative).unwrap()), o.members.len()))
        .collect();
    kinds.sort();
    ch.eq("dim-3 orbits", 4, three.len());
    let g1_orbits = cone_atlas::face_orbits(&g1, &at.pi2_4, &adj.facets).unwrap();
    ch.eq("G1-orbits of adjoining facets", 3, g1_orbits.len());
    let split = cone_atlas::opposite_pairs(&at, &g, &cone_atlas::mu6_reference(&at)).unwrap();
    ch.eq("mu=6 pairs (opposite, non-opposite)", (3, 12), (split.opposite.len(), split.non_opposite.len()));

    let value = json!({
        "group_order": g.order(),
        "g1_order": g1.order(),
        "orbit_x1_squared": orbit,
        "stabilizer_order": stab.order(),
        "facets": fs.len(),
        "facet_orbit_sizes": facet_sizes,
        "adjoining": {"facets": adj.facets.len(), "rt": adj.rt, "bf": adj.bf},
        "dim2_orbits": two.len(),
        "dim3_orbits": kinds.iter().map(|(k, n)| json!({"type": k, "size": n})).collect::<Vec<_>>(),
        "g1_orbits": g1_orbits.iter().map(|o| json!({
            "class": format!("{:?}", cone_atlas::g1_class(&at, &o.representative).unwrap()),
            "size": o.members.len(),
        })).collect::<Vec<_>>(),
        "mu6_pairs": {"opposite": split.opposite.len(), "non_opposite": split.non_opposite.len()},
    });
    Outcome::checked(value, ch)
}

fn named_cone(name: &str) -> Result<Cone, CliError> {
    let at = atlas();
    Ok(match name {
        "x1-x2" => Cone::new(4, vec![sq(&[1, 0, 0, 0]), sq(&[0, 1, 0, 0])]).unwrap(),
        "x1-e" => Cone::new(4, vec![sq(&[1, 0, 0, 0]), e_form()]).unwrap(),
        "sigma0" => at.sigma0,
        "sigma1" => at.sigma1,
        "pi1-4" => cone_atlas::pi1(4),
        "pi2-1" => at.pi2_1,
        "pi2-2" => at.pi2_2,
        "pi2-3" => at.pi2_3,
        "pi2-4" => at.pi2_4,
        _ => return Err(CliError::Usage(format!("unknown cone {name}"))),
    })
}

fn parse_gens(s: &str) -> Result<Cone, CliError> {
    let forms: Vec<QuadForm> = s
        .split(';')
        .map(|t| match t.trim() {
            "e" => Ok(e_form()),
            t => parse_form(t, Some(4)).map_err(usage),
        })
        .collect::<Result<_, _>>()?;
    Cone::new(4, forms).map_err(usage)
}

fn labels(v: &[DualVector]) -> Vec<String> {
    v.iter().map(|d| d.to_label()).collect()
}

fn dual(cone: Option<&str>, gens: Option<&str>, exponents: bool) -> Result<Outcome, CliError> {
    let c = match (cone, gens) {
        (_, Some(g)) => parse_gens(g)?,
        (Some(n), None) => named_cone(n)?,
        (None, None) => return Err(CliError::Usage("give --cone or --gens".into())),
    };
    let dd = dual_description(&c);
    let mut value = json!({
        "generators": c.gens().iter().map(|g| g.to_poly_string()).collect::<Vec<_>>(),
        "rays": labels(&dd.rays),
        "lineality": labels(&dd.lineality),
        "basis": dd.basis.as_deref().map(labels),
    });
    if exponents {
        if dd.basis.is_none() {
            return Err(CliError::Usage("exponents need a basic cone".into()));
        }
        let mut rows = serde_json::Map::new();
        for i in 1..=4 {
            for j in i..=4 {
                let k = monomial_exponents(&dd, &DualVector::unit(4, i, j)).map_err(usage)?;
                rows.insert(format!("U{i}{j}"), json!(k.iter().map(|x| x.to_string()).collect::<Vec<_>>()));
            }
        }
        value["exponents"] = Value::Object(rows);
    }
    Ok(Outcome::plain(value))
}

fn project_cmd(name: &str) -> Result<Outcome, CliError> {
    let expected_equal = match name {
        "pi1-4" | "pi2-1" | "pi2-2" => true,
        "pi2-3" => false,
        _ => return Err(CliError::Usage(format!("unknown cone {name}; use pi1-4, pi2-1, pi2-2 or pi2-3"))),
    };
    let r = project_and_check(&named_cone(name)?, 1, &[cone_atlas::pi1(3)]).map_err(usage)?;
    let mut ch = Checks::default();
    ch.eq("image inside Pi1(3)", Some(0), r.contained_in);
    ch.eq("image equals Pi1(3)", expected_equal, r.equal);
    let value = json!({
        "cone": name,
        "images": r.images.iter().map(|g| g.to_poly_string()).collect::<Vec<_>>(),
        "contained": r.contained_in.is_some(),
        "equal": r.equal,
    });
    Ok(Outcome::checked(value, ch))
}

fn principal_forms(g: usize) -> Vec<LinearForm> {
    let mut forms = Vec::new();
    for i in 0..g {
        forms.push(LinearForm::coord(g, i));
        for j in i + 1..g {
            let mut c = vec![0; g];
            c[i] = 1;
            c[j] = -1;
            forms.push(LinearForm::new(c));
        }
    }
    forms
}

fn dicing(forms: Option<&str>, principal: Option<usize>) -> Result<Outcome, CliError> {
    let forms = match (forms, principal) {
        (Some(s), _) => {
            let rows: Vec<Vec<i64>> = s
                .split(';')
                .map(|r| r.split(',').map(|x| x.trim().parse::<i64>().map_err(usage)).collect())
                .collect::<Result<_, _>>()?;
            if rows.iter().any(|r| r.len() != rows[0].len()) {
                return Err(CliError::Usage("rows have different lengths".into()));
            }
            rows.into_iter().map(LinearForm::new).collect()
        }
        (None, Some(g)) if g >= 1 => principal_forms(g),
        _ => return Err(CliError::Usage("give --forms or --principal g".into())),
    };
    let r = cone_engine::is_dicing(&forms).map_err(usage)?;
    Ok(Outcome::plain(serde_json::to_value(r).unwrap()))
}

fn divisor(name: &str) -> Result<DivisorAssignment, CliError> {
    match name {
        "D4" => Ok(DivisorAssignment::d4()),
        "E" => Ok(DivisorAssignment::e()),
        "DVor" => Ok(DivisorAssignment::d_vor()),
        _ => Err(CliError::Usage(format!("unknown divisor {name}; use D4, E or DVor"))),
    }
}

fn walls(which: Which, div: Option<&str>) -> Result<Outcome, CliError> {
    let w = named_wall(which);
    if let Some(d) = div {
        let v = curve_intersections(&w, &divisor(d)?);
        return Ok(Outcome::plain(json!({"value": fmt_q(&v)})));
    }
    let d4 = curve_intersections(&w, &DivisorAssignment::d4());
    let e = curve_intersections(&w, &DivisorAssignment::e());
    let m = half_trace_prime_vector();
    let principal = principal_relation(&m, &star_rays(&w));
    let values: Vec<String> = star_rays(&w).iter().map(|r| fmt_q(&principal.value(r))).collect();
    let mut ch = Checks::default();
    let (want_d4, want_e) = match which {
        Which::Sigma0 => (q(-1), q(2)),
        Which::Sigma1 => (q(-1), q(1)),
    };
    ch.eq_q("D4.C", want_d4, d4.clone());
    ch.eq_q("E.C", want_e, e.clone());
    ch.eq_q("principal divisor degree", q(0), curve_intersections(&w, &principal));
    let value = json!({
        "which": format!("{which:?}").to_lowercase(),
        "relation": {
            "u": w.u.to_poly_string(),
            "u_prime": w.u_prime.to_poly_string(),
            "alpha": w.alpha.to_string(),
            "alpha_prime": w.alpha_prime.to_string(),
            "facet": w.facet.iter().map(|f| f.to_poly_string()).collect::<Vec<_>>(),
            "a": w.a.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        },
        "a_sum": w.a_sum().to_string(),
        "D4": fmt_q(&d4),
        "E": fmt_q(&e),
        "DVor": fmt_q(&curve_intersections(&w, &DivisorAssignment::d_vor())),
        "pairing": pairing_string(&-&d4, &-&e),
        "principal_values": values,
    });
    Ok(Outcome::checked(value, ch))
}

/// x b + y c, e.g. "b - 2c".
fn pairing_string(x: &Q, y: &Q) -> String {
    let term = |c: &Q, v: &str| if c.abs() == q(1) { v.to_string() } else { format!("{}{v}", fmt_q(&c.abs())) };
    let sign = if y < &q(0) { "-" } else { "+" };
    let first = if x < &q(0) { format!("-{}", term(x, "b")) } else { term(x, "b") };
    format!("{first} {sign} {}", term(y, "c"))
}

fn integrate(n: usize, threads: usize) -> Result<Outcome, CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let h = emin_lab::grid_histogram(n, threads).map_err(usage)?;
    let r = quadrature(n, threads).map_err(usage)?;
    let margin = &r.mean - emin_lab::target();
    let certified = &margin - &r.error_bound;
    let dist = &r.mean - emin_lab::conjectured_integral();
    let mut ch = Checks::default();
    if n == 79 {
        ch.eq_str("mean to 7 digits", "0.2166667", &r.mean_float);
        ch.holds("error bound below 0.025", r.error_bound < qf(1, 40));
        ch.holds("certified margin over 3/16 positive", certified > q(0));
    }
    let value = json!({
        "N": n,
        "mean_exact": fmt_q(&r.mean),
        "mean_float": r.mean_float,
        "error_bound_exact": fmt_q(&r.error_bound),
        "error_bound_float": r.error_bound_float,
        "margins": {
            "over_3_16": fmt_q(&margin),
            "certified_over_3_16": fmt_q(&certified),
            "certified": certified > q(0),
            "minus_13_60": fmt_q(&dist),
            "minus_13_60_float": format!("{:.3e}", crate::exact::to_f64(&dist)),
            "conjectural": true,
        },
    });
    let mut out = Outcome::checked(value, ch);
    let mut csv = String::from("scaled_value,emin,count\n");
    for (v, c) in &h {
        csv.push_str(&format!("{v},{},{c}\n", fmt_q(&qf(*v, 8 * (n * n) as i64))));
    }
    out.csv = Some(csv);
    Ok(out)
}

fn class(basis: Basis, a: &Q, b: &Q, c: Option<&Q>, level: u64) -> Result<DivisorClass, CliError> {
    let mut coeffs = vec![a.clone(), b.clone()];
    coeffs.extend(c.cloned());
    DivisorClass::new(basis, coeffs, level).map_err(usage)
}

fn certify(space: Basis, a: &Q, b: &Q, c: Option<&Q>, level: u64, details: bool) -> Result<Outcome, CliError> {
    let d = class(space, a, b, c, level)?;
    let mut value = json!({"nef": nef::is_nef(&d)});
    if space == Basis::Igu {
        value["ample"] = json!(nef::is_ample_interior(&d).map_err(usage)?);
    }
    if details {
        value["report"] = serde_json::to_value(nef::nef_report(&d, &nef::default_epsilon())).unwrap();
    }
    Ok(Outcome::plain(value))
}

fn audit(identity: Option<&str>, details: bool, relations: bool, controls: bool) -> Result<Outcome, CliError> {
    let names: Vec<&str> = match identity {
        Some(n) => vec![n],
        None => nef::IDENTITIES.to_vec(),
    };
    if relations {
        let mut out = serde_json::Map::new();
        for n in &names {
            let rels = nef::identity_relations(n).map_err(usage)?;
            let rendered: Vec<Value> = rels
                .iter()
                .map(|r| {
                    json!({
                        "name": r.name,
                        "description": r.description,
                        "left": r.left.to_string(),
                        "right": r.right.to_string(),
                        "rules": r.rules.iter().map(|(k, v)| format!("{k} -> {v}")).collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.insert(n.to_string(), Value::Array(rendered));
        }
        return Ok(Outcome::plain(Value::Object(out)));
    }
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for n in &names {
        let r = nef::audit_identity(n).map_err(usage)?;
        if !r.is_zero() {
            failures.push(format!("{n}: residual {}", r.residual));
        }
        reports.push(r);
    }
    let render = |r: &nef::AuditReport| {
        if details {
            serde_json::to_value(r).unwrap()
        } else {
            json!({"residual": r.residual})
        }
    };
    let mut value = match (identity, reports.as_slice()) {
        (Some(_), [r]) => render(r),
        _ => Value::Object(reports.iter().map(|r| (r.identity.clone(), render(r))).collect()),
    };
    if controls {
        let mut ctl = serde_json::Map::new();
        for rel in nef::mutated_controls().map_err(usage)? {
            let res = nef::residual(&rel).map_err(usage)?;
            if res.is_zero() {
                failures.push(format!("control {} vanished", rel.name));
            }
            ctl.insert(rel.name.clone(), json!(res.to_string()));
        }
        value["controls"] = Value::Object(ctl);
    }
    Ok(Outcome { value, csv: None, failures })
}

fn report_all(n: usize, threads: usize, seed: u64) -> Result<Outcome, CliError> {
    let mut sections = serde_json::Map::new();
    let mut failures = Vec::new();
    let mut take = |name: &str, o: Outcome| {
        failures.extend(o.failures.iter().map(|f| format!("{name}: {f}")));
        sections.insert(name.to_string(), o.value);
    };
    take("orbits", orbits());
    for c in ["pi1-4", "pi2-1", "pi2-2", "pi2-3"] {
        take(&format!("project-check {c}"), project_cmd(c)?);
    }
    take("walls sigma0", walls(Which::Sigma0, None)?);
    take("walls sigma1", walls(Which::Sigma1, None)?);
    take("integrate", integrate(n, threads)?);
    take("audit", audit(None, false, false, true)?);

    let mut ch = Checks::default();
    // exponent minima
    let (g, l) = emin_lab::ell_form(1);
    let m = min_over_shifts(&g, &l, 2).map_err(usage)?;
    ch.eq_q("min of the l-form at n = 1", qf(-1, 2), m.value.clone());
    ch.holds("l-form minimum attained at (0,1/2,1/2)", m.argmins.contains(&vec![q(0), qf(1, 2), qf(1, 2)]));
    let (g, l) = emin_lab::pair_form();
    let m = min_over_shifts(&g, &l, 2).map_err(usage)?;
    ch.eq_q("min of w3^2+w4^2-w3-w4", qf(-1, 2), m.value.clone());
    // support values
    let ebar = project(&e_form(), 1).map_err(usage)?;
    ch.eq_q("psi3(ebar)", q(4), support_eval(&SupportFunction::voronoi(3), &ebar).map_err(usage)?);
    // random shifts against a small brute force
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gram = emin_lab::half_e_gram();
    for _ in 0..20 {
        // shifts in [-1, 1], well inside the reach of the [-3, 3] box
        let x: Vec<Q> = (0..4)
            .map(|_| {
                let d = rng.gen_range(1..=20);
                qf(rng.gen_range(-d..=d), d)
            })
            .collect();
        let exact = min_shifted(&gram, &x).map_err(usage)?.value;
        let mut brute: Option<Q> = None;
        for z in itertools::Itertools::multi_cartesian_product((0..4).map(|_| -3i64..=3)) {
            let y: Vec<Q> = z.iter().zip(&x).map(|(a, b)| q(*a) + b).collect();
            let v = emin_lab::quad_value(&gram, &y);
            if brute.as_ref().is_none_or(|b| v < *b) {
                brute = Some(v);
            }
        }
        ch.eq_q("min_shifted against brute force", brute.unwrap(), exact);
    }
    // nef certification
    for n in 1..=5u64 {
        let k = nef::canonical_class(Basis::Igu, n).map_err(usage)?;
        ch.eq(&format!("K_Igu nef at n = {n}"), n >= 3, nef::is_nef(&k));
        ch.eq(&format!("K_Vor nef at n = {n}"), false, nef::is_nef(&nef::canonical_class(Basis::Vor, n).map_err(usage)?));
    }
    let table = nef::depth_three_table().map_err(usage)?;
    ch.holds("depth-three thresholds at most 2", table.iter().all(|(_, b)| b.dominated));
    take("spot checks", Outcome::checked(json!({
        "depth_three": table.iter().map(|(name, b)| json!({"case": name, "bound": b.form, "threshold": fmt_q(&b.threshold)})).collect::<Vec<_>>(),
    }), ch));

    let ok = failures.is_empty();
    let mut value = Value::Object(sections);
    value["ok"] = json!(ok);
    value["failures"] = json!(failures.clone());
    Ok(Outcome { value, csv: None, failures })
}

/// Parses arguments, runs the command and writes the output; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                CliError::Usage(_) => 2,
                CliError::Failed(_) => 1,
            };
        }
    };
    let body = match (cli.format, &out.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        _ if cli.pretty => serde_json::to_string_pretty(&out.value).unwrap() + "\n",
        _ => serde_json::to_string(&out.value).unwrap() + "\n",
    };
    let written = match &cli.output {
        Some(p) => std::fs::write(p, &body).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 2;
    }
    for f in &out.failures {
        eprintln!("check failed: {f}");
    }
    if out.failures.is_empty() {
        0
    } else {
        1
    }
}
