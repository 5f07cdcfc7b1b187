//! Minima of positive definite quadratic forms over shifted lattices, and a
//! certified midpoint quadrature of e_min over the unit cell.
//!
//! Throughout, a Gram matrix G defines Q(y) = y^T G y. The function e_min uses
//! half of e, the form whose value at q + m is the vanishing order along E.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{self, ceil_q, floor_q, fmt_q, q, qf, qi, ser_q, ser_qs, ser_qss, Mat, Q};
use crate::lattice_forms::e_form;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EminError {
    #[error("Gram matrix is not positive definite")]
    NotDefinite,
    #[error("shape mismatch: Gram is {0}x{0}, shift has {1} entries")]
    Shape(usize, usize),
    #[error("N must be at least 1")]
    BadN,
    #[error("error bound {bound} does not separate the mean from 3/16 at N = {n}; use a larger N")]
    NeedLargerN { n: usize, bound: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftedQuadMin {
    pub dim: usize,
    #[serde(serialize_with = "ser_qss")]
    pub gram: Mat,
    #[serde(serialize_with = "ser_qs")]
    pub shift: Vec<Q>,
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    /// Every integer q attaining the minimum of Q(q + shift).
    pub minimizers: Vec<Vec<BigInt>>,
    /// Value at the rounded shift; every minimiser satisfies Q(q + shift) <= upper.
    #[serde(serialize_with = "ser_q")]
    pub upper: Q,
    /// Upper bounds r_i with |q_i + shift_i| <= r_i on that sublevel set.
    #[serde(serialize_with = "ser_qs")]
    pub radius: Vec<Q>,
}

pub fn quad_value(gram: &Mat, y: &[Q]) -> Q {
    exact::dot(y, &exact::matvec(gram, y))
}

/// Exact minimum of Q(q + m) over integer q.
///
/// On {y : y^T G y <= U} each coordinate obeys y_i^2 <= U (G^-1)_ii, which
/// bounds the box that is enumerated.
pub fn min_shifted(gram: &Mat, m: &[Q]) -> Result<ShiftedQuadMin, EminError> {
    let k = gram.len();
    if m.len() != k || gram.iter().any(|r| r.len() != k) {
        return Err(EminError::Shape(k, m.len()));
    }
    if !exact::is_positive_definite(gram) {
        return Err(EminError::NotDefinite);
    }
    let half = qf(1, 2);
    let y0: Vec<Q> = m.iter().map(|x| x - qi(&floor_q(&(x + &half)))).collect();
    let upper = quad_value(gram, &y0);
    let inv = exact::inverse(gram).expect("definite");
    let radius: Vec<Q> = (0..k).map(|i| exact::sqrt_upper(&(&upper * &inv[i][i]), 1 << 20)).collect();
    let ranges: Vec<Vec<BigInt>> = (0..k)
        .map(|i| {
            let lo = ceil_q(&(-&m[i] - &radius[i]));
            let hi = floor_q(&(-&m[i] + &radius[i]));
            num_iter_range(lo, hi)
        })
        .collect();
    let mut best: Option<Q> = None;
    let mut minimizers = Vec::new();
    for qv in ranges.into_iter().multi_cartesian_product() {
        let y: Vec<Q> = qv.iter().zip(m).map(|(a, b)| qi(a) + b).collect();
        let v = quad_value(gram, &y);
        match &best {
            Some(b) if v > *b => {}
            Some(b) if v == *b => minimizers.push(qv),
            _ => {
                best = Some(v);
                minimizers = vec![qv];
            }
        }
    }
    Ok(ShiftedQuadMin {
        dim: k,
        gram: gram.clone(),
        shift: m.to_vec(),
        value: best.expect("box contains the rounded point"),
        minimizers,
        upper,
        radius,
    })
}

fn num_iter_range(lo: BigInt, hi: BigInt) -> Vec<BigInt> {
    let mut v = Vec::new();
    let mut x = lo;
    while x <= hi {
        v.push(x.clone());
        x += 1;
    }
    v
}

/// Gram matrix of e/2.
pub fn half_e_gram() -> Mat {
    let g = e_form().gram();
    g.iter().map(|r| r.iter().map(|x| x / q(2)).collect()).collect()
}

/// min over integer q of e(q + x)/2.
pub fn emin(x: &[Q]) -> Q {
    min_shifted(&half_e_gram(), x).expect("e is definite").value
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AffineMin {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    /// Minimising points w (not just the integer offsets).
    #[serde(serialize_with = "ser_qss")]
    pub argmins: Vec<Vec<Q>>,
}

/// Minimum of Q(w) + lin.w over w in shift + Z^k, by completing the square.
pub fn min_affine(gram: &Mat, lin: &[Q], shift: &[Q]) -> Result<AffineMin, EminError> {
    let inv = exact::inverse(gram).ok_or(EminError::NotDefinite)?;
    // the real critical point: 2 G y* + lin = 0
    let centre: Vec<Q> = exact::matvec(&inv, lin).iter().map(|x| -x / q(2)).collect();
    let moved: Vec<Q> = shift.iter().zip(&centre).map(|(a, b)| a - b).collect();
    let r = min_shifted(gram, &moved)?;
    let value = &r.value - quad_value(gram, &centre);
    let argmins = r
        .minimizers
        .iter()
        .map(|qv| qv.iter().zip(shift).map(|(a, b)| qi(a) + b).collect())
        .collect();
    Ok(AffineMin { value, argmins })
}

/// Minimum of Q(w) + lin.w over all w in (1/denom) Z^k.
pub fn min_over_shifts(gram: &Mat, lin: &[Q], denom: i64) -> Result<AffineMin, EminError> {
    let k = gram.len();
    let mut best: Option<AffineMin> = None;
    for s in (0..k).map(|_| 0..denom).multi_cartesian_product() {
        let shift: Vec<Q> = s.iter().map(|&a| qf(a, denom)).collect();
        let r = min_affine(gram, lin, &shift)?;
        best = Some(match best {
            None => r,
            Some(mut b) => {
                if r.value < b.value {
                    r
                } else {
                    if r.value == b.value {
                        b.argmins.extend(r.argmins);
                    }
                    b
                }
            }
        });
    }
    let mut b = best.expect("at least one shift");
    b.argmins.sort();
    Ok(b)
}

/// The T2 exponent n(w2 - w2w4 - w3 - w4 - w2w3 + w2^2 + w3^2 + w4^2) as (Gram, linear part).
pub fn ell_form(n: i64) -> (Mat, Vec<Q>) {
    let h = qf(-n, 2);
    let gram = vec![
        vec![q(n), h.clone(), h.clone()],
        vec![h.clone(), q(n), q(0)],
        vec![h, q(0), q(n)],
    ];
    (gram, vec![q(n), q(-n), q(-n)])
}

/// w3^2 + w4^2 - w3 - w4.
pub fn pair_form() -> (Mat, Vec<Q>) {
    (vec![vec![q(1), q(0)], vec![q(0), q(1)]], vec![q(-1), q(-1)])
}

// ---- grid quadrature ----

/// Columns generate the D4 lattice {z in Z^4 : sum z even} with B^T B = Gram(e),
/// so min_q e(q + x) is the squared distance from Bx to D4.
const B: [[i64; 4]; 4] = [[1, 1, -1, 0], [1, 0, 0, -1], [0, 1, 0, -1], [0, 0, 1, 0]];

/// Squared distance from p/m to D4, times m^2.
fn d4_dist2_scaled(p: [i64; 4], m: i64) -> i64 {
    let mut z = [0i64; 4];
    let mut r = [0i64; 4];
    for i in 0..4 {
        z[i] = (2 * p[i] + m).div_euclid(2 * m);
        r[i] = p[i] - m * z[i];
    }
    if z.iter().sum::<i64>().rem_euclid(2) == 1 {
        let i = (0..4).max_by_key(|&i| r[i].abs()).unwrap();
        if r[i] >= 0 {
            z[i] += 1;
        } else {
            z[i] -= 1;
        }
        r[i] = p[i] - m * z[i];
    }
    r.iter().map(|x| x * x).sum()
}

/// 8N^2 emin(x) for x with coordinates (2k+1)/(2N).
pub fn emin_grid_scaled(k: [i64; 4], n: i64) -> i64 {
    let m = 2 * n;
    let x: Vec<i64> = k.iter().map(|&ki| 2 * ki + 1).collect();
    let mut p = [0i64; 4];
    for (i, pi) in p.iter_mut().enumerate() {
        *pi = (0..4).map(|j| B[i][j] * x[j]).sum();
    }
    d4_dist2_scaled(p, m)
}

/// Counts of the scaled values 8N^2 emin over the N^4 midpoint grid.
pub type Histogram = BTreeMap<i64, u64>;

fn slab(n: i64, k0: i64) -> Histogram {
    let mut h = Histogram::new();
    for k1 in 0..n {
        for k2 in 0..n {
            for k3 in 0..n {
                *h.entry(emin_grid_scaled([k0, k1, k2, k3], n)).or_default() += 1;
            }
        }
    }
    h
}

fn merge(mut a: Histogram, b: Histogram) -> Histogram {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

/// Histogram over the grid; threads = 1 runs serially, 0 uses the global pool.
pub fn grid_histogram(n: usize, threads: usize) -> Result<Histogram, EminError> {
    if n == 0 {
        return Err(EminError::BadN);
    }
    let n = n as i64;
    if threads == 1 {
        return Ok((0..n).map(|k0| slab(n, k0)).fold(Histogram::new(), merge));
    }
    let run = || (0..n).into_par_iter().map(|k0| slab(n, k0)).reduce(Histogram::new, merge);
    if threads == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EminError::Pool(e.to_string()))?;
    Ok(pool.install(run))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadratureResult {
    pub n: usize,
    #[serde(serialize_with = "ser_q")]
    pub mean: Q,
    pub mean_float: String,
    #[serde(serialize_with = "ser_q")]
    pub error_bound: Q,
    pub error_bound_float: String,
    /// Rational upper bound for the top eigenvalue of Gram(e).
    #[serde(serialize_with = "ser_q")]
    pub lambda_max: Q,
}

/// Decimal rendering with the given number of significant digits.
pub fn sig_digits(x: &Q, digits: usize) -> String {
    let f = exact::to_f64(x);
    if f == 0.0 {
        return "0".into();
    }
    let mag = f.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    format!("{f:.decimals$}")
}

fn mean_of(h: &Histogram, n: usize) -> Q {
    let total: BigInt = h.iter().map(|(&s, &c)| BigInt::from(s) * BigInt::from(c)).sum();
    let n = BigInt::from(n);
    Q::new(total, BigInt::from(8) * &n * &n * n.pow(4))
}

/// Bound on |grid mean - integral| from the histogram.
///
/// On a cell with centre c and half-diagonal d = 1/N, every branch e(q+x)/2
/// active on the cell has gradient G y with |G y| <= s |B y|, s^2 >= lambda_max(G),
/// and |B y| <= sqrt(2 emin(c)) + s d. So |emin(x) - emin(c)| <= s d (sqrt(2 emin(c)) + 2 s d).
fn bound_of(h: &Histogram, n: usize, lambda: &Q) -> Q {
    let scale = 1u64 << 20;
    let s = exact::sqrt_upper(lambda, scale);
    let nq = q(n as i64);
    let d = nq.recip();
    // sqrt(2 emin(c)) = sqrt(scaled) / (2N)
    let mut root_sum = Q::zero();
    for (&v, &c) in h {
        root_sum += exact::sqrt_upper(&q(v), scale) * Q::from_integer(BigInt::from(c));
    }
    let cells = Q::from_integer(BigInt::from(n).pow(4));
    let avg_root = root_sum / cells / (q(2) * &nq);
    let raw = &s * &d * (avg_root + q(2) * &s * &d);
    let unit = q(1_000_000_000);
    qi(&ceil_q(&(raw * &unit))) / unit
}

pub fn quadrature(n: usize, threads: usize) -> Result<QuadratureResult, EminError> {
    let h = grid_histogram(n, threads)?;
    let lambda = exact::lambda_max_upper(&e_form().gram(), 30);
    let mean = mean_of(&h, n);
    let error_bound = bound_of(&h, n, &lambda);
    Ok(QuadratureResult {
        n,
        mean_float: sig_digits(&mean, 7),
        error_bound_float: sig_digits(&error_bound, 4),
        mean,
        error_bound,
        lambda_max: lambda,
    })
}

pub fn grid_mean(n: usize) -> Result<Q, EminError> {
    Ok(mean_of(&grid_histogram(n, 0)?, n))
}

pub fn error_certificate(n: usize) -> Result<Q, EminError> {
    Ok(quadrature(n, 0)?.error_bound)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Margin {
    pub n: usize,
    #[serde(serialize_with = "ser_q")]
    pub mean: Q,
    #[serde(serialize_with = "ser_q")]
    pub error_bound: Q,
    /// mean - 3/16
    #[serde(serialize_with = "ser_q")]
    pub margin: Q,
    /// mean - bound - 3/16, positive by construction
    #[serde(serialize_with = "ser_q")]
    pub certified_margin: Q,
    pub margin_float: String,
    /// |mean - 13/60|; 13/60 is a conjectured value of the integral.
    pub distance_to_conjecture: String,
    pub conjectured_integral: String,
    pub conjectured_limit: String,
    pub conjectural: bool,
}

pub fn target() -> Q {
    qf(3, 16)
}

pub fn conjectured_integral() -> Q {
    qf(13, 60)
}

pub fn weissauer_margin(n: usize, threads: usize) -> Result<Margin, EminError> {
    let r = quadrature(n, threads)?;
    let margin = &r.mean - target();
    let certified = &margin - &r.error_bound;
    if !certified.is_positive() {
        return Err(EminError::NeedLargerN { n, bound: fmt_q(&r.error_bound) });
    }
    let dist = (&r.mean - conjectured_integral()).abs();
    Ok(Margin {
        n,
        margin_float: sig_digits(&margin, 6),
        distance_to_conjecture: format!("{:.3e}", exact::to_f64(&dist)),
        conjectured_integral: fmt_q(&conjectured_integral()),
        conjectured_limit: fmt_q(&(conjectured_integral() - target())),
        conjectural: true,
        mean: r.mean,
        error_bound: r.error_bound,
        margin,
        certified_margin: certified,
    })
}

/// The grid point with indices k, as exact rationals.
pub fn grid_point(k: [i64; 4], n: i64) -> Vec<Q> {
    k.iter().map(|&ki| qf(2 * ki + 1, 2 * n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_d4() {
        let g: Vec<Vec<i64>> = (0..4)
            .map(|i| (0..4).map(|j| (0..4).map(|k| B[k][i] * B[k][j]).sum()).collect())
            .collect();
        let e: Vec<Vec<i64>> = e_form().gram().iter().map(|r| r.iter().map(|x| x.to_integer().try_into().unwrap()).collect()).collect();
        assert_eq!(g, e);
        for i in 0..4 {
            assert_eq!((0..4).map(|k| B[k][i]).sum::<i64>() % 2, 0);
        }
    }

    #[test]
    fn zero_shift() {
        let r = min_shifted(&e_form().gram(), &[q(0), q(0), q(0), q(0)]).unwrap();
        assert_eq!(r.value, q(0));
        assert_eq!(r.minimizers, vec![vec![BigInt::zero(); 4]]);
    }

    #[test]
    fn indefinite_refused() {
        let g = vec![vec![q(1), q(2)], vec![q(2), q(1)]];
        assert_eq!(min_shifted(&g, &[q(0), q(0)]), Err(EminError::NotDefinite));
    }

    #[test]
    fn fast_kernel_matches_exact() {
        for n in [1i64, 2, 3, 5] {
            for k in (0..4).map(|_| 0..n).multi_cartesian_product() {
                let k = [k[0], k[1], k[2], k[3]];
                let fast = qf(emin_grid_scaled(k, n), 8 * n * n);
                assert_eq!(fast, emin(&grid_point(k, n)), "{k:?} / {n}");
            }
        }
    }
}
