//! Exact rational and integer linear algebra on small dense matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type Mat = Vec<Vec<Q>>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Q::from_integer(n))
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    // numerator and denominator may exceed f64 range separately
    let n = x.numer();
    let d = x.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![Q::zero(); c]; r]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return vec![];
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(Q::zero(), |acc, (x, brow)| acc + x * &brow[j])
                })
                .collect()
        })
        .collect()
}

pub fn matvec(a: &Mat, v: &[Q]) -> Vec<Q> {
    a.iter().map(|row| dot(row, v)).collect()
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(a: &mut Mat) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(pivot_row.iter()) {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &Mat) -> usize {
    let mut m = a.clone();
    rref(&mut m).len()
}

pub fn rank_of_rows(rows: &[Vec<Q>]) -> usize {
    rank(&rows.to_vec())
}

/// Rational basis of {x : A x = 0}.
pub fn nullspace(a: &Mat, ncols: usize) -> Vec<Vec<Q>> {
    let mut m = a.clone();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -m[i][f].clone();
            }
            v
        })
        .collect()
}

/// Some solution of A x = b, if one exists.
pub fn solve(a: &Mat, b: &[Q]) -> Option<Vec<Q>> {
    let ncols = a.first().map_or(0, |r| r.len());
    let mut aug: Mat = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&ncols) {
        return None;
    }
    let mut x = vec![Q::zero(); ncols];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = aug[i][ncols].clone();
    }
    Some(x)
}

pub fn det(a: &Mat) -> Q {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d = &d * &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[c][c];
                let pr = m[c].clone();
                for (x, y) in m[i].iter_mut().zip(pr.iter()) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    d
}

pub fn inverse(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut aug: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Sylvester's criterion on a symmetric matrix.
pub fn is_positive_definite(a: &Mat) -> bool {
    (1..=a.len()).all(|k| {
        let m: Mat = a[..k].iter().map(|r| r[..k].to_vec()).collect();
        det(&m).is_positive()
    })
}

/// A rational t >= the largest eigenvalue of a symmetric matrix, within 2^-steps of the trace scale.
pub fn lambda_max_upper(a: &Mat, steps: usize) -> Q {
    let n = a.len();
    let shifted = |t: &Q| -> Mat {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { t - &a[i][j] } else { -a[i][j].clone() }).collect())
            .collect()
    };
    let trace_abs = (0..n).fold(Q::zero(), |s, i| s + a[i].iter().fold(Q::zero(), |r, x| r + x.abs()));
    let mut lo = -trace_abs.clone();
    let mut hi = trace_abs + Q::one();
    debug_assert!(is_positive_definite(&shifted(&hi)));
    for _ in 0..steps {
        let mid = (&lo + &hi) / q(2);
        if is_positive_definite(&shifted(&mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

pub fn ser_qs<S: serde::Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&fmt_q(x))?;
    }
    seq.end()
}

pub fn ser_qss<S: serde::Serializer>(v: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        seq.serialize_element(&row.iter().map(fmt_q).collect::<Vec<_>>())?;
    }
    seq.end()
}

/// Nonnegative x with sum x_k cols_k = b, by phase-one simplex with Bland's rule.
pub fn nonneg_combination(cols: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let m = b.len();
    let n = cols.len();
    // tableau rows: [A | I | b], rows flipped so that b >= 0
    let mut t: Mat = (0..m)
        .map(|i| {
            let flip = if b[i].is_negative() { -Q::one() } else { Q::one() };
            let mut row: Vec<Q> = cols.iter().map(|c| &c[i] * &flip).collect();
            row.extend((0..m).map(|k| if k == i { Q::one() } else { Q::zero() }));
            row.push(&b[i] * &flip);
            row
        })
        .collect();
    let width = n + m;
    let mut basis: Vec<usize> = (n..width).collect();
    loop {
        // reduced costs of the phase-one objective (sum of artificials)
        let entering = (0..width).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let c = if j >= n { Q::one() } else { Q::zero() };
            let z = (0..m).fold(Q::zero(), |acc, i| if basis[i] >= n { acc + &t[i][j] } else { acc });
            c - z < Q::zero()
        });
        let Some(j) = entering else { break };
        let mut best: Option<(Q, usize)> = None;
        for i in 0..m {
            if t[i][j].is_positive() {
                let r = &t[i][width] / &t[i][j];
                let better = match &best {
                    None => true,
                    Some((br, bi)) => r < *br || (r == *br && basis[i] < basis[*bi]),
                };
                if better {
                    best = Some((r, i));
                }
            }
        }
        let Some((_, p)) = best else { break };
        let inv = t[p][j].recip();
        for x in t[p].iter_mut() {
            *x = &*x * &inv;
        }
        let pr = t[p].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != p && !row[j].is_zero() {
                let f = row[j].clone();
                for (x, y) in row.iter_mut().zip(&pr) {
                    *x = &*x - &f * y;
                }
            }
        }
        basis[p] = j;
    }
    let mut x = vec![Q::zero(); width];
    for (i, &bi) in basis.iter().enumerate() {
        x[bi] = t[i][width].clone();
    }
    if x[n..].iter().all(|v| v.is_zero()) {
        x.truncate(n);
        Some(x)
    } else {
        None
    }
}

/// Scales a rational vector to a primitive integer vector with the same direction.
pub fn primitive_int(v: &[Q]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * qi(&l)).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn primitive_q(v: &[Q]) -> Vec<Q> {
    primitive_int(v).iter().map(qi).collect()
}

pub fn is_zero_vec(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_zero())
}

/// Integer basis of {x in Z^n : A x = 0} for a rational matrix A, in Hermite normal form.
pub fn integer_kernel(a: &Mat, n: usize) -> Vec<Vec<BigInt>> {
    // clear denominators row by row
    let rows: Vec<Vec<BigInt>> = a.iter().map(|r| primitive_int(r)).collect();
    // column operations on [A; I] to bring A to column echelon form
    let m = rows.len();
    let mut cols: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut c: Vec<BigInt> = rows.iter().map(|r| r[j].clone()).collect();
            c.extend((0..n).map(|k| if k == j { BigInt::one() } else { BigInt::zero() }));
            c
        })
        .collect();
    let mut next = 0;
    for r in 0..m {
        loop {
            let nz: Vec<usize> = (next..n).filter(|&j| !cols[j][r].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&j| cols[j][r].abs()).unwrap();
            cols.swap(next, piv);
            let mut done = true;
            for j in next + 1..n {
                if !cols[j][r].is_zero() {
                    let f = cols[j][r].div_floor(&cols[next][r]);
                    let pc = cols[next].clone();
                    for (x, y) in cols[j].iter_mut().zip(pc.iter()) {
                        *x -= &f * y;
                    }
                    if !cols[j][r].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                next += 1;
                break;
            }
        }
    }
    let basis: Vec<Vec<BigInt>> = cols[next..].iter().map(|c| c[m..].to_vec()).collect();
    hermite_rows(basis)
}

/// Row Hermite normal form of a lattice basis (rows), dropping zero rows.
pub fn hermite_rows(mut b: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    if b.is_empty() {
        return b;
    }
    let n = b[0].len();
    let mut r = 0;
    for c in 0..n {
        loop {
            let nz: Vec<usize> = (r..b.len()).filter(|&i| !b[i][c].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&i| b[i][c].abs()).unwrap();
            b.swap(r, piv);
            let mut done = true;
            for i in r + 1..b.len() {
                if !b[i][c].is_zero() {
                    let f = b[i][c].div_floor(&b[r][c]);
                    let pr = b[r].clone();
                    for (x, y) in b[i].iter_mut().zip(pr.iter()) {
                        *x -= &f * y;
                    }
                    if !b[i][c].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if r < b.len() && !b[r][c].is_zero() {
            if b[r][c].is_negative() {
                for x in b[r].iter_mut() {
                    *x = -x.clone();
                }
            }
            for i in 0..r {
                let f = b[i][c].div_floor(&b[r][c]);
                if !f.is_zero() {
                    let pr = b[r].clone();
                    for (x, y) in b[i].iter_mut().zip(pr.iter()) {
                        *x -= &f * y;
                    }
                }
            }
            r += 1;
            if r == b.len() {
                break;
            }
        }
    }
    b.retain(|row| row.iter().any(|x| !x.is_zero()));
    b
}

/// Smallest integer s with s*s >= n.
pub fn isqrt_ceil(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut s = (n as f64).sqrt() as u128;
    while s * s > n {
        s -= 1;
    }
    while s * s < n {
        s += 1;
    }
    s
}

/// Upper bound for sqrt(x), exact rational with denominator `scale`.
pub fn sqrt_upper(x: &Q, scale: u64) -> Q {
    assert!(!x.is_negative());
    // sqrt(n/d) <= ceil(sqrt(n*d*s^2)) / (d*s)
    let n = x.numer();
    let d = x.denom();
    let s = BigInt::from(scale);
    let t = n * d * &s * &s;
    let mut r = t.sqrt();
    if &r * &r < t {
        r += 1;
    }
    Q::new(r, d * s)
}

/// Greatest integer not above x.
pub fn floor_q(x: &Q) -> BigInt {
    x.floor().to_integer()
}

pub fn ceil_q(x: &Q) -> BigInt {
    x.ceil().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Mat {
        rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
    }

    #[test]
    fn det_and_inverse() {
        let a = m(&[&[1, 1, 0, 0], &[1, -1, 0, 0], &[1, 0, -1, 0], &[1, 0, 0, -1]]);
        assert_eq!(det(&a), q(-2));
        let inv = inverse(&a).unwrap();
        assert_eq!(matmul(&a, &inv), identity(4));
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn kernel_is_saturated() {
        // x + 2y + 3z = 0 has a kernel lattice of rank 2 with index 1 in its span
        let a = m(&[&[1, 2, 3]]);
        let k = integer_kernel(&a, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            let s = &v[0] + BigInt::from(2) * &v[1] + BigInt::from(3) * &v[2];
            assert!(s.is_zero());
        }
        // 2x - 2y = 0: kernel spanned by (1,1,0),(0,0,1)
        let k = integer_kernel(&m(&[&[2, -2, 0]]), 3);
        assert_eq!(k.len(), 2);
        assert!(k.contains(&vec![BigInt::from(1), BigInt::from(1), BigInt::from(0)]));
    }

    #[test]
    fn eigenvalue_bound() {
        let a = m(&[&[2, 1], &[1, 2]]);
        let t = lambda_max_upper(&a, 40);
        assert!(t >= q(3) && t - q(3) < qf(1, 1_000_000));
        assert!(is_positive_definite(&a));
        assert!(!is_positive_definite(&m(&[&[1, 2], &[2, 1]])));
    }

    #[test]
    fn nonnegative_combinations() {
        let cols = vec![vec![q(1), q(0)], vec![q(1), q(1)], vec![q(0), q(-1)]];
        let x = nonneg_combination(&cols, &[q(5), q(2)]).unwrap();
        assert!(x.iter().all(|v| !v.is_negative()));
        assert_eq!(matvec(&transpose(&cols), &x), vec![q(5), q(2)]);
        assert!(nonneg_combination(&cols, &[q(2), q(5)]).is_none());
        assert!(nonneg_combination(&cols, &[q(-1), q(0)]).is_none());
        // degenerate: b = 0
        assert!(nonneg_combination(&cols, &[q(0), q(0)]).is_some());
    }

    #[test]
    fn rational_parse_roundtrip() {
        let x = parse_q("-6/4").unwrap();
        assert_eq!(fmt_q(&x), "-3/2");
        assert!(parse_q("1/0").is_none());
        assert_eq!(fmt_q(&parse_q(" 7 ").unwrap()), "7");
    }

    #[test]
    fn sqrt_bounds() {
        let x = qf(2, 1);
        let u = sqrt_upper(&x, 1000);
        assert!(&u * &u >= x);
        assert!(to_f64(&u) - 2f64.sqrt() < 2e-3);
        assert_eq!(isqrt_ceil(16), 4);
        assert_eq!(isqrt_ceil(17), 5);
    }
}
