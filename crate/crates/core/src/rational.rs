//! Exact rational vectors and matrices.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::Error;

pub type Rat = BigRational;
pub type RVec = Vec<Rat>;
pub type RMat = Vec<Vec<Rat>>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses "p/q", "p" or a decimal-free integer literal.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(p, q))
        }
        None => Ok(Rat::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn vec_f64(v: &[Rat]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

pub fn mat_f64(m: &[RVec]) -> Vec<Vec<f64>> {
    m.iter().map(|r| vec_f64(r)).collect()
}

pub fn from_ints(v: &[i64]) -> RVec {
    v.iter().map(|&x| rat(x)).collect()
}

pub fn mat_from_ints(m: &[Vec<i64>]) -> RMat {
    m.iter().map(|r| from_ints(r)).collect()
}

pub fn identity(n: usize) -> RMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect()
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

pub fn mat_vec(m: &[RVec], v: &[Rat]) -> RVec {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn mat_mul(a: &[RVec], b: &[RVec]) -> RMat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).fold(Rat::zero(), |acc, (x, br)| acc + x * &br[j]))
                .collect()
        })
        .collect()
}

pub fn transpose(m: &[RVec]) -> RMat {
    let n = m.first().map_or(0, |r| r.len());
    (0..n).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn is_symmetric(m: &[RVec]) -> bool {
    let n = m.len();
    m.iter().all(|r| r.len() == n) && (0..n).all(|i| (0..i).all(|j| m[i][j] == m[j][i]))
}

/// Row echelon form in place; returns pivot columns.
fn echelon(m: &mut [RVec]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = Rat::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &[RVec]) -> usize {
    let mut a = m.to_vec();
    echelon(&mut a).len()
}

/// Basis of the right kernel {x : m x = 0}.
pub fn nullspace(m: &[RVec], ncols: usize) -> Vec<RVec> {
    let mut a = m.to_vec();
    let pivots = echelon(&mut a);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rat::zero(); ncols];
            x[f] = Rat::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -a[r][f].clone();
            }
            x
        })
        .collect()
}

pub fn det(m: &[RVec]) -> Rat {
    let n = m.len();
    let mut a = m.to_vec();
    let mut d = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else { return Rat::zero() };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        for i in c + 1..n {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[c][c];
                for j in c..n {
                    let t = &f * &a[c][j];
                    a[i][j] -= t;
                }
            }
        }
    }
    d
}

pub fn inverse(m: &[RVec]) -> Option<RMat> {
    let n = m.len();
    let mut a: RMat = m
        .iter()
        .zip(identity(n))
        .map(|(r, e)| r.iter().cloned().chain(e).collect())
        .collect();
    let piv = echelon(&mut a);
    if piv.len() < n || piv.iter().enumerate().any(|(i, &p)| i != p) {
        return None;
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Signs of a congruence diagonalization of a symmetric matrix: (positive, negative, zero).
pub fn inertia(m: &[RVec]) -> (usize, usize, usize) {
    let n = m.len();
    let mut a = m.to_vec();
    let (mut p, mut q) = (0, 0);
    let mut k = 0;
    while k < n {
        // pivot with nonzero diagonal among remaining rows
        if let Some(i) = (k..n).find(|&i| !a[i][i].is_zero()) {
            sym_swap(&mut a, k, i);
        } else if let Some((i, j)) =
            (k..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !a[i][j].is_zero())
        {
            // a[i][i] = a[j][j] = 0, a[i][j] != 0: row/col i += row/col j makes diagonal 2a_ij
            for c in 0..n {
                let t = a[j][c].clone();
                a[i][c] += t;
            }
            for r in 0..n {
                let t = a[r][j].clone();
                a[r][i] += t;
            }
            sym_swap(&mut a, k, i);
        } else {
            break;
        }
        let d = a[k][k].clone();
        if d.is_positive() {
            p += 1;
        } else {
            q += 1;
        }
        for i in k + 1..n {
            if !a[i][k].is_zero() {
                let f = &a[i][k] / &d;
                for j in k..n {
                    let t = &f * &a[k][j];
                    a[i][j] -= t;
                }
                for r in k..n {
                    let t = &f * &a[r][k];
                    a[r][i] -= t;
                }
            }
        }
        k += 1;
    }
    (p, q, n - p - q)
}

fn sym_swap(a: &mut [RVec], i: usize, j: usize) {
    if i == j {
        return;
    }
    a.swap(i, j);
    for r in a.iter_mut() {
        r.swap(i, j);
    }
}

pub fn lcm_denoms<'a>(it: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    use num::Integer;
    it.into_iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Scales a nonzero rational vector to a primitive integer vector with the same direction.
pub fn primitive(v: &[Rat]) -> Vec<BigInt> {
    use num::Integer;
    let l = lcm_denoms(v);
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn frac(r: &Rat) -> Rat {
    r - r.floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertia_hyperbolic_with_zero_diagonal() {
        let m = mat_from_ints(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(inertia(&m), (1, 1, 0));
        let m = mat_from_ints(&[vec![1, 0, 0], vec![0, 0, 0], vec![0, 0, -3]]);
        assert_eq!(inertia(&m), (1, 1, 1));
    }

    #[test]
    fn inverse_and_det() {
        let m = mat_from_ints(&[vec![6, 8], vec![8, 6]]);
        assert_eq!(det(&m), rat(-28));
        let inv = inverse(&m).unwrap();
        assert_eq!(mat_mul(&m, &inv), identity(2));
    }

    #[test]
    fn nullspace_of_radical() {
        let m = mat_from_ints(&[vec![1, 1], vec![1, 1]]);
        let k = nullspace(&m, 2);
        assert_eq!(k, vec![from_ints(&[-1, 1])]);
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(fmt_rat(&parse_rat("-6/4").unwrap()), "-3/2");
        assert_eq!(fmt_rat(&parse_rat("7").unwrap()), "7");
        assert!(parse_rat("1.5").is_err());
        assert!(parse_rat("1/0").is_err());
    }
}
