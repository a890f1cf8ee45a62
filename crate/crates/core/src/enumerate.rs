//! Shell-ordered summation of lattice series with truncation certificates.
//!
//! Terms are grouped into shells by a positive-definite majorant. The discarded tail is
//! bounded by a geometric extrapolation of the last two shell sums, which dominates any
//! tail whose shell sums decay at least geometrically (Gaussian and exponential decay both do
//! once the ratio of successive shell sums is decreasing).

use serde_json::{json, Value};

use crate::{Acc, C64};

/// Bound on what a truncated series evaluation leaves out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// Truncation radius (shell count for 1-D sums, √M radius for lattice sums).
    pub radius: f64,
    /// Bound on the discarded tail.
    pub tail: f64,
    /// Accumulated floating-point error estimate of the retained terms.
    pub roundoff: f64,
    pub shells: usize,
}

impl Certificate {
    pub fn exact() -> Self {
        Certificate { radius: 0.0, tail: 0.0, roundoff: 0.0, shells: 0 }
    }

    pub fn bound(&self) -> f64 {
        self.tail + self.roundoff
    }

    pub fn to_json(&self) -> Value {
        json!({"radius": self.radius, "tail": self.tail, "roundoff": self.roundoff, "shells": self.shells})
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SeriesValue {
    pub value: C64,
    pub cert: Certificate,
}

/// Term of a series: value plus the magnitude of the exponent it was computed from,
/// which controls its relative rounding error.
#[derive(Clone, Copy, Debug)]
pub struct Term {
    pub value: C64,
    pub arg: f64,
}

impl Term {
    pub fn new(value: C64, arg: f64) -> Self {
        Term { value, arg }
    }
}

const SAFETY: f64 = 2.0;

/// Tail bound from absolute shell sums.
///
/// The decay ratio is the worst of the last three shell ratios; empty shells or a ratio ≥ 1
/// give an infinite bound.
pub fn shell_tail(shells: &[f64]) -> f64 {
    let n = shells.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let b = shells[n - 1];
    if shells[n - 3..].iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mut r: f64 = 0.0;
    for w in shells[n.saturating_sub(4)..].windows(2) {
        if w[0] == 0.0 {
            return f64::INFINITY;
        }
        r = r.max(w[1] / w[0]);
    }
    if r >= 1.0 {
        return f64::INFINITY;
    }
    // slower apparent decay is not trusted
    if r > 0.9 {
        return f64::INFINITY;
    }
    SAFETY * b * r / (1.0 - r)
}

fn finish(shell_sums: &[Acc], shell_abs: &[f64], err: f64, radius: f64) -> SeriesValue {
    let mut acc = Acc::default();
    for s in shell_sums {
        acc.add(s.value());
    }
    let total_abs: f64 = shell_abs.iter().sum();
    SeriesValue {
        value: acc.value(),
        cert: Certificate {
            radius,
            tail: shell_tail(shell_abs),
            roundoff: err + 4.0 * f64::EPSILON * total_abs,
            shells: shell_abs.len(),
        },
    }
}

/// Σ_k f(k) over integers k, in shells |k − k0| = 0, 1, 2, …
///
/// With `fixed` the number of shells is prescribed; otherwise shells are added until the tail
/// bound drops below `eps/10` (and at least `min_shells` are used).
pub fn sum_1d(k0: i64, min_shells: usize, eps: f64, fixed: Option<usize>, f: impl Fn(i64) -> Term) -> SeriesValue {
    let max_shells = fixed.unwrap_or(100_000);
    let mut sums = Vec::new();
    let mut abs = Vec::new();
    let mut err = 0.0;
    for s in 0..max_shells {
        let mut acc = Acc::default();
        let mut a = 0.0;
        let ks: &[i64] = if s == 0 { &[k0] } else { &[k0 - s as i64, k0 + s as i64] };
        for &k in ks {
            let t = f(k);
            let m = t.value.norm();
            if m.is_finite() {
                acc.add(t.value);
                a += m;
                err += m * f64::EPSILON * (2.0 + t.arg.abs());
            } else {
                a = f64::INFINITY;
            }
        }
        sums.push(acc);
        abs.push(a);
        if fixed.is_none() && s + 1 >= min_shells.max(3) && shell_tail(&abs) <= eps / 10.0 {
            break;
        }
    }
    let n = abs.len();
    finish(&sums, &abs, err, n as f64)
}

/// Positive-definite quadratic form M(X) = Xᵀ P X used for shells.
#[derive(Clone, Debug)]
pub struct Majorant {
    pub p: Vec<Vec<f64>>,
    /// √((P⁻¹)ᵢᵢ): half-width of the box enclosing M ≤ 1.
    pub half_width: Vec<f64>,
}

impl Majorant {
    pub fn new(p: Vec<Vec<f64>>) -> Option<Self> {
        let n = p.len();
        let inv = invert_f64(&p)?;
        let half_width: Vec<f64> = (0..n).map(|i| inv[i][i]).collect();
        if half_width.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        Some(Majorant { half_width: half_width.iter().map(|x| x.sqrt()).collect(), p })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                s += x[i] * v * x[j];
            }
        }
        s
    }

    pub fn rank(&self) -> usize {
        self.p.len()
    }
}

pub fn invert_f64(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().copied().chain((0..n).map(|j| if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        let d = a[c][c];
        for x in a[c].iter_mut() {
            *x /= d;
        }
        for i in 0..n {
            if i != c {
                let f = a[i][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        a[i][j] -= f * a[c][j];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Minimal shell width in units of √M.
pub const SHELL_WIDTH: f64 = 0.5;

/// Shell width for a lattice sum: at least √tr P, twice a bound on the covering radius of Zᴺ
/// under M, so that no shell is empty and shell sums decay regularly.
pub fn shell_width(m: &Majorant) -> f64 {
    let tr: f64 = (0..m.rank()).map(|i| m.p[i][i]).sum();
    SHELL_WIDTH.max(tr.sqrt())
}

/// Lattice points X ∈ shift + Zᴺ with M(X) ≤ R², in lexicographic order of ν = X − shift.
pub fn points_within(m: &Majorant, shift: &[f64], radius: f64, mut visit: impl FnMut(&[i64], &[f64], f64)) {
    let n = m.rank();
    let lo: Vec<i64> = (0..n).map(|i| (-shift[i] - radius * m.half_width[i]).ceil() as i64).collect();
    let hi: Vec<i64> = (0..n).map(|i| (-shift[i] + radius * m.half_width[i]).floor() as i64).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return;
    }
    let mut nu = lo.clone();
    let mut x = vec![0.0; n];
    let r2 = radius * radius;
    loop {
        for i in 0..n {
            x[i] = nu[i] as f64 + shift[i];
        }
        let mv = m.eval(&x);
        if mv <= r2 {
            visit(&nu, &x, mv);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            nu[i] += 1;
            if nu[i] <= hi[i] {
                break;
            }
            nu[i] = lo[i];
        }
    }
}

/// Number of lattice points in the enclosing box of radius R (cost estimate).
pub fn box_size(m: &Majorant, radius: f64) -> f64 {
    m.half_width.iter().map(|w| 2.0 * radius * w + 1.0).product()
}

const MAX_BOX: f64 = 4.0e6;

/// Σ f(ν, X) over X = ν + shift, ν ∈ Zᴺ, grouped in majorant shells.
pub fn sum_lattice(
    m: &Majorant,
    shift: &[f64],
    eps: f64,
    fixed_radius: Option<f64>,
    min_radius: f64,
    f: impl Fn(&[i64], &[f64]) -> Term,
) -> SeriesValue {
    let width = shell_width(m);
    let eval = |radius: f64| {
        let nshell = (radius / width).floor() as usize;
        let mut sums = vec![Acc::default(); nshell];
        let mut abs = vec![0.0; nshell];
        let mut err = 0.0;
        points_within(m, shift, radius, |nu, x, mv| {
            // points beyond the last complete shell are left to the tail bound
            let k = (mv.sqrt() / width).floor() as usize;
            if k >= nshell {
                return;
            }
            let t = f(nu, x);
            let a = t.value.norm();
            if a.is_finite() {
                sums[k].add(t.value);
                abs[k] += a;
                err += a * f64::EPSILON * (2.0 + t.arg.abs());
            } else {
                abs[k] = f64::INFINITY;
            }
        });
        finish(&sums, &abs, err, nshell as f64 * width)
    };
    if let Some(r) = fixed_radius {
        return eval(r);
    }
    let mut r = min_radius.max(4.0 * width);
    loop {
        let sv = eval(r);
        if sv.cert.tail <= eps / 10.0 || box_size(m, r * 1.5) > MAX_BOX {
            return sv;
        }
        r *= 1.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_sum_is_certified() {
        // Σ e^{−πk²/2}
        let f = |k: i64| {
            let a = -std::f64::consts::PI * (k * k) as f64 / 2.0;
            Term::new(C64::new(a.exp(), 0.0), a)
        };
        let sv = sum_1d(0, 0, 1e-14, None, f);
        let bigger = sum_1d(0, 0, 1e-14, Some(sv.cert.shells * 2), f);
        assert!((sv.value - bigger.value).norm() <= sv.cert.bound());
        assert!(sv.cert.tail < 1e-15);
    }

    #[test]
    fn geometric_tail_bound_dominates() {
        let shells = [1.0, 0.5, 0.25, 0.125];
        let t = shell_tail(&shells);
        assert!(t >= 0.125);
        assert!(shell_tail(&[1.0, 1.0, 2.0]).is_infinite());
    }

    #[test]
    fn box_enumeration_counts_disc() {
        let m = Majorant::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut count = 0;
        points_within(&m, &[0.0, 0.0], 2.0, |_, _, _| count += 1);
        assert_eq!(count, 13);
    }
}
