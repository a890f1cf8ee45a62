//! Special functions: incomplete gamma, the error-function form E, the Fourier weights
//! H(y; D) and H^{H[e]}, Jacobi θ, theta series of definite lattices, Dedekind η,
//! Weierstrass ζ and the completion series R.


use crate::enumerate::{sum_1d, sum_lattice, Majorant, SeriesValue, Term};
use crate::lattice::{DiscElement, Lattice};
use crate::rational::vec_f64;
use crate::{e, Error, Precision, Result, C64, PI, TAU};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaKind {
    Lower,
    Upper,
}

/// γ(s, x) = ∫₀ˣ t^{s−1}e^{−t} dt (s > 0) or Γ(s, x) = ∫ₓ^∞ t^{s−1}e^{−t} dt (any real s, x > 0).
pub fn incomplete_gamma(s: f64, x: f64, kind: GammaKind) -> Result<f64> {
    if !(x >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("incomplete gamma: invalid arguments s={s}, x={x}")));
    }
    match kind {
        GammaKind::Lower => {
            if s <= 0.0 {
                return Err(Error::Domain(format!("lower incomplete gamma needs s > 0, got {s}")));
            }
            Ok(if x == 0.0 {
                0.0
            } else if x < s + 1.0 {
                gamma_series(s, x)
            } else {
                libm::tgamma(s) - upper_gamma_cf(s, x)
            })
        }
        GammaKind::Upper => {
            if x == 0.0 {
                return if s > 0.0 {
                    Ok(libm::tgamma(s))
                } else {
                    Err(Error::Domain(format!("Γ({s}, 0) diverges")))
                };
            }
            Ok(upper_gamma(s, x))
        }
    }
}

pub fn lower_gamma(s: f64, x: f64) -> f64 {
    incomplete_gamma(s, x, GammaKind::Lower).expect("lower gamma domain")
}

/// Γ(s, x) for x > 0 and real s.
pub fn upper_gamma(s: f64, x: f64) -> f64 {
    if s > 0.0 && x < s + 1.0 {
        return libm::tgamma(s) - gamma_series(s, x);
    }
    if x >= 1.0 {
        return upper_gamma_cf(s, x);
    }
    // small x, s ≤ 0: recurrence Γ(s, x) = (Γ(s+1, x) − x^s e^{−x}) / s downwards from s + n ∈ (0, 1]
    let n = (1.0 - s).floor().max(0.0) as i32;
    let top = s + n as f64;
    let mut g = if top.abs() < 1e-15 { exp_integral_e1(x) } else { libm::tgamma(top) - gamma_series(top, x) };
    let mut a = top;
    for _ in 0..n {
        a -= 1.0;
        g = (g - x.powf(a) * (-x).exp()) / a;
    }
    g
}

/// γ(s, x) by its power series x^s e^{−x} Σ xⁿ/(s(s+1)…(s+n)); used for x < s + 1.
fn gamma_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    for n in 1..10_000 {
        term *= x / (s + n as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-x + s * x.ln()).exp()
}

/// Modified Lentz evaluation of the continued fraction for Γ(s, x); valid for x > 0 and any s.
fn upper_gamma_cf(s: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + s * x.ln()).exp() * h
}

/// E₁(x) = Γ(0, x).
fn exp_integral_e1(x: f64) -> f64 {
    if x >= 1.0 {
        return upper_gamma_cf(0.0, x);
    }
    const EULER: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let t = term / k as f64;
        sum += t;
        if t.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER - x.ln() - sum
}

/// E(x) = 2∫₀ˣ e^{−πu²} du = erf(√π x).
pub fn erf_e(x: f64) -> f64 {
    libm::erf(PI.sqrt() * x)
}

/// ln erfc(t) for t ≥ 0, accurate far into the tail.
pub fn ln_erfc(t: f64) -> f64 {
    if t < 25.0 {
        return libm::erfc(t).ln();
    }
    let t2 = t * t;
    let inv = 1.0 / (2.0 * t2);
    // asymptotic series 1 − 1/(2t²) + 3/(2t²)² − 15/(2t²)³ + …
    let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv.powi(3) + 105.0 * inv.powi(4);
    -t2 - (t * PI.sqrt()).ln() + series.ln()
}

/// sgn with sgn(0) = 0.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// H(y; D): the non-holomorphic Fourier weight, from its integral definition.
pub fn h_weight(y: f64, d: f64, k: i64, n: i64, absdet: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain("H(y; D) needs y > 0".into()));
    }
    if d > 0.0 {
        return Err(Error::Domain("unsupported branch (analytic continuation in k not implemented)".into()));
    }
    if d == 0.0 {
        return Ok(y.powf(-(k as f64) + n as f64 / 2.0));
    }
    let yy = PI * d * y / (2.0 * absdet);
    Ok((-yy).exp() * upper_gamma(1.0 - k as f64 - n as f64 / 2.0, -2.0 * yy))
}

/// Arguments of H^{H[e]} for a unit frame vector: L_e = Q(ê), v_e, r_e.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisData {
    pub l_e: f64,
    pub y: f64,
    pub v_e: f64,
    pub r_e: f64,
}

/// sgn(r_e + 2L_e v_e/y) · γ(½, −(yπ/L_e)(r_e + 2L_e v_e/y)²).
pub fn h_heis(d: &HeisData) -> Result<f64> {
    if !(d.l_e < 0.0) {
        return Err(Error::Domain(format!("H^H needs L_e < 0, got {}", d.l_e)));
    }
    if !(d.y > 0.0) {
        return Err(Error::Domain("H^H needs y > 0".into()));
    }
    let w = d.r_e + 2.0 * d.l_e * d.v_e / d.y;
    let x = -d.y * PI / d.l_e * w * w;
    Ok(if w == 0.0 { 0.0 } else { sgn(w) * lower_gamma(0.5, x) })
}

/// A value s·(1 − c) with s ∈ {−1, 0, 1} and c = exp(ln_c) ∈ [0, 1]; keeps
/// kernels like sgn − E accurate when they are exponentially small.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedComplement {
    pub sign: f64,
    pub ln_c: f64,
}

impl SignedComplement {
    pub fn sgn(x: f64) -> Self {
        SignedComplement { sign: sgn(x), ln_c: f64::NEG_INFINITY }
    }

    /// E(x) = sgn(x)(1 − erfc(√π|x|)).
    pub fn e(x: f64) -> Self {
        SignedComplement { sign: sgn(x), ln_c: ln_erfc(PI.sqrt() * x.abs()) }
    }

    pub fn value(&self) -> f64 {
        self.sign * (1.0 - self.ln_c.exp())
    }

    pub fn neg(self) -> Self {
        SignedComplement { sign: -self.sign, ..self }
    }

    /// (sign, ln|a − b|).
    pub fn diff(a: Self, b: Self) -> (f64, f64) {
        if a.sign != 0.0 && a.sign == b.sign {
            // a − b = s(c_b − c_a)
            let (hi, lo, s) = if b.ln_c >= a.ln_c { (b.ln_c, a.ln_c, a.sign) } else { (a.ln_c, b.ln_c, -a.sign) };
            if hi == f64::NEG_INFINITY {
                return (0.0, f64::NEG_INFINITY);
            }
            let r = (lo - hi).exp();
            if r == 1.0 {
                return (0.0, f64::NEG_INFINITY);
            }
            (s, hi + (-r).ln_1p())
        } else {
            let d = a.value() - b.value();
            (sgn(d), d.abs().ln())
        }
    }
}

// ---------------------------------------------------------------------------
// series in one variable

/// θ(τ, z) = Σ_{r ∈ Z+½} (−1)^{r+½} q^{r²/2} ζ^r.
pub fn jacobi_theta_odd(tau: C64, z: C64, prec: Precision) -> SeriesValue {
    jacobi_theta_odd_n(tau, z, prec, None)
}

pub fn jacobi_theta_odd_n(tau: C64, z: C64, prec: Precision, fixed: Option<usize>) -> SeriesValue {
    let (y, v) = (tau.im, z.im);
    let k0 = (-v / y - 0.5).round() as i64;
    sum_1d(k0, 0, prec.eps, fixed, |k| {
        let r = k as f64 + 0.5;
        let arg = C64::new(0.0, TAU) * (tau * (r * r / 2.0) + z * r);
        let sign = if k.rem_euclid(2) == 0 { -1.0 } else { 1.0 };
        Term::new(arg.exp() * sign, arg.re.abs() + arg.im.abs())
    })
}

/// Completion series R(τ, z) = Σ_{r ∈ Z+½} (sgn r − E((r − v/y)√(2y))) (−1)^{r+½} q^{−r²/2} ζ^r.
pub fn r_completion(tau: C64, z: C64, prec: Precision) -> SeriesValue {
    r_completion_n(tau, z, prec, None)
}

pub fn r_completion_n(tau: C64, z: C64, prec: Precision, fixed: Option<usize>) -> SeriesValue {
    let (y, v) = (tau.im, z.im);
    let a = v / y;
    let k0 = (a / 2.0).round() as i64;
    let min_shells = (a.abs() / 2.0).ceil() as usize + 3;
    sum_1d(k0, min_shells, prec.eps, fixed, |k| {
        let r = k as f64 + 0.5;
        let w = SignedComplement::sgn(r);
        let ee = SignedComplement::e((r - a) * (2.0 * y).sqrt());
        let (s, ln_w) = SignedComplement::diff(w, ee);
        if s == 0.0 {
            return Term::new(C64::new(0.0, 0.0), 0.0);
        }
        let arg = C64::new(0.0, TAU) * (-tau * (r * r / 2.0) + z * r);
        let sign = if k.rem_euclid(2) == 0 { -s } else { s };
        Term::new(C64::from_polar((arg.re + ln_w).exp(), arg.im) * sign, arg.re.abs() + arg.im.abs())
    })
}

/// η(τ) = q^{1/24} ∏ (1 − qⁿ).
pub fn dedekind_eta(tau: C64, prec: Precision) -> SeriesValue {
    dedekind_eta_n(tau, prec, None)
}

/// η with a prescribed number of product factors when `fixed` is given.
pub fn dedekind_eta_n(tau: C64, prec: Precision, fixed: Option<usize>) -> SeriesValue {
    let q = e(tau);
    let aq = q.norm();
    let mut p = C64::new(1.0, 0.0);
    let mut qn = C64::new(1.0, 0.0);
    let mut n = 0usize;
    loop {
        n += 1;
        qn *= q;
        p *= C64::new(1.0, 0.0) - qn;
        let done = match fixed {
            Some(m) => n >= m.max(1),
            None => aq.powi(n as i32 + 1) < prec.eps * 1e-3 || n > 100_000,
        };
        if done {
            break;
        }
    }
    let value = e(tau / 24.0) * p;
    let rest = aq.powi(n as i32 + 1) / ((1.0 - aq) * (1.0 - aq.powi(n as i32 + 1)));
    SeriesValue {
        value,
        cert: crate::enumerate::Certificate {
            radius: n as f64,
            tail: value.norm() * rest.exp_m1() * 2.0,
            roundoff: value.norm() * f64::EPSILON * (4.0 + n as f64),
            shells: n,
        },
    }
}

fn cot_pi(w: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    if w.im >= 0.0 {
        let t = e(w);
        i * (t + one) / (t - one)
    } else {
        let t = e(-w);
        i * (one + t) / (one - t)
    }
}

fn inv_sin2_pi(w: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let t = if w.im >= 0.0 { e(w) } else { e(-w) };
    -t * 4.0 / ((one - t) * (one - t))
}

/// Weierstrass ζ for the lattice Z + τZ.
///
/// The absolutely convergent lattice sum 1/u + Σ_{ω≠0}(1/(u−ω) + 1/ω + u/ω²) is summed row by
/// row (ω = m + nτ, n fixed); each row over m has the closed form
/// π cot π(u − nτ) + π cot πnτ + π²u / sin² πnτ (row n = 0: π cot πu + π²u/3).
pub fn weierstrass_zeta(tau: C64, u: C64, prec: Precision) -> Result<SeriesValue> {
    weierstrass_zeta_n(tau, u, prec, None)
}

pub fn weierstrass_zeta_n(tau: C64, u: C64, prec: Precision, fixed: Option<usize>) -> Result<SeriesValue> {
    if lattice_distance(tau, u) < 10.0 * prec.eps.sqrt() {
        return Err(Error::Pole(format!("Weierstrass zeta: u = {u} lies on Z + τZ")));
    }
    let pi = C64::new(PI, 0.0);
    let row = |n: i64| -> C64 {
        if n == 0 {
            pi * cot_pi(u) + u * (PI * PI / 3.0)
        } else {
            let w = tau * n as f64;
            pi * (cot_pi(u - w) + cot_pi(w)) + u * (PI * PI) * inv_sin2_pi(w)
        }
    };
    // rows decay like |q|^{|n|} only once |n| exceeds |Im u / Im τ|
    let min_shells = (u.im / tau.im).abs().ceil() as usize + 3;
    Ok(sum_1d(0, min_shells, prec.eps, fixed, |n| Term::new(row(n), 4.0)))
}

/// Euclidean distance from u to the nearest point of Z + τZ.
pub fn lattice_distance(tau: C64, u: C64) -> f64 {
    let n = (u.im / tau.im).round();
    let mut best = f64::INFINITY;
    for dn in -1..=1 {
        let nn = n + dn as f64;
        let w = u - tau * nn;
        let m = w.re.round();
        for dm in -1..=1 {
            best = best.min((w - (m + dm as f64)).norm());
        }
    }
    best
}

/// θ_{Λ,l}(τ, z) = Σ_{ν ∈ l + Zᴺ} e(Q(ν)τ + B(ν, z)) for positive definite Λ.
pub fn theta_definite(lat: &Lattice, l: &DiscElement, tau: C64, z: &[C64], prec: Precision) -> Result<SeriesValue> {
    theta_definite_r(lat, l, tau, z, prec, None)
}

pub fn theta_definite_r(
    lat: &Lattice,
    l: &DiscElement,
    tau: C64,
    z: &[C64],
    prec: Precision,
    fixed_radius: Option<f64>,
) -> Result<SeriesValue> {
    let n = lat.rank();
    if lat.signature().pos != n {
        return Err(Error::Invalid("theta_definite needs a positive definite lattice".into()));
    }
    if z.len() != n || l.0.len() != n {
        return Err(Error::Dimension { expected: n, got: z.len().min(l.0.len()) });
    }
    let y = tau.im;
    let lf = vec_f64(&l.0);
    // majorant: Q itself, centred at ν + v/y where the terms peak
    let shift: Vec<f64> = (0..n).map(|i| lf[i] + z[i].im / y).collect();
    let p: Vec<Vec<f64>> = lat.gram_f64().iter().map(|r| r.iter().map(|x| x / 2.0).collect()).collect();
    let m = Majorant::new(p).ok_or_else(|| Error::Invalid("singular majorant".into()))?;
    let i2pi = C64::new(0.0, TAU);
    Ok(sum_lattice(&m, &shift, prec.eps, fixed_radius, 0.0, |nu, _| {
        let x: Vec<f64> = (0..n).map(|i| nu[i] as f64 + lf[i]).collect();
        let arg = i2pi * (tau * lat.q_f(&x) + lat.b_fc(&x, z));
        Term::new(arg.exp(), arg.norm())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_small_and_large_agree_with_cf() {
        for &x in &[0.3, 0.9, 1.0, 2.5] {
            let a = exp_integral_e1(x);
            let b = upper_gamma_cf(0.0, x.max(1.0));
            if x >= 1.0 {
                assert!((a - b).abs() < 1e-14 * b.abs());
            } else {
                assert!(a.is_finite() && a > 0.0);
            }
        }
    }

    #[test]
    fn ln_erfc_continuous_at_switch() {
        let a = libm::erfc(24.999).ln();
        let b = ln_erfc(25.0);
        assert!((a - b).abs() < 0.1);
        let c = ln_erfc(25.000_001);
        assert!((b - c).abs() < 1e-3);
    }

    #[test]
    fn signed_complement_difference_is_accurate_in_the_tail() {
        let a = SignedComplement::e(6.0);
        let b = SignedComplement::e(5.0);
        let (s, l) = SignedComplement::diff(a, b);
        let expected = libm::erfc(PI.sqrt() * 5.0) - libm::erfc(PI.sqrt() * 6.0);
        assert_eq!(s, 1.0);
        assert!((l.exp() - expected).abs() < 1e-12 * expected);
    }
}
