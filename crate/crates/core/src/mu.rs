//! The μ-function family: two-variable μ̂, μ_m, μ̂_{m,l}, μ̂_{L,l} and the splitting residual.

use num::{Signed, ToPrimitive, Zero};

use crate::enumerate::{sum_1d, sum_lattice, Certificate, Majorant, SeriesValue, Term};
use crate::lattice::{classify, DiscElement, Frame, Lattice, Mode, VecClass};
use crate::rational::{det, inverse, mat_mul, mat_vec, primitive, rat, transpose, RMat, RVec, Rat};
use crate::specfun::{jacobi_theta_odd, lattice_distance, theta_definite, weierstrass_zeta};
use crate::{e, Error, Precision, Result, C64, PI};

const I: C64 = C64::new(0.0, 1.0);

/// Pole test: distance to Zτ + Z below 10·√ε.
fn on_lattice(tau: C64, w: C64, prec: Precision) -> bool {
    lattice_distance(tau, w) < 10.0 * prec.eps.sqrt()
}

fn pole(tau: C64, w: C64, prec: Precision, what: &str) -> Result<()> {
    if on_lattice(tau, w, prec) {
        return Err(Error::Pole(format!("{what} = {w} lies on Z + tau Z")));
    }
    Ok(())
}

/// Combines a product/quotient of certified values: bound ≈ |value|·Σ relative bounds.
fn combine(value: C64, parts: &[&SeriesValue], radius: f64) -> SeriesValue {
    let rel: f64 = parts.iter().map(|p| p.cert.bound() / p.value.norm().max(f64::MIN_POSITIVE)).sum();
    let tail_rel: f64 = parts.iter().map(|p| p.cert.tail / p.value.norm().max(f64::MIN_POSITIVE)).sum();
    SeriesValue {
        value,
        cert: Certificate {
            radius,
            tail: value.norm() * tail_rel,
            roundoff: value.norm() * (rel - tail_rel).max(0.0) + 8.0 * f64::EPSILON * value.norm(),
            shells: parts.iter().map(|p| p.cert.shells).max().unwrap_or(0),
        },
    }
}

fn add(a: &SeriesValue, b: &SeriesValue, sb: C64) -> SeriesValue {
    SeriesValue {
        value: a.value + sb * b.value,
        cert: Certificate {
            radius: a.cert.radius.max(b.cert.radius),
            tail: a.cert.tail + sb.norm() * b.cert.tail,
            roundoff: a.cert.roundoff + sb.norm() * b.cert.roundoff,
            shells: a.cert.shells.max(b.cert.shells),
        },
    }
}

/// Σ_n (−1)ⁿ q^{(n²+n)/2} e(nv) / (1 − e(nτ + u)).
fn appell_sum(tau: C64, u: C64, v: C64, prec: Precision, fixed: Option<usize>) -> SeriesValue {
    let y = tau.im;
    let k0 = (-v.im / y).round() as i64;
    let min_shells = (u.im / y).abs().ceil() as usize + (v.im / y).abs().ceil() as usize + 3;
    sum_1d(k0, min_shells, prec.eps, fixed, |n| {
        let nf = n as f64;
        let arg = C64::new(0.0, 2.0 * PI) * (tau * ((nf * nf + nf) / 2.0) + v * nf);
        let den = C64::new(1.0, 0.0) - e(tau * nf + u);
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Term::new(arg.exp() / den * sign, arg.norm())
    })
}

/// μ̂(τ, u, v) = i·e^{πiu}/θ(τ, v)·Σ_n (−1)ⁿq^{(n²+n)/2}e(nv)/(1 − e(nτ + u)) − (i/2)R(τ, u − v).
pub fn mu_two_var(tau: C64, u: C64, v: C64, prec: Precision) -> Result<SeriesValue> {
    mu_two_var_n(tau, u, v, prec, None)
}

pub fn mu_two_var_n(tau: C64, u: C64, v: C64, prec: Precision, fixed: Option<usize>) -> Result<SeriesValue> {
    if !(tau.im > 0.0) {
        return Err(Error::Domain("Im tau must be positive".into()));
    }
    pole(tau, u, prec, "u (pole of the Appell sum)")?;
    pole(tau, v, prec, "v (zero of theta(tau, v))")?;
    let th = crate::specfun::jacobi_theta_odd_n(tau, v, prec, fixed.map(|n| n + 4));
    let s = appell_sum(tau, u, v, prec, fixed);
    let pre = I * (C64::new(0.0, PI) * u).exp() / th.value;
    let first = combine(pre * s.value, &[&s, &th], s.cert.radius);
    let r = crate::specfun::r_completion_n(tau, u - v, prec, fixed);
    Ok(add(&first, &r, -I / 2.0))
}

/// μ̂ − (ζ(u) − ζ(v) + ζ(u − v)) / (2π θ(τ, u − v)); depends on u − v only.
pub fn splitting_residual(tau: C64, u: C64, v: C64, prec: Precision) -> Result<SeriesValue> {
    pole(tau, u - v, prec, "u - v (zero of theta(tau, u - v))")?;
    let mu = mu_two_var(tau, u, v, prec)?;
    let zu = weierstrass_zeta(tau, u, prec)?;
    let zv = weierstrass_zeta(tau, v, prec)?;
    let zw = weierstrass_zeta(tau, u - v, prec)?;
    let th = jacobi_theta_odd(tau, u - v, prec);
    let num = zu.value - zv.value + zw.value;
    let numv = SeriesValue {
        value: num,
        cert: Certificate {
            radius: zu.cert.radius,
            tail: zu.cert.tail + zv.cert.tail + zw.cert.tail,
            roundoff: zu.cert.roundoff + zv.cert.roundoff + zw.cert.roundoff,
            shells: zu.cert.shells,
        },
    };
    let q = combine(num / (2.0 * PI * th.value), &[&numv, &th], th.cert.radius);
    Ok(add(&mu, &q, C64::new(-1.0, 0.0)))
}

/// μ_m(τ, z₁, z₂) = e(z₁/2)/θ(τ, z₂)^{2m} Σ_{n ∈ Z^{2m}} (−1)^{|n|} q^{(‖n‖² + |n|)/2} e(z₂|n|) / (1 − e(z₁)q^{|n|}),
/// with |n| the coordinate sum and ‖n‖² the sum of squares.
pub fn mu_m_eval(m: u32, tau: C64, z1: C64, z2: C64, prec: Precision) -> Result<SeriesValue> {
    mu_m_eval_r(m, tau, z1, z2, prec, None)
}

pub fn mu_m_eval_r(m: u32, tau: C64, z1: C64, z2: C64, prec: Precision, fixed_radius: Option<f64>) -> Result<SeriesValue> {
    if m == 0 {
        return Err(Error::Invalid("mu_m needs m > 0".into()));
    }
    if !(tau.im > 0.0) {
        return Err(Error::Domain("Im tau must be positive".into()));
    }
    pole(tau, z1, prec, "z1 (pole of 1/(1 - e(z1) q^|n|))")?;
    pole(tau, z2, prec, "z2 (zero of theta(tau, z2))")?;
    let dim = 2 * m as usize;
    let y = tau.im;
    let id: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let maj = Majorant::new(id).expect("identity");
    // terms peak near nᵢ = −½ − Im z₂/y
    let c = 0.5 + z2.im / y;
    let shift = vec![c; dim];
    let min_radius = (dim as f64).sqrt() * (z1.im / y).abs();
    let s = sum_lattice(&maj, &shift, prec.eps, fixed_radius, min_radius, |nu, _| {
        let s: i64 = nu.iter().sum();
        let n2: i64 = nu.iter().map(|x| x * x).sum();
        let sf = s as f64;
        let arg = C64::new(0.0, 2.0 * PI) * (tau * ((n2 as f64 + sf) / 2.0) + z2 * sf);
        let den = C64::new(1.0, 0.0) - e(z1 + tau * sf);
        let sign = if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Term::new(arg.exp() / den * sign, arg.norm())
    });
    let th = jacobi_theta_odd(tau, z2, prec);
    let pre = e(z1 / 2.0) / th.value.powi(dim as i32);
    let thp = SeriesValue { value: th.value, cert: Certificate { tail: th.cert.tail * dim as f64, roundoff: th.cert.roundoff * dim as f64, ..th.cert } };
    Ok(combine(pre * s.value, &[&s, &thp], s.cert.radius))
}

/// μ̂_{m,l}(τ, z) = (−1)^m/√m · q^{−(l+m)²/4m} ζ^{−(l+m)} ·
/// (μ_m(τ, 2mz + (l+m)τ + ½, 1/4m) − (i/2)R(2mτ, 2mz + (l+m)τ − (2m+1)/2)).
pub fn mu_hat_ml(m: u32, l: i64, tau: C64, z: C64, prec: Precision) -> Result<SeriesValue> {
    mu_hat_ml_r(m, l, tau, z, prec, None)
}

pub fn mu_hat_ml_r(m: u32, l: i64, tau: C64, z: C64, prec: Precision, fixed_radius: Option<f64>) -> Result<SeriesValue> {
    if m == 0 {
        return Err(Error::Invalid("mu_hat_{m,l} needs m > 0".into()));
    }
    let mf = m as f64;
    let lm = (l + m as i64) as f64;
    let w = z * (2.0 * mf) + tau * lm;
    let a = mu_m_eval_r(m, tau, w + 0.5, C64::new(1.0 / (4.0 * mf), 0.0), prec, fixed_radius)?;
    let r = crate::specfun::r_completion_n(
        tau * (2.0 * mf),
        w - (2.0 * mf + 1.0) / 2.0,
        prec,
        fixed_radius.map(|x| (2.0 * x) as usize + 4),
    );
    let inner = add(&a, &r, -I / 2.0);
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let pre = e(-tau * (lm * lm / (4.0 * mf)) - z * lm) * (sign / mf.sqrt());
    Ok(SeriesValue {
        value: pre * inner.value,
        cert: Certificate {
            tail: pre.norm() * inner.cert.tail,
            roundoff: pre.norm() * inner.cert.roundoff + 4.0 * f64::EPSILON * (pre * inner.value).norm(),
            ..inner.cert
        },
    })
}

/// θ_{m,l}(τ, z) = Σ_{r ≡ l (2m)} q^{r²/4m} ζ^r, the rank-one theta block of index m.
pub fn theta_ml(m: u32, l: i64, tau: C64, z: C64, prec: Precision) -> Result<SeriesValue> {
    let lat = Lattice::from_ints(&[vec![m as i64]], Mode::PaperL)?;
    let x = DiscElement::reduce(&[Rat::new(l.into(), (2 * m as i64).into())]);
    theta_definite(&lat, &x, tau, &[z], prec)
}

/// A lattice with a frame free of isotropic vectors and the block-diagonalizing matrix A whose
/// columns are the primitive integral multiples of the frame vectors.
#[derive(Clone, Debug)]
pub struct MuLatticeData {
    pub lattice: Lattice,
    pub frame: Frame,
    pub a: RMat,
    a_inv: RMat,
    /// Diagonal of Λ = AᵀGA (canonical Gram entries, even integers).
    pub blocks: Vec<i64>,
    /// Coset representatives of L/Λ in w = A⁻¹z coordinates.
    pub cosets: Vec<RVec>,
}

impl MuLatticeData {
    pub fn new(lattice: &Lattice, frame: &Frame) -> Result<Self> {
        let n = lattice.rank();
        if lattice.is_degenerate() {
            return Err(Error::Invalid("mu_hat_L needs a non-degenerate lattice".into()));
        }
        if !lattice.is_even() {
            return Err(Error::Invalid("mu_hat_L needs an even lattice".into()));
        }
        if frame.len() != n || !frame.is_independent() {
            return Err(Error::Invalid("mu_hat_L needs a frame spanning the whole space".into()));
        }
        if frame.vectors.iter().any(|e| e.len() != n) {
            return Err(Error::Dimension { expected: n, got: frame.vectors[0].len() });
        }
        if frame.vectors.iter().any(|e| classify(lattice, e) == VecClass::Isotropic) {
            return Err(Error::Invalid("mu_hat_L needs a frame without isotropic vectors".into()));
        }
        let cols: Vec<RVec> = frame
            .vectors
            .iter()
            .map(|e| primitive(e).into_iter().map(Rat::from_integer).collect())
            .collect();
        let a = transpose(&cols);
        let lam = mat_mul(&transpose(&a), &mat_mul(lattice.gram(), &a));
        for i in 0..n {
            for j in 0..n {
                if i != j && !lam[i][j].is_zero() {
                    return Err(Error::Invalid("frame vectors are not mutually orthogonal; A^T L A is not diagonal".into()));
                }
            }
        }
        let blocks: Vec<i64> = (0..n).map(|i| lam[i][i].to_integer().to_i64().expect("small block")).collect();
        let a_inv = inverse(&a).ok_or_else(|| Error::Invalid("A is singular".into()))?;
        // L/Λ in w-coordinates: A⁻¹Zᴺ modulo Zᴺ
        let index = det(&a).abs().to_integer().to_u64().expect("small index") as usize;
        let mut cosets: Vec<RVec> = vec![vec![Rat::zero(); n]];
        let gens: Vec<RVec> = (0..n).map(|j| a_inv.iter().map(|r| r[j].clone()).collect()).collect();
        let mut i = 0;
        while i < cosets.len() {
            for g in &gens {
                let c: RVec = cosets[i].iter().zip(g).map(|(x, y)| crate::rational::frac(&(x + y))).collect();
                if !cosets.contains(&c) {
                    cosets.push(c);
                }
            }
            i += 1;
        }
        debug_assert_eq!(cosets.len(), index);
        cosets.sort();
        Ok(MuLatticeData { lattice: lattice.clone(), frame: frame.clone(), a, a_inv, blocks, cosets })
    }

    pub fn index(&self) -> usize {
        self.cosets.len()
    }
}

/// μ̂_{L,l}(τ, z) = Σ_{λ ∈ L/Λ} Π_{e ∈ E₊} θ_{Λ_e,(l+λ)_e} Π_{e ∈ E₋} μ̂_{Λ_e,(l+λ)_e} at w = A⁻¹z.
pub fn mu_hat_ll(d: &MuLatticeData, l: &DiscElement, tau: C64, z: &[C64], prec: Precision) -> Result<SeriesValue> {
    let n = d.lattice.rank();
    if z.len() != n || l.0.len() != n {
        return Err(Error::Dimension { expected: n, got: z.len().min(l.0.len()) });
    }
    let ainv: Vec<Vec<f64>> = crate::rational::mat_f64(&d.a_inv);
    let w: Vec<C64> = (0..n).map(|i| (0..n).map(|j| z[j] * ainv[i][j]).sum()).collect();
    let lw = mat_vec(&d.a_inv, &l.0);
    let mut total = SeriesValue { value: C64::new(0.0, 0.0), cert: Certificate::exact() };
    for lam in &d.cosets {
        let mut prod = C64::new(1.0, 0.0);
        let mut rel = 0.0;
        let mut tail_rel = 0.0;
        for j in 0..n {
            let x = crate::rational::frac(&(&lw[j] + &lam[j]));
            let g = d.blocks[j];
            let m = (g.abs() / 2) as u32;
            let idx = (x * rat(g.abs())).to_integer().to_i64().expect("block component");
            let f = if g > 0 { theta_ml(m, idx, tau, w[j], prec)? } else { mu_hat_ml(m, idx, tau, w[j], prec)? };
            prod *= f.value;
            let mag = f.value.norm().max(f64::MIN_POSITIVE);
            rel += f.cert.bound() / mag;
            tail_rel += f.cert.tail / mag;
        }
        total.value += prod;
        total.cert.tail += prod.norm() * tail_rel;
        total.cert.roundoff += prod.norm() * (rel - tail_rel).max(0.0) + 4.0 * f64::EPSILON * prod.norm();
    }
    Ok(total)
}

/// Rank-one lattice of paper-L index −m with frame (1): μ̂_{L,l} = μ̂_{m, 2ml}.
pub fn negative_rank_one(m: i64) -> Result<(Lattice, Frame)> {
    Ok((Lattice::from_ints(&[vec![-m]], Mode::PaperL)?, Frame::from_ints(&[vec![1]])))
}
