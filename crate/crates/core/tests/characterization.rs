//! Frozen observations about the index-m μ̂ functions as defined, kept so a
//! change of convention shows up as a test failure.

use mjf_core::lattice::*;
use mjf_core::mu::*;
use mjf_core::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn mu_hat_1_is_elliptic_in_tau_direction() {
    let p = Precision::default();
    let tau = c(0.13, 1.07);
    for l in [0i64, 1] {
        let mut ratios = vec![];
        for z in [c(0.141, 0.087), c(-0.05, 0.12)] {
            let a = mu_hat_ml(1, l, tau, z, p).unwrap().value;
            let b = mu_hat_ml(1, l, tau, z + tau, p).unwrap().value;
            // index −1: φ(z+τ) = e(τ + 2z)·φ(z) up to the component's character
            ratios.push(b / (a * e(tau + z * 2.0)));
        }
        assert!((ratios[0] - ratios[1]).norm() < 1e-6, "l={l}: {ratios:?}");
        assert!((ratios[0].norm() - 1.0).abs() < 1e-6, "l={l}: {ratios:?}");
    }
}

#[test]
fn mu_hat_2_is_periodic_but_not_elliptic() {
    let p = Precision::default();
    let tau = c(0.13, 1.07);
    let zs = [c(0.141, 0.087), c(-0.05, 0.12), c(0.3, -0.04)];
    let mut ratios = vec![];
    for z in zs {
        let a = mu_hat_ml(2, 0, tau, z, p).unwrap().value;
        let a1 = mu_hat_ml(2, 0, tau, z + 1.0, p).unwrap().value;
        assert!((a1 - a).norm() < 1e-9 * a.norm().max(1.0));
        let b = mu_hat_ml(2, 0, tau, z + tau, p).unwrap().value;
        ratios.push(b / (a * e(tau * 2.0 + z * 4.0)));
    }
    // no index-2 factor makes the τ-shift ratio constant in z
    let spread = ratios.iter().map(|r| (r - ratios[0]).norm()).fold(0.0, f64::max) / ratios[0].norm();
    assert!(spread > 1e-2, "ratios {ratios:?}");
}

#[test]
fn mu_hat_1_s_transform_is_not_weil_type() {
    let p = Precision::default();
    let f = |t: C64, z: C64| [0i64, 1].map(|l| mu_hat_ml(1, l, t, z, p).unwrap().value);
    let lm = Lattice::from_ints(&[vec![-1]], Mode::PaperL).unwrap();
    let w = lm.weil_representation().unwrap();
    let (tau, z) = (c(0.13, 1.07), c(0.141, 0.087));
    let lhs = f(-1.0 / tau, z / tau);
    let rhs = cmat_vec(&w.s, &f(tau, z));
    // compare moduli only, so any phase or character is allowed
    let auto = tau.powf(-0.5) * e(z * z / tau);
    let dev = (0..2).map(|i| ((lhs[i] * auto).norm() - rhs[i].norm()).abs()).fold(0.0, f64::max);
    assert!(dev > 0.1, "moduli unexpectedly agree: {dev}");
}
