use auction_risk::math::{bell_compose, check_loss, gauss_legendre, phi, phi_deriv, phi_inverse, Kernel};
use proptest::prelude::*;

#[test]
fn phi_deriv_example() {
    assert!((phi_deriv(0.3, 3, 1).unwrap() - 1.26).abs() < 1e-12);
    let fd = (phi(0.3 + 1e-6, 3).unwrap() - phi(0.3 - 1e-6, 3).unwrap()) / 2e-6;
    assert!((fd - 1.26).abs() < 1e-6);
}

#[test]
fn phi_deriv_vanishes_above_bidder_count() {
    for i in 2..7u32 {
        assert_eq!(phi_deriv(0.4, i, i + 1).unwrap(), 0.0);
        assert!(phi_deriv(0.4, i, i).unwrap() != 0.0);
    }
}

#[test]
fn bell_composition_of_cube_of_square() {
    // g(f(t)) = t^6 with f = t^2, g = u^3
    let t: f64 = 0.7;
    let f = [2.0 * t, 2.0, 0.0];
    let u = t * t;
    let g = [3.0 * u * u, 6.0 * u, 6.0];
    let h = 1e-4;
    let c = |x: f64| x.powi(6);
    let fd2 = (c(t + h) - 2.0 * c(t) + c(t - h)) / (h * h);
    assert!((bell_compose(2, &f, &g).unwrap() - fd2).abs() < 1e-4);
    assert!((bell_compose(2, &f, &g).unwrap() - 30.0 * t.powi(4)).abs() < 1e-12);
}

#[test]
fn kernel_integrates_to_one() {
    for q in [3, 5, 9, 33] {
        let r = gauss_legendre(q).unwrap();
        let m = r.integrate(-1.0, 1.0, |t| Kernel::Epanechnikov.eval(t));
        assert!((m - 1.0).abs() < 1e-14, "{q}: {m}");
    }
}

fn composite_derivs(t: f64) -> ([f64; 3], [f64; 3], impl Fn(f64) -> f64) {
    // f(t) = sin t + 2t, g(u) = exp(u / 3)
    let f = [t.cos() + 2.0, -t.sin(), -t.cos()];
    let u = t.sin() + 2.0 * t;
    let e = (u / 3.0).exp();
    let g = [e / 3.0, e / 9.0, e / 27.0];
    (f, g, |s: f64| ((s.sin() + 2.0 * s) / 3.0).exp())
}

proptest! {
    #[test]
    fn phi_round_trip(a in 0.0f64..=1.0, i in 2u32..9) {
        let p = phi(a, i).unwrap();
        let back = phi_inverse(p, i).unwrap();
        prop_assert!((phi(back, i).unwrap() - p).abs() <= 1e-10);
        if a > 1e-3 && a < 1.0 - 1e-3 {
            prop_assert!((back - a).abs() <= 1e-10, "{a} -> {p} -> {back}");
        }
        let q = phi_inverse(a, i).unwrap();
        prop_assert!((phi(q, i).unwrap() - a).abs() <= 1e-10);
    }

    #[test]
    fn phi_is_increasing(a in 0.0f64..0.999, d in 1e-6f64..1e-3, i in 2u32..9) {
        let b = (a + d).min(1.0);
        prop_assert!(phi(b, i).unwrap() >= phi(a, i).unwrap());
    }

    #[test]
    fn phi_deriv_matches_finite_differences(a in 0.01f64..0.99, i in 2u32..9) {
        let e = 1e-6;
        let fd = (phi(a + e, i).unwrap() - phi(a - e, i).unwrap()) / (2.0 * e);
        prop_assert!((phi_deriv(a, i, 1).unwrap() - fd).abs() <= 1e-6);
        let fd2 = (phi_deriv(a + e, i, 1).unwrap() - phi_deriv(a - e, i, 1).unwrap()) / (2.0 * e);
        prop_assert!((phi_deriv(a, i, 2).unwrap() - fd2).abs() <= 1e-5);
    }

    #[test]
    fn bell_matches_finite_differences(t in -1.0f64..1.0) {
        let (f, g, c) = composite_derivs(t);
        let h = 1e-3;
        let d1 = (c(t + h) - c(t - h)) / (2.0 * h);
        let d2 = (c(t + h) - 2.0 * c(t) + c(t - h)) / (h * h);
        let d3 = (c(t + 2.0 * h) - 2.0 * c(t + h) + 2.0 * c(t - h) - c(t - 2.0 * h)) / (2.0 * h * h * h);
        prop_assert!((bell_compose(1, &f, &g).unwrap() - d1).abs() <= 1e-4);
        prop_assert!((bell_compose(2, &f, &g).unwrap() - d2).abs() <= 1e-4);
        prop_assert!((bell_compose(3, &f, &g).unwrap() - d3).abs() <= 1e-4);
    }

    #[test]
    fn check_loss_is_convex_and_nonnegative(
        tau in 0.0f64..=1.0,
        u in -10.0f64..10.0,
        v in -10.0f64..10.0,
        lam in 0.0f64..=1.0,
    ) {
        let mid = check_loss(tau, lam * u + (1.0 - lam) * v);
        let chord = lam * check_loss(tau, u) + (1.0 - lam) * check_loss(tau, v);
        prop_assert!(mid <= chord + 1e-12);
        prop_assert!(check_loss(tau, u) >= 0.0);
    }
}
