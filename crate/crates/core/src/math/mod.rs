//! Numerical primitives shared by the estimators.

mod basis;
mod bell;
mod kernel;
mod phi;
mod quadrature;

pub use basis::PolyBasis;
pub use bell::{bell_compose, partial_bell_table};
pub use kernel::Kernel;
pub use phi::{phi, phi_deriv, phi_inverse};
pub(crate) use phi::{phi_deriv_unchecked, phi_inverse_unchecked, phi_unchecked};
pub use quadrature::{gauss_legendre, QuadratureRule};

/// Quantile check function `rho_tau(u) = u (tau - 1[u < 0])`.
#[inline]
pub fn check_loss(tau: f64, u: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns the final bracket and the best point seen.
pub fn golden_section_min(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_evals: usize,
) -> GoldenResult {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;
    while evals < max_evals && (b - a) > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    GoldenResult { lo: a, hi: b, x, fx }
}

#[derive(Debug, Clone, Copy)]
pub struct GoldenResult {
    pub lo: f64,
    pub hi: f64,
    pub x: f64,
    pub fx: f64,
}

/// Bisection for a sign change of `f` on `[a, b]`; `None` if the endpoints
/// do not bracket a root.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) || fa * fb > 0.0 {
        return None;
    }
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn check_loss_values() {
        assert_eq!(check_loss(0.3, 2.0), 0.6);
        assert_abs_diff_eq!(check_loss(0.3, -2.0), 1.4, epsilon = 1e-15);
        assert_eq!(check_loss(0.9, 0.0), 0.0);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let r = golden_section_min(|x| (x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-10, 500);
        assert_abs_diff_eq!(r.x, 0.3, epsilon = 1e-8);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, 2.0_f64.sqrt(), epsilon = 1e-13);
        assert!(bisect_root(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
