//! The order-statistic link between value ranks and winning-bid ranks.
//!
//! With `I` bidders whose private ranks are i.i.d. uniform, the winning bid in
//! an ascending auction is the second-highest value, and its rank has CDF
//! `phi(a) = I a^(I-1) - (I-1) a^I`.

use crate::error::{Error, Result};

fn check(a: f64, n_bidders: u32) -> Result<()> {
    if n_bidders < 2 {
        return Err(Error::domain(format!(
            "bidder count must be at least 2, got {n_bidders}"
        )));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain(format!("probability {a} is outside [0, 1]")));
    }
    Ok(())
}

/// CDF of the (I-1)-th order statistic of `I` uniform ranks, evaluated at `a`.
pub fn phi(a: f64, n_bidders: u32) -> Result<f64> {
    check(a, n_bidders)?;
    Ok(phi_unchecked(a, n_bidders))
}

#[inline]
pub(crate) fn phi_unchecked(a: f64, n_bidders: u32) -> f64 {
    let i = n_bidders as i32;
    let fi = n_bidders as f64;
    let v = a.powi(i - 1) * (fi - (fi - 1.0) * a);
    v.clamp(0.0, 1.0)
}

/// `j`-th derivative of [`phi`] (j >= 1). Derivatives above order `I` vanish.
pub fn phi_deriv(a: f64, n_bidders: u32, order: u32) -> Result<f64> {
    check(a, n_bidders)?;
    if order == 0 {
        return Err(Error::domain("derivative order must be at least 1"));
    }
    Ok(phi_deriv_unchecked(a, n_bidders, order))
}

pub(crate) fn phi_deriv_unchecked(a: f64, n_bidders: u32, order: u32) -> f64 {
    if order == 1 {
        let fi = n_bidders as f64;
        return fi * (fi - 1.0) * a.powi(n_bidders as i32 - 2) * (1.0 - a);
    }
    // d^j/da^j a^m = m!/(m-j)! a^(m-j), zero once j > m.
    let falling = |m: u32, j: u32| -> f64 {
        if j > m {
            0.0
        } else {
            ((m - j + 1)..=m).map(f64::from).product::<f64>() * a.powi((m - j) as i32)
        }
    };
    let fi = n_bidders as f64;
    fi * falling(n_bidders - 1, order) - (fi - 1.0) * falling(n_bidders, order)
}

/// Inverse of [`phi`]: the unique `a` in [0, 1] with `phi(a) = p`.
///
/// Newton steps are taken while they stay inside the current bracket and
/// bisection otherwise; the derivative vanishes at both ends of [0, 1] for
/// `I > 2`, so pure Newton is not safe there.
pub fn phi_inverse(p: f64, n_bidders: u32) -> Result<f64> {
    check(p, n_bidders)?;
    Ok(phi_inverse_unchecked(p, n_bidders))
}

pub(crate) fn phi_inverse_unchecked(p: f64, n_bidders: u32) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    if n_bidders == 2 {
        // 2a - a^2 = p  =>  a = 1 - sqrt(1 - p)
        return 1.0 - (1.0 - p).sqrt();
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut a = 0.5;
    for _ in 0..200 {
        let f = phi_unchecked(a, n_bidders) - p;
        if f == 0.0 {
            return a;
        }
        if f < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(f64::MIN_POSITIVE) {
            break;
        }
        let d = phi_deriv_unchecked(a, n_bidders, 1);
        let newton = a - f / d;
        a = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    a
}
