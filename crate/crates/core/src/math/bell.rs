//! Faà di Bruno composition through partial exponential Bell polynomials.

use crate::error::{Error, Result};

/// Table of partial Bell polynomials `B[n][k] = B_{n,k}(x_1, ..., x_{n-k+1})`
/// for `0 <= k <= n <= order`, built with the recurrence
/// `B_{n,k} = sum_{i=1}^{n-k+1} C(n-1, i-1) x_i B_{n-i,k-1}`.
pub fn partial_bell_table(order: usize, inner_derivs: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; order + 1]; order + 1];
    table[0][0] = 1.0;
    for n in 1..=order {
        for k in 1..=n {
            let mut acc = 0.0;
            let mut binom = 1.0; // C(n-1, i-1), starting at i = 1
            for i in 1..=(n - k + 1) {
                acc += binom * inner_derivs[i - 1] * table[n - i][k - 1];
                binom = binom * (n - i) as f64 / i as f64;
            }
            table[n][k] = acc;
        }
    }
    table
}

/// `j`-th derivative of `g(f(t))` given `f^(1..j)(t)` and `g^(1..j)(f(t))`.
pub fn bell_compose(order: usize, inner_derivs: &[f64], outer_derivs: &[f64]) -> Result<f64> {
    if order == 0 {
        return Err(Error::domain("composition order must be at least 1"));
    }
    if inner_derivs.len() < order || outer_derivs.len() < order {
        return Err(Error::domain(format!(
            "need {order} derivatives of each function, got {} and {}",
            inner_derivs.len(),
            outer_derivs.len()
        )));
    }
    let table = partial_bell_table(order, inner_derivs);
    Ok((1..=order).map(|k| outer_derivs[k - 1] * table[order][k]).sum())
}
