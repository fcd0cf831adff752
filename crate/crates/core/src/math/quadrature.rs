use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// Nodes and weights mapped affinely onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(lo, hi).map(|(t, w)| w * f(t)).sum()
    }

    /// Composite rule: `panels` equal sub-intervals of `[lo, hi]`.
    pub fn integrate_composite(
        &self,
        lo: f64,
        hi: f64,
        panels: usize,
        f: impl Fn(f64) -> f64,
    ) -> f64 {
        let width = (hi - lo) / panels as f64;
        (0..panels)
            .map(|p| {
                let a = lo + p as f64 * width;
                self.integrate(a, a + width, &f)
            })
            .sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order < 2 {
        return Err(Error::domain(format!(
            "Gauss-Legendre order must be at least 2, got {order}"
        )));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Kernel;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_rule() {
        let r = gauss_legendre(2).unwrap();
        let x = 1.0 / 3.0_f64.sqrt();
        assert_abs_diff_eq!(r.nodes[0], -x, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[1], x, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.integrate(-1.0, 1.0, |t| t * t), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_low_order() {
        assert!(gauss_legendre(1).is_err());
    }

    #[test]
    fn weights_sum_to_two_and_exactness_degree() {
        for order in [2, 3, 5, 16, 33, 64] {
            let r = gauss_legendre(order).unwrap();
            assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            let deg = 2 * order - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let even = deg - 1;
            assert_abs_diff_eq!(r.integrate(-1.0, 1.0, |t| t.powi(deg as i32)), exact, epsilon = 1e-13);
            assert_abs_diff_eq!(
                r.integrate(-1.0, 1.0, |t| t.powi(even as i32)),
                2.0 / (even as f64 + 1.0),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn epanechnikov_has_unit_mass() {
        for order in [3, 5, 33] {
            let r = gauss_legendre(order).unwrap();
            let mass = r.integrate(-1.0, 1.0, |t| Kernel::Epanechnikov.eval(t));
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn composite_rule_on_smooth_integrand() {
        let r = gauss_legendre(16).unwrap();
        let got = r.integrate_composite(0.0, 3.0, 4, f64::exp);
        assert_abs_diff_eq!(got, 3.0_f64.exp() - 1.0, epsilon = 1e-12);
    }
}
