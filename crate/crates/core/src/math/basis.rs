/// Local polynomial basis in the quantile level, tensored with covariates.
///
/// `pi(t) = [1, t, t^2/2!, ..., t^s/s!]` and `P(x, t) = pi(t) ⊗ [1, x]`, so
/// the stacked coefficient vector is `[beta; beta'; ...; beta^(s)]` with each
/// block of length `D + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyBasis {
    pub order: usize,
    pub dim: usize,
}

impl PolyBasis {
    pub fn new(order: usize, dim: usize) -> Self {
        Self { order, dim }
    }

    /// Number of stacked coefficients, `(s + 1)(D + 1)`.
    pub fn len(&self) -> usize {
        (self.order + 1) * (self.dim + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pi(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.order + 1);
        let mut term = 1.0;
        out.push(term);
        for j in 1..=self.order {
            term *= t / j as f64;
            out.push(term);
        }
        out
    }

    pub fn row(&self, x: &[f64], t: f64) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let mut out = Vec::with_capacity(self.len());
        for p in self.pi(t) {
            out.push(p);
            out.extend(x.iter().map(|&xi| p * xi));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        let b = PolyBasis::new(2, 3);
        assert_eq!(b.pi(0.4).len(), 3);
        assert_eq!(b.row(&[1.0, 2.0, 3.0], 0.4).len(), 12);
    }

    #[test]
    fn factorial_scaling_and_kronecker_layout() {
        let b = PolyBasis::new(3, 1);
        let pi = b.pi(2.0);
        assert_eq!(pi, vec![1.0, 2.0, 2.0, 8.0 / 6.0]);
        let row = b.row(&[5.0], 2.0);
        let expect = [1.0, 5.0, 2.0, 10.0, 2.0, 10.0, 8.0 / 6.0, 40.0 / 6.0];
        for (a, e) in row.iter().zip(expect) {
            assert!((a - e).abs() < 1e-14);
        }
    }
}
