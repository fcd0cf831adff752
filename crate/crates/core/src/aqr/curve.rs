use crate::error::{Bound, Error, Result};
use crate::isotonic::pava;

/// Grid slack for queries that land on an endpoint up to rounding.
const EDGE_TOL: f64 = 1e-12;

/// Bid quantile curve at one covariate value.
///
/// Levels are rearranged to be nondecreasing on the grid and linearly
/// interpolated. Derivative curves are interpolated as fitted, with the first
/// derivative clamped below at a positivity floor.
#[derive(Debug, Clone, PartialEq)]
pub struct BidCurve {
    alphas: Vec<f64>,
    levels: Vec<f64>,
    derivs: Vec<Vec<f64>>,
    floor: f64,
}

impl BidCurve {
    pub(crate) fn new(alphas: Vec<f64>, raw: Vec<f64>, derivs: Vec<Vec<f64>>, floor: f64) -> Self {
        let levels = pava(&raw, None);
        Self {
            alphas,
            levels,
            derivs,
            floor,
        }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Monotonized grid levels.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        (self.alphas[0], *self.alphas.last().unwrap())
    }

    pub fn level_range(&self) -> (f64, f64) {
        (self.levels[0], *self.levels.last().unwrap())
    }

    pub fn order(&self) -> usize {
        self.derivs.len()
    }

    /// Grid cell `g` and weight `w` with `alpha = (1 - w) a_g + w a_{g+1}`.
    fn locate(&self, alpha: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.alpha_range();
        if alpha.is_nan() || alpha < lo - EDGE_TOL {
            return Err(Error::Range {
                value: alpha,
                lo,
                hi,
                bound: Bound::Lower,
            });
        }
        if alpha > hi + EDGE_TOL {
            return Err(Error::Range {
                value: alpha,
                lo,
                hi,
                bound: Bound::Upper,
            });
        }
        let n = self.alphas.len();
        if n == 1 {
            return Ok((0, 0.0));
        }
        let a = alpha.clamp(lo, hi);
        let g = match self.alphas.partition_point(|&x| x <= a) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let w = (a - self.alphas[g]) / (self.alphas[g + 1] - self.alphas[g]);
        Ok((g, w.clamp(0.0, 1.0)))
    }

    fn interp(values: &[f64], g: usize, w: f64) -> f64 {
        if values.len() == 1 || w == 0.0 {
            values[g]
        } else if w == 1.0 {
            values[g + 1]
        } else {
            (1.0 - w) * values[g] + w * values[g + 1]
        }
    }

    pub fn level(&self, alpha: f64) -> Result<f64> {
        let (g, w) = self.locate(alpha)?;
        Ok(Self::interp(&self.levels, g, w))
    }

    /// `j`-th derivative in `alpha`, `1 <= j <= order`.
    pub fn deriv(&self, j: usize, alpha: f64) -> Result<f64> {
        if j == 0 || j > self.derivs.len() {
            return Err(Error::domain(format!(
                "derivative order {j} outside 1..={}",
                self.derivs.len()
            )));
        }
        let (g, w) = self.locate(alpha)?;
        let v = Self::interp(&self.derivs[j - 1], g, w);
        Ok(if j == 1 { v.max(self.floor) } else { v })
    }

    /// Generalized inverse `inf { a : B(a) >= t }` of the interpolated curve.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.level_range();
        let scale = EDGE_TOL * (lo.abs().max(hi.abs()) + 1.0);
        if t.is_nan() || t < lo - scale {
            return Err(Error::Range {
                value: t,
                lo,
                hi,
                bound: Bound::Lower,
            });
        }
        if t > hi + scale {
            return Err(Error::Range {
                value: t,
                lo,
                hi,
                bound: Bound::Upper,
            });
        }
        if t <= lo {
            return Ok(self.alphas[0]);
        }
        if t >= hi {
            // first grid point reaching the top level
            let g = self.levels.partition_point(|&v| v < hi);
            if g == 0 {
                return Ok(self.alphas[0]);
            }
            return Ok(self.cell_inverse(g, hi));
        }
        let g = self.levels.partition_point(|&v| v < t);
        Ok(self.cell_inverse(g, t))
    }

    /// Inverse inside cell `[g - 1, g]`, where `levels[g-1] < t <= levels[g]`.
    fn cell_inverse(&self, g: usize, t: f64) -> f64 {
        let (v0, v1) = (self.levels[g - 1], self.levels[g]);
        let (a0, a1) = (self.alphas[g - 1], self.alphas[g]);
        let w = ((t - v0) / (v1 - v0)).clamp(0.0, 1.0);
        a0 + w * (a1 - a0)
    }
}
