//! Seller utility, expected utility of a screening level and the optimal
//! reserve.

use serde::{Deserialize, Serialize};

use crate::aqr::uniform_grid;
use crate::error::{Error, Result};
use crate::math::{bisect_root, gauss_legendre, golden_section_min, phi_unchecked, QuadratureRule};

/// Value distribution at a fixed covariate, seen through its quantile function.
pub trait ValueDistribution {
    /// Ranks on which the quantile function is available.
    fn alpha_domain(&self) -> (f64, f64);
    fn quantile(&self, alpha: f64) -> Result<f64>;
    /// First derivative of the quantile function.
    fn quantile_deriv(&self, alpha: f64) -> Result<f64>;
    fn cdf(&self, v: f64) -> Result<f64>;

    /// `(1 - F(v)) / f(v)`, written as `V'(F(v)) (1 - F(v))`.
    fn pdf_ratio(&self, v: f64) -> Result<f64> {
        let a = self.cdf(v)?;
        Ok(self.quantile_deriv(a)? * (1.0 - a))
    }
}

/// Values uniform on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformValues {
    pub lo: f64,
    pub hi: f64,
}

impl Default for UniformValues {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

impl ValueDistribution for UniformValues {
    fn alpha_domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("probability {alpha} is outside [0, 1]")));
        }
        Ok(self.lo + (self.hi - self.lo) * alpha)
    }

    fn quantile_deriv(&self, _alpha: f64) -> Result<f64> {
        Ok(self.hi - self.lo)
    }

    fn cdf(&self, v: f64) -> Result<f64> {
        Ok(((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityFamily {
    #[default]
    Crra,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub family: UtilityFamily,
    pub theta: f64,
}

impl UtilitySpec {
    pub fn crra(theta: f64) -> Self {
        Self {
            family: UtilityFamily::Crra,
            theta,
        }
    }

    pub fn value(&self, v: f64) -> Result<f64> {
        crra(self.theta, v, 0)
    }

    pub fn deriv(&self, v: f64, order: u32) -> Result<f64> {
        crra(self.theta, v, order)
    }
}

/// CRRA utility `(v^(1-theta) - 1)/(1 - theta)` (log at `theta = 1`) and its
/// first three derivatives in `v`.
///
/// Nonpositive `v` is only accepted at `theta = 0`, where the utility is
/// affine.
pub fn crra(theta: f64, v: f64, order: u32) -> Result<f64> {
    if !theta.is_finite() || !v.is_finite() {
        return Err(Error::domain("utility arguments must be finite"));
    }
    if theta == 0.0 {
        return match order {
            0 => Ok(v - 1.0),
            1 => Ok(1.0),
            2 | 3 => Ok(0.0),
            _ => Err(Error::domain(format!("unsupported derivative order {order}"))),
        };
    }
    if v <= 0.0 {
        return Err(Error::domain(format!("utility argument must be positive, got {v}")));
    }
    let lv = v.ln();
    match order {
        0 => Ok(crra_level(theta, lv)),
        1 => Ok((-theta * lv).exp()),
        2 => Ok(-theta * (-(theta + 1.0) * lv).exp()),
        3 => Ok(theta * (theta + 1.0) * (-(theta + 2.0) * lv).exp()),
        _ => Err(Error::domain(format!("unsupported derivative order {order}"))),
    }
}

fn crra_level(theta: f64, lv: f64) -> f64 {
    let e = 1.0 - theta;
    if e == 0.0 {
        return lv;
    }
    let x = e * lv;
    if e.abs() < 1e-8 {
        return lv * (1.0 + x / 2.0 + x * x / 6.0);
    }
    x.exp_m1() / e
}

/// `d U_theta(v) / d theta`.
pub fn crra_dtheta(theta: f64, v: f64) -> Result<f64> {
    if v <= 0.0 {
        return Err(Error::domain(format!("utility argument must be positive, got {v}")));
    }
    let lv = v.ln();
    let x = (1.0 - theta) * lv;
    // ((x - 1) e^x + 1) / x^2
    let g = if x.abs() < 1e-4 {
        0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0
    } else {
        ((x - 1.0) * x.exp() + 1.0) / (x * x)
    };
    Ok(-lv * lv * g)
}

/// `(U, U', dU/dtheta, dU'/dtheta)` at `v = exp(lv)`.
pub(crate) fn crra_log_parts(theta: f64, lv: f64) -> (f64, f64, f64, f64) {
    let x = (1.0 - theta) * lv;
    let g = if x.abs() < 1e-4 {
        0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0
    } else {
        ((x - 1.0) * x.exp() + 1.0) / (x * x)
    };
    let u1 = (-theta * lv).exp();
    (crra_level(theta, lv), u1, -lv * lv * g, -lv * u1)
}

/// `d U'_theta(v) / d theta = -ln(v) v^(-theta)`.
pub fn crra_deriv_dtheta(theta: f64, v: f64) -> Result<f64> {
    if v <= 0.0 {
        return Err(Error::domain(format!("utility argument must be positive, got {v}")));
    }
    let lv = v.ln();
    Ok(-lv * (-theta * lv).exp())
}

/// A seller with outside value `w` facing `n_bidders` bidders.
pub struct SellerProblem<'a, D: ValueDistribution + ?Sized> {
    pub dist: &'a D,
    pub w: f64,
    pub n_bidders: u32,
    pub utility: UtilitySpec,
    /// Screening levels scanned before refinement.
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReserveSolution {
    pub alpha_r: f64,
    pub reserve: f64,
    pub attained_utility: f64,
    /// First-order residual at the reserve, for diagnostics.
    pub foc: f64,
}

impl<'a, D: ValueDistribution + ?Sized> SellerProblem<'a, D> {
    pub fn new(dist: &'a D, w: f64, n_bidders: u32, utility: UtilitySpec) -> Result<Self> {
        if n_bidders < 2 {
            return Err(Error::domain("bidder count must be at least 2"));
        }
        let (lo, hi) = dist.alpha_domain();
        let mut grid: Vec<f64> = uniform_grid(0.01, 0.99, 0.01)
            .into_iter()
            .filter(|&a| a >= lo && a <= hi)
            .collect();
        if grid.first().is_none_or(|&a| a > lo + 1e-12) && lo > 0.0 {
            grid.insert(0, lo);
        }
        if grid.last().is_none_or(|&a| a < hi - 1e-12) && hi < 1.0 {
            grid.push(hi);
        }
        Ok(Self {
            dist,
            w,
            n_bidders,
            utility,
            grid,
        })
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    fn rule() -> &'static QuadratureRule {
        static RULE: std::sync::OnceLock<QuadratureRule> = std::sync::OnceLock::new();
        RULE.get_or_init(|| gauss_legendre(16).expect("valid order"))
    }

    /// Expected utility of screening at value rank `alpha`.
    pub fn expected_utility(&self, alpha: f64) -> Result<f64> {
        let (lo, hi) = self.dist.alpha_domain();
        if !(alpha >= lo - 1e-12 && alpha <= hi + 1e-12) {
            return Err(Error::domain(format!(
                "screening level {alpha} outside [{lo}, {hi}]"
            )));
        }
        let alpha = alpha.clamp(lo, hi);
        let n = self.n_bidders as i32;
        let fi = self.n_bidders as f64;
        let uw = self.utility.value(self.w)?;
        if alpha >= 1.0 {
            return Ok(uw);
        }
        let uv = self.utility.value(self.dist.quantile(alpha)?)?;
        let mut total = uw * alpha.powi(n) + uv * fi * alpha.powi(n - 1) * (1.0 - alpha);
        if hi > alpha {
            let err = std::cell::RefCell::new(None);
            let tail = Self::rule().integrate_composite(alpha, hi, 4, |t| {
                match self.dist.quantile(t).and_then(|v| self.utility.value(v)) {
                    Ok(u) => u * t.powi(n - 2) * (1.0 - t),
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            });
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            total += fi * (fi - 1.0) * tail;
        }
        if hi < 1.0 {
            // the quantile is held flat above the top of its domain
            let top = self.utility.value(self.dist.quantile(hi)?)?;
            total += top * (1.0 - phi_unchecked(hi.max(alpha), self.n_bidders));
        }
        Ok(total)
    }

    /// Expected utility at every grid level, with the tail integrals
    /// accumulated segment by segment. Used for bracketing only.
    fn scan_grid(&self) -> Vec<Option<f64>> {
        let grid = &self.grid;
        let sorted = grid.windows(2).all(|w| w[0] < w[1]);
        let (lo, hi) = self.dist.alpha_domain();
        let inside = grid.first().is_some_and(|&a| a >= lo) && grid.last().is_some_and(|&a| a <= hi);
        if !sorted || !inside || hi > 1.0 {
            return grid.iter().map(|&a| self.expected_utility(a).ok()).collect();
        }
        static RULE: std::sync::OnceLock<QuadratureRule> = std::sync::OnceLock::new();
        let rule = RULE.get_or_init(|| gauss_legendre(8).expect("valid order"));
        let n = self.n_bidders as i32;
        let fi = self.n_bidders as f64;
        let Ok(uw) = self.utility.value(self.w) else {
            return vec![None; grid.len()];
        };
        let top = if hi < 1.0 {
            self.dist.quantile(hi).and_then(|v| self.utility.value(v)).ok()
        } else {
            Some(0.0)
        };
        let seg = |a: f64, b: f64| -> Option<f64> {
            let mut acc = 0.0;
            for (t, wq) in rule.mapped(a, b) {
                let u = self.dist.quantile(t).and_then(|v| self.utility.value(v)).ok()?;
                acc += wq * u * t.powi(n - 2) * (1.0 - t);
            }
            Some(acc)
        };
        let mut out = vec![None; grid.len()];
        let mut tail = if *grid.last().unwrap() < hi {
            seg(*grid.last().unwrap(), hi)
        } else {
            Some(0.0)
        };
        for g in (0..grid.len()).rev() {
            if g + 1 < grid.len() {
                tail = tail.and_then(|t| Some(t + seg(grid[g], grid[g + 1])?));
            }
            let a = grid[g];
            out[g] = (|| {
                if a >= 1.0 {
                    return Some(uw);
                }
                let uv = self.dist.quantile(a).and_then(|v| self.utility.value(v)).ok()?;
                let mut total = uw * a.powi(n) + uv * fi * a.powi(n - 1) * (1.0 - a);
                total += fi * (fi - 1.0) * tail?;
                if hi < 1.0 {
                    total += top? * (1.0 - phi_unchecked(hi, self.n_bidders));
                }
                total.is_finite().then_some(total)
            })();
        }
        out
    }

    /// Seller's first-order condition at reserve price `r`.
    pub fn foc_h(&self, r: f64) -> Result<f64> {
        Ok(self.utility.value(self.w)? + self.utility.deriv(r, 1)? * self.dist.pdf_ratio(r)?
            - self.utility.value(r)?)
    }

    /// First-order condition at the reserve `V(alpha)`; shares the sign of
    /// the derivative of [`Self::expected_utility`].
    pub fn foc_at_alpha(&self, alpha: f64) -> Result<f64> {
        let v = self.dist.quantile(alpha)?;
        let ratio = self.dist.quantile_deriv(alpha)? * (1.0 - alpha);
        Ok(self.utility.value(self.w)? + self.utility.deriv(v, 1)? * ratio - self.utility.value(v)?)
    }
}

/// Grid maximization of expected utility, golden-section refinement between
/// neighbouring grid points, then a first-order polish inside that bracket.
pub fn optimal_reserve<D: ValueDistribution + ?Sized>(
    problem: &SellerProblem<'_, D>,
) -> Result<ReserveSolution> {
    let grid = &problem.grid;
    if grid.is_empty() {
        return Err(Error::config("screening grid is empty"));
    }
    let mut best: Option<(usize, f64)> = None;
    for (g, v) in problem.scan_grid().into_iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
    }
    let (g, _) =
        best.ok_or_else(|| Error::Numerical("expected utility undefined on the whole grid".into()))?;
    let mut alpha_r = grid[g];
    let mut best_val = problem.expected_utility(alpha_r)?;
    let lo = grid[g.saturating_sub(1)];
    let hi = grid[(g + 1).min(grid.len() - 1)];
    let slack = 1e-12 * (1.0 + best_val.abs());
    let h = |a: f64| problem.foc_at_alpha(a).unwrap_or(f64::NAN);

    // interior optimum: the first-order condition changes sign next to the
    // best grid point
    let hg = h(alpha_r);
    let mut polished = hg == 0.0;
    let brackets = if hg > 0.0 {
        [(alpha_r, hi), (lo, alpha_r)]
    } else {
        [(lo, alpha_r), (alpha_r, hi)]
    };
    for (a, b) in brackets {
        if polished || !(b > a && h(a) > 0.0 && h(b) < 0.0) {
            continue;
        }
        if let Some(root) = bisect_root(h, a, b, 1e-15) {
            if let Ok(v) = problem.expected_utility(root) {
                if v >= best_val - slack {
                    best_val = v.max(best_val);
                    alpha_r = root;
                    polished = true;
                }
            }
        }
    }
    if !polished && hi > lo {
        let neg = |a: f64| {
            problem
                .expected_utility(a)
                .map(|v| -v)
                .unwrap_or(f64::INFINITY)
        };
        let gs = golden_section_min(neg, lo, hi, 1e-12 * (1.0 + hi.abs()), 200);
        if -gs.fx > best_val {
            alpha_r = gs.x;
        }
    }
    let reserve = problem.dist.quantile(alpha_r)?;
    Ok(ReserveSolution {
        alpha_r,
        reserve,
        attained_utility: problem.expected_utility(alpha_r)?,
        foc: problem.foc_at_alpha(alpha_r).unwrap_or(f64::NAN),
    })
}
