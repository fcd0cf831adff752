//! Augmented quantile regression of winning bids.
//!
//! At each grid level `alpha` the stacked coefficient vector
//! `b = [beta; beta'; ...; beta^(s)]` minimizes
//!
//! ```text
//! (1/L) sum_l  integral  rho_{alpha + t h}(B_l - P(X_l, t h)' b) K(t) dt
//! ```
//!
//! over `t` in `[max(-1, -alpha/h), min(1, (1 - alpha)/h)]`, with the integral
//! replaced by Gauss–Legendre quadrature.

mod curve;
pub(crate) mod lp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use curve::BidCurve;

use crate::data::AuctionDataset;
use crate::error::{Error, Result};
use crate::math::{check_loss, gauss_legendre, Kernel, PolyBasis, QuadratureRule};
use lp::{Design, Levels, LpOptions};

/// Bandwidth over quantile levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    /// `h = s_B * L^(-1/root)` with `s_B` the winning-bid standard deviation.
    RuleOfThumb { root: u32 },
}

impl Bandwidth {
    /// Resolve against a (possibly weighted) sample of winning bids.
    ///
    /// For a constant sample the standard deviation is replaced by 1 so the
    /// degenerate fit is still defined.
    pub fn resolve(&self, bids: &[f64], weights: Option<&[f64]>, n_eff: f64) -> Result<f64> {
        match *self {
            Bandwidth::Fixed(h) => {
                if h.is_finite() && h > 0.0 {
                    Ok(h)
                } else {
                    Err(Error::config(format!("bandwidth must be positive, got {h}")))
                }
            }
            Bandwidth::RuleOfThumb { root } => {
                if root == 0 {
                    return Err(Error::config("bandwidth root must be positive"));
                }
                let sd = weighted_sd(bids, weights);
                let sd = if sd > 0.0 { sd } else { 1.0 };
                Ok(sd * n_eff.powf(-1.0 / root as f64))
            }
        }
    }
}

/// Sample standard deviation (n - 1 denominator); weights act as frequencies.
pub(crate) fn weighted_sd(x: &[f64], weights: Option<&[f64]>) -> f64 {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let n: f64 = (0..x.len()).map(w).sum();
    if n <= 1.0 {
        return 0.0;
    }
    let mean = (0..x.len()).map(|i| w(i) * x[i]).sum::<f64>() / n;
    let ss: f64 = (0..x.len()).map(|i| w(i) * (x[i] - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqrConfig {
    /// Local polynomial order `s`.
    pub order: usize,
    pub bandwidth: Bandwidth,
    /// Bid-rank levels at which the regression is solved.
    pub alpha_grid: Vec<f64>,
    pub kernel: Kernel,
    pub quad_order: usize,
    /// Relative duality gap at which the solver stops.
    pub tol: f64,
    pub max_iter: usize,
}

/// `lo, lo + step, ..., hi` with the endpoints computed exactly.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect()
}

impl Default for AqrConfig {
    fn default() -> Self {
        Self {
            order: 2,
            bandwidth: Bandwidth::RuleOfThumb { root: 6 },
            alpha_grid: uniform_grid(0.01, 0.99, 0.01),
            kernel: Kernel::Epanechnikov,
            quad_order: 33,
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl AqrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::config("polynomial order must be at least 1"));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::config("alpha grid is empty"));
        }
        if self.alpha_grid.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::config("alpha grid must lie strictly inside (0, 1)"));
        }
        if self.alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("alpha grid must be strictly increasing"));
        }
        if self.quad_order < self.order + 1 || self.quad_order < 2 {
            return Err(Error::config(format!(
                "quadrature order {} is too small for polynomial order {}",
                self.quad_order, self.order
            )));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config(format!("bandwidth must be positive, got {h}")));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::config("solver tolerance must be in (0, 1)"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDiagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub gap: f64,
}

/// Fitted coefficient curves on the grid. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqrFit {
    alphas: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    bandwidth: f64,
    order: usize,
    dim: usize,
    kernel: Kernel,
    quad_order: usize,
    bid_scale: f64,
    diagnostics: Vec<GridDiagnostics>,
}

impl AqrFit {
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Stacked `[beta; beta'; ...]` at grid index `g`, original coordinates.
    pub fn coefficients(&self, g: usize) -> &[f64] {
        &self.coeffs[g]
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn bid_scale(&self) -> f64 {
        self.bid_scale
    }

    pub fn diagnostics(&self) -> &[GridDiagnostics] {
        &self.diagnostics
    }

    /// Positivity floor applied to first derivatives.
    pub fn deriv_floor(&self) -> f64 {
        1e-8 * self.bid_scale
    }

    /// Raw `x1' beta^(j)` on the grid, before any rearrangement.
    pub fn raw_values(&self, j: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        if j > self.order {
            return Err(Error::domain(format!(
                "derivative order {j} exceeds polynomial order {}",
                self.order
            )));
        }
        let p1 = self.dim + 1;
        Ok(self
            .coeffs
            .iter()
            .map(|c| {
                let blk = &c[j * p1..(j + 1) * p1];
                blk[0] + x.iter().zip(&blk[1..]).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect())
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::domain(format!(
                "expected {} covariates, got {}",
                self.dim,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariates must be finite"));
        }
        Ok(())
    }

    /// Monotonized level curve and derivative curves at covariate `x`.
    pub fn curve(&self, x: &[f64]) -> Result<BidCurve> {
        let levels = self.raw_values(0, x)?;
        let derivs = (1..=self.order)
            .map(|j| self.raw_values(j, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(BidCurve::new(
            self.alphas.clone(),
            levels,
            derivs,
            self.deriv_floor(),
        ))
    }
}

pub fn bid_quantile(fit: &AqrFit, alpha: f64, x: &[f64]) -> Result<f64> {
    fit.curve(x)?.level(alpha)
}

pub fn bid_quantile_deriv(fit: &AqrFit, j: usize, alpha: f64, x: &[f64]) -> Result<f64> {
    fit.curve(x)?.deriv(j, alpha)
}

pub fn bid_quantile_inverse(fit: &AqrFit, t: f64, x: &[f64]) -> Result<f64> {
    fit.curve(x)?.inverse(t)
}

/// Everything about a dataset the solver needs, independent of `alpha`.
struct Prepared {
    y: Vec<f64>,
    x1: Vec<f64>,
    weight: Vec<f64>,
    p1: usize,
    h: f64,
    rule: QuadratureRule,
    basis: PolyBasis,
}

impl Prepared {
    fn new(data: &AuctionDataset, weights: Option<&[f64]>, cfg: &AqrConfig) -> Result<Self> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::data("dataset is empty"));
        }
        let n = data.len();
        let weight: Vec<f64> = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::data("weight vector length does not match data"));
                }
                if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::data("weights must be finite and nonnegative"));
                }
                w.to_vec()
            }
            None => vec![1.0; n],
        };
        let total: f64 = weight.iter().sum();
        if total <= 0.0 {
            return Err(Error::data("weights sum to zero"));
        }
        let y = data.winning_bids();
        let h = cfg.bandwidth.resolve(&y, Some(&weight), total)?;
        let weight: Vec<f64> = weight.iter().map(|w| w / total).collect();
        let dim = data.dim();
        let p1 = dim + 1;
        let mut x1 = Vec::with_capacity(n * p1);
        for r in data.records() {
            x1.push(1.0);
            x1.extend_from_slice(&r.covariates);
        }
        Ok(Self {
            y,
            x1,
            weight,
            p1,
            h,
            rule: gauss_legendre(cfg.quad_order)?,
            basis: PolyBasis::new(cfg.order, dim),
        })
    }

    fn design(&self) -> Design<'_> {
        Design {
            y: &self.y,
            x1: &self.x1,
            weight: &self.weight,
            p1: self.p1,
        }
    }

    fn check_rank(&self) -> Result<()> {
        let active = self.weight.iter().filter(|&&w| w > 0.0).count();
        let p = self.basis.len();
        if active < p {
            return Err(Error::SingularDesign(format!(
                "{active} records with positive weight, need at least {p}"
            )));
        }
        let mut g = nalgebra::DMatrix::<f64>::zeros(self.p1, self.p1);
        for l in 0..self.y.len() {
            let x = &self.x1[l * self.p1..(l + 1) * self.p1];
            for a in 0..self.p1 {
                for b in 0..self.p1 {
                    g[(a, b)] += self.weight[l] * x[a] * x[b];
                }
            }
        }
        let eig = g.symmetric_eigen().eigenvalues;
        let max = eig.iter().cloned().fold(0.0, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min <= 1e-12 * max {
            return Err(Error::SingularDesign(
                "covariates are collinear or constant".into(),
            ));
        }
        Ok(())
    }

    fn levels(&self, alpha: f64, kernel: Kernel) -> Result<Levels> {
        let (t_lo, t_hi) = integration_range(alpha, self.h)?;
        let s = self.basis.order;
        let ne = 2 * s + 1;
        let mut tpow = Vec::new();
        let mut kappa = Vec::new();
        let mut tau = Vec::new();
        for (t, wq) in self.rule.mapped(t_lo, t_hi) {
            let mut p = 1.0;
            for _ in 0..ne {
                tpow.push(p);
                p *= t;
            }
            kappa.push(wq * kernel.eval(t));
            tau.push((alpha + t * self.h).clamp(1e-15, 1.0 - 1e-15));
        }
        Ok(Levels::new(tpow, kappa, tau, s))
    }
}

fn integration_range(alpha: f64, h: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let lo = (-1.0_f64).max(-alpha / h);
    let hi = 1.0_f64.min((1.0 - alpha) / h);
    if !(hi > lo) {
        return Err(Error::domain(format!(
            "empty integration range at alpha {alpha}, h {h}"
        )));
    }
    Ok((lo, hi))
}

fn objective_impl(b: &[f64], alpha: f64, prep: &Prepared, kernel: Kernel) -> Result<f64> {
    let lv = prep.levels(alpha, kernel)?;
    let (t_lo, t_hi) = integration_range(alpha, prep.h)?;
    if b.len() != prep.basis.len() {
        return Err(Error::domain("coefficient vector has the wrong length"));
    }
    let mut total = 0.0;
    let nodes: Vec<f64> = prep
        .rule
        .mapped(t_lo, t_hi)
        .map(|(t, _)| t)
        .collect();
    for l in 0..prep.y.len() {
        let x = &prep.x1[l * prep.p1 + 1..(l + 1) * prep.p1];
        for (k, &t) in nodes.iter().enumerate() {
            let row = prep.basis.row(x, t * prep.h);
            let fit: f64 = row.iter().zip(b).map(|(a, c)| a * c).sum();
            total += prep.weight[l] * lv.kappa[k] * check_loss(lv.tau[k], prep.y[l] - fit);
        }
    }
    Ok(total)
}

/// Quadrature value of the AQR objective at coefficients `b` (original
/// coordinates).
pub fn aqr_objective(b: &[f64], alpha: f64, data: &AuctionDataset, cfg: &AqrConfig) -> Result<f64> {
    let prep = Prepared::new(data, None, cfg)?;
    objective_impl(b, alpha, &prep, cfg.kernel)
}

/// One element of the subdifferential of [`aqr_objective`].
pub fn aqr_subgradient(
    b: &[f64],
    alpha: f64,
    data: &AuctionDataset,
    cfg: &AqrConfig,
) -> Result<Vec<f64>> {
    let prep = Prepared::new(data, None, cfg)?;
    let lv = prep.levels(alpha, cfg.kernel)?;
    let (t_lo, t_hi) = integration_range(alpha, prep.h)?;
    if b.len() != prep.basis.len() {
        return Err(Error::domain("coefficient vector has the wrong length"));
    }
    let mut g = vec![0.0; b.len()];
    for l in 0..prep.y.len() {
        let x = &prep.x1[l * prep.p1 + 1..(l + 1) * prep.p1];
        for (k, (t, _)) in prep.rule.mapped(t_lo, t_hi).enumerate() {
            let row = prep.basis.row(x, t * prep.h);
            let fit: f64 = row.iter().zip(b).map(|(a, c)| a * c).sum();
            let r = prep.y[l] - fit;
            let psi = lv.tau[k] - if r < 0.0 { 1.0 } else { 0.0 };
            let f = prep.weight[l] * lv.kappa[k] * psi;
            for (gi, zi) in g.iter_mut().zip(&row) {
                *gi -= f * zi;
            }
        }
    }
    Ok(g)
}

pub fn fit_aqr(data: &AuctionDataset, cfg: &AqrConfig) -> Result<AqrFit> {
    fit_impl(data, None, cfg, None)
}

/// Fit with per-record frequency weights (bootstrap multiplicities).
pub fn fit_aqr_weighted(data: &AuctionDataset, weights: &[f64], cfg: &AqrConfig) -> Result<AqrFit> {
    fit_impl(data, Some(weights), cfg, None)
}

/// Weighted fit guided by an earlier fit on the same grid, typically the
/// full-sample fit when refitting a resample. The solution does not depend on
/// the guide, only the work needed to reach it.
pub fn fit_aqr_guided(
    data: &AuctionDataset,
    weights: Option<&[f64]>,
    cfg: &AqrConfig,
    guide: &AqrFit,
) -> Result<AqrFit> {
    fit_impl(data, weights, cfg, Some(guide))
}

fn fit_impl(
    data: &AuctionDataset,
    weights: Option<&[f64]>,
    cfg: &AqrConfig,
    guide: Option<&AqrFit>,
) -> Result<AqrFit> {
    if data.len() > 0 && data.common_bidders().is_none() {
        return Err(Error::config(
            "bidder counts differ across records; stratify the data by bidder count first",
        ));
    }
    let prep = Prepared::new(data, weights, cfg)?;
    prep.check_rank()?;
    let design = prep.design();
    let opts = LpOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let h = prep.h;
    let p1 = prep.p1;
    let unscale = |mut coef: Vec<f64>| {
        for j in 1..=cfg.order {
            let f = h.powi(j as i32);
            for c in &mut coef[j * p1..(j + 1) * p1] {
                *c /= f;
            }
        }
        coef
    };
    let guide = guide.filter(|g| {
        g.alphas == cfg.alpha_grid && g.order == cfg.order && g.dim == data.dim()
    });
    if let Some(guide) = guide {
        let results: Vec<(Vec<f64>, GridDiagnostics)> = cfg
            .alpha_grid
            .par_iter()
            .enumerate()
            .map(|(g, &alpha)| {
                let lv = prep.levels(alpha, cfg.kernel)?;
                let mut guess = guide.coeffs[g].clone();
                for j in 1..=cfg.order {
                    let f = h.powi(j as i32);
                    for c in &mut guess[j * p1..(j + 1) * p1] {
                        *c *= f;
                    }
                }
                let sol = lp::solve_guided(&design, &lv, &opts, alpha, Some(&guess))
                    .map_err(|e| unscale_error(e, &unscale))?;
                Ok((
                    unscale(sol.coef),
                    GridDiagnostics {
                        iterations: sol.iterations,
                        objective: sol.objective,
                        gap: sol.gap,
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        return finish_fit(data, weights, cfg, &prep, results);
    }

    // start at the middle of the grid and walk outwards, each solve guided
    // by its neighbour
    let n_grid = cfg.alpha_grid.len();
    let mid = n_grid / 2;
    let order: Vec<(usize, Option<usize>)> = std::iter::once((mid, None))
        .chain((mid + 1..n_grid).map(|g| (g, Some(g - 1))))
        .chain((0..mid).rev().map(|g| (g, Some(g + 1))))
        .collect();
    let mut solved: Vec<Option<(Vec<f64>, GridDiagnostics)>> = vec![None; n_grid];
    for (g, from) in order {
        let alpha = cfg.alpha_grid[g];
        let lv = prep.levels(alpha, cfg.kernel)?;
        let guess = from.map(|f| {
            let (c, _) = solved[f].as_ref().expect("neighbour solved first");
            lp::shift_coef(c, cfg.order, p1, (alpha - cfg.alpha_grid[f]) / h)
        });
        let sol = lp::solve_guided(&design, &lv, &opts, alpha, guess.as_deref())
            .map_err(|e| unscale_error(e, &unscale))?;
        solved[g] = Some((
            sol.coef,
            GridDiagnostics {
                iterations: sol.iterations,
                objective: sol.objective,
                gap: sol.gap,
            },
        ));
    }
    let results: Vec<(Vec<f64>, GridDiagnostics)> = solved
        .into_iter()
        .map(|x| {
            let (c, dg) = x.expect("every grid point solved");
            (unscale(c), dg)
        })
        .collect();
    finish_fit(data, weights, cfg, &prep, results)
}

fn unscale_error(e: Error, unscale: &impl Fn(Vec<f64>) -> Vec<f64>) -> Error {
    match e {
        Error::NonConvergence {
            alpha,
            iterations,
            gap,
            last_iterate,
        } => Error::NonConvergence {
            alpha,
            iterations,
            gap,
            last_iterate: unscale(last_iterate),
        },
        other => other,
    }
}

fn finish_fit(
    data: &AuctionDataset,
    weights: Option<&[f64]>,
    cfg: &AqrConfig,
    prep: &Prepared,
    results: Vec<(Vec<f64>, GridDiagnostics)>,
) -> Result<AqrFit> {
    let (coeffs, diagnostics): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    if coeffs.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("non-finite coefficient in AQR fit".into()));
    }
    let bids = data.winning_bids();
    Ok(AqrFit {
        alphas: cfg.alpha_grid.clone(),
        coeffs,
        bandwidth: prep.h,
        order: cfg.order,
        dim: data.dim(),
        kernel: cfg.kernel,
        quad_order: cfg.quad_order,
        bid_scale: weighted_sd(&bids, weights),
        diagnostics,
    })
}
