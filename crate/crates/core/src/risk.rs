//! Seller risk aversion from observed reserve prices.
//!
//! Each auction with a known outside value contributes the first-order
//! residual
//!
//! ```text
//! q(theta) = U(w) + U'(r) V'(F(r)) (1 - F(r)) - U(r)
//! ```
//!
//! of the seller's problem, and `theta` minimizes the mean of `q^2`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AuctionDataset, AuctionRecord};
use crate::error::{Bound, Error, Result};
use crate::math::{bisect_root, golden_section_min};
use crate::seller::{crra, crra_log_parts, ValueDistribution};
use crate::sim::rng::stream_rng;
use crate::sim::stats::{quantile_sorted, sample_sd};
use crate::valuation::{ModelSet, ValuationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub theta_bounds: (f64, f64),
    /// Points in the initial scan of the objective over the bounds.
    pub scan_points: usize,
    /// Stationarity tolerance relative to the size of the gradient terms.
    pub grad_tol: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            theta_bounds: (-5.0, 10.0),
            scan_points: 61,
            grad_tol: 1e-10,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.theta_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config(format!(
                "theta bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if self.scan_points < 3 {
            return Err(Error::config("scan needs at least 3 points"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::config("gradient tolerance must be positive"));
        }
        Ok(())
    }
}

/// FOC residual of one auction at `theta` under `dist`.
pub fn q_residual<D: ValueDistribution + ?Sized>(
    record: &AuctionRecord,
    theta: f64,
    dist: &D,
) -> Result<f64> {
    let (Some(r), Some(w)) = (record.reserve, record.outside_value) else {
        return Err(Error::data("record lacks a reserve or an outside value"));
    };
    let ratio = dist.pdf_ratio(r)?;
    Ok(crra(theta, w, 0)? + crra(theta, r, 1)? * ratio - crra(theta, r, 0)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    index: usize,
    weight: f64,
    ln_w: f64,
    ln_r: f64,
    ratio: f64,
}

impl Term {
    /// `(q, dq/dtheta)`.
    #[inline]
    fn eval(&self, theta: f64) -> (f64, f64) {
        let (uw, _, dw, _) = crra_log_parts(theta, self.ln_w);
        let (ur, u1, dr, d1) = crra_log_parts(theta, self.ln_r);
        (uw + u1 * self.ratio - ur, dw + d1 * self.ratio - dr)
    }
}

/// Why records were left out of the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusions {
    /// No reserve or no outside value.
    pub missing: usize,
    /// Reserve outside the fitted value range at the record's covariates.
    pub trimmed: usize,
    /// Nonpositive reserve or outside value.
    pub nonpositive: usize,
}

/// Admissible auctions with their plug-in terms precomputed.
#[derive(Debug, Clone)]
pub struct RiskObjectiveContext {
    terms: Vec<Term>,
    total_weight: f64,
    exclusions: Exclusions,
    cfg: RiskConfig,
}

impl RiskObjectiveContext {
    /// Context with value distributions from fitted models.
    pub fn new(data: &AuctionDataset, models: &ModelSet, cfg: &RiskConfig) -> Result<Self> {
        Self::build(data, None, cfg, |rec| {
            models.get(rec.n_bidders)?.curve(&rec.covariates)
        })
    }

    /// Context for a resample given by record multiplicities.
    pub fn weighted(
        data: &AuctionDataset,
        weights: &[f64],
        models: &ModelSet,
        cfg: &RiskConfig,
    ) -> Result<Self> {
        Self::build(data, Some(weights), cfg, |rec| {
            models.get(rec.n_bidders)?.curve(&rec.covariates)
        })
    }

    /// Context with an arbitrary value distribution per record. A reserve
    /// is admissible when it lies within the quantiles at the ends of the
    /// distribution's rank domain.
    pub fn build<'d, D, F>(
        data: &'d AuctionDataset,
        weights: Option<&[f64]>,
        cfg: &RiskConfig,
        mut dist_for: F,
    ) -> Result<Self>
    where
        D: ValueDistribution,
        F: FnMut(&'d AuctionRecord) -> Result<D>,
    {
        cfg.validate()?;
        if let Some(w) = weights {
            if w.len() != data.len() {
                return Err(Error::data("weight vector length does not match the dataset"));
            }
        }
        let mut terms = Vec::new();
        let mut ex = Exclusions::default();
        for (index, rec) in data.records().iter().enumerate() {
            let weight = weights.map_or(1.0, |w| w[index]);
            if weight <= 0.0 {
                continue;
            }
            let (Some(r), Some(w)) = (rec.reserve, rec.outside_value) else {
                ex.missing += 1;
                continue;
            };
            if !(r > 0.0 && w > 0.0) {
                ex.nonpositive += 1;
                continue;
            }
            let dist = dist_for(rec).map_err(|e| e.at_record(index))?;
            let (a_lo, a_hi) = dist.alpha_domain();
            let v_lo = dist.quantile(a_lo).map_err(|e| e.at_record(index))?;
            let v_hi = dist.quantile(a_hi).map_err(|e| e.at_record(index))?;
            if !(r >= v_lo && r <= v_hi) {
                ex.trimmed += 1;
                continue;
            }
            let ratio = dist.pdf_ratio(r).map_err(|e| e.at_record(index))?;
            if !ratio.is_finite() {
                return Err(Error::Numerical("non-finite density ratio at the reserve".into())
                    .at_record(index));
            }
            terms.push(Term {
                index,
                weight,
                ln_w: w.ln(),
                ln_r: r.ln(),
                ratio,
            });
        }
        let total_weight = terms.iter().map(|t| t.weight).sum();
        Ok(Self {
            terms,
            total_weight,
            exclusions: ex,
            cfg: cfg.clone(),
        })
    }

    /// Number of distinct admissible records.
    pub fn used_records(&self) -> usize {
        self.terms.len()
    }

    pub fn exclusions(&self) -> Exclusions {
        self.exclusions
    }

    pub fn config(&self) -> &RiskConfig {
        &self.cfg
    }

    /// Weighted mean of `q^2`.
    pub fn objective(&self, theta: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let q = t.eval(theta).0;
                t.weight * q * q
            })
            .sum::<f64>()
            / self.total_weight
    }

    /// Objective, its derivative in `theta`, and the scale of the derivative
    /// terms used for the stationarity test.
    pub fn objective_with_gradient(&self, theta: f64) -> (f64, f64, f64) {
        let (mut f, mut g, mut s) = (0.0, 0.0, 0.0);
        for t in &self.terms {
            let (q, dq) = t.eval(theta);
            f += t.weight * q * q;
            g += t.weight * 2.0 * q * dq;
            s += t.weight * 2.0 * (q * dq).abs();
        }
        (f / self.total_weight, g / self.total_weight, s / self.total_weight)
    }

    /// `(record index, q)` for every admissible record.
    pub fn residuals(&self, theta: f64) -> Vec<(usize, f64)> {
        self.terms.iter().map(|t| (t.index, t.eval(theta).0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootSummary {
    pub se: f64,
    pub percentile_2_5: f64,
    pub percentile_97_5: f64,
    /// Successful replicate estimates in replicate order.
    pub replicates: Vec<f64>,
    /// Failed replicates and their error messages.
    pub failures: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub theta_hat: f64,
    pub objective_at_min: f64,
    pub gradient_at_min: f64,
    pub used_records: usize,
    pub exclusions: Exclusions,
    /// Set when the minimizer sits on a bound of the search interval.
    pub at_bound: Option<Bound>,
    pub boot: Option<BootSummary>,
    /// `(record index, q)` at the estimate.
    pub residuals: Vec<(usize, f64)>,
}

/// Minimize the squared-FOC objective over the configured bounds.
pub fn fit_theta(ctx: &RiskObjectiveContext) -> Result<RiskEstimate> {
    if ctx.terms.is_empty() {
        return Err(Error::data(
            "no admissible records: need reserve and outside value inside the fitted range",
        ));
    }
    let (lo, hi) = ctx.cfg.theta_bounds;
    let k = ctx.cfg.scan_points;
    let grid: Vec<f64> = (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&t| ctx.objective(t)).collect();
    let g = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(g, _)| g)
        .ok_or_else(|| Error::Numerical("objective is not finite on the scan grid".into()))?;
    let a = grid[g.saturating_sub(1)];
    let b = grid[(g + 1).min(k - 1)];

    let deriv = |t: f64| ctx.objective_with_gradient(t).1;
    let mut theta: f64;
    let mut at_bound = None;
    if g == 0 && deriv(lo) >= 0.0 {
        at_bound = Some(Bound::Lower);
        theta = lo;
    } else if g == k - 1 && deriv(hi) <= 0.0 {
        at_bound = Some(Bound::Upper);
        theta = hi;
    } else {
        let gs = golden_section_min(|t| ctx.objective(t), a, b, 1e-6 * (b - a), 100);
        theta = gs.x;
        // polish on the sign change of the derivative
        let (mut l, mut r) = (gs.x, gs.x);
        let step = (b - a) * 1e-4;
        while deriv(l) > 0.0 && l > a {
            l = (l - step).max(a);
        }
        while deriv(r) < 0.0 && r < b {
            r = (r + step).min(b);
        }
        if let Some(root) = newton_root(ctx, l, r) {
            if ctx.objective(root) <= ctx.objective(theta) * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                theta = root;
            }
        }
    }
    let (f, grad, _) = ctx.objective_with_gradient(theta);
    Ok(RiskEstimate {
        theta_hat: theta,
        objective_at_min: f,
        gradient_at_min: grad,
        used_records: ctx.used_records(),
        exclusions: ctx.exclusions(),
        at_bound,
        boot: None,
        residuals: ctx.residuals(theta),
    })
}

/// Root of the objective derivative on `[l, r]` by secant steps that fall
/// back to bisection whenever they leave the bracket.
fn newton_root(ctx: &RiskObjectiveContext, mut l: f64, mut r: f64) -> Option<f64> {
    let d = |t: f64| ctx.objective_with_gradient(t);
    let (_, mut gl, _) = d(l);
    let (_, gr, _) = d(r);
    if gl == 0.0 {
        return Some(l);
    }
    if gr == 0.0 {
        return Some(r);
    }
    if gl * gr > 0.0 {
        return None;
    }
    let tol = ctx.cfg.grad_tol;
    let (mut x0, mut g0) = (l, gl);
    let (mut x1, mut g1) = (r, gr);
    for _ in 0..200 {
        let mut x = x1 - g1 * (x1 - x0) / (g1 - g0);
        if !(x > l && x < r) || !x.is_finite() {
            x = 0.5 * (l + r);
        }
        let (_, gx, scale) = d(x);
        if gx.abs() <= tol * scale || r - l <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Some(x);
        }
        if (gx > 0.0) == (gl > 0.0) {
            l = x;
            gl = gx;
        } else {
            r = x;
        }
        x0 = x1;
        g0 = g1;
        x1 = x;
        g1 = gx;
    }
    bisect_root(|t| d(t).1, l, r, 4.0 * f64::EPSILON)
}

/// Record multiplicities of a resample of size `n` with replacement.
pub fn resample_counts(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1.0;
    }
    counts
}

/// Point estimate plus a nonparametric bootstrap that resamples whole
/// auctions and reruns both stages. Replicate `b` draws from stream `b` of
/// `seed`.
pub fn bootstrap_theta(
    data: &AuctionDataset,
    models: &ModelSet,
    vcfg: &ValuationConfig,
    rcfg: &RiskConfig,
    replicates: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if replicates < 2 {
        return Err(Error::config("bootstrap needs at least 2 replicates"));
    }
    let ctx = RiskObjectiveContext::new(data, models, rcfg)?;
    let mut est = fit_theta(&ctx)?;
    let outcomes: Vec<std::result::Result<f64, String>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let counts = resample_counts(data.len(), &mut rng);
            let one = || -> Result<f64> {
                let m = ModelSet::estimate_guided(data, &counts, vcfg, models)?;
                let c = RiskObjectiveContext::weighted(data, &counts, &m, rcfg)?;
                Ok(fit_theta(&c)?.theta_hat)
            };
            one().map_err(|e| e.to_string())
        })
        .collect();
    let mut reps = Vec::new();
    let mut failures = Vec::new();
    for (b, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(t) => reps.push(t),
            Err(msg) => failures.push((b, msg)),
        }
    }
    if failures.len() * 5 > replicates || reps.len() < 2 {
        let first = failures.first().map(|f| f.1.as_str()).unwrap_or("");
        return Err(Error::Numerical(format!(
            "{} of {replicates} bootstrap replicates failed; first failure: {first}",
            failures.len()
        )));
    }
    let mut sorted = reps.clone();
    sorted.sort_by(f64::total_cmp);
    est.boot = Some(BootSummary {
        se: sample_sd(&reps),
        percentile_2_5: quantile_sorted(&sorted, 0.025),
        percentile_97_5: quantile_sorted(&sorted, 0.975),
        replicates: reps,
        failures,
    });
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seller::UniformValues;

    fn record(r: f64, w: f64) -> AuctionRecord {
        AuctionRecord::new(0.5, vec![], 2)
            .with_reserve(r)
            .with_outside_value(w)
    }

    #[test]
    fn uniform_stub_residual_vanishes_at_closed_form_reserve() {
        let d = UniformValues::default();
        let q = q_residual(&record(0.5, 1e-300), 0.0, &d).unwrap();
        assert!(q.abs() < 1e-12, "{q}");
        // theta = 0 is affine, so w = 0 is allowed there
        let rec = AuctionRecord::new(0.5, vec![], 2)
            .with_reserve(0.5)
            .with_outside_value(0.0);
        assert!(q_residual(&rec, 0.0, &d).unwrap().abs() < 1e-15);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let data = AuctionDataset::new(vec![record(0.6, 0.2), record(0.7, 0.3), record(0.55, 0.1)])
            .unwrap();
        let d = UniformValues::default();
        let ctx = RiskObjectiveContext::build(&data, None, &RiskConfig::default(), |_| Ok(d)).unwrap();
        for t in [-2.0, 0.0, 0.3, 1.0, 1.00001, 4.0] {
            let (_, g, _) = ctx.objective_with_gradient(t);
            let e = 1e-6;
            let fd = (ctx.objective(t + e) - ctx.objective(t - e)) / (2.0 * e);
            assert!((g - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "{t}: {g} vs {fd}");
        }
    }
}
