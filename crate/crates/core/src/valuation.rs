//! Bidder value quantiles through the order-statistic link.
//!
//! `V(alpha|x) = B(phi(alpha)|x)`, so the bid regression is solved on the
//! image of the value grid under `phi` and every value-grid point lands on a
//! bid-grid point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aqr::{fit_aqr, fit_aqr_guided, fit_aqr_weighted, uniform_grid, AqrConfig, AqrFit, Bandwidth, BidCurve};
use crate::data::AuctionDataset;
use crate::error::{Error, Result};
use crate::math::{
    bell_compose, phi_deriv_unchecked, phi_inverse_unchecked, phi_unchecked, Kernel,
};
use crate::seller::ValueDistribution;

/// Estimation settings expressed on the value-rank scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationConfig {
    pub value_grid: Vec<f64>,
    pub order: usize,
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
    pub quad_order: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        let a = AqrConfig::default();
        Self {
            value_grid: uniform_grid(0.01, 0.99, 0.01),
            order: a.order,
            bandwidth: a.bandwidth,
            kernel: a.kernel,
            quad_order: a.quad_order,
            tol: a.tol,
            max_iter: a.max_iter,
        }
    }
}

impl ValuationConfig {
    /// Bid-scale configuration for a stratum with `n_bidders` bidders.
    pub fn aqr_config(&self, n_bidders: u32) -> Result<AqrConfig> {
        if n_bidders < 2 {
            return Err(Error::config("bidder count must be at least 2"));
        }
        if self.value_grid.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::config("value grid must lie strictly inside (0, 1)"));
        }
        let cfg = AqrConfig {
            order: self.order,
            bandwidth: self.bandwidth,
            alpha_grid: self
                .value_grid
                .iter()
                .map(|&a| phi_unchecked(a, n_bidders))
                .collect(),
            kernel: self.kernel,
            quad_order: self.quad_order,
            tol: self.tol,
            max_iter: self.max_iter,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Value-quantile view of a bid fit for one bidder count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationModel {
    fit: AqrFit,
    n_bidders: u32,
}

impl ValuationModel {
    pub fn new(fit: AqrFit, n_bidders: u32) -> Result<Self> {
        if n_bidders < 2 {
            return Err(Error::domain("bidder count must be at least 2"));
        }
        Ok(Self { fit, n_bidders })
    }

    pub fn estimate(data: &AuctionDataset, cfg: &ValuationConfig) -> Result<Self> {
        let n = data
            .common_bidders()
            .ok_or_else(|| Error::config("bidder counts must be equal within a model"))?;
        Self::new(fit_aqr(data, &cfg.aqr_config(n)?)?, n)
    }

    pub fn estimate_weighted(
        data: &AuctionDataset,
        weights: &[f64],
        cfg: &ValuationConfig,
    ) -> Result<Self> {
        let n = data
            .common_bidders()
            .ok_or_else(|| Error::config("bidder counts must be equal within a model"))?;
        Self::new(fit_aqr_weighted(data, weights, &cfg.aqr_config(n)?)?, n)
    }

    /// Refit on reweighted data, guided by an earlier model on the same grid.
    pub fn estimate_guided(
        data: &AuctionDataset,
        weights: Option<&[f64]>,
        cfg: &ValuationConfig,
        guide: &ValuationModel,
    ) -> Result<Self> {
        let n = data
            .common_bidders()
            .ok_or_else(|| Error::config("bidder counts must be equal within a model"))?;
        Self::new(fit_aqr_guided(data, weights, &cfg.aqr_config(n)?, &guide.fit)?, n)
    }

    pub fn fit(&self) -> &AqrFit {
        &self.fit
    }

    pub fn n_bidders(&self) -> u32 {
        self.n_bidders
    }

    /// Value ranks covered by the bid grid.
    pub fn alpha_range(&self) -> (f64, f64) {
        let a = self.fit.alphas();
        (
            phi_inverse_unchecked(a[0], self.n_bidders),
            phi_inverse_unchecked(*a.last().unwrap(), self.n_bidders),
        )
    }

    /// Value ranks matching the bid grid points.
    pub fn value_alphas(&self) -> Vec<f64> {
        self.fit
            .alphas()
            .iter()
            .map(|&a| phi_inverse_unchecked(a, self.n_bidders))
            .collect()
    }

    pub fn curve(&self, x: &[f64]) -> Result<ValueCurve> {
        Ok(ValueCurve {
            bid: self.fit.curve(x)?,
            n_bidders: self.n_bidders,
            alpha_range: self.alpha_range(),
        })
    }

    pub fn value_quantile(&self, alpha: f64, x: &[f64]) -> Result<f64> {
        self.curve(x)?.quantile(alpha)
    }

    pub fn value_quantile_deriv(&self, j: usize, alpha: f64, x: &[f64]) -> Result<f64> {
        self.curve(x)?.quantile_deriv_n(j, alpha)
    }

    pub fn value_cdf(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.curve(x)?.cdf(t)
    }

    pub fn value_pdf_ratio(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.curve(x)?.pdf_ratio(t)
    }

    pub fn virtual_valuation(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.curve(x)?.virtual_valuation(t)
    }

    /// Share of consecutive value-grid points at which the virtual valuation
    /// decreases. Zero when the hazard condition holds on the fit.
    pub fn virtual_valuation_violations(&self, x: &[f64]) -> Result<f64> {
        let c = self.curve(x)?;
        let j = self
            .value_alphas()
            .into_iter()
            .map(|a| Ok(c.quantile(a)? - c.quantile_deriv(a)? * (1.0 - a)))
            .collect::<Result<Vec<f64>>>()?;
        if j.len() < 2 {
            return Ok(0.0);
        }
        let drops = j.windows(2).filter(|w| w[1] < w[0]).count();
        Ok(drops as f64 / (j.len() - 1) as f64)
    }

    /// Trimmed value range `[V(alpha_min|x), V(alpha_max|x)]`.
    pub fn value_range(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok(self.curve(x)?.value_range())
    }
}

/// A [`ValuationModel`] at a fixed covariate value.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCurve {
    bid: BidCurve,
    n_bidders: u32,
    alpha_range: (f64, f64),
}

impl ValueCurve {
    pub fn bid_curve(&self) -> &BidCurve {
        &self.bid
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("probability {alpha} is outside [0, 1]")));
        }
        Ok(())
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.bid.level_range()
    }

    /// `j`-th derivative of the value quantile by Faà di Bruno.
    pub fn quantile_deriv_n(&self, j: usize, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        if j == 0 || j > self.bid.order() {
            return Err(Error::domain(format!(
                "derivative order {j} outside 1..={}",
                self.bid.order()
            )));
        }
        let p = phi_unchecked(alpha, self.n_bidders);
        let inner: Vec<f64> = (1..=j)
            .map(|k| phi_deriv_unchecked(alpha, self.n_bidders, k as u32))
            .collect();
        let outer = (1..=j)
            .map(|k| self.bid.deriv(k, p))
            .collect::<Result<Vec<_>>>()?;
        bell_compose(j, &inner, &outer)
    }

    pub fn virtual_valuation(&self, t: f64) -> Result<f64> {
        Ok(t - self.pdf_ratio(t)?)
    }
}

impl ValueDistribution for ValueCurve {
    fn alpha_domain(&self) -> (f64, f64) {
        self.alpha_range
    }

    fn quantile(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        self.bid.level(phi_unchecked(alpha, self.n_bidders))
    }

    fn quantile_deriv(&self, alpha: f64) -> Result<f64> {
        self.quantile_deriv_n(1, alpha)
    }

    fn cdf(&self, v: f64) -> Result<f64> {
        Ok(phi_inverse_unchecked(self.bid.inverse(v)?, self.n_bidders))
    }
}

/// Separate models for each bidder count present in the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    models: BTreeMap<u32, ValuationModel>,
}

impl ModelSet {
    pub fn estimate(data: &AuctionDataset, cfg: &ValuationConfig) -> Result<Self> {
        let mut models = BTreeMap::new();
        for (n, (sub, _)) in data.stratify() {
            let m = ValuationModel::estimate(&sub, cfg).map_err(|e| match e {
                Error::SingularDesign(msg) => {
                    Error::SingularDesign(format!("stratum with {n} bidders: {msg}"))
                }
                other => other,
            })?;
            models.insert(n, m);
        }
        if models.is_empty() {
            return Err(Error::data("dataset is empty"));
        }
        Ok(Self { models })
    }

    /// Per-stratum refits with record weights, each guided by the matching
    /// model of `guide` when present. Strata with zero total weight are
    /// dropped.
    pub fn estimate_guided(
        data: &AuctionDataset,
        weights: &[f64],
        cfg: &ValuationConfig,
        guide: &ModelSet,
    ) -> Result<Self> {
        if weights.len() != data.len() {
            return Err(Error::data("weight vector length does not match the dataset"));
        }
        let mut models = BTreeMap::new();
        for (n, (sub, idx)) in data.stratify() {
            let w: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
            if w.iter().sum::<f64>() <= 0.0 {
                continue;
            }
            let m = match guide.models.get(&n) {
                Some(g) => ValuationModel::estimate_guided(&sub, Some(&w), cfg, g),
                None => ValuationModel::estimate_weighted(&sub, &w, cfg),
            }
            .map_err(|e| match e {
                Error::SingularDesign(msg) => {
                    Error::SingularDesign(format!("stratum with {n} bidders: {msg}"))
                }
                other => other,
            })?;
            models.insert(n, m);
        }
        if models.is_empty() {
            return Err(Error::data("dataset is empty"));
        }
        Ok(Self { models })
    }

    pub fn from_models(models: BTreeMap<u32, ValuationModel>) -> Self {
        Self { models }
    }

    pub fn get(&self, n_bidders: u32) -> Result<&ValuationModel> {
        self.models
            .get(&n_bidders)
            .ok_or_else(|| Error::data(format!("no model for {n_bidders} bidders")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &ValuationModel)> {
        self.models.iter()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
