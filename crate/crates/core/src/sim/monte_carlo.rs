//! Replicated simulate-estimate experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{bootstrap_theta, fit_theta, RiskConfig, RiskObjectiveContext};
use crate::seller::ValueDistribution;
use crate::sim::dgp::{simulate_auctions, DgpSpec};
use crate::sim::rng::derive_seed;
use crate::sim::stats::{mean, median, quantile, sample_sd, trapezoid};
use crate::valuation::{ModelSet, ValuationConfig};

/// Integrated squared error of `fit` against `truth` over `grid`, by the
/// trapezoid rule.
pub fn quantile_imse(grid: &[f64], fit: &[f64], truth: &[f64]) -> Result<f64> {
    if grid.len() != fit.len() || grid.len() != truth.len() {
        return Err(Error::domain("grid, fit and truth must have equal lengths"));
    }
    let sq: Vec<f64> = fit.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).collect();
    Ok(trapezoid(grid, &sq))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    /// Bootstrap replicates per bootstrapped replication; 0 disables it.
    pub bootstrap: usize,
    /// Number of leading replications that are bootstrapped.
    pub bootstrap_replications: usize,
    /// Covariate value for the quantile error curves; `None` skips them.
    pub imse_at: Option<Vec<f64>>,
    /// Restrict the error integrals to grid ranks inside this interval.
    /// `None` integrates over the whole value grid.
    #[serde(default)]
    pub imse_window: Option<(f64, f64)>,
    /// Skip the risk stage and only fit the quantiles.
    pub quantiles_only: bool,
}

impl McConfig {
    pub fn new(replications: usize) -> Self {
        Self {
            replications,
            bootstrap: 0,
            bootstrap_replications: 0,
            imse_at: None,
            imse_window: None,
            quantiles_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::config("need at least 2 replications"));
        }
        if let Some((lo, hi)) = self.imse_window {
            if !(lo < hi) {
                return Err(Error::config("error window must have lo < hi"));
            }
        }
        if self.bootstrap == 1 {
            return Err(Error::config("bootstrap needs at least 2 replicates"));
        }
        Ok(())
    }
}

/// One replication's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateLog {
    pub replication: usize,
    pub seed: u64,
    pub bandwidth: Option<f64>,
    pub theta_hat: Option<f64>,
    pub at_bound: bool,
    pub boot_se: Option<f64>,
    pub imse_value: Option<f64>,
    pub imse_deriv: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMetrics {
    pub theta0: f64,
    pub bias: f64,
    pub mbias: f64,
    pub std: f64,
    /// Mean bootstrap standard error over bootstrapped replications.
    pub b_se: f64,
    pub mse: f64,
    /// Interquartile range of the estimates studentized by their own
    /// bootstrap standard errors, divided by 1.349. NaN without bootstrap.
    pub iqr: f64,
    /// Interquartile range of `(theta_hat - theta0) / std`, divided by 1.349.
    pub iqr_std: f64,
    pub imse_value: f64,
    pub imse_deriv: f64,
    pub successes: usize,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub metrics: McMetrics,
    pub log: Vec<ReplicateLog>,
}

/// Summary statistics of replicated estimates around `theta0`.
pub fn theta_metrics(theta0: f64, est: &[f64], boot: &[(f64, f64)]) -> McMetrics {
    let dev: Vec<f64> = est.iter().map(|t| t - theta0).collect();
    let std = sample_sd(est);
    let iqr_std = (quantile(&dev, 0.75) - quantile(&dev, 0.25)) / (1.349 * std);
    let stud: Vec<f64> = boot
        .iter()
        .filter(|(_, se)| *se > 0.0)
        .map(|(t, se)| (t - theta0) / se)
        .collect();
    let iqr = if stud.len() >= 2 {
        (quantile(&stud, 0.75) - quantile(&stud, 0.25)) / 1.349
    } else {
        f64::NAN
    };
    McMetrics {
        theta0,
        bias: mean(&dev),
        mbias: median(&dev),
        std,
        b_se: if boot.is_empty() {
            f64::NAN
        } else {
            boot.iter().map(|b| b.1).sum::<f64>() / boot.len() as f64
        },
        mse: dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64,
        iqr,
        iqr_std,
        imse_value: f64::NAN,
        imse_deriv: f64::NAN,
        successes: est.len(),
        replications: est.len(),
    }
}

fn run_one(
    spec: &DgpSpec,
    vcfg: &ValuationConfig,
    rcfg: &RiskConfig,
    mc: &McConfig,
    rep: usize,
) -> ReplicateLog {
    let seed = derive_seed(spec.seed, rep as u64);
    let mut log = ReplicateLog {
        replication: rep,
        seed,
        bandwidth: None,
        theta_hat: None,
        at_bound: false,
        boot_se: None,
        imse_value: None,
        imse_deriv: None,
        error: None,
    };
    let res = (|| -> Result<()> {
        let data = simulate_auctions(&DgpSpec {
            seed,
            ..spec.clone()
        })?;
        let models = ModelSet::estimate(&data, vcfg)?;
        let model = models.get(spec.n_bidders).ok();
        log.bandwidth = model.map(|m| m.fit().bandwidth());
        if let (Some(x), Some(m)) = (&mc.imse_at, model) {
            let truth = spec.design().model;
            let curve = m.curve(x)?;
            let (lo, hi) = mc.imse_window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            let grid: Vec<f64> = vcfg
                .value_grid
                .iter()
                .copied()
                .filter(|&a| a >= lo - 1e-12 && a <= hi + 1e-12)
                .collect();
            let tv = truth.at(x);
            let mut fv = Vec::with_capacity(grid.len());
            let mut fd = Vec::with_capacity(grid.len());
            let mut t0 = Vec::with_capacity(grid.len());
            let mut t1 = Vec::with_capacity(grid.len());
            for &a in &grid {
                fv.push(curve.quantile(a)?);
                fd.push(curve.quantile_deriv_n(1, a)?);
                t0.push(tv.quantile(a)?);
                t1.push(tv.quantile_deriv(a)?);
            }
            log.imse_value = Some(quantile_imse(&grid, &fv, &t0)?);
            log.imse_deriv = Some(quantile_imse(&grid, &fd, &t1)?);
        }
        if mc.quantiles_only {
            return Ok(());
        }
        let est = if mc.bootstrap >= 2 && rep < mc.bootstrap_replications {
            let boot_seed = derive_seed(seed, 1);
            bootstrap_theta(&data, &models, vcfg, rcfg, mc.bootstrap, boot_seed)?
        } else {
            fit_theta(&RiskObjectiveContext::new(&data, &models, rcfg)?)?
        };
        log.theta_hat = Some(est.theta_hat);
        log.at_bound = est.at_bound.is_some();
        log.boot_se = est.boot.as_ref().map(|b| b.se);
        Ok(())
    })();
    if let Err(e) = res {
        log.error = Some(e.to_string());
    }
    log
}

/// Run `mc.replications` independent simulate-estimate replications.
/// Replication `i` uses the seed derived from `spec.seed` and `i`, so any
/// single replication can be rerun in isolation.
pub fn run_monte_carlo(
    spec: &DgpSpec,
    vcfg: &ValuationConfig,
    rcfg: &RiskConfig,
    mc: &McConfig,
) -> Result<McReport> {
    spec.validate()?;
    mc.validate()?;
    rcfg.validate()?;
    let log: Vec<ReplicateLog> = (0..mc.replications)
        .into_par_iter()
        .map(|rep| run_one(spec, vcfg, rcfg, mc, rep))
        .collect();
    Ok(McReport {
        metrics: summarize(spec.theta0, &log),
        log,
    })
}

/// Metrics over the successful replications of a log.
pub fn summarize(theta0: f64, log: &[ReplicateLog]) -> McMetrics {
    let est: Vec<f64> = log.iter().filter_map(|l| l.theta_hat).collect();
    let boot: Vec<(f64, f64)> = log
        .iter()
        .filter_map(|l| Some((l.theta_hat?, l.boot_se?)))
        .collect();
    let mut m = if est.len() >= 2 {
        theta_metrics(theta0, &est, &boot)
    } else {
        McMetrics {
            theta0,
            bias: f64::NAN,
            mbias: f64::NAN,
            std: f64::NAN,
            b_se: f64::NAN,
            mse: f64::NAN,
            iqr: f64::NAN,
            iqr_std: f64::NAN,
            imse_value: f64::NAN,
            imse_deriv: f64::NAN,
            successes: est.len(),
            replications: log.len(),
        }
    };
    let iv: Vec<f64> = log.iter().filter_map(|l| l.imse_value).collect();
    let id: Vec<f64> = log.iter().filter_map(|l| l.imse_deriv).collect();
    if !iv.is_empty() {
        m.imse_value = mean(&iv);
        m.imse_deriv = mean(&id);
    }
    m.successes = log.iter().filter(|l| l.error.is_none()).count();
    m.replications = log.len();
    m
}
