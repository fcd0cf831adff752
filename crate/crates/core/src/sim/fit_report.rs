//! Goodness of fit of an estimated model and counterfactual reserves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AuctionDataset, AuctionRecord};
use crate::error::{Error, Result};
use crate::seller::{optimal_reserve, SellerProblem, UtilitySpec, ValueDistribution};
use crate::sim::dgp::second_highest_rank;
use crate::sim::rng::stream_rng;
use crate::sim::stats::{ecdf_l2_distance, mean, quantile, Ecdf};
use crate::valuation::ModelSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    WinningBid,
    Reserve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub target: FitTarget,
    pub cdf_sample: Ecdf,
    pub cdf_simulated: Ecdf,
    /// Mean simulated minus mean observed.
    pub bias: f64,
    pub percentage_bias: f64,
    /// Integrated squared distance between the two empirical CDFs.
    pub imse: f64,
}

/// Value rank pushed into the model's rank domain; the fitted quantile is
/// held flat beyond it.
fn clamp_rank(a: f64, (lo, hi): (f64, f64)) -> f64 {
    a.clamp(lo, hi)
}

/// Winning bids drawn from the fitted model at each record's covariates and
/// bidder count, `draws` per record. Record `l` uses stream `l` of `seed`.
pub fn simulate_winning_bids(
    data: &AuctionDataset,
    models: &ModelSet,
    draws: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    data.records()
        .par_iter()
        .enumerate()
        .map(|(l, rec)| {
            let curve = models
                .get(rec.n_bidders)
                .and_then(|m| m.curve(&rec.covariates))
                .map_err(|e| e.at_record(l))?;
            let dom = curve.alpha_domain();
            let mut rng = stream_rng(seed, l as u64);
            (0..draws)
                .map(|_| {
                    let a = second_highest_rank(rec.n_bidders, &mut rng);
                    curve.quantile(clamp_rank(a, dom)).map_err(|e| e.at_record(l))
                })
                .collect()
        })
        .collect()
}

/// The fitted model's optimal reserve for each record with an outside value.
fn model_reserves(
    data: &AuctionDataset,
    models: &ModelSet,
    theta: f64,
) -> Result<Vec<(usize, f64)>> {
    let utility = UtilitySpec::crra(theta);
    let out: Vec<Option<(usize, f64)>> = data
        .records()
        .par_iter()
        .enumerate()
        .map(|(l, rec)| {
            let Some(w) = rec.outside_value else {
                return Ok(None);
            };
            let curve = models
                .get(rec.n_bidders)
                .and_then(|m| m.curve(&rec.covariates))
                .map_err(|e| e.at_record(l))?;
            let problem = SellerProblem::new(&curve, w, rec.n_bidders, utility)
                .map_err(|e| e.at_record(l))?;
            let sol = optimal_reserve(&problem).map_err(|e| e.at_record(l))?;
            Ok(Some((l, sol.reserve)))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Compare the observed distribution of winning bids or reserves with the
/// one implied by the fitted model.
pub fn model_fit_report(
    data: &AuctionDataset,
    models: &ModelSet,
    theta_hat: f64,
    target: FitTarget,
    draws: usize,
    seed: u64,
) -> Result<FitReport> {
    let (sample, simulated) = match target {
        FitTarget::WinningBid => {
            if draws == 0 {
                return Err(Error::config("draws per auction must be positive"));
            }
            let sim = simulate_winning_bids(data, models, draws, seed)?;
            (data.winning_bids(), sim.into_iter().flatten().collect::<Vec<_>>())
        }
        FitTarget::Reserve => {
            let fitted = model_reserves(data, models, theta_hat)?;
            let recs = data.records();
            let mut obs = Vec::new();
            let mut sim = Vec::new();
            for (l, r) in fitted {
                if let Some(obs_r) = recs[l].reserve {
                    obs.push(obs_r);
                    sim.push(r);
                }
            }
            (obs, sim)
        }
    };
    if sample.is_empty() || simulated.is_empty() {
        return Err(Error::data("no records available for the requested fit target"));
    }
    let ms = mean(&sample);
    let bias = mean(&simulated) - ms;
    let cdf_sample = Ecdf::new(sample);
    let cdf_simulated = Ecdf::new(simulated);
    Ok(FitReport {
        target,
        imse: ecdf_l2_distance(&cdf_sample, &cdf_simulated),
        cdf_sample,
        cdf_simulated,
        bias,
        percentage_bias: 100.0 * bias / ms,
    })
}

/// A copy of `data` whose winning bids are redrawn from the fitted model.
pub fn resimulate_bids(data: &AuctionDataset, models: &ModelSet, seed: u64) -> Result<AuctionDataset> {
    let bids = simulate_winning_bids(data, models, 1, seed)?;
    let records: Vec<AuctionRecord> = data
        .records()
        .iter()
        .zip(bids)
        .map(|(r, b)| AuctionRecord {
            winning_bid: b[0],
            ..r.clone()
        })
        .collect();
    AuctionDataset::with_dim(records, data.dim())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReserveShift {
    pub index: usize,
    pub reserve_fitted: f64,
    pub reserve_neutral: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSummary {
    pub label: String,
    pub count: usize,
    pub mean_increase: f64,
    /// Mean increase relative to the mean fitted reserve, in percent.
    pub percentage_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub theta_hat: f64,
    pub records: Vec<ReserveShift>,
    pub overall: ShiftSummary,
    /// Records whose first covariate falls in the 20-30, 45-55 and 70-80
    /// percentile bands.
    pub groups: Vec<ShiftSummary>,
}

fn summarize_shift(label: &str, rows: &[&ReserveShift]) -> ShiftSummary {
    let count = rows.len();
    if count == 0 {
        return ShiftSummary {
            label: label.into(),
            count,
            mean_increase: f64::NAN,
            percentage_increase: f64::NAN,
        };
    }
    let d = rows.iter().map(|r| r.delta).sum::<f64>() / count as f64;
    let base = rows.iter().map(|r| r.reserve_fitted).sum::<f64>() / count as f64;
    ShiftSummary {
        label: label.into(),
        count,
        mean_increase: d,
        percentage_increase: 100.0 * d / base,
    }
}

/// Reserves a risk-neutral seller would set, against those at `theta_hat`,
/// both from the fitted model.
pub fn counterfactual_reserve_shift(
    data: &AuctionDataset,
    models: &ModelSet,
    theta_hat: f64,
) -> Result<Counterfactual> {
    let fitted = model_reserves(data, models, theta_hat)?;
    if fitted.is_empty() {
        return Err(Error::data("no records with an outside value"));
    }
    let neutral = if theta_hat == 0.0 {
        fitted.clone()
    } else {
        model_reserves(data, models, 0.0)?
    };
    let records: Vec<ReserveShift> = fitted
        .iter()
        .zip(&neutral)
        .map(|(&(index, rf), &(_, rn))| ReserveShift {
            index,
            reserve_fitted: rf,
            reserve_neutral: rn,
            delta: rn - rf,
        })
        .collect();
    let all: Vec<&ReserveShift> = records.iter().collect();
    let overall = summarize_shift("all", &all);
    let mut groups = Vec::new();
    if data.dim() > 0 {
        let x1: Vec<f64> = records
            .iter()
            .map(|r| data.records()[r.index].covariates[0])
            .collect();
        for (lo, hi) in [(20, 30), (45, 55), (70, 80)] {
            let a = quantile(&x1, lo as f64 / 100.0);
            let b = quantile(&x1, hi as f64 / 100.0);
            let rows: Vec<&ReserveShift> = records
                .iter()
                .zip(&x1)
                .filter(|(_, &x)| x >= a && x <= b)
                .map(|(r, _)| r)
                .collect();
            groups.push(summarize_shift(&format!("p{lo}-p{hi}"), &rows));
        }
    }
    Ok(Counterfactual {
        theta_hat,
        records,
        overall,
        groups,
    })
}
