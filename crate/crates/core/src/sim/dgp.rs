//! Data-generating processes with linear-in-covariates value quantiles.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AuctionDataset, AuctionRecord};
use crate::error::{Error, Result};
use crate::seller::{optimal_reserve, SellerProblem, UtilitySpec, ValueDistribution};
use crate::sim::rng::stream_rng;

/// One coefficient curve `gamma_d(alpha)` of the value quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Curve {
    Constant { value: f64 },
    Linear { intercept: f64, slope: f64 },
    /// `-ln(1 - (1 - 1/e) alpha)`, rising from 0 to 1.
    NegLog,
    /// `1 - exp(-rate alpha)`.
    ExpRise { rate: f64 },
    /// `scale * alpha^power`.
    Power { scale: f64, power: f64 },
}

impl Curve {
    pub fn value(&self, a: f64) -> f64 {
        match *self {
            Curve::Constant { value } => value,
            Curve::Linear { intercept, slope } => intercept + slope * a,
            Curve::NegLog => -(-(1.0 - (-1.0_f64).exp()) * a).ln_1p(),
            Curve::ExpRise { rate } => -(-rate * a).exp_m1(),
            Curve::Power { scale, power } => scale * a.powf(power),
        }
    }

    pub fn deriv(&self, a: f64) -> f64 {
        match *self {
            Curve::Constant { .. } => 0.0,
            Curve::Linear { slope, .. } => slope,
            Curve::NegLog => {
                let k = 1.0 - (-1.0_f64).exp();
                k / (1.0 - k * a)
            }
            Curve::ExpRise { rate } => rate * (-rate * a).exp(),
            Curve::Power { scale, power } => {
                if power == 1.0 {
                    scale
                } else {
                    scale * power * a.powf(power - 1.0)
                }
            }
        }
    }
}

/// `V(alpha | x) = gamma_0(alpha) + sum_d gamma_d(alpha) x_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearQuantileModel {
    pub gammas: Vec<Curve>,
}

impl LinearQuantileModel {
    /// The illustrative three-curve design with two uniform covariates.
    pub fn benchmark() -> Self {
        Self {
            gammas: vec![
                Curve::NegLog,
                Curve::Constant { value: 1.0 },
                Curve::ExpRise { rate: 5.0 },
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn quantile(&self, alpha: f64, x: &[f64]) -> f64 {
        self.gammas[0].value(alpha)
            + self.gammas[1..]
                .iter()
                .zip(x)
                .map(|(g, xi)| g.value(alpha) * xi)
                .sum::<f64>()
    }

    pub fn quantile_deriv(&self, alpha: f64, x: &[f64]) -> f64 {
        self.gammas[0].deriv(alpha)
            + self.gammas[1..]
                .iter()
                .zip(x)
                .map(|(g, xi)| g.deriv(alpha) * xi)
                .sum::<f64>()
    }

    pub fn at<'a>(&'a self, x: &'a [f64]) -> TrueValues<'a> {
        TrueValues { model: self, x }
    }
}

/// The true value distribution at one covariate value.
#[derive(Debug, Clone, Copy)]
pub struct TrueValues<'a> {
    model: &'a LinearQuantileModel,
    x: &'a [f64],
}

impl ValueDistribution for TrueValues<'_> {
    fn alpha_domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("probability {alpha} is outside [0, 1]")));
        }
        Ok(self.model.quantile(alpha, self.x))
    }

    fn quantile_deriv(&self, alpha: f64) -> Result<f64> {
        Ok(self.model.quantile_deriv(alpha, self.x))
    }

    fn cdf(&self, v: f64) -> Result<f64> {
        let q = |a: f64| self.model.quantile(a, self.x);
        if v <= q(0.0) {
            return Ok(0.0);
        }
        if v >= q(1.0) {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut a = 0.5;
        for _ in 0..200 {
            let f = q(a) - v;
            if f == 0.0 {
                return Ok(a);
            }
            if f < 0.0 {
                lo = a;
            } else {
                hi = a;
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi {
                break;
            }
            let d = self.model.quantile_deriv(a, self.x);
            let next = a - f / d;
            a = if d > 0.0 && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if (next - a).abs() == 0.0 && (f / d).abs() < 1e-17 {
                break;
            }
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovariateLaw {
    Uniform { lo: f64, hi: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl CovariateLaw {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            CovariateLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            CovariateLaw::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
        }
    }
}

/// A fully specified linear-quantile design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomDgp {
    pub model: LinearQuantileModel,
    pub covariates: Vec<CovariateLaw>,
    /// Bidder counts with relative frequencies; empty means use the spec's count.
    pub bidders: Vec<(u32, f64)>,
    /// Outside value is `V(beta | X)` with `beta` uniform on this range.
    pub outside_rank: (f64, f64),
}

impl CustomDgp {
    /// Synthetic stand-in for a housing-auction sample: one covariate (floor
    /// area in hundreds of square metres, log-normal), prices in hundreds of
    /// thousands, a handful of bidder counts.
    pub fn housing_lookalike() -> Self {
        Self {
            model: LinearQuantileModel {
                gammas: vec![
                    Curve::Linear {
                        intercept: 0.1,
                        slope: 0.4,
                    },
                    Curve::Power {
                        scale: 3.4,
                        power: 1.6,
                    },
                ],
            },
            covariates: vec![CovariateLaw::LogNormal {
                mu: 0.157,
                sigma: 0.666,
            }],
            bidders: vec![(3, 0.4), (5, 0.35), (8, 0.25)],
            outside_rank: (0.05, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DgpKind {
    /// Two uniform covariates with the benchmark curves.
    Benchmark,
    /// Values uniform on [0, 1], no covariates.
    UniformStub,
    Custom(CustomDgp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub n_bidders: u32,
    pub n_auctions: usize,
    pub theta0: f64,
    pub seed: u64,
}

impl DgpSpec {
    pub fn benchmark(n_auctions: usize, theta0: f64, seed: u64) -> Self {
        Self {
            kind: DgpKind::Benchmark,
            n_bidders: 3,
            n_auctions,
            theta0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bidders < 2 {
            return Err(Error::config("bidder count must be at least 2"));
        }
        if self.n_auctions == 0 {
            return Err(Error::config("number of auctions must be positive"));
        }
        if !self.theta0.is_finite() {
            return Err(Error::config("theta0 must be finite"));
        }
        if let DgpKind::Custom(c) = &self.kind {
            if c.model.gammas.is_empty() || c.model.dim() != c.covariates.len() {
                return Err(Error::config(
                    "custom design needs one curve per covariate plus an intercept",
                ));
            }
            let (lo, hi) = c.outside_rank;
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::config("outside-value rank range must lie in [0, 1]"));
            }
            if c.bidders.iter().any(|&(n, w)| n < 2 || !(w >= 0.0)) {
                return Err(Error::config("bidder counts must be >= 2 with nonnegative weights"));
            }
        }
        Ok(())
    }

    /// The design's value model, covariate laws, bidder mix and outside-rank range.
    pub fn design(&self) -> CustomDgp {
        match &self.kind {
            DgpKind::Benchmark => CustomDgp {
                model: LinearQuantileModel::benchmark(),
                covariates: vec![CovariateLaw::Uniform { lo: 0.0, hi: 1.0 }; 2],
                bidders: vec![],
                outside_rank: (0.05, 0.5),
            },
            DgpKind::UniformStub => CustomDgp {
                model: LinearQuantileModel {
                    gammas: vec![Curve::Linear {
                        intercept: 0.0,
                        slope: 1.0,
                    }],
                },
                covariates: vec![],
                bidders: vec![],
                outside_rank: (0.05, 0.5),
            },
            DgpKind::Custom(c) => c.clone(),
        }
    }
}

struct Draw {
    x: Vec<f64>,
    n: u32,
    bid: f64,
    w: f64,
}

fn pick_bidders(mix: &[(u32, f64)], default: u32, rng: &mut impl Rng) -> u32 {
    let total: f64 = mix.iter().map(|m| m.1).sum();
    if mix.is_empty() || total <= 0.0 {
        return default;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for &(n, w) in mix {
        acc += w;
        if u < acc {
            return n;
        }
    }
    mix.last().unwrap().0
}

/// Second-highest of `n` uniform ranks.
pub fn second_highest_rank(n: u32, rng: &mut impl Rng) -> f64 {
    let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..n {
        let a = rng.random::<f64>();
        if a > top {
            second = top;
            top = a;
        } else if a > second {
            second = a;
        }
    }
    second
}

/// Draw a dataset. The reserve of each auction is the seller's exact optimum
/// under `theta0` given the true value distribution.
pub fn simulate_auctions(spec: &DgpSpec) -> Result<AuctionDataset> {
    spec.validate()?;
    let design = spec.design();
    let model = &design.model;
    let mut rng = stream_rng(spec.seed, 0);
    let draws: Vec<Draw> = (0..spec.n_auctions)
        .map(|_| {
            let x: Vec<f64> = design.covariates.iter().map(|c| c.draw(&mut rng)).collect();
            let n = pick_bidders(&design.bidders, spec.n_bidders, &mut rng);
            let rank = second_highest_rank(n, &mut rng);
            let (lo, hi) = design.outside_rank;
            let beta = lo + (hi - lo) * rng.random::<f64>();
            Draw {
                bid: model.quantile(rank, &x),
                w: model.quantile(beta, &x),
                x,
                n,
            }
        })
        .collect();
    let utility = UtilitySpec::crra(spec.theta0);
    let records = draws
        .into_par_iter()
        .map(|d| {
            let truth = model.at(&d.x);
            let problem = SellerProblem::new(&truth, d.w, d.n, utility)?;
            let sol = optimal_reserve(&problem)?;
            Ok(AuctionRecord {
                winning_bid: d.bid,
                reserve: Some(sol.reserve),
                outside_value: Some(d.w),
                covariates: d.x,
                n_bidders: d.n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AuctionDataset::with_dim(records, model.dim())
}
