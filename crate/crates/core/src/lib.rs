//! Estimation of bidder value distributions and seller risk aversion from
//! ascending-auction data.
//!
//! Stage one fits an augmented quantile regression of winning bids on
//! covariates ([`aqr`]) and maps it to bidder value quantiles through the
//! order-statistic link ([`valuation`]). Stage two recovers the seller's
//! CRRA coefficient from observed reserve prices by minimizing the squared
//! first-order condition of the seller's problem ([`risk`]).

pub mod aqr;
pub mod data;
pub mod error;
pub mod isotonic;
pub mod math;
pub mod risk;
pub mod seller;
pub mod sim;
pub mod valuation;

pub use aqr::{fit_aqr, fit_aqr_weighted, AqrConfig, AqrFit, Bandwidth, BidCurve};
pub use data::{AuctionDataset, AuctionRecord};
pub use error::{Bound, Error, ErrorCategory, Result};
pub use risk::{
    bootstrap_theta, fit_theta, q_residual, RiskConfig, RiskEstimate, RiskObjectiveContext,
};
pub use seller::{crra, optimal_reserve, SellerProblem, UtilitySpec, ValueDistribution};
pub use valuation::{ModelSet, ValuationConfig, ValuationModel};
