//! Synthetic designs, Monte Carlo experiments and model-fit diagnostics.

pub mod dgp;
pub mod fit_report;
pub mod monte_carlo;
pub mod rng;
pub mod stats;

pub use dgp::{simulate_auctions, CustomDgp, DgpKind, DgpSpec, LinearQuantileModel};
pub use fit_report::{
    counterfactual_reserve_shift, model_fit_report, resimulate_bids, Counterfactual, FitReport,
    FitTarget,
};
pub use monte_carlo::{quantile_imse, run_monte_carlo, McConfig, McMetrics, McReport};
