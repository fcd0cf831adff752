//! Run configuration, read from TOML and overridden from the command line.

use std::path::{Path, PathBuf};

use auction_risk::aqr::uniform_grid;
use auction_risk::sim::{CustomDgp, DgpKind, DgpSpec, FitTarget, McConfig};
use auction_risk::{Bandwidth, RiskConfig, ValuationConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub input: Option<PathBuf>,
    /// Not part of the run's identity, so left out of the canonical form.
    #[serde(skip_serializing)]
    pub output: PathBuf,
    pub dgp: DgpSection,
    pub valuation: ValuationSection,
    pub risk: RiskSection,
    pub bootstrap: BootstrapSection,
    pub monte_carlo: MonteCarloSection,
    pub model_fit: ModelFitSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpSection {
    /// `benchmark`, `uniform` or `housing`.
    pub design: String,
    pub n_bidders: i64,
    pub auctions: i64,
    pub theta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValuationSection {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
    pub order: i64,
    /// Fixed bandwidth; when absent the rule `s_B * L^(-1/bandwidth_root)` is used.
    pub bandwidth: Option<f64>,
    pub bandwidth_root: i64,
    pub quad_order: i64,
    /// Covariate value for the exported curves; defaults to the sample means.
    pub at: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskSection {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub scan_points: i64,
    /// Use this coefficient in `model-fit` and `counterfactual` instead of
    /// estimating it.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub replicates: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub replications: i64,
    pub bootstrap: i64,
    pub bootstrap_replications: i64,
    pub imse_at: Option<Vec<f64>>,
    pub imse_window: Option<(f64, f64)>,
    pub quantiles_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelFitSection {
    pub draws: i64,
    /// `winning_bid` or `reserve`.
    pub target: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            input: None,
            output: PathBuf::from("out"),
            dgp: DgpSection::default(),
            valuation: ValuationSection::default(),
            risk: RiskSection::default(),
            bootstrap: BootstrapSection::default(),
            monte_carlo: MonteCarloSection::default(),
            model_fit: ModelFitSection::default(),
        }
    }
}

impl Default for DgpSection {
    fn default() -> Self {
        Self {
            design: "benchmark".into(),
            n_bidders: 3,
            auctions: 1000,
            theta0: 0.5,
        }
    }
}

impl Default for ValuationSection {
    fn default() -> Self {
        Self {
            grid_lo: 0.01,
            grid_hi: 0.99,
            grid_step: 0.01,
            order: 2,
            bandwidth: None,
            bandwidth_root: 6,
            quad_order: 33,
            at: None,
        }
    }
}

impl Default for RiskSection {
    fn default() -> Self {
        let r = RiskConfig::default();
        Self {
            theta_lo: r.theta_bounds.0,
            theta_hi: r.theta_bounds.1,
            scan_points: r.scan_points as i64,
            theta: None,
        }
    }
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self { replicates: 99 }
    }
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            replications: 200,
            bootstrap: 0,
            bootstrap_replications: 0,
            imse_at: Some(vec![0.5, 0.5]),
            imse_window: None,
            quantiles_only: false,
        }
    }
}

impl Default for ModelFitSection {
    fn default() -> Self {
        Self {
            draws: 100,
            target: "winning_bid".into(),
        }
    }
}

fn count(name: &str, v: i64, min: i64) -> CliResult<usize> {
    if v < min {
        return Err(CliError::config(format!("{name} must be at least {min}, got {v}")));
    }
    Ok(v as usize)
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message())))
    }

    /// Canonical TOML rendering; the provenance hash is taken over this.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Check every parameter before anything runs.
    pub fn validate(&self) -> CliResult<()> {
        self.dgp_spec()?;
        self.valuation_config()?;
        self.risk_config()?;
        self.mc_config()?;
        self.fit_target()?;
        count("bootstrap.replicates", self.bootstrap.replicates, 0)?;
        count("model_fit.draws", self.model_fit.draws, 1)?;
        if let Some(t) = self.risk.theta {
            if !t.is_finite() {
                return Err(CliError::config("risk.theta must be finite"));
            }
        }
        Ok(())
    }

    pub fn dgp_spec(&self) -> CliResult<DgpSpec> {
        let d = &self.dgp;
        let n_bidders = count("dgp.n_bidders", d.n_bidders, 2)? as u32;
        let kind = match d.design.as_str() {
            "benchmark" => DgpKind::Benchmark,
            "uniform" => DgpKind::UniformStub,
            "housing" => DgpKind::Custom(CustomDgp::housing_lookalike()),
            other => {
                return Err(CliError::config(format!(
                    "dgp.design must be benchmark, uniform or housing, got {other:?}"
                )))
            }
        };
        let spec = DgpSpec {
            kind,
            n_bidders,
            n_auctions: count("dgp.auctions", d.auctions, 1)?,
            theta0: d.theta0,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn valuation_config(&self) -> CliResult<ValuationConfig> {
        let v = &self.valuation;
        if !(v.grid_lo > 0.0 && v.grid_hi < 1.0) {
            return Err(CliError::config(format!(
                "valuation grid must stay strictly inside (0, 1), got [{}, {}]",
                v.grid_lo, v.grid_hi
            )));
        }
        if !(v.grid_lo <= v.grid_hi && v.grid_step > 0.0) {
            return Err(CliError::config(
                "valuation grid needs grid_lo <= grid_hi and a positive grid_step",
            ));
        }
        let bandwidth = match v.bandwidth {
            Some(h) if !(h > 0.0 && h.is_finite()) => {
                return Err(CliError::config(format!(
                    "valuation.bandwidth must be positive, got {h}"
                )))
            }
            Some(h) => Bandwidth::Fixed(h),
            None => Bandwidth::RuleOfThumb {
                root: count("valuation.bandwidth_root", v.bandwidth_root, 1)? as u32,
            },
        };
        let cfg = ValuationConfig {
            value_grid: uniform_grid(v.grid_lo, v.grid_hi, v.grid_step),
            order: count("valuation.order", v.order, 0)?,
            bandwidth,
            quad_order: count("valuation.quad_order", v.quad_order, 1)?,
            ..ValuationConfig::default()
        };
        // the bid-level checks need a bidder count; any valid one will do
        cfg.aqr_config(2)?;
        Ok(cfg)
    }

    pub fn risk_config(&self) -> CliResult<RiskConfig> {
        let cfg = RiskConfig {
            theta_bounds: (self.risk.theta_lo, self.risk.theta_hi),
            scan_points: count("risk.scan_points", self.risk.scan_points, 3)?,
            ..RiskConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mc_config(&self) -> CliResult<McConfig> {
        let m = &self.monte_carlo;
        let cfg = McConfig {
            replications: count("monte_carlo.replications", m.replications, 1)?,
            bootstrap: count("monte_carlo.bootstrap", m.bootstrap, 0)?,
            bootstrap_replications: count(
                "monte_carlo.bootstrap_replications",
                m.bootstrap_replications,
                0,
            )?,
            imse_at: m.imse_at.clone(),
            imse_window: m.imse_window,
            quantiles_only: m.quantiles_only,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fit_target(&self) -> CliResult<FitTarget> {
        match self.model_fit.target.as_str() {
            "winning_bid" => Ok(FitTarget::WinningBid),
            "reserve" => Ok(FitTarget::Reserve),
            other => Err(CliError::config(format!(
                "model_fit.target must be winning_bid or reserve, got {other:?}"
            ))),
        }
    }

    pub fn input_path(&self) -> CliResult<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::config("this command needs an input file (--input)"))
    }
}
