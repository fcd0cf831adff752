use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use auction_risk_cli::commands;
use auction_risk_cli::config::RunConfig;
use auction_risk_cli::error::{io_error, CliResult};
use auction_risk_cli::output::{sha256_hex, OutputDir};

#[derive(Parser)]
#[command(name = "auction-risk", version, about = "Bidder value quantiles and seller risk aversion from auction data")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Auction CSV to read.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo replications.
    #[arg(long, global = true, allow_negative_numbers = true)]
    reps: Option<i64>,
    /// Number of simulated auctions.
    #[arg(long, global = true, allow_negative_numbers = true)]
    auctions: Option<i64>,
    /// True risk-aversion coefficient for simulated data.
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta0: Option<f64>,
    /// Bootstrap replicates.
    #[arg(long, global = true, allow_negative_numbers = true)]
    bootstrap: Option<i64>,
    /// Fixed bandwidth over quantile levels.
    #[arg(long, global = true, allow_negative_numbers = true)]
    bandwidth: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Draw auctions from a simulation design.
    Simulate,
    /// Fit value quantile curves per bidder count.
    FitQuantiles,
    /// Estimate the seller's risk-aversion coefficient.
    FitTheta,
    /// Estimate with nonparametric bootstrap standard errors.
    Bootstrap,
    /// Replicate the estimators over simulated samples.
    MonteCarlo,
    /// Compare observed and model-implied distributions.
    ModelFit,
    /// Reserves a risk-neutral seller would set.
    Counterfactual,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::FitQuantiles => "fit-quantiles",
            Command::FitTheta => "fit-theta",
            Command::Bootstrap => "bootstrap",
            Command::MonteCarlo => "monte-carlo",
            Command::ModelFit => "model-fit",
            Command::Counterfactual => "counterfactual",
        }
    }
}

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &cli.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &cli.out {
        cfg.output = p.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.reps {
        cfg.monte_carlo.replications = r;
    }
    if let Some(n) = cli.auctions {
        cfg.dgp.auctions = n;
    }
    if let Some(t) = cli.theta0 {
        cfg.dgp.theta0 = t;
    }
    if let Some(b) = cli.bootstrap {
        cfg.bootstrap.replicates = b;
    }
    if let Some(h) = cli.bandwidth {
        cfg.valuation.bandwidth = Some(h);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve(cli)?;
    if !matches!(cli.command, Command::Simulate | Command::MonteCarlo) {
        cfg.input_path()?;
    }
    let toml = cfg.to_toml();
    let mut header = format!(
        "# auction-risk {} command={} seed={} config={}",
        env!("CARGO_PKG_VERSION"),
        cli.command.name(),
        cfg.seed,
        sha256_hex(toml.as_bytes())
    );
    if let Some(p) = &cfg.input {
        let bytes = std::fs::read(p).map_err(|e| io_error(p, e))?;
        header.push_str(&format!(" input={}", sha256_hex(&bytes)));
    }
    let out = OutputDir::create(&cfg.output, header)?;
    out.write("run.toml", toml.as_bytes())?;
    println!("{}", out.header());
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::FitQuantiles => commands::fit_quantiles(&cfg, &out),
        Command::FitTheta => commands::fit_theta_cmd(&cfg, &out),
        Command::Bootstrap => commands::bootstrap(&cfg, &out),
        Command::MonteCarlo => commands::monte_carlo(&cfg, &out),
        Command::ModelFit => commands::model_fit(&cfg, &out),
        Command::Counterfactual => commands::counterfactual(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
