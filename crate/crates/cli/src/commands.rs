use auction_risk::sim::{
    counterfactual_reserve_shift, model_fit_report, run_monte_carlo, simulate_auctions, FitTarget,
};
use auction_risk::seller::ValueDistribution;
use auction_risk::{
    bootstrap_theta, fit_theta, AuctionDataset, ModelSet, RiskEstimate, RiskObjectiveContext,
};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::ingest::{dataset_csv, read_dataset, summary_table};
use crate::output::{f4, opt, sci, OutputDir, Table};

fn load_input(cfg: &RunConfig) -> CliResult<AuctionDataset> {
    let data = read_dataset(cfg.input_path()?)?;
    print!("{}", summary_table(&data));
    Ok(data)
}

fn covariate_means(data: &AuctionDataset) -> Vec<f64> {
    let n = data.len() as f64;
    (0..data.dim())
        .map(|k| data.records().iter().map(|r| r.covariates[k]).sum::<f64>() / n)
        .collect()
}

fn estimate_models(cfg: &RunConfig, data: &AuctionDataset) -> CliResult<ModelSet> {
    Ok(ModelSet::estimate(data, &cfg.valuation_config()?)?)
}

fn theta_for(cfg: &RunConfig, data: &AuctionDataset, models: &ModelSet) -> CliResult<f64> {
    if let Some(t) = cfg.risk.theta {
        return Ok(t);
    }
    let ctx = RiskObjectiveContext::new(data, models, &cfg.risk_config()?)?;
    Ok(fit_theta(&ctx)?.theta_hat)
}

fn estimate_record(est: &RiskEstimate) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
    kv("theta_hat", f4(est.theta_hat));
    kv("theta_hat_exact", est.theta_hat.to_string());
    kv("objective", sci(est.objective_at_min));
    kv("gradient", sci(est.gradient_at_min));
    kv("used_records", est.used_records.to_string());
    kv("excluded_missing", est.exclusions.missing.to_string());
    kv("excluded_trimmed", est.exclusions.trimmed.to_string());
    kv("excluded_nonpositive", est.exclusions.nonpositive.to_string());
    kv("at_bound", est.at_bound.map_or("none".into(), |b| b.to_string()));
    if let Some(b) = &est.boot {
        kv("boot_replicates", b.replicates.len().to_string());
        kv("boot_failures", b.failures.len().to_string());
        kv("boot_se", f4(b.se));
        kv("boot_p2_5", f4(b.percentile_2_5));
        kv("boot_p97_5", f4(b.percentile_97_5));
    }
    s
}

pub fn simulate(cfg: &RunConfig, out: &OutputDir) -> CliResult<()> {
    let data = simulate_auctions(&cfg.dgp_spec()?)?;
    let path = out.write("auctions.csv", &dataset_csv(&data))?;
    print!("{}", summary_table(&data));
    println!("wrote {} auctions to {}", data.len(), path.display());
    Ok(())
}

pub fn fit_quantiles(cfg: &RunConfig, out: &OutputDir) -> CliResult<()> {
    let data = load_input(cfg)?;
    let models = estimate_models(cfg, &data)?;
    let x = cfg.valuation.at.clone().unwrap_or_else(|| covariate_means(&data));

    let p = data.dim() + 1;
    let order = cfg.valuation_config()?.order;
    let mut header = vec!["n_bidders".to_string(), "bid_alpha".into(), "bandwidth".into()];
    for j in 0..=order {
        header.extend((0..p).map(|k| format!("d{j}_b{k}")));
    }
    let mut coef = Table::new(&header);
    let mut curves = Table::new(&["n_bidders", "alpha", "value", "value_deriv"]);
    for (&n, model) in models.iter() {
        let fit = model.fit();
        for (g, &a) in fit.alphas().iter().enumerate() {
            let mut row = vec![n.to_string(), a.to_string(), fit.bandwidth().to_string()];
            row.extend(fit.coefficients(g).iter().map(f64::to_string));
            coef.row(&row);
        }
        let curve = model.curve(&x)?;
        for a in model.value_alphas() {
            curves.row(&[
                n.to_string(),
                a.to_string(),
                curve.quantile(a)?.to_string(),
                curve.quantile_deriv(a)?.to_string(),
            ]);
        }
        println!("bidders {n}: {} grid points, bandwidth {:.4}", fit.alphas().len(), fit.bandwidth());
    }
    out.write("coefficients.csv", &coef.finish())?;
    out.write("curves.csv", &curves.finish())?;
    Ok(())
}

pub fn fit_theta_cmd(cfg: &RunConfig, out: &OutputDir) -> CliResult<()> {
    let data = load_input(cfg)?;
    let models = estimate_models(cfg, &data)?;
    let est = fit_theta(&RiskObjectiveContext::new(&data, &models, &cfg.risk_config()?)?)?;
    let rec = estimate_record(&est);
    out.write("estimate.txt", rec.as_bytes())?;
    print!("{rec}");
    Ok(())
}

pub fn bootstrap(cfg: &RunConfig, out: &OutputDir) -> CliResult<()> {
    let data = load_input(cfg)?;
    let vcfg = cfg.valuation_config()?;
    let models = ModelSet::estimate(&data, &vcfg)?;
    let b = cfg.bootstrap.replicates as usize;
    let est = bootstrap_theta(&data, &models, &vcfg, &cfg.risk_config()?, b, cfg.seed)?;
    let boot = est.boot.as_ref().expect("bootstrap summary");
    let mut t = Table::new(&["replicate", "theta_hat", "error"]);
    let mut ok = boot.replicates.iter();
    for r in 0..b {
        match boot.failures.iter().find(|f| f.0 == r) {
            Some((_, msg)) => t.row(&[r.to_string(), String::new(), msg.clone()]),
            None => t.row(&[r.to_string(), ok.next().expect("replicate").to_string(), String::new()]),
        }
    }
    out.write("replicates.csv", &t.finish())?;
    let rec = estimate_record(&est);
    out.write("estimate.txt", rec.as_bytes())?;
    print!("{rec}");
    Ok(())
}

pub fn monte_carlo(cfg: &RunConfig, out: &OutputDir) -> CliResult<()> {
    let spec = cfg.dgp_spec()?;
    let rep = run_monte_carlo(&spec, &cfg.valuation_config()?, &cfg.risk_config()?, &cfg.mc_config()?)?;
    let m = &rep.metrics;
    let mut t = Table::new(&[
        "auctions", "theta0", "bias", "mbias", "std", "b_se", "mse", "iqr", "iqr_std", "imse_value",
        "imse_deriv", "successes", "replications",
    ]);
    t.row(&[
        spec.n_auctions.to_string(),
        spec.theta0.to_string(),
        f4(m.bias),
        f4(m.mbias),
        f4(m.std),
        f4(m.b_se),
        f4(m.mse),
        f4(m.iqr),
        f4(m.iqr_std),
        sci(m.imse_value),
        sci(m.imse_deriv),
        m.successes.to_string(),
        m.replications.to_string(),
    ]);
    let table = t.finish();
    out.write("metrics.csv", &table)?;
    let mut log = Table::new(&[
        "replication", "seed", "bandwidth", "theta_hat", "at_bound", "boot_se", "imse_value",
        "imse_deriv", "error",
    ]);
    for l in &rep.log {
        log.row(&[
            l.replication.to_string(),
            l.seed.to_string(),
            opt(l.bandwidth),
            opt(l.theta_hat),
            l.at_bound.to_string(),
            opt(l.boot_se),
            opt(l.imse_value),
            opt(l.imse_deriv),
            l.error.clone().unwrap_or_default(),
        ]);
    }
    out.write("replications.csv", &log.finish())?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}

pub fn model_fit(cfg: &RunConfig, out: &OutputDir) -> CliResult<()> {
    let data = load_input(cfg)?;
    let models = estimate_models(cfg, &data)?;
    let theta = theta_for(cfg, &data, &models)?;
    let target = cfg.fit_target()?;
    let draws = cfg.model_fit.draws as usize;
    let rep = model_fit_report(&data, &models, theta, target, draws, cfg.seed)?;
    let mut steps = Table::new(&["source", "value", "cdf"]);
    for (src, ecdf) in [("sample", &rep.cdf_sample), ("simulated", &rep.cdf_simulated)] {
        for (v, c) in ecdf.steps() {
            steps.row(&[src.to_string(), v.to_string(), c.to_string()]);
        }
    }
    out.write("model_fit_cdf.csv", &steps.finish())?;
    let name = match target {
        FitTarget::WinningBid => "winning_bid",
        FitTarget::Reserve => "reserve",
    };
    let mut s = Table::new(&["target", "theta", "bias", "percentage_bias", "imse", "sample", "simulated"]);
    s.row(&[
        name.to_string(),
        f4(theta),
        f4(rep.bias),
        f4(rep.percentage_bias),
        sci(rep.imse),
        rep.cdf_sample.len().to_string(),
        rep.cdf_simulated.len().to_string(),
    ]);
    let table = s.finish();
    out.write("model_fit_summary.csv", &table)?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}

pub fn counterfactual(cfg: &RunConfig, out: &OutputDir) -> CliResult<()> {
    let data = load_input(cfg)?;
    let models = estimate_models(cfg, &data)?;
    let theta = theta_for(cfg, &data, &models)?;
    let cf = counterfactual_reserve_shift(&data, &models, theta)?;
    let mut recs = Table::new(&["record", "reserve_fitted", "reserve_neutral", "delta"]);
    for r in &cf.records {
        recs.row(&[
            r.index.to_string(),
            r.reserve_fitted.to_string(),
            r.reserve_neutral.to_string(),
            r.delta.to_string(),
        ]);
    }
    out.write("reserve_shift.csv", &recs.finish())?;
    let mut g = Table::new(&["group", "theta", "count", "mean_increase", "percentage_increase"]);
    for s in std::iter::once(&cf.overall).chain(&cf.groups) {
        g.row(&[
            s.label.clone(),
            f4(cf.theta_hat),
            s.count.to_string(),
            f4(s.mean_increase),
            f4(s.percentage_increase),
        ]);
    }
    let table = g.finish();
    out.write("reserve_shift_groups.csv", &table)?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}
