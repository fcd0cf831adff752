use auction_risk::seller::ValueDistribution;
use auction_risk::sim::stats::{mean, quantile};
use auction_risk::sim::{simulate_auctions, DgpSpec, LinearQuantileModel};
use auction_risk::{fit_theta, ModelSet, Result, RiskConfig, RiskObjectiveContext, ValuationConfig};
use auction_risk::aqr::uniform_grid;

struct Scaled<D> {
    d: D,
    k: f64,
}

impl<D: ValueDistribution> ValueDistribution for Scaled<D> {
    fn alpha_domain(&self) -> (f64, f64) {
        self.d.alpha_domain()
    }
    fn quantile(&self, a: f64) -> Result<f64> {
        self.d.quantile(a)
    }
    fn quantile_deriv(&self, a: f64) -> Result<f64> {
        Ok(self.k * self.d.quantile_deriv(a)?)
    }
    fn cdf(&self, v: f64) -> Result<f64> {
        self.d.cdf(v)
    }
}

fn main() {
    let truth = LinearQuantileModel::benchmark();
    let data = simulate_auctions(&DgpSpec::benchmark(5000, 0.5, 1)).unwrap();
    let ranks: Vec<f64> = data
        .records()
        .iter()
        .map(|r| truth.at(&r.covariates).cdf(r.reserve.unwrap()).unwrap())
        .collect();
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        println!("reserve rank p{:02}: {:.3}", (p * 100.0) as u32, quantile(&ranks, p));
    }
    for k in [0.97, 0.99, 1.0, 1.01, 1.03] {
        let ctx = RiskObjectiveContext::build(&data, None, &RiskConfig::default(), |r| {
            Ok(Scaled { d: truth.at(&r.covariates), k })
        })
        .unwrap();
        println!("ratio x{k}: theta_hat {:.4}", fit_theta(&ctx).unwrap().theta_hat);
    }
    let vcfg = ValuationConfig {
        value_grid: uniform_grid(0.02, 0.98, 0.02),
        quad_order: 9,
        ..ValuationConfig::default()
    };
    let mut rel = Vec::new();
    let mut rank_err = Vec::new();
    let (mut est, mut scaled, mut plug) = (Vec::new(), Vec::new(), Vec::new());
    for s in 0..20 {
        let d = simulate_auctions(&DgpSpec::benchmark(1000, 0.5, 100 + s)).unwrap();
        let ms = ModelSet::estimate(&d, &vcfg).unwrap();
        let m = ms.get(3).unwrap();
        let start = rel.len();
        for r in d.records() {
            let t = truth.at(&r.covariates);
            let res = r.reserve.unwrap();
            rel.push(m.value_pdf_ratio(res, &r.covariates).unwrap() / t.pdf_ratio(res).unwrap() - 1.0);
            rank_err.push(m.value_cdf(res, &r.covariates).unwrap() - t.cdf(res).unwrap());
        }
        let k = 1.0 + mean(&rel[start..]);
        let rc = RiskConfig::default();
        est.push(fit_theta(&RiskObjectiveContext::new(&d, &ms, &rc).unwrap()).unwrap().theta_hat);
        let ctx = RiskObjectiveContext::build(&d, None, &rc, |r| Ok(Scaled { d: truth.at(&r.covariates), k })).unwrap();
        scaled.push(fit_theta(&ctx).unwrap().theta_hat);
        let ctx = RiskObjectiveContext::build(&d, None, &rc, |r| Ok(Scaled { d: truth.at(&r.covariates), k: 1.0 })).unwrap();
        plug.push(fit_theta(&ctx).unwrap().theta_hat);
    }
    println!(
        "20 reps L=1000: mean theta_hat {:.4}, with truth scaled by the rep's mean ratio error {:.4}, truth {:.4}",
        mean(&est),
        mean(&scaled),
        mean(&plug)
    );
    println!(
        "estimated ratio at reserves: mean rel err {:.4}, median {:.4}; mean F error {:.4}",
        mean(&rel),
        quantile(&rel, 0.5),
        mean(&rank_err)
    );
}
