use auction_risk::aqr::uniform_grid;
use auction_risk::data::{AuctionDataset, AuctionRecord};
use auction_risk::seller::{optimal_reserve, SellerProblem, UtilitySpec};
use auction_risk::sim::{simulate_auctions, DgpSpec, LinearQuantileModel};
use auction_risk::{
    bootstrap_theta, fit_theta, q_residual, Error, ModelSet, RiskConfig, RiskObjectiveContext,
    ValuationConfig,
};

fn truth_context(data: &AuctionDataset) -> RiskObjectiveContext {
    let truth = LinearQuantileModel::benchmark();
    RiskObjectiveContext::build(data, None, &RiskConfig::default(), |r| {
        Ok(truth.at(&r.covariates))
    })
    .unwrap()
}

#[test]
fn noiseless_identification() {
    for theta0 in [-0.5, 0.0, 0.5, 1.0, 1.6] {
        let data = simulate_auctions(&DgpSpec::benchmark(300, theta0, 42)).unwrap();
        let est = fit_theta(&truth_context(&data)).unwrap();
        assert!((est.theta_hat - theta0).abs() <= 1e-4, "{theta0}: {}", est.theta_hat);
        assert!(est.at_bound.is_none());
    }
}

#[test]
fn residual_sign_pattern() {
    let data = simulate_auctions(&DgpSpec::benchmark(50, 0.5, 3)).unwrap();
    let truth = LinearQuantileModel::benchmark();
    for r in data.records() {
        let d = truth.at(&r.covariates);
        assert!(q_residual(r, 0.5, &d).unwrap().abs() < 1e-7);
        assert!(q_residual(r, 1.5, &d).unwrap() < 0.0);
        assert!(q_residual(r, 0.9, &d).unwrap() < 0.0);
        assert!(q_residual(r, 0.1, &d).unwrap() > 0.0);
        assert!(q_residual(r, -1.0, &d).unwrap() > 0.0);
    }
}

#[test]
fn objective_is_unimodal_with_minimum_at_truth() {
    let data = simulate_auctions(&DgpSpec::benchmark(200, 1.0, 8)).unwrap();
    let ctx = truth_context(&data);
    let vals: Vec<f64> = (0..=60).map(|i| ctx.objective(-2.0 + 0.1 * i as f64)).collect();
    let k = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    assert_eq!(k, 30);
    assert!(vals[..=k].windows(2).all(|w| w[1] <= w[0]));
    assert!(vals[k..].windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn residual_is_monotone_in_reserve() {
    // q falls as the reserve rises through the optimum
    let truth = LinearQuantileModel::benchmark();
    let x = vec![0.5, 0.5];
    let d = truth.at(&x);
    let w = truth.quantile(0.2, &x);
    let p = SellerProblem::new(&d, w, 3, UtilitySpec::crra(0.5)).unwrap();
    let r_star = optimal_reserve(&p).unwrap().reserve;
    let q = |r: f64| {
        let rec = AuctionRecord::new(1.0, x.clone(), 3).with_reserve(r).with_outside_value(w);
        q_residual(&rec, 0.5, &d).unwrap()
    };
    assert!(q(r_star - 0.05) > 0.0 && q(r_star + 0.05) < 0.0);
    let rs: Vec<f64> = (0..20).map(|i| r_star - 0.1 + 0.01 * i as f64).collect();
    assert!(rs.windows(2).all(|w| q(w[1]) < q(w[0])));
}

#[test]
fn records_without_seller_data_are_excluded() {
    let mut recs = simulate_auctions(&DgpSpec::benchmark(40, 0.5, 1)).unwrap().into_records();
    recs[0].outside_value = None;
    recs[1].reserve = None;
    recs[2].reserve = Some(1e6);
    recs[3].outside_value = Some(-1.0);
    let data = AuctionDataset::with_dim(recs, 2).unwrap();
    let ctx = truth_context(&data);
    let ex = ctx.exclusions();
    assert_eq!((ex.missing, ex.trimmed, ex.nonpositive), (2, 1, 1));
    assert_eq!(ctx.used_records(), 36);
    let none = AuctionDataset::new(vec![AuctionRecord::new(1.0, vec![], 2)]).unwrap();
    let empty = RiskObjectiveContext::build(&none, None, &RiskConfig::default(), |_| {
        Ok(auction_risk::seller::UniformValues::default())
    })
    .unwrap();
    assert!(matches!(fit_theta(&empty), Err(Error::Data(_))));
}

fn small_setup() -> (AuctionDataset, ModelSet, ValuationConfig) {
    let data = simulate_auctions(&DgpSpec::benchmark(150, 0.5, 77)).unwrap();
    let vcfg = ValuationConfig {
        value_grid: uniform_grid(0.02, 0.98, 0.04),
        quad_order: 9,
        ..ValuationConfig::default()
    };
    let models = ModelSet::estimate(&data, &vcfg).unwrap();
    (data, models, vcfg)
}

#[test]
fn bootstrap_is_deterministic() {
    let (data, models, vcfg) = small_setup();
    let rcfg = RiskConfig::default();
    let a = bootstrap_theta(&data, &models, &vcfg, &rcfg, 8, 5).unwrap();
    let b = bootstrap_theta(&data, &models, &vcfg, &rcfg, 8, 5).unwrap();
    assert_eq!(a, b);
    let boot = a.boot.unwrap();
    assert_eq!(boot.replicates.len() + boot.failures.len(), 8);
    assert!(boot.se > 0.0);
    assert!(boot.percentile_2_5 <= boot.percentile_97_5);
    let c = bootstrap_theta(&data, &models, &vcfg, &rcfg, 8, 6).unwrap();
    assert_ne!(c.boot.unwrap().replicates, boot.replicates);
}

#[test]
fn bootstrap_rejects_degenerate_requests() {
    let (data, models, vcfg) = small_setup();
    let rcfg = RiskConfig::default();
    assert!(matches!(
        bootstrap_theta(&data, &models, &vcfg, &rcfg, 1, 0),
        Err(Error::Config(_))
    ));
    let one = AuctionDataset::with_dim(vec![data.records()[0].clone()], 2).unwrap();
    assert!(bootstrap_theta(&one, &models, &vcfg, &rcfg, 10, 0).is_err());
}
