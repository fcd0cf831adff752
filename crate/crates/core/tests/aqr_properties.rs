mod common;

use auction_risk::aqr::{
    aqr_objective, aqr_subgradient, bid_quantile, bid_quantile_inverse, fit_aqr, uniform_grid,
    AqrConfig, Bandwidth,
};
use auction_risk::data::{AuctionDataset, AuctionRecord};
use auction_risk::math::{check_loss, Kernel, PolyBasis};
use auction_risk::Error;
use common::{random_dataset, small_config};
use proptest::prelude::*;

fn shifted(data: &AuctionDataset, c: f64, k: f64) -> AuctionDataset {
    let recs = data
        .records()
        .iter()
        .map(|r| AuctionRecord {
            winning_bid: k * r.winning_bid + c,
            ..r.clone()
        })
        .collect();
    AuctionDataset::with_dim(recs, data.dim()).unwrap()
}

/// Midpoint Riemann sum of the kernel-weighted check loss over the truncated
/// kernel support.
fn riemann_objective(b: &[f64], alpha: f64, h: f64, order: usize, data: &AuctionDataset, n: usize) -> f64 {
    let lo = (-1.0_f64).max(-alpha / h);
    let hi = 1.0_f64.min((1.0 - alpha) / h);
    let basis = PolyBasis::new(order, data.dim());
    let dt = (hi - lo) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let t = lo + (i as f64 + 0.5) * dt;
        let k = Kernel::Epanechnikov.eval(t);
        for r in data.records() {
            let row = basis.row(&r.covariates, t * h);
            let fit: f64 = row.iter().zip(b).map(|(a, c)| a * c).sum();
            total += k * check_loss(alpha + t * h, r.winning_bid - fit) * dt;
        }
    }
    total / data.len() as f64
}

#[test]
fn quadrature_objective_matches_riemann_sum() {
    let data = random_dataset(7, 5, 1);
    let cfg = small_config(1, 0.2, vec![0.5], 9);
    // every residual keeps one sign over the window, so the integrand is a
    // polynomial and both rules converge to the same integral
    for b in [[0.0, 0.0, 0.1, -0.2], [10.0, 1.0, 2.0, 0.5]] {
        for alpha in [0.1, 0.5, 0.93] {
            let q = aqr_objective(&b, alpha, &data, &cfg).unwrap();
            let r = riemann_objective(&b, alpha, 0.2, 1, &data, 100_000);
            assert!(((q - r) / r).abs() < 1e-8, "{alpha}: {q} vs {r}");
        }
    }
}

#[test]
fn exact_single_record_fit_has_zero_loss() {
    let data = AuctionDataset::new(vec![AuctionRecord::new(2.5, vec![], 3)]).unwrap();
    let cfg = small_config(0, 0.2, vec![0.5], 9);
    let cfg = AqrConfig { order: 1, ..cfg };
    let b = [2.5, 0.0];
    assert_eq!(aqr_objective(&b, 0.5, &data, &cfg).unwrap(), 0.0);
    let g = aqr_subgradient(&b, 0.5, &data, &cfg).unwrap();
    // |psi| <= 1 against a kernel of unit mass
    assert!(g[0].abs() <= 1.0 && g[1].abs() <= 1.0 / 0.2, "{g:?}");
}

#[test]
fn empty_window_is_rejected() {
    let data = random_dataset(1, 10, 0);
    let cfg = small_config(1, 0.2, vec![0.5], 9);
    assert!(aqr_objective(&[1.0, 0.0], 1.0, &data, &cfg).is_err());
    assert!(matches!(
        AqrConfig {
            bandwidth: Bandwidth::Fixed(0.0),
            ..cfg
        }
        .validate(),
        Err(Error::Config(_))
    ));
}

#[test]
fn symmetric_pair_has_zero_intercept_subgradient_at_midpoint() {
    // reflecting y -> 4 - y maps the data to itself, so the objective is
    // symmetric in the intercept around 2
    let data = AuctionDataset::new(vec![
        AuctionRecord::new(1.0, vec![], 2),
        AuctionRecord::new(3.0, vec![], 2),
    ])
    .unwrap();
    let cfg = small_config(1, 0.2, vec![0.5], 9);
    for slope in [-2.0, 0.0, 1.5] {
        let g = aqr_subgradient(&[2.0, slope], 0.5, &data, &cfg).unwrap();
        assert!(g[0].abs() < 1e-12, "{g:?}");
        for d in [0.1, 0.5, 0.9] {
            let up = aqr_objective(&[2.0 + d, slope], 0.5, &data, &cfg).unwrap();
            let dn = aqr_objective(&[2.0 - d, slope], 0.5, &data, &cfg).unwrap();
            assert!((up - dn).abs() < 1e-12);
        }
    }
    let best = (-40..=40)
        .flat_map(|i| (-40..=40).map(move |j| [2.0 + 0.025 * i as f64, 0.25 * j as f64]))
        .map(|c| (aqr_objective(&c, 0.5, &data, &cfg).unwrap(), c))
        .fold((f64::INFINITY, [0.0; 2]), |a, b| if b.0 < a.0 - 1e-14 { b } else { a });
    let at_mid = (-40..=40)
        .map(|j| aqr_objective(&[2.0, 0.25 * j as f64], 0.5, &data, &cfg).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(at_mid <= best.0 + 1e-12, "{best:?} {at_mid}");
}

#[test]
fn constant_bids_give_flat_curves() {
    let recs = (0..40).map(|_| AuctionRecord::new(3.7, vec![], 3)).collect();
    let data = AuctionDataset::new(recs).unwrap();
    let cfg = AqrConfig {
        alpha_grid: uniform_grid(0.05, 0.95, 0.05),
        ..AqrConfig::default()
    };
    let fit = fit_aqr(&data, &cfg).unwrap();
    for g in 0..fit.alphas().len() {
        let c = fit.coefficients(g);
        assert!((c[0] - 3.7).abs() < 1e-7, "{c:?}");
        assert!(c[1..].iter().all(|v| v.abs() < 1e-6), "{c:?}");
    }
}

#[test]
fn fit_is_deterministic() {
    let data = random_dataset(5, 200, 2);
    let cfg = AqrConfig {
        alpha_grid: uniform_grid(0.02, 0.98, 0.04),
        ..AqrConfig::default()
    };
    assert_eq!(fit_aqr(&data, &cfg).unwrap(), fit_aqr(&data, &cfg).unwrap());
}

#[test]
fn shift_and_scale_equivariance() {
    let data = random_dataset(9, 150, 1);
    let cfg = AqrConfig {
        bandwidth: Bandwidth::Fixed(0.15),
        alpha_grid: uniform_grid(0.1, 0.9, 0.1),
        tol: 1e-10,
        ..AqrConfig::default()
    };
    let base = fit_aqr(&data, &cfg).unwrap();
    let moved = fit_aqr(&shifted(&data, 2.5, 1.0), &cfg).unwrap();
    let scaled = fit_aqr(&shifted(&data, 0.0, 3.0), &cfg).unwrap();
    let x = [0.4];
    let (c0, c1, c2) = (base.curve(&x).unwrap(), moved.curve(&x).unwrap(), scaled.curve(&x).unwrap());
    for &a in base.alphas() {
        let v = c0.level(a).unwrap();
        assert!((c1.level(a).unwrap() - v - 2.5).abs() < 1e-6);
        assert!((c2.level(a).unwrap() - 3.0 * v).abs() < 1e-6 * 3.0);
        let d = c0.deriv(1, a).unwrap();
        assert!((c1.deriv(1, a).unwrap() - d).abs() < 1e-5 * (1.0 + d.abs()));
        assert!((c2.deriv(1, a).unwrap() - 3.0 * d).abs() < 3e-5 * (1.0 + d.abs()));
    }
}

#[test]
fn inverse_round_trip_and_derivative_consistency() {
    let data = random_dataset(21, 400, 1);
    let cfg = AqrConfig {
        alpha_grid: uniform_grid(0.02, 0.98, 0.02),
        ..AqrConfig::default()
    };
    let fit = fit_aqr(&data, &cfg).unwrap();
    let x = [0.5];
    let step = 0.02;
    for &a in &fit.alphas()[1..fit.alphas().len() - 1] {
        let v = bid_quantile(&fit, a, &x).unwrap();
        let back = bid_quantile_inverse(&fit, v, &x).unwrap();
        assert!((back - a).abs() <= step + 1e-12, "{a} -> {back}");
    }
    let c = fit.curve(&x).unwrap();
    let alphas = fit.alphas();
    let mut err = Vec::new();
    for g in 5..alphas.len() - 5 {
        let fd = (c.level(alphas[g + 1]).unwrap() - c.level(alphas[g - 1]).unwrap()) / (2.0 * step);
        err.push((fd - c.deriv(1, alphas[g]).unwrap()).abs());
    }
    let mean_err = err.iter().sum::<f64>() / err.len() as f64;
    // level slope and fitted slope agree up to sampling roughness of the curve
    assert!(mean_err < 0.5, "{mean_err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn objective_is_convex_in_coefficients(
        seed in 0u64..1000,
        b in prop::collection::vec(-2.0f64..4.0, 6),
        c in prop::collection::vec(-2.0f64..4.0, 6),
        lam in 0.0f64..=1.0,
        alpha in 0.05f64..0.95,
    ) {
        let data = random_dataset(seed, 8, 2);
        let cfg = small_config(1, 0.25, vec![0.5], 9);
        let m: Vec<f64> = b.iter().zip(&c).map(|(x, y)| lam * x + (1.0 - lam) * y).collect();
        let fb = aqr_objective(&b, alpha, &data, &cfg).unwrap();
        let fc = aqr_objective(&c, alpha, &data, &cfg).unwrap();
        let fm = aqr_objective(&m, alpha, &data, &cfg).unwrap();
        prop_assert!(fb >= 0.0 && fc >= 0.0);
        prop_assert!(fm <= lam * fb + (1.0 - lam) * fc + 1e-12 * (1.0 + fb + fc));
    }

    #[test]
    fn subgradient_matches_finite_differences(
        seed in 0u64..1000,
        b in prop::collection::vec(-1.0f64..3.0, 4),
        alpha in 0.05f64..0.95,
    ) {
        let data = random_dataset(seed, 6, 1);
        let cfg = small_config(1, 0.2, vec![0.5], 9);
        let g = aqr_subgradient(&b, alpha, &data, &cfg).unwrap();
        let e = 1e-7;
        for i in 0..b.len() {
            let mut up = b.clone();
            let mut dn = b.clone();
            up[i] += e;
            dn[i] -= e;
            let fd = (aqr_objective(&up, alpha, &data, &cfg).unwrap()
                - aqr_objective(&dn, alpha, &data, &cfg).unwrap())
                / (2.0 * e);
            // a kink within e of b makes the two one-sided slopes differ
            let fwd = (aqr_objective(&up, alpha, &data, &cfg).unwrap()
                - aqr_objective(&b, alpha, &data, &cfg).unwrap())
                / e;
            let bwd = (aqr_objective(&b, alpha, &data, &cfg).unwrap()
                - aqr_objective(&dn, alpha, &data, &cfg).unwrap())
                / e;
            if (fwd - bwd).abs() < 1e-6 {
                prop_assert!((g[i] - fd).abs() <= 1e-6, "coord {}: {} vs {}", i, g[i], fd);
            }
        }
    }
}
