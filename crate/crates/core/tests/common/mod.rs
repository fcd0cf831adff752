#![allow(dead_code)]

use auction_risk::aqr::{AqrConfig, Bandwidth};
use auction_risk::data::{AuctionDataset, AuctionRecord};
use auction_risk::math::{check_loss, gauss_legendre, Kernel, PolyBasis};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random small dataset with `dim` covariates.
pub fn random_dataset(seed: u64, n: usize, dim: usize) -> AuctionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let recs = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let noise: f64 = rng.random::<f64>();
            let y = 1.0 + x.iter().sum::<f64>() * 0.5 + noise * noise * 2.0;
            AuctionRecord::new(y, x, 3)
        })
        .collect();
    AuctionDataset::new(recs).unwrap()
}

pub fn small_config(order: usize, h: f64, grid: Vec<f64>, quad: usize) -> AqrConfig {
    AqrConfig {
        order,
        bandwidth: Bandwidth::Fixed(h),
        alpha_grid: grid,
        kernel: Kernel::Epanechnikov,
        quad_order: quad,
        tol: 1e-10,
        max_iter: 200,
    }
}

/// Independent minimizer of the quadrature-discretized objective, posed as a
/// dense linear program over free coefficients and split residuals.
pub fn lp_oracle(data: &AuctionDataset, cfg: &AqrConfig, alpha: f64) -> f64 {
    let h = match cfg.bandwidth {
        Bandwidth::Fixed(h) => h,
        _ => panic!("oracle needs a fixed bandwidth"),
    };
    let rule = gauss_legendre(cfg.quad_order).unwrap();
    let lo = (-1.0_f64).max(-alpha / h);
    let hi = 1.0_f64.min((1.0 - alpha) / h);
    let basis = PolyBasis::new(cfg.order, data.dim());
    let n = data.len() as f64;
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let coef: Vec<_> = (0..basis.len())
        .map(|_| pb.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for r in data.records() {
        for (t, wq) in rule.mapped(lo, hi) {
            let w = wq * Kernel::Epanechnikov.eval(t) / n;
            let tau = alpha + t * h;
            let up = pb.add_var(w * tau, (0.0, f64::INFINITY));
            let dn = pb.add_var(w * (1.0 - tau), (0.0, f64::INFINITY));
            let row = basis.row(&r.covariates, t * h);
            let mut expr: Vec<_> = coef.iter().copied().zip(row.iter().copied()).collect();
            expr.push((up, 1.0));
            expr.push((dn, -1.0));
            pb.add_constraint(expr.as_slice(), ComparisonOp::Eq, r.winning_bid);
        }
    }
    let sol = pb.solve().expect("oracle LP solves");
    // re-evaluate the check objective at the oracle coefficients
    let b: Vec<f64> = coef.iter().map(|&v| sol[v]).collect();
    let mut obj = 0.0;
    for r in data.records() {
        for (t, wq) in rule.mapped(lo, hi) {
            let w = wq * Kernel::Epanechnikov.eval(t) / n;
            let row = basis.row(&r.covariates, t * h);
            let fit: f64 = row.iter().zip(&b).map(|(a, c)| a * c).sum();
            obj += w * check_loss(alpha + t * h, r.winning_bid - fit);
        }
    }
    obj.min(sol.objective())
}
