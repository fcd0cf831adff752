mod common;

use auction_risk::aqr::{aqr_objective, fit_aqr};
use common::{lp_oracle, random_dataset, small_config};

#[test]
fn interior_point_matches_lp_oracle() {
    let mut worst: f64 = 0.0;
    for inst in 0..20u64 {
        let dim = (inst % 3) as usize;
        let order = 1 + (inst % 2) as usize;
        let n = 12 + (inst as usize * 7) % 19;
        let data = random_dataset(100 + inst, n, dim);
        let grid = vec![0.2, 0.5, 0.8];
        let cfg = small_config(order, 0.15, grid.clone(), 9);
        let fit = fit_aqr(&data, &cfg).unwrap();
        for (g, &alpha) in grid.iter().enumerate() {
            let ours = aqr_objective(fit.coefficients(g), alpha, &data, &cfg).unwrap();
            let oracle = lp_oracle(&data, &cfg, alpha);
            let rel = (ours - oracle) / oracle;
            worst = worst.max(rel.abs());
            assert!(rel.abs() <= 1e-6, "instance {inst} alpha {alpha}: {ours} vs {oracle}");
        }
    }
    eprintln!("worst relative difference {worst:e}");
}
