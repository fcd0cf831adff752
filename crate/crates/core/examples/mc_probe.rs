//! Small Monte Carlo run: `mc_probe L theta0 reps quad [boot_b boot_reps]`.

use std::time::Instant;

use auction_risk::aqr::uniform_grid;
use auction_risk::sim::{run_monte_carlo, DgpSpec, McConfig};
use auction_risk::{RiskConfig, ValuationConfig};

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let arg = |i: usize, d: &str| a.get(i).cloned().unwrap_or_else(|| d.to_string());
    let l: usize = arg(1, "1000").parse().unwrap();
    let theta0: f64 = arg(2, "0.5").parse().unwrap();
    let reps: usize = arg(3, "10").parse().unwrap();
    let quad: usize = arg(4, "33").parse().unwrap();
    let boot: usize = arg(5, "0").parse().unwrap();
    let boot_reps: usize = arg(6, "0").parse().unwrap();
    let vcfg = ValuationConfig {
        value_grid: uniform_grid(0.02, 0.98, 0.02),
        quad_order: quad,
        ..ValuationConfig::default()
    };
    let mc = McConfig {
        bootstrap: boot,
        bootstrap_replications: boot_reps,
        imse_at: Some(vec![0.5, 0.5]),
        ..McConfig::new(reps)
    };
    let t = Instant::now();
    let rep = run_monte_carlo(&DgpSpec::benchmark(l, theta0, 20240601), &vcfg, &RiskConfig::default(), &mc)
        .unwrap();
    println!("elapsed {:?}", t.elapsed());
    println!("{:#?}", rep.metrics);
    let mut th: Vec<f64> = rep.log.iter().filter_map(|l| l.theta_hat).collect();
    th.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = th.len();
    let dec: Vec<String> = (0..=10).map(|i| format!("{:.3}", th[(i * (n - 1)) / 10])).collect();
    println!("deciles {}", dec.join(" "));
    println!("at_bound {}", rep.log.iter().filter(|l| l.at_bound).count());
    for e in rep.log.iter().filter(|l| l.error.is_some()).take(3) {
        println!("error {:?}", e.error);
    }
}
