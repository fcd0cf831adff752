use std::time::Instant;

use auction_risk::aqr::uniform_grid;
use auction_risk::sim::{simulate_auctions, DgpSpec};
use auction_risk::{ValuationConfig, ValuationModel};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let l: usize = args.get(1).map_or(1000, |s| s.parse().unwrap());
    let q: usize = args.get(2).map_or(33, |s| s.parse().unwrap());
    let tol: f64 = args.get(3).map_or(1e-9, |s| s.parse().unwrap());
    let t = Instant::now();
    let data = simulate_auctions(&DgpSpec::benchmark(l, 0.5, 1)).unwrap();
    println!("simulate {:?}", t.elapsed());
    let cfg = ValuationConfig {
        value_grid: uniform_grid(0.02, 0.98, 0.02),
        quad_order: q,
        tol,
        ..Default::default()
    };
    let t = Instant::now();
    let m = ValuationModel::estimate(&data, &cfg).unwrap();
    let el = t.elapsed();
    let iters: Vec<usize> = m.fit().diagnostics().iter().map(|d| d.iterations).collect();
    println!("fit {el:?} iterations {iters:?}");
    println!("V(0.5|.5,.5) = {}", m.value_quantile(0.5, &[0.5, 0.5]).unwrap());
}
